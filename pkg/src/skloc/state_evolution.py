"""Scalar state evolution for AMP on the SK model.

mmse(g) = 1 - E tanh(g + sqrt(g) W)^2 with W standard normal, the recursion
gamma_{k+1} = beta^2 (1 - mmse(gamma_k + t)) started at 0, and its fixed
point gamma_*(beta, t). The sampler consumes q_* = gamma_* / beta^2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

DEFAULT_ORDER = 61
DEFAULT_TOL = 1e-10


class FixedPointError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Quadrature:
    """Gauss-Hermite rule for expectations over a standard normal."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def order(self) -> int:
        return self.nodes.size

    def expect(self, values: np.ndarray) -> np.ndarray:
        """Contract the last axis (evaluations at the nodes) against the weights."""
        return values @ self.weights


@lru_cache(maxsize=None)
def gauss_hermite(order: int = DEFAULT_ORDER) -> Quadrature:
    if order < 1:
        raise ValueError("quadrature order must be positive")
    x, w = hermegauss(order)
    w = w / w.sum()
    x.setflags(write=False)
    w.setflags(write=False)
    return Quadrature(x, w)


def mmse(gamma, quad: Quadrature | None = None):
    """1 - E tanh(gamma + sqrt(gamma) W)^2, clamped to [0, 1]. Accepts arrays."""
    quad = quad or gauss_hermite()
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0) or np.any(np.isnan(g)):
        raise ValueError("gamma must be nonnegative")
    th = np.tanh(g[..., None] + np.sqrt(g)[..., None] * quad.nodes)
    out = np.clip(1.0 - quad.expect(th * th), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def _update(beta: float, t: float, gamma: float, quad: Quadrature) -> float:
    return beta * beta * (1.0 - mmse(gamma + t, quad))


def gamma_iterates(beta: float, t: float, k_max: int, quad: Quadrature | None = None) -> np.ndarray:
    """gamma_0, ..., gamma_{k_max}."""
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    if t < 0:
        raise ValueError("t must be nonnegative")
    quad = quad or gauss_hermite()
    out = np.zeros(k_max + 1)
    for k in range(k_max):
        out[k + 1] = _update(beta, t, out[k], quad)
    return out


def gamma_star(beta: float, t: float, tol: float = DEFAULT_TOL,
               quad: Quadrature | None = None, max_iter: int = 10_000) -> float:
    """Fixed point of gamma = beta^2 (1 - mmse(gamma + t)) with residual at most tol.

    Damped Picard (weight 0.5) first; the map has slope in [0, beta^2], so this
    contracts for beta < 1. Bisection on [0, beta^2] is the fallback.
    """
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if beta == 0.0:
        return 0.0
    quad = quad or gauss_hermite()
    g = 0.0
    for _ in range(max_iter):
        f = _update(beta, t, g, quad)
        if abs(f - g) <= tol:
            return g
        g = 0.5 * g + 0.5 * f
    return _bisect(beta, t, tol, quad)


def _bisect(beta, t, tol, quad, max_iter=200):
    lo, hi = 0.0, beta * beta
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        r = mid - _update(beta, t, mid, quad)
        if abs(r) <= tol:
            return mid
        if r < 0:
            lo = mid
        else:
            hi = mid
    raise FixedPointError(f"no fixed point found for beta={beta}, t={t}")


def amp_mse_prediction(beta: float, t: float, k: int, quad: Quadrature | None = None) -> float:
    """Predicted per-coordinate AMP error after k iterations: 1 - gamma_{k+1} / beta^2."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return 1.0 - gamma_iterates(beta, t, k + 1, quad)[-1] / beta**2


def mmse_limit(beta: float, t: float, quad: Quadrature | None = None) -> float:
    """k -> infinity limit of amp_mse_prediction."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return 1.0 - gamma_star(beta, t, quad=quad) / beta**2


@dataclass(frozen=True, eq=False)
class ScheduleTable:
    beta: float
    delta: float
    big_l: int
    quadrature_order: int
    t: np.ndarray
    gamma_star: np.ndarray
    q_star: np.ndarray

    def q_at(self, step: int) -> float:
        return float(self.q_star[step])

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "delta": self.delta,
            "L": self.big_l,
            "quadrature_order": self.quadrature_order,
            "entries": [
                {"t": float(t), "gamma_star": float(g), "q_star": float(q)}
                for t, g, q in zip(self.t, self.gamma_star, self.q_star)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "ScheduleTable":
        e = d["entries"]
        return cls(
            beta=float(d["beta"]),
            delta=float(d["delta"]),
            big_l=int(d["L"]),
            quadrature_order=int(d["quadrature_order"]),
            t=np.array([x["t"] for x in e], dtype=float),
            gamma_star=np.array([x["gamma_star"] for x in e], dtype=float),
            q_star=np.array([x["q_star"] for x in e], dtype=float),
        )

    @classmethod
    def from_json(cls, text: str) -> "ScheduleTable":
        return cls.from_dict(json.loads(text))


def build_schedule(beta: float, delta: float, big_l: int, quad: Quadrature | None = None,
                   tol: float = DEFAULT_TOL) -> ScheduleTable:
    """q_*(beta, l delta) for l = 0..L; the l = 0 entry is the t -> 0 limit, 0."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if big_l < 0:
        raise ValueError("L must be nonnegative")
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    quad = quad or gauss_hermite()
    t = delta * np.arange(big_l + 1)
    gs = np.zeros(big_l + 1)
    for ell in range(1, big_l + 1):
        gs[ell] = gamma_star(beta, t[ell], tol=tol, quad=quad)
    qs = gs / beta**2 if beta > 0 else np.zeros_like(gs)
    return ScheduleTable(float(beta), float(delta), int(big_l), quad.order, t, gs, qs)

"""TAP free energy and the natural-gradient (mirror descent) phase.

For magnetizations m in (-1, 1)^n,

    F(m) = -(beta/2) <m, A m> - <y, m> - sum_i h(m_i)
           - n beta^2 (1 - q)(1 + q - 2 Q(m)) / 4,      Q(m) = |m|^2 / n,

with h the binary entropy in the +-1 parametrization. Descent runs in the
dual coordinates u = atanh(m):  u <- u - eta * grad F(tanh u).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .amp import CLAMP, _entries

LOG2 = float(np.log(2.0))

# Relative smoothness of F w.r.t. the entropy mirror map is at most
# 1 + beta^2 + beta |A|_op, about 2.3 at beta = 0.45 with |A|_op near 2.
# Monotone descent needs eta <= 1 / (2 * 2.3), so 0.2 is too large.
DEFAULT_ETA = 0.15


class NGDDivergenceError(RuntimeError):
    def __init__(self, message: str, trajectory: np.ndarray, step: int | None = None):
        super().__init__(message)
        self.trajectory = trajectory
        self.step = step


@dataclass(frozen=True, eq=False)
class TapContext:
    matrix: object
    y: np.ndarray
    q: float
    beta: float

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"q must lie in [0, 1], got {self.q}")
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))

    @property
    def entries(self) -> np.ndarray:
        return _entries(self.matrix)


def _interior(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if not np.all(np.abs(m) <= CLAMP):
        raise ValueError("magnetization must lie strictly inside (-1, 1) up to the clamp")
    return m


def entropy(m: np.ndarray) -> np.ndarray:
    """h(m) = -((1+m)/2) log((1+m)/2) - ((1-m)/2) log((1-m)/2), elementwise."""
    return LOG2 - 0.5 * ((1.0 + m) * np.log1p(m) + (1.0 - m) * np.log1p(-m))


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _free_energy(ctx: TapContext, m: np.ndarray, am: np.ndarray):
    n = m.shape[-1]
    big_q = _dot(m, m) / n
    b2 = ctx.beta**2
    return (-0.5 * ctx.beta * _dot(m, am) - _dot(ctx.y, m) - entropy(m).sum(axis=-1)
            - n * b2 * (1.0 - ctx.q) * (1.0 + ctx.q - 2.0 * big_q) / 4.0)


def _gradient(ctx: TapContext, m: np.ndarray, am: np.ndarray):
    return -ctx.beta * am - ctx.y + np.arctanh(m) + ctx.beta**2 * (1.0 - ctx.q) * m


def tap_free_energy(ctx: TapContext, m):
    m = _interior(m)
    out = _free_energy(ctx, m, m @ ctx.entries)
    return float(out) if np.ndim(out) == 0 else out


def tap_gradient(ctx: TapContext, m) -> np.ndarray:
    m = _interior(m)
    return _gradient(ctx, m, m @ ctx.entries)


def tap_hessian_apply(ctx: TapContext, m, v) -> np.ndarray:
    """(-beta A + diag(1/(1-m^2)) + beta^2 (1-q) I) v."""
    m = _interior(m)
    v = np.asarray(v, dtype=float)
    return -ctx.beta * (v @ ctx.entries) + v / (1.0 - m * m) + ctx.beta**2 * (1.0 - ctx.q) * v


def bregman(m, nn) -> float:
    """Bregman divergence of -h: -h(m) + h(nn) - <atanh(nn), m - nn>."""
    m = _interior(m)
    nn = _interior(nn)
    val = float(-entropy(m).sum() + entropy(nn).sum() - np.arctanh(nn) @ (m - nn))
    return max(val, 0.0)


def ngd_run(ctx: TapContext, u0, eta: float = DEFAULT_ETA, k_ngd: int = 50,
            return_trace: bool = False, patience: int = 3):
    """Run k_ngd steps of u <- u - eta grad F(tanh u); return tanh(u) (clamped).

    Raises NGDDivergenceError if the free energy of any trajectory rises on
    ``patience`` consecutive steps.
    """
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    if k_ngd < 0:
        raise ValueError("k_ngd must be nonnegative")
    u = np.array(u0, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("u0 must be finite")
    a = ctx.entries
    beta, y = ctx.beta, ctx.y
    ridge = beta**2 * (1.0 - ctx.q)
    n = u.shape[-1]
    const = -n * LOG2 - n * ridge * (1.0 + ctx.q) / 4.0

    def evaluate(u):
        # free energy and gradient in one pass; atanh(m) is shared by the entropy and the gradient.
        # (1 - m)(1 + m) rather than 1 - m^2 keeps the entropy accurate next to the clamp.
        m = np.clip(np.tanh(u), -CLAMP, CLAMP)
        am = m @ a
        dual = np.arctanh(m)
        f = (const + np.sum(0.5 * np.log((1.0 - m) * (1.0 + m)) + m * (dual + 0.5 * ridge * m - 0.5 * beta * am) - y * m,
                            axis=-1))
        return m, f, dual - beta * am - y + ridge * m

    m, f, grad = evaluate(u)
    trace = [f]
    rises = np.zeros(np.shape(f), dtype=int)
    for k in range(k_ngd):
        u = u - eta * grad
        m, f_new, grad = evaluate(u)
        up = f_new > f + 1e-12 * (1.0 + np.abs(f))
        rises = np.where(up, rises + 1, 0)
        f = f_new
        trace.append(f)
        if np.any(rises >= patience):
            raise NGDDivergenceError(
                f"free energy increased on {patience} consecutive steps (step {k + 1})",
                np.array(trace), step=k + 1)
    if return_trace:
        return m, np.array(trace)
    return m


def mirror_step_check(ctx: TapContext, m, eta: float) -> float:
    """Sup-norm gap between the explicit dual step and the mirror-descent subproblem.

    The subproblem min_x <g, x - m> + (1/eta) D(x, m) is solved per coordinate
    by bisection on its derivative, with no use of the tanh update formula.
    """
    m = _interior(m)
    if eta == 0:
        return 0.0
    g = tap_gradient(ctx, m)
    explicit = np.tanh(np.arctanh(m) - eta * g)
    dual_m = 0.5 * (np.log1p(m) - np.log1p(-m))

    def deriv(x):
        # d/dx of <g, x> + D(x, m) / eta; infinite at the endpoints, which bisection handles
        with np.errstate(divide="ignore", over="ignore"):
            return g + (0.5 * (np.log1p(x) - np.log1p(-x)) - dual_m) / eta

    lo = np.full_like(m, -1.0)
    hi = np.full_like(m, 1.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        neg = deriv(mid) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
        if np.all(hi - lo <= 1e-15):
            break
    foc = 0.5 * (lo + hi)
    return float(np.max(np.abs(explicit - foc)))

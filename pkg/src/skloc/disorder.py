"""GOE coupling matrices, interpolated disorder, planted instances."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import check_seed, stream

MAGIC = b"SKLM"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQ")


class OperatorNormError(RuntimeError):
    """Power iteration hit its cap; ``best`` holds the last estimate."""

    def __init__(self, message: str, best: float):
        super().__init__(message)
        self.best = best


def power_iteration(entries: np.ndarray, tol: float = 1e-6, max_iter: int = 1000) -> float:
    """Largest |eigenvalue| of a symmetric array.

    Starts from the all-ones direction and keeps the largest ``||A v||``
    seen, which never exceeds the true operator norm.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    entries = np.asarray(entries, dtype=float)
    n = entries.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    best = 0.0
    prev = None
    for _ in range(max_iter):
        w = entries @ v
        est = float(np.linalg.norm(w))
        if est == 0.0:
            return 0.0
        best = max(best, est)
        if prev is not None and abs(est - prev) <= tol * est:
            return best
        prev = est
        v = w / est
    raise OperatorNormError(f"power iteration did not converge in {max_iter} steps", best)


@dataclass(eq=False)
class CouplingMatrix:
    """Dense symmetric coupling matrix. Entries are read-only after construction."""

    entries: np.ndarray
    seed: int | None = None
    _op_norm: float | None = field(default=None, repr=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.float64, order="C", copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValueError(f"coupling matrix must be square and nonempty, got shape {a.shape}")
        if not np.array_equal(a, a.T):
            raise ValueError("coupling matrix must be exactly symmetric")
        a.setflags(write=False)
        self.entries = a

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def op_norm_estimate(self) -> float:
        if self._op_norm is None:
            try:
                self._op_norm = power_iteration(self.entries)
            except OperatorNormError as err:
                self._op_norm = err.best
        return self._op_norm

    def save(self, path) -> None:
        save_matrix(self, path)

    def to_csv(self, path) -> None:
        np.savetxt(path, self.entries, delimiter=",", fmt="%.17g")


def _goe_from(gen: np.random.Generator, n: int) -> np.ndarray:
    g = gen.standard_normal((n, n))
    upper = np.triu(g, 1) / np.sqrt(n)
    a = upper + upper.T
    a[np.diag_indices(n)] = np.diag(g) * np.sqrt(2.0 / n)
    return a


def sample_goe(n: int, seed: int, purpose: str = "goe") -> CouplingMatrix:
    """GOE(n): off-diagonal variance 1/n, diagonal variance 2/n."""
    if n < 1:
        raise ValueError("n must be at least 1")
    seed = check_seed(seed)
    return CouplingMatrix(_goe_from(stream(seed, purpose, n), n), seed=seed)


def operator_norm(matrix: CouplingMatrix, tol: float = 1e-6, max_iter: int = 1000) -> float:
    return power_iteration(matrix.entries, tol=tol, max_iter=max_iter)


@dataclass(frozen=True, eq=False)
class DisorderPath:
    """The family A_s = sqrt(1 - s^2) a0 + s a1 for s in [0, 1]."""

    a0: CouplingMatrix
    a1: CouplingMatrix

    def __post_init__(self):
        if self.a0.n != self.a1.n:
            raise ValueError("endpoint dimensions differ")

    @classmethod
    def from_seed(cls, n: int, seed: int) -> "DisorderPath":
        return cls(sample_goe(n, seed), sample_goe(n, seed, purpose="goe-prime"))

    def __call__(self, s: float) -> CouplingMatrix:
        return interpolate(self, s)


def interpolate(path: DisorderPath, s: float) -> CouplingMatrix:
    s = float(s)
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    if s == 0.0:
        return path.a0
    if s == 1.0:
        return path.a1
    return CouplingMatrix(np.sqrt(1.0 - s * s) * path.a0.entries + s * path.a1.entries)


@dataclass(frozen=True, eq=False)
class PlantedInstance:
    x0: np.ndarray
    matrix: CouplingMatrix
    beta: float

    def field(self, t: float, seed: int, purpose: str = "planted-field") -> np.ndarray:
        """Observation y(t) = t x0 + B(t), with B(t) ~ N(0, t I)."""
        g = stream(seed, purpose, self.x0.size).standard_normal(self.x0.size)
        return t * self.x0 + np.sqrt(t) * g


def sample_planted(n: int, beta: float, seed: int) -> PlantedInstance:
    """Spiked GOE A = (beta/n) x0 x0^T + W. With beta = 0 this is exactly sample_goe(n, seed)."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    w = sample_goe(n, seed)
    x0 = np.where(stream(seed, "planted-x", n).random(n) < 0.5, -1.0, 1.0)
    if beta == 0:
        return PlantedInstance(x0, w, 0.0)
    a = (beta / n) * np.outer(x0, x0) + w.entries
    return PlantedInstance(x0, CouplingMatrix(a, seed=w.seed), float(beta))


def save_matrix(matrix: CouplingMatrix, path) -> None:
    payload = np.ascontiguousarray(matrix.entries, dtype="<f8").tobytes()
    Path(path).write_bytes(_HEADER.pack(MAGIC, FORMAT_VERSION, matrix.n) + payload)


def load_matrix(path) -> CouplingMatrix:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError("file too short for an SKLM header")
    magic, version, n = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError("not an SKLM file")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported SKLM version {version}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * n * n:
        raise ValueError("payload size does not match header")
    return CouplingMatrix(np.frombuffer(body, dtype="<f8").reshape(n, n))

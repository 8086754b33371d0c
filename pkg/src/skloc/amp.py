"""AMP phase of the mean estimator.

    z^{k+1} = beta A m^k + y - b_k m^{k-1},   m^k = tanh(z^k),
    b_k = (beta^2 / n) sum_i (1 - tanh(z_i^k)^2),

started from m^{-1} = z^0 = 0. Fields may carry leading batch axes, shape
(..., n); rows are independent trajectories sharing the matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .disorder import CouplingMatrix, operator_norm

CLAMP = 1.0 - 1e-12


def clamp(m: np.ndarray) -> np.ndarray:
    return np.clip(m, -CLAMP, CLAMP)


def _entries(matrix) -> np.ndarray:
    return matrix.entries if isinstance(matrix, CouplingMatrix) else np.asarray(matrix, dtype=float)


def onsager(m: np.ndarray, beta: float) -> np.ndarray:
    n = m.shape[-1]
    return beta * beta * (1.0 - np.einsum("...i,...i->...", m, m) / n)


@dataclass(frozen=True, eq=False)
class AmpState:
    z: np.ndarray
    m_curr: np.ndarray
    m_prev: np.ndarray
    onsager: np.ndarray | float
    iter: int


def amp_init(y: np.ndarray, beta: float) -> AmpState:
    y = np.asarray(y, dtype=float)
    zero = np.zeros_like(y)
    return AmpState(zero, zero.copy(), zero.copy(), onsager(zero, beta), 0)


def amp_step(state: AmpState, matrix, y: np.ndarray, beta: float) -> AmpState:
    a = _entries(matrix)
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != a.shape[0] or state.m_curr.shape != y.shape:
        raise ValueError(f"dimension mismatch: field {y.shape}, state {state.m_curr.shape}, matrix {a.shape}")
    b = np.asarray(state.onsager)[..., None]
    z = beta * (state.m_curr @ a) + y - b * state.m_prev
    m = clamp(np.tanh(z))
    return AmpState(z, m, state.m_curr, onsager(m, beta), state.iter + 1)


def amp_run(matrix, y: np.ndarray, beta: float, k_amp: int) -> tuple[np.ndarray, AmpState]:
    """Returns (m^{k_amp}, final state)."""
    if k_amp < 0:
        raise ValueError("k_amp must be nonnegative")
    state = amp_init(y, beta)
    for _ in range(k_amp):
        state = amp_step(state, matrix, y, beta)
    return state.m_curr, state


def amp_trace(matrix, y: np.ndarray, beta: float, k_amp: int, x0: np.ndarray | None = None) -> np.ndarray:
    """Per-iteration diagnostics: columns (iteration, |m|^2/n, <m, x0>/n)."""
    y = np.asarray(y, dtype=float)
    n = y.shape[-1]
    state = amp_init(y, beta)
    rows = []
    for _ in range(k_amp):
        state = amp_step(state, matrix, y, beta)
        m = state.m_curr
        ov = float(m @ x0) / n if x0 is not None else np.nan
        rows.append((state.iter, float(m @ m) / n, ov))
    return np.array(rows).reshape(-1, 3)


def amp_lipschitz_probe(matrix, y1: np.ndarray, y2: np.ndarray, beta: float, k: int,
                        check_norm: bool = True) -> float:
    """|atanh AMP(y1; k) - atanh AMP(y2; k)| / |y1 - y2|. The bound k 6^k needs |A|_op <= 3."""
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    dy = float(np.linalg.norm(y1 - y2))
    if dy == 0.0:
        raise ValueError("y1 and y2 must differ")
    if check_norm and isinstance(matrix, CouplingMatrix) and operator_norm(matrix) > 3.0:
        raise ValueError("operator norm exceeds 3")
    # atanh of the AMP output is the pre-activation z^k; reading z avoids the clamp
    _, s1 = amp_run(matrix, y1, beta, k)
    _, s2 = amp_run(matrix, y2, beta, k)
    return float(np.linalg.norm(s1.z - s2.z)) / dy

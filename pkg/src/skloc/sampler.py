"""Stochastic-localization sampler for the SK Gibbs measure.

The observation process is driven by the Euler scheme

    y_{l+1} = y_l + m(A, y_l) delta + sqrt(delta) w_{l+1},   y_0 = 0,

where m(A, y) is the AMP + natural-gradient estimate of the tilted Gibbs
mean. After L steps the final mean is rounded coordinatewise to +-1.

Randomness: the Brownian increment of replica r at step l is row r of the
standard-normal block drawn from stream (seed, "brownian", l); rounding
uniforms are row r of stream (seed, "rounding"). Two runs with the same seed
therefore share their noise exactly, whatever the matrix or temperature.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .amp import amp_init, amp_step, clamp
from .disorder import CouplingMatrix, DisorderPath, interpolate
from .rng import check_seed, derived_seed, stream
from .state_evolution import ScheduleTable, build_schedule
from .tap import DEFAULT_ETA, NGDDivergenceError, TapContext, ngd_run

THEORY_BETA = 0.5


class ConfigError(ValueError):
    """Invalid run configuration; ``field`` names the offending parameter."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class RunConfig:
    beta: float
    n: int
    delta: float = 0.05
    big_l: int = 100
    k_amp: int = 25
    k_ngd: int = 50
    eta: float = DEFAULT_ETA
    seed: int = 0
    schedule: ScheduleTable | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        self.validate()
        if self.schedule is None:
            object.__setattr__(self, "schedule", build_schedule(self.beta, self.delta, self.big_l))
        s = self.schedule
        if s.beta != self.beta or s.delta != self.delta or s.big_l < self.big_l:
            raise ConfigError("schedule", "does not match beta/delta or is shorter than L")

    def validate(self) -> None:
        checks = [
            ("beta", 0.0 <= self.beta < 1.0, "must lie in [0, 1)"),
            ("n", int(self.n) >= 1, "must be a positive integer"),
            ("delta", self.delta > 0, "must be positive"),
            ("big_l", int(self.big_l) >= 0, "must be nonnegative"),
            ("k_amp", int(self.k_amp) >= 0, "must be nonnegative"),
            ("k_ngd", int(self.k_ngd) >= 0, "must be nonnegative"),
            ("eta", self.eta >= 0, "must be nonnegative"),
        ]
        for name, ok, msg in checks:
            if not ok:
                raise ConfigError(name, f"{msg}, got {getattr(self, name)!r}")
        try:
            check_seed(self.seed)
        except ValueError as err:
            raise ConfigError("seed", str(err)) from None

    @property
    def horizon(self) -> float:
        return self.delta * self.big_l

    @property
    def out_of_theory(self) -> bool:
        return self.beta >= THEORY_BETA

    def with_beta(self, beta: float) -> "RunConfig":
        return replace(self, beta=beta, schedule=None)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("schedule")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {k: d[k] for k in ("beta", "n", "delta", "big_l", "k_amp", "k_ngd", "eta", "seed") if k in d}
        return cls(**known)


def estimate_mean(matrix, y: np.ndarray, beta: float, q: float, k_amp: int, k_ngd: int,
                  eta: float) -> np.ndarray:
    """Mean of the tilted measure by AMP followed by natural gradient on F_TAP."""
    y = np.asarray(y, dtype=float)
    state = amp_init(y, beta)
    for _ in range(k_amp):
        state = amp_step(state, matrix, y, beta)
    if k_ngd == 0:
        return state.m_curr
    return ngd_run(TapContext(matrix, y, q, beta), state.z, eta=eta, k_ngd=k_ngd)


def brownian_block(seed: int, step: int, rows: int, n: int) -> np.ndarray:
    return stream(seed, "brownian", step, n).standard_normal((rows, n))


def rounding_block(seed: int, rows: int, n: int) -> np.ndarray:
    return stream(seed, "rounding", n).random((rows, n))


def randomized_round(m, seed: int | None = None, uniforms: np.ndarray | None = None) -> np.ndarray:
    """x_i = +1 if u_i <= (1 + m_i) / 2 else -1, u_i uniform on [0, 1)."""
    m = np.asarray(m, dtype=float)
    if uniforms is None:
        if seed is None:
            raise ValueError("need a seed or explicit uniforms")
        uniforms = stream(seed, "round-single", m.shape[-1]).random(m.shape)
    if uniforms.shape != m.shape:
        raise ValueError("uniforms must match the shape of m")
    return np.where(uniforms <= 0.5 * (1.0 + m), 1, -1).astype(np.int8)


@dataclass(frozen=True, eq=False)
class LocalizationTrajectory:
    y_path: np.ndarray
    m_path: np.ndarray
    increments: np.ndarray
    final_mean: np.ndarray
    matvecs: int


def _drive(matrix, config: RunConfig, rows: np.ndarray, keep_path: bool = False,
           record_steps=()):
    """Run the Euler scheme for the replicas in ``rows`` as one batch.

    Returns (final_mean, paths or None, recorded) where recorded maps a step
    l to the mean estimate at y_l.
    """
    rows = np.asarray(rows, dtype=int)
    n = config.n
    if _entries_n(matrix) != n:
        raise ValueError("matrix dimension does not match config.n")
    nrows = int(rows.max()) + 1 if rows.size else 0
    y = np.zeros((rows.size, n))
    record_steps = set(int(s) for s in record_steps)
    recorded = {}
    ys, ms, ws = [y.copy()], [], []

    def mean_at(ell, y):
        try:
            return estimate_mean(matrix, y, config.beta, config.schedule.q_at(ell),
                                 config.k_amp, config.k_ngd, config.eta)
        except NGDDivergenceError as err:
            err.step = ell
            raise

    for ell in range(config.big_l):
        m = mean_at(ell, y)
        if ell in record_steps:
            recorded[ell] = m
        w = brownian_block(config.seed, ell, nrows, n)[rows]
        y = y + m * config.delta + np.sqrt(config.delta) * w
        if keep_path:
            ms.append(m)
            ws.append(w)
            ys.append(y)
    m_final = mean_at(config.big_l, y)
    recorded[config.big_l] = m_final
    paths = None
    if keep_path:
        ms.append(m_final)
        paths = (np.array(ys), np.array(ms), np.array(ws).reshape(config.big_l, rows.size, n))
    return m_final, paths, recorded


def _entries_n(matrix) -> int:
    return matrix.n if isinstance(matrix, CouplingMatrix) else np.asarray(matrix).shape[0]


def matvec_count(config: RunConfig) -> int:
    """Matrix-vector products per trajectory (one per AMP step, one per NGD step plus setup)."""
    ngd = config.k_ngd + 1 if config.k_ngd > 0 else 0
    return (config.big_l + 1) * (config.k_amp + ngd)


def localize(matrix, config: RunConfig, replica: int = 0) -> LocalizationTrajectory:
    """Single trajectory with its full path; replica selects the noise row."""
    m_final, (ys, ms, ws), _ = _drive(matrix, config, np.array([replica]), keep_path=True)
    return LocalizationTrajectory(ys[:, 0], ms[:, 0], ws[:, 0], m_final[0], matvec_count(config))


@dataclass(eq=False)
class EmpiricalSample:
    spins: np.ndarray
    seeds: np.ndarray
    config: RunConfig | None = None

    def __post_init__(self):
        s = np.asarray(self.spins)
        if s.ndim != 2:
            raise ValueError("spins must be a (count, n) array")
        if not np.all(np.abs(s) == 1):
            raise ValueError("spins must be +-1")
        self.spins = s.astype(np.int8)
        self.seeds = np.asarray(self.seeds, dtype=np.uint64)

    @property
    def count(self) -> int:
        return self.spins.shape[0]

    @property
    def n(self) -> int:
        return self.spins.shape[1]

    def save(self, path) -> None:
        """JSON metadata at ``path`` plus a packed-bit sidecar ``path + '.bits'``."""
        path = Path(path)
        sidecar = path.with_name(path.name + ".bits")
        sidecar.write_bytes(np.packbits(self.spins > 0, axis=1).tobytes())
        meta = {
            "kind": "EmpiricalSample",
            "count": self.count,
            "n": self.n,
            "bits": sidecar.name,
            "seeds": [int(s) for s in self.seeds],
            "config": self.config.to_dict() if self.config is not None else None,
        }
        path.write_text(json.dumps(meta, indent=1))

    @classmethod
    def load(cls, path) -> "EmpiricalSample":
        path = Path(path)
        meta = json.loads(path.read_text())
        count, n = meta["count"], meta["n"]
        raw = np.frombuffer((path.parent / meta["bits"]).read_bytes(), dtype=np.uint8)
        bits = np.unpackbits(raw.reshape(count, -1), axis=1, count=n)
        cfg = RunConfig.from_dict(meta["config"]) if meta.get("config") else None
        return cls(2 * bits.astype(np.int8) - 1, np.array(meta["seeds"], dtype=np.uint64), cfg)


def replica_seeds(seed: int, replicas) -> np.ndarray:
    return np.array([derived_seed(seed, "replica", r) for r in replicas], dtype=np.uint64)


def sample(matrix, config: RunConfig, replicas: int, batch: int = 4096,
           record_horizons=()) -> EmpiricalSample | dict:
    """Draw ``replicas`` independent outputs of the sampler.

    With ``record_horizons`` (step counts l <= L), also rounds the mean
    estimate at each y_l with the same uniforms and returns a dict
    {l: EmpiricalSample}; the entry at L is the ordinary output.
    """
    if replicas < 1:
        raise ValueError("replicas must be at least 1")
    steps = sorted(set(int(s) for s in record_horizons) | {config.big_l})
    if steps[0] < 0 or steps[-1] > config.big_l:
        raise ValueError("recorded horizons must lie in [0, L]")
    u = rounding_block(config.seed, replicas, config.n)
    out = {s: np.empty((replicas, config.n), dtype=np.int8) for s in steps}
    for start in range(0, replicas, batch):
        rows = np.arange(start, min(start + batch, replicas))
        _, _, rec = _drive(matrix, config, rows, record_steps=steps)
        for s in steps:
            out[s][rows] = randomized_round(rec[s], uniforms=u[rows])
    seeds = replica_seeds(config.seed, range(replicas))
    result = {s: EmpiricalSample(out[s], seeds, replace(config, big_l=s, schedule=config.schedule))
              for s in steps}
    return result if record_horizons else result[config.big_l]


def sample_means(matrix, config: RunConfig, replicas: int, batch: int = 4096) -> np.ndarray:
    """Final mean estimates m(A, y_L) for each replica, before rounding."""
    out = np.empty((replicas, config.n))
    for start in range(0, replicas, batch):
        rows = np.arange(start, min(start + batch, replicas))
        out[rows] = _drive(matrix, config, rows)[0]
    return out


def coupled_pair(path: DisorderPath, s: float, config: RunConfig, replicas: int = 1):
    """Outputs on A_0 and A_s driven by identical Brownian increments and rounding uniforms."""
    first = sample(path.a0, config, replicas)
    second = sample(interpolate(path, s), config, replicas)
    return first, second

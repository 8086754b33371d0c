"""Experiment drivers and reproducible run records."""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .disorder import DisorderPath, interpolate, sample_goe
from .oracle import (exact_build, exact_sample, exact_second_moment, w2_batches,
                     w2_empirical)
from .rng import derived_seed, stream
from .sampler import THEORY_BETA, RunConfig, sample

SCHEMA_VERSION = 1
BOOTSTRAP_RESAMPLES = 1000


class SchemaVersionError(ValueError):
    pass


def bootstrap_se(values, seed: int = 0, resamples: int = BOOTSTRAP_RESAMPLES) -> float:
    """Nonparametric bootstrap standard error of the mean along axis 0."""
    v = np.asarray(values, dtype=float)
    if v.shape[0] < 2:
        return float("nan")
    idx = stream(seed, "bootstrap", v.shape[0]).integers(0, v.shape[0], size=(resamples, v.shape[0]))
    return float(np.std(v[idx].mean(axis=1), ddof=1))


@dataclass
class Curve:
    x: list
    y: list
    se: list

    def to_dict(self):
        return {"x": list(map(float, self.x)), "y": list(map(float, self.y)), "se": list(map(float, self.se))}


@dataclass
class RunRecord:
    kind: str
    config: dict
    metrics: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    timestamps: dict = field(default_factory=dict)
    code_version: str = __version__
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "kind": self.kind,
            "code_version": self.code_version,
            "config": self.config,
            "metrics": self.metrics,
            "curves": {k: c.to_dict() for k, c in self.curves.items()},
            "seeds": self.seeds,
            "timestamps": self.timestamps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise SchemaVersionError(
                f"record schema version {d.get('schema_version')!r} is not {SCHEMA_VERSION}")
        return cls(
            kind=d["kind"], config=d["config"], metrics=d["metrics"],
            curves={k: Curve(c["x"], c["y"], c["se"]) for k, c in d["curves"].items()},
            seeds=d["seeds"], timestamps=d["timestamps"], code_version=d["code_version"],
            schema_version=d["schema_version"])


def _check_finite(record: RunRecord) -> None:
    for k, v in record.metrics.items():
        if isinstance(v, float) and not math.isfinite(v):
            raise ValueError(f"metric {k!r} is not finite")
    for k, c in record.curves.items():
        for part in ("x", "y", "se"):
            vals = np.asarray(getattr(c, part), dtype=float)
            # an undefined SE (single sample) is allowed; values are not
            bad = np.isinf(vals) if part == "se" else ~np.isfinite(vals)
            if bad.any():
                raise ValueError(f"curve {k!r} has a non-finite {part} value")


def write_record(record: RunRecord, path) -> None:
    """JSON with shortest round-trip float reprs, which read back bit-exactly."""
    _check_finite(record)
    Path(path).write_text(json.dumps(record.to_dict(), indent=1))


def read_record(path) -> RunRecord:
    return RunRecord.from_dict(json.loads(Path(path).read_text()))


def write_curves_csv(record: RunRecord, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for name, c in record.curves.items():
        p = directory / f"{name}.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "se"])
            for row in zip(c.x, c.y, c.se):
                w.writerow([repr(float(v)) for v in row])
        out.append(p)
    return out


def _stamp() -> dict:
    return {"started": time.strftime("%Y-%m-%dT%H:%M:%S%z")}


def _pool_map(fn, items, workers: int):
    """Ordered map; results come back in input order regardless of worker count."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# disorder chaos ---------------------------------------------------------

@dataclass
class ChaosResult:
    beta: float
    s_grid: np.ndarray
    overlap_sq: np.ndarray
    overlap_se: np.ndarray
    w2_lower: np.ndarray
    w2_se: np.ndarray
    per_disorder_overlap: np.ndarray
    per_disorder_w2: np.ndarray

    def to_record(self, config: dict, seed: int) -> RunRecord:
        rec = RunRecord("chaos", config, seeds={"seed": seed}, timestamps=_stamp())
        rec.curves["overlap_sq"] = Curve(self.s_grid, self.overlap_sq, self.overlap_se)
        rec.curves["w2"] = Curve(self.s_grid, self.w2_lower, self.w2_se)
        rec.metrics["beta"] = self.beta
        return rec


def _chaos_one(args):
    beta, n, s_grid, seed, d, batch = args
    path = DisorderPath.from_seed(n, derived_seed(seed, "chaos-disorder", d))
    g0 = exact_build(path.a0, None, beta)
    c0 = exact_second_moment(g0)
    ref = exact_sample(g0, batch, derived_seed(seed, "chaos-ref", d))
    ov, w2 = [], []
    for j, s in enumerate(s_grid):
        gs = exact_build(interpolate(path, s), None, beta)
        # E (x.x')^2 for independent x ~ mu_0, x' ~ mu_s equals <C_0, C_s>_F
        ov.append(float(np.sum(c0 * exact_second_moment(gs))) / n**2)
        other = exact_sample(gs, batch, derived_seed(seed, "chaos-other", d, j))
        w2.append(w2_empirical(ref, other).distance)
    return ov, w2


def run_chaos(beta: float, n: int, s_grid, disorder_samples: int, seed: int,
              batch: int = 500, workers: int = 1) -> ChaosResult:
    """Overlap second moment and sample W2 between mu_{A_0} and mu_{A_s}, averaged over disorder.

    The overlap is computed exactly from the two second-moment matrices; the
    W2 entry is the assignment distance between exact-sample batches.
    """
    if n > 16:
        raise ValueError("chaos uses enumeration; n must be at most 16")
    s_grid = np.asarray(s_grid, dtype=float)
    jobs = [(beta, n, tuple(s_grid), seed, d, batch) for d in range(disorder_samples)]
    res = _pool_map(_chaos_one, jobs, workers)
    ov = np.array([r[0] for r in res])
    w2 = np.array([r[1] for r in res])
    bs = derived_seed(seed, "chaos-bootstrap")
    return ChaosResult(
        float(beta), s_grid, ov.mean(0), np.array([bootstrap_se(ov[:, j], bs) for j in range(s_grid.size)]),
        w2.mean(0), np.array([bootstrap_se(w2[:, j], bs) for j in range(s_grid.size)]), ov, w2)


# stability --------------------------------------------------------------

def _sq_dist(a, b) -> np.ndarray:
    return ((a.spins.astype(float) - b.spins) ** 2).mean(axis=1)


def run_stability(beta: float, n: int, s_grid, beta_grid, replicas: int, seed: int,
                  **config_kwargs) -> RunRecord:
    """Disorder and temperature stability of the sampler under shared noise.

    Curves: s -> (1/n) E|x(A_0) - x(A_s)|^2 and beta' -> (1/n) E|x(beta) - x(beta')|^2.
    """
    cfg = RunConfig(beta=beta, n=n, seed=seed, **config_kwargs)
    path = DisorderPath.from_seed(n, derived_seed(seed, "stability-disorder"))
    base = sample(path.a0, cfg, replicas)
    bs = derived_seed(seed, "stability-bootstrap")
    rec = RunRecord("stability", {**cfg.to_dict(), "replicas": replicas,
                                  "s_grid": list(map(float, s_grid)),
                                  "beta_grid": list(map(float, beta_grid))},
                    seeds={"seed": seed, "disorder": derived_seed(seed, "stability-disorder")},
                    timestamps=_stamp())
    ys, ses = [], []
    for s in s_grid:
        other = base if s == 0 else sample(interpolate(path, s), cfg, replicas)
        d = _sq_dist(base, other)
        ys.append(float(d.mean()))
        ses.append(bootstrap_se(d, bs))
    rec.curves["disorder"] = Curve(list(s_grid), ys, ses)
    ys, ses = [], []
    for b in beta_grid:
        other = base if b == beta else sample(path.a0, cfg.with_beta(b), replicas)
        d = _sq_dist(base, other)
        ys.append(float(d.mean()))
        ses.append(bootstrap_se(d, bs))
    rec.curves["temperature"] = Curve(list(beta_grid), ys, ses)
    rec.metrics["out_of_theory"] = bool(beta >= THEORY_BETA or max(beta_grid, default=0) >= THEORY_BETA)
    return rec


# sampling quality -------------------------------------------------------

def _uniform_spins(n: int, count: int, seed: int) -> np.ndarray:
    return np.where(stream(seed, "uniform-control", n).random((count, n)) < 0.5, -1, 1).astype(np.int8)


def _paired_stats(costs: dict, bs: int) -> dict:
    out = {}
    for k, v in costs.items():
        out[k] = (float(np.mean(v)), bootstrap_se(v, bs))
    return out


def run_sampling_quality(beta_grid, n: int, replicas: int, config_base: dict, seed: int,
                         batch: int = 2000) -> RunRecord:
    """Sampler vs exact Gibbs in chunked assignment W2^2, with two references.

    For each beta a fresh GOE instance is drawn. Curves (beta on x):
    "algorithm" (sampler vs exact), "baseline" (exact vs independent exact)
    and "uniform" (uniform spins vs exact).
    """
    if n > 14:
        raise ValueError("the exact branch needs n <= 14")
    batch = min(batch, replicas)
    bs = derived_seed(seed, "quality-bootstrap")
    rec = RunRecord("quality", {**config_base, "n": n, "replicas": replicas,
                                "beta_grid": list(map(float, beta_grid)), "batch": batch},
                    seeds={"seed": seed}, timestamps=_stamp())
    curves = {k: ([], [], []) for k in ("algorithm", "baseline", "uniform")}
    for i, beta in enumerate(beta_grid):
        a = sample_goe(n, derived_seed(seed, "quality-disorder", i))
        cfg = RunConfig(beta=beta, n=n, seed=derived_seed(seed, "quality-run", i), **config_base)
        alg = sample(a, cfg, replicas)
        g = exact_build(a, None, beta)
        ref = exact_sample(g, replicas, derived_seed(seed, "quality-ref", i))
        ref2 = exact_sample(g, replicas, derived_seed(seed, "quality-ref2", i))
        uni = _uniform_spins(n, replicas, derived_seed(seed, "quality-uniform", i))
        costs = {"algorithm": w2_batches(alg, ref, batch), "baseline": w2_batches(ref2, ref, batch),
                 "uniform": w2_batches(uni, ref, batch)}
        for k, (mu, se) in _paired_stats(costs, bs).items():
            curves[k][0].append(float(beta))
            curves[k][1].append(mu)
            curves[k][2].append(se)
        gap = costs["uniform"] - costs["algorithm"]
        rec.metrics[f"beta={beta}:uniform_minus_algorithm"] = float(gap.mean())
        rec.metrics[f"beta={beta}:uniform_minus_algorithm_se"] = bootstrap_se(gap, bs)
        rec.metrics[f"beta={beta}:out_of_theory"] = bool(beta >= THEORY_BETA)
    for k, (x, y, se) in curves.items():
        rec.curves[k] = Curve(x, y, se)
    return rec


def run_horizon_scan(beta: float, n: int, horizons, replicas: int, seed: int, delta: float = 0.02,
                     batch: int = 2000, **config_kwargs) -> RunRecord:
    """Sampler quality as a function of the localization horizon T = L delta.

    One run to the largest horizon; the outputs at the smaller horizons are
    the rounded mean estimates at those steps, with the same rounding
    uniforms. Curves over T: "algorithm", "uniform", "baseline".
    """
    steps = [int(round(T / delta)) for T in horizons]
    a = sample_goe(n, derived_seed(seed, "horizon-disorder"))
    cfg = RunConfig(beta=beta, n=n, delta=delta, big_l=max(steps), seed=derived_seed(seed, "horizon-run"),
                    **config_kwargs)
    outs = sample(a, cfg, replicas, record_horizons=steps)
    g = exact_build(a, None, beta)
    ref = exact_sample(g, replicas, derived_seed(seed, "horizon-ref"))
    ref2 = exact_sample(g, replicas, derived_seed(seed, "horizon-ref2"))
    uni = _uniform_spins(n, replicas, derived_seed(seed, "horizon-uniform"))
    bs = derived_seed(seed, "horizon-bootstrap")
    rec = RunRecord("horizon", {**cfg.to_dict(), "replicas": replicas, "horizons": list(map(float, horizons)),
                                "batch": batch},
                    seeds={"seed": seed, "run": cfg.seed}, timestamps=_stamp())
    alg_costs = {T: w2_batches(outs[s], ref, batch) for T, s in zip(horizons, steps)}
    uni_cost = w2_batches(uni, ref, batch)
    base_cost = w2_batches(ref2, ref, batch)
    hs = list(map(float, horizons))
    rec.curves["algorithm"] = Curve(hs, [alg_costs[T].mean() for T in horizons],
                                    [bootstrap_se(alg_costs[T], bs) for T in horizons])
    rec.curves["uniform"] = Curve(hs, [uni_cost.mean()] * len(hs), [bootstrap_se(uni_cost, bs)] * len(hs))
    rec.curves["baseline"] = Curve(hs, [base_cost.mean()] * len(hs), [bootstrap_se(base_cost, bs)] * len(hs))
    for T in horizons:
        gap = uni_cost - alg_costs[T]
        rec.metrics[f"T={T}:uniform_minus_algorithm"] = float(gap.mean())
        rec.metrics[f"T={T}:uniform_minus_algorithm_se"] = bootstrap_se(gap, bs)
    rec.metrics["out_of_theory"] = bool(beta >= THEORY_BETA)
    return rec

"""Draw spin configurations with the localization sampler and compare them to exact Gibbs draws.

At n = 12 the Gibbs measure can be enumerated, so single-site marginals and the
transport distance to exact samples are available as ground truth.
Run with ``python demos/02_sampling_against_exact_gibbs.py``. Takes about a minute.
"""

# %%
import numpy as np

from skloc.disorder import sample_goe
from skloc.oracle import exact_build, exact_sample, exact_second_moment, w2_empirical
from skloc.sampler import RunConfig, localize, sample

beta, n, replicas = 0.3, 12, 3000
matrix = sample_goe(n, seed=3)
gibbs = exact_build(matrix, None, beta)

# %% One trajectory: the observation drifts toward the final spin configuration,
# and the estimated mean magnetization grows from 0 toward a sign vector.
path = localize(matrix, RunConfig(beta=beta, n=n, delta=0.05, big_l=100, seed=1))
norms = np.linalg.norm(path.m_path, axis=1) ** 2 / n
for step in (0, 10, 40, 100):
    print(f"t = {0.05 * step:4.1f}   |m|^2/n = {norms[step]:.3f}")

# %% Many replicas, each with its own noise stream. Without an external field every
# marginal is zero by symmetry, so compare pair correlations for the strongest couplings.
cfg = RunConfig(beta=beta, n=n, seed=2)
draws = sample(matrix, cfg, replicas).spins.astype(float)  # stored as int8
corr = draws.T @ draws / replicas
exact_corr = exact_second_moment(gibbs)
upper = np.triu_indices(n, 1)
strongest = np.argsort(-np.abs(matrix.entries[upper]))[:6]
print("\npair      A_ij    sampler  exact")
for i, j in zip(upper[0][strongest], upper[1][strongest]):
    print(f"({i:2d},{j:2d})  {matrix.entries[i, j]:+.3f}   {corr[i, j]:+.3f}   {exact_corr[i, j]:+.3f}")

# %% Transport distance to exact draws, with exact-versus-exact as the finite-sample floor.
ref = exact_sample(gibbs, replicas, seed=4).spins
ref2 = exact_sample(gibbs, replicas, seed=5).spins
uniform = np.where(np.random.default_rng(6).random((replicas, n)) < 0.5, -1.0, 1.0)
for label, xs in (("sampler", draws), ("exact", ref2), ("uniform", uniform)):
    print(f"W2^2/n {label:8s} vs exact: {w2_empirical(xs, ref).cost / n:.4f}")

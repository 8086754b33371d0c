"""Two sides of the same disorder perturbation.

Low temperature: the Gibbs measure decorrelates quickly when the couplings move.
High temperature: the sampler output moves only a little when the couplings move.
Run with ``python demos/03_chaos_and_stability.py``. Takes a couple of minutes.
"""

# %% Chaos: mean squared overlap between Gibbs draws at A_0 and A_s, exact enumeration at n = 10.
from skloc.experiments import run_chaos, run_stability

s_grid = [0.0, 0.2, 0.5, 0.8]
chaos = run_chaos(1.5, 10, s_grid, 30, seed=1, batch=300)
print(" s     E(overlap^2)")
for s, v, se in zip(s_grid, chaos.overlap_sq, chaos.overlap_se):
    print(f"{s:.1f}   {v:.4f} +- {se:.4f}")

# %% Stability: coupled sampler runs (shared noise) at A_0 and A_s, and at beta and beta'.
rec = run_stability(0.3, 200, [0.0, 0.02, 0.1, 0.3], [0.3, 0.32, 0.4], 10, seed=2)
print("\n s      (1/n) E|x(A_0) - x(A_s)|^2")
for s, v in zip(rec.curves["disorder"].x, rec.curves["disorder"].y):
    print(f"{s:.2f}   {v:.4f}")
print("\n beta'  (1/n) E|x(beta) - x(beta')|^2")
for b, v in zip(rec.curves["temperature"].x, rec.curves["temperature"].y):
    print(f"{b:.2f}   {v:.4f}")

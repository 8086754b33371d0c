"""AMP on a planted instance, next to the scalar recursion that predicts it.

Run with ``python demos/01_amp_tracks_state_evolution.py``. Takes a few seconds.
"""

# %% A planted instance: couplings carry a rank-one spike along a hidden sign vector,
# and the observation is that vector scaled by t plus Gaussian noise of variance t.
import numpy as np

from skloc.amp import amp_run, amp_trace
from skloc.disorder import sample_planted
from skloc.state_evolution import gamma_iterates, gamma_star
from skloc.tap import TapContext, tap_gradient

beta, n, t = 0.45, 3000, 0.5
inst = sample_planted(n, beta, seed=7)
y = inst.field(t, seed=8)

# %% The recursion predicts the squared norm and the overlap with the hidden vector at every step.
k_max = 12
trace = amp_trace(inst.matrix, y, beta, k_max, x0=inst.x0)
predicted = gamma_iterates(beta, t, k_max) / beta**2
print(" k   |m|^2/n   <m,x0>/n   predicted")
for k, sq, ov in trace:
    print(f"{int(k):2d}   {sq:.4f}    {ov:.4f}     {predicted[int(k)]:.4f}")

# %% The iterates converge geometrically, so a handful of steps reaches the limit.
q_star = gamma_star(beta, t) / beta**2
print(f"\nfixed point q* = {q_star:.4f}; mean-squared error at the limit = {1 - q_star:.4f}")

# %% The AMP limit sits near a stationary point of the TAP free energy.
m, _ = amp_run(inst.matrix, y, beta, 25)
grad = tap_gradient(TapContext(inst.matrix, y, q_star, beta), m)
print(f"|grad F_TAP| / sqrt(t n) after 25 steps: {np.linalg.norm(grad) / np.sqrt(t * n):.4f}")

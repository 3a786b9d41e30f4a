"""Online tuning with continuous exponential weights.

Each round: sample a parameter from the current weight density, suffer the
validation loss of the fit at that parameter, then fold the round's exact
loss curve into the cumulative representation.  The report compares the
total suffered loss against the best fixed parameter in hindsight and probes
how densely the loss-curve breakpoints concentrate (dispersion).
"""

import numpy as np

from regtune import GeneratorConfig, dispersion_probe, run_online, smooth_stream

cfg = GeneratorConfig(m=15, p=4, m_prime=6, kappa_jitter=0.05,
                      beta_star=[0.3, -0.25, 0.15, 0.0], seed=0)

for T in (50, 200, 800):
    stream = smooth_stream(cfg, T, seed=1)
    rep = run_online(stream, "lasso", (1e-3, 2.0), seed=1)
    print(f"T={T:4d}: R_T={rep.R_T:7.3f} avg={rep.avg_regret:.4f} "
          f"zeta={rep.zeta:.3f} H={rep.H:.3f} "
          f"hindsight lambda1={rep.hindsight_params[-1]:.4f} "
          f"clamp={rep.clamp_rate:.4f}")

# Two-parameter version: lambda2 lives on a slice grid, lambda1 stays exact.
stream = smooth_stream(cfg, 100, seed=2)
rep = run_online(stream, "en", (1e-2, 2.0), seed=2, lambda2_grid_n=16)
l2, l1 = rep.hindsight_params
print(f"\nen: R_T={rep.R_T:.3f} hindsight (lambda2={l2:.4f}, lambda1={l1:.4f})")

# Dispersion: pooled breakpoints across round curves should not concentrate;
# the count in any window of width eps stays O(eps * T).
stream = smooth_stream(cfg, 400, seed=3)
rep = run_online(stream, "lasso", (1e-3, 2.0), seed=3, keep_curves=True)
sets = [c[0].interior_breaks() for c in rep.round_curves]
for eps in (0.2, 400 ** -0.5, 0.01):
    count = dispersion_probe(sets, [eps])[eps]
    print(f"eps={eps:.4f}: max breakpoints in any window = {count:4d} "
          f"(count/(eps*T) = {count / (eps * 400):.2f})")

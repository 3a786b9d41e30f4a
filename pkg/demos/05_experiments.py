"""Experiment drivers: how much cross-validation is enough, and regret rates.

Both drivers emit plot-ready tables (CSV via out_csv=...); here they print.
"""

from regtune import GeneratorConfig, gen_synthetic
from regtune.experiments import (
    experiment_dispersion,
    experiment_regret,
    experiment_sample_complexity,
)

# Sample complexity: tune on n cross-validation draws, score on a large
# held-out pool.  Excess loss shrinks as n grows (the tuned parameter
# approaches the optimum of the draw distribution).
cfg = GeneratorConfig(m=30, p=3, m_prime=1, kappa_jitter=0.4,
                      beta_star=[0.45, -0.3, 0.15], seed=100)
full = gen_synthetic(cfg).train
rows = experiment_sample_complexity(full, mode="lasso",
                                    n_values=(1, 4, 9, 16, 36), trials=16,
                                    seed=11, box=(1e-3, 10.0))
print("n    median excess (normalized)")
for r in rows:
    print(f"{r['n']:3d}  {r['median_excess_norm']:.5f}")

# Regret rate: median R_T over seeds should grow sublinearly (slope < 1 on a
# log-log fit; the theory predicts about 1/2 on smooth streams).
gen = GeneratorConfig(m=15, p=4, m_prime=6, beta_star=[0.3, -0.25, 0.15, 0.0],
                      seed=0)
rows, summary = experiment_regret(gen, "lasso", T_values=(50, 100, 200, 400),
                                  seeds=range(5), domain=(1e-3, 2.0))
print(f"\nregret slope (log-log fit): {summary['slope']:.3f}")
for T, r in sorted(summary["median_R_T"].items()):
    print(f"T={T:4d}: median R_T = {r:.3f}  avg = {r / T:.4f}")

# Dispersion: pooled loss-curve breakpoints per eps = 1/sqrt(T) window,
# normalized by eps*T, should stay bounded as T grows.
rows = experiment_dispersion(gen, T_values=(50, 100, 200, 400), seeds=range(5),
                             mode="lasso", domain=(1e-3, 2.0))
print("\nT    median count/(eps*T)")
import numpy as np

for T in (50, 100, 200, 400):
    med = np.median([r["count_over_epsT"] for r in rows if r["T"] == T])
    print(f"{T:4d}  {med:.2f}")

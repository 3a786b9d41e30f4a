"""Thresholded regression classifiers: exact 0-1 breakpoints and tuning.

Predictions are 1{<x, beta> >= tau}.  Along a path each validation score is
affine in lambda1 per segment (at most one tau crossing each); for ridge the
scores are rational in lambda2 with at most p crossings per row.  The 0-1
loss is therefore piecewise constant, and (lambda, tau) can be tuned exactly.
"""

import numpy as np

from regtune import (
    Dataset,
    ProblemInstance,
    classify_online,
    classify_tune,
    lars_path,
    lasso_breakpoints,
    ridge_breakpoints,
)

rng = np.random.default_rng(0)


def make_instance(m=16, p=4, m_prime=8, flip=0.15):
    b = rng.uniform(-0.8, 0.8, p)
    Xt = rng.uniform(-1, 1, (m, p))
    yt = np.clip(Xt @ b + rng.uniform(-0.1, 0.1, m), -1, 1)
    Xv = rng.uniform(-1, 1, (m_prime, p))
    yv = (Xv @ b >= 0.1).astype(float)
    noisy = rng.uniform(size=m_prime) < flip
    yv[noisy] = 1 - yv[noisy]
    return ProblemInstance(Dataset(Xt, yt), Dataset(Xv, yv))


inst = make_instance()
tau = 0.1

path = lars_path(inst.train, lambda_min=1e-3)
bs = lasso_breakpoints(path, inst.val, tau, (1e-3, path.lambda_max))
print(f"lasso: {bs.points.shape[0]} breakpoints "
      f"(bound m'*(pieces) = {inst.val.m * len(path.segments)})")
print("  piece losses:", np.round(bs.piece_losses, 3))

bs_r = ridge_breakpoints(inst, tau, (1e-3, 1e3))
print(f"ridge: {bs_r.points.shape[0]} breakpoints "
      f"(bound m'*p = {inst.val.m * inst.p})")

# Joint (lambda, tau) tuning: between score-order events the best threshold
# on an interval comes from one sort of the scores.
insts = [make_instance() for _ in range(3)]
for mode in ("lasso", "ridge"):
    res = classify_tune(insts, mode, (1e-3, 1e3), (-1.5, 1.5))
    lam = res.lambda1 if mode == "lasso" else res.lambda2
    print(f"classify_tune {mode:6s}: lambda={lam:.4f} tau={res.tau:.4f} "
          f"loss={res.loss:.4f}")

# Online: exponential weights over (lambda, tau); tau on a grid of slices,
# lambda exact within each slice.
stream = [make_instance() for _ in range(40)]
rep = classify_online(stream, "lasso", (1e-2, 2.0), (-1.0, 1.0), seed=5,
                      tau_grid_n=17)
tau_star, lam_star = rep.hindsight_params
print(f"\nonline: R_T={rep.R_T:.3f} avg={rep.avg_regret:.4f} "
      f"hindsight (tau={tau_star:.3f}, lambda1={lam_star:.4f})")

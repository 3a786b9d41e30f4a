"""Experiment drivers: cross-validation sample complexity, regret rates, dispersion.

These produce plot-ready tables (lists of dicts, optionally written as CSV);
no plotting is done here.
"""

import csv
import math

import numpy as np

from .errors import InvalidConfig, TooFewRows
from .instances import gen_synthetic, loocv_draw, mccv_draw
from .online import run_online, smooth_stream, dispersion_probe
from .paths import lars_path, en_path
from .piecewise import (
    build_slice,
    erm_tune,
    ridge_loss_evaluator,
    ridge_minimize,
    val_loss_curve,
)
from ._parallel import parallel_map


def write_csv(rows, path, columns):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r[k]) for k in columns})


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return v


def _cv_draw(full, cv, val_fraction, seed):
    if cv == "loo":
        return loocv_draw(full, seed)
    if cv == "mc":
        return mccv_draw(full, val_fraction, seed)
    raise InvalidConfig(f"unknown cv kind {cv!r}")


def _heldout_tools(held, mode, box):
    """Exact held-out evaluation: loss at tuned params and held-out optimum."""
    if mode == "lasso":
        curve, _ = build_slice(held, 0.0, box)
        opt = curve.minimize()[1]
        return (lambda res: float(curve.evaluate(res.lambda1))), opt, curve.maximize()[1]
    if mode == "ridge":
        evs = [ridge_loss_evaluator(inst) for inst in held]

        def at(res):
            return float(np.mean([ev.loss(res.lambda2) for ev in evs]))

        opt = ridge_minimize(evs, box)[1]
        grid = np.geomspace(box[0], box[1], 256)
        top = float(np.max(np.mean([ev.loss(grid) for ev in evs], axis=0)))
        return at, opt, top

    def at(res):  # en: rebuild the exact slice at the tuned lambda2
        curve, _ = build_slice(held, res.lambda2, box)
        return float(curve.evaluate(res.lambda1))

    ref = erm_tune(held, box, mode="en", lambda2_grid_n=64, refine_iters=20)
    curve0, _ = build_slice(held, ref.lambda2, box)
    return at, ref.loss, curve0.maximize()[1]


def experiment_sample_complexity(full, mode="lasso", n_values=(1, 2, 4, 8, 16, 36),
                                 trials=10, seed=0, cv="loo", val_fraction=0.3,
                                 box=(1e-3, 10.0), out_csv=None):
    """Excess held-out loss of the ERM-tuned parameter versus sample count.

    For each n, ``trials`` independent collections of n cross-validation draws
    are tuned; the tuned parameter is scored on a fixed held-out pool of
    10 * max(n) draws against the held-out optimum.  Excess losses are also
    reported normalized by the held-out loss range.
    """
    if full.m < 3:
        raise TooFewRows("need at least 3 rows")
    n_values = sorted(set(int(n) for n in n_values))
    root = np.random.default_rng(seed)
    held_seeds = root.integers(0, 2**63 - 1, size=10 * max(n_values))
    held = [_cv_draw(full, cv, val_fraction, int(s)) for s in held_seeds]
    loss_at, opt, top = _heldout_tools(held, mode, box)
    scale = max(top - opt, 1e-12)

    def run_cell(args):
        n, trial, cell_seed = args
        rng = np.random.default_rng(cell_seed)
        insts = [
            _cv_draw(full, cv, val_fraction, int(s))
            for s in rng.integers(0, 2**63 - 1, size=n)
        ]
        res = erm_tune(insts, box, mode=mode)
        excess = max(loss_at(res) - opt, 0.0)
        return {"n": n, "trial": trial, "excess": excess, "excess_norm": excess / scale}

    cells = [
        (n, t, int(root.integers(0, 2**63 - 1)))
        for n in n_values
        for t in range(trials)
    ]
    detail = parallel_map(run_cell, cells)

    rows = []
    for n in n_values:
        ex = np.array([d["excess"] for d in detail if d["n"] == n])
        exn = np.array([d["excess_norm"] for d in detail if d["n"] == n])
        rows.append({
            "n": n,
            "trials": trials,
            "mean_excess": float(np.mean(ex)),
            "stddev_excess": float(np.std(ex)),
            "median_excess": float(np.median(ex)),
            "mean_excess_norm": float(np.mean(exn)),
            "median_excess_norm": float(np.median(exn)),
        })
    if out_csv:
        write_csv(rows, out_csv, list(rows[0].keys()))
    return rows


_REGRET_COLUMNS = ["T", "seed", "R_T", "avg_regret", "clamp_rate", "zeta", "H"]


def experiment_regret(cfg, mode, T_values=(100, 200, 400, 800, 1600, 3200),
                      seeds=range(10), domain=(1e-3, 2.0), lambda2_grid_n=64,
                      out_csv=None):
    """R_T table over horizons and seeds, with the fitted log-log slope.

    Returns (rows, summary); summary holds the slope of log median R_T against
    log T and the per-T medians.
    """
    T_values = sorted(set(int(t) for t in T_values))
    seeds = list(seeds)

    def run_cell(args):
        T, seed = args
        stream = smooth_stream(cfg, T, seed=seed)
        rep = run_online(stream, mode, domain, seed=seed,
                         lambda2_grid_n=lambda2_grid_n)
        return {
            "T": T, "seed": seed, "R_T": rep.R_T, "avg_regret": rep.avg_regret,
            "clamp_rate": rep.clamp_rate, "zeta": rep.zeta, "H": rep.H,
        }

    rows = parallel_map(run_cell, [(T, s) for T in T_values for s in seeds])
    medians = {
        T: float(np.median([r["R_T"] for r in rows if r["T"] == T])) for T in T_values
    }
    logs = [(math.log(T), math.log(max(medians[T], 1e-12))) for T in T_values]
    slope = float(np.polyfit([x for x, _ in logs], [y for _, y in logs], 1)[0])
    summary = {
        "slope": slope,
        "median_R_T": medians,
        "median_avg_regret": {T: medians[T] / T for T in T_values},
        "mode": mode,
        "T_values": T_values,
        "n_seeds": len(seeds),
        "domain": list(domain),
    }
    if out_csv:
        write_csv(rows, out_csv, _REGRET_COLUMNS)
    return rows, summary


def round_breakpoints(cfg, T, seed, mode="lasso", domain=(1e-3, 2.0), lambda2=0.0):
    """Interior loss-curve breakpoints of T fresh instances (no online loop)."""
    stream = smooth_stream(cfg, T, seed=seed)
    sets = []
    for inst in stream:
        if mode == "lasso":
            path = lars_path(inst.train, lambda_min=domain[0])
        else:
            path = en_path(inst.train, lambda2, lambda_min=domain[0])
        curve = val_loss_curve(path, inst.val, domain=domain)
        sets.append(np.asarray(curve.interior_breaks()))
    return sets


def experiment_dispersion(cfg, T_values=(100, 200, 400, 800, 1600, 3200),
                          seeds=range(10), mode="lasso", domain=(1e-3, 2.0),
                          lambda2=0.0, out_csv=None):
    """Max breakpoint count in any eps = 1/sqrt(T) window, per horizon and seed."""
    T_values = sorted(set(int(t) for t in T_values))
    rows = []

    def run_cell(args):
        T, seed = args
        eps = 1.0 / math.sqrt(T)
        sets = round_breakpoints(cfg, T, seed, mode, domain, lambda2)
        count = dispersion_probe(sets, [eps])[eps]
        return {
            "T": T, "seed": seed, "epsilon": eps, "max_count": count,
            "count_over_epsT": count / (eps * T),
        }

    rows = parallel_map(run_cell, [(T, s) for T in T_values for s in seeds])
    if out_csv:
        write_csv(rows, out_csv, ["T", "seed", "epsilon", "max_count", "count_over_epsT"])
    return rows


def make_generator_config(**kw):
    from .instances import GeneratorConfig

    return GeneratorConfig(**kw)


def synthetic_full_dataset(m, p, seed, R=1.0, kappa_jitter=0.05, beta_star=None):
    """A single bounded smooth dataset, for cross-validation experiments."""
    cfg = make_generator_config(
        m=m, p=p, m_prime=1, R=R, kappa_jitter=kappa_jitter,
        beta_star=beta_star, seed=seed,
    )
    inst = gen_synthetic(cfg)
    return inst.train

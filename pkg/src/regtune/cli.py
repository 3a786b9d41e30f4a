"""Command-line surface: fit, trace paths, tune (batch and online), experiments.

Exit codes: 0 success, 2 configuration/validation problems, 1 runtime errors.
Structured results are JSON; experiment tables are CSV.  Every artifact echoes
the settings that produced it.
"""

import argparse
import csv
import json
import sys

import numpy as np

from . import experiments
from .classify import classify_online, classify_tune
from .errors import (
    DimensionMismatch,
    InvalidConfig,
    ParseError,
    RegtuneError,
    TooFewRows,
)
from .instances import (
    Dataset,
    GeneratorConfig,
    gen_synthetic,
    load_instance,
    loocv_draw,
    mccv_draw,
    save_instance,
)
from .online import run_online
from .paths import en_path, lars_path, piece_stats
from .piecewise import erm_tune
from .solvers import ENParams, en_fit_cd, kkt_check, ridge_fit, val_loss

_USAGE_ERRORS = (InvalidConfig, ParseError, DimensionMismatch, TooFewRows)


def _write_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _load_full_dataset(path):
    """Full dataset for CV draws: JSON {"X":..., "y":...} or CSV with y last."""
    if path.endswith(".json"):
        with open(path) as fh:
            try:
                blob = json.load(fh)
                return Dataset(blob["X"], blob["y"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ParseError(f"{path}: {exc}") from exc
    rows = []
    try:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rows.append([float(t) for t in line.split(",")])
    except (OSError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise ParseError(f"{path}: need at least two columns (features, then y)")
    return Dataset(arr[:, :-1], arr[:, -1])


def _collect_instances(args):
    insts = []
    for f in args.instances or []:
        fmt = "csv-pair" if not f.endswith(".json") else "json-bundle"
        insts.append(load_instance(f, fmt))
    if getattr(args, "dataset", None):
        full = _load_full_dataset(args.dataset)
        rng = np.random.default_rng(args.seed)
        for _ in range(args.draws):
            s = int(rng.integers(0, 2**63 - 1))
            if args.cv == "loo":
                insts.append(loocv_draw(full, s))
            else:
                insts.append(mccv_draw(full, args.val_fraction, s))
    if not insts:
        raise InvalidConfig("no instances given (use --instances or --dataset)")
    return insts


def _gen_cfg_from_args(args):
    return GeneratorConfig(
        m=args.gen_m, p=args.gen_p, m_prime=args.gen_m_prime, R=args.gen_R,
        kappa_jitter=args.gen_jitter,
        beta_star=None if args.gen_beta is None else [float(x) for x in args.gen_beta.split(",")],
        seed=args.seed,
    )


def _add_gen_flags(sp, prefix="gen-"):
    sp.add_argument(f"--{prefix}m", dest="gen_m", type=int, default=20)
    sp.add_argument(f"--{prefix}p", dest="gen_p", type=int, default=5)
    sp.add_argument(f"--{prefix}m-prime", dest="gen_m_prime", type=int, default=8)
    sp.add_argument(f"--{prefix}R", dest="gen_R", type=float, default=1.0)
    sp.add_argument(f"--{prefix}jitter", dest="gen_jitter", type=float, default=0.05)
    sp.add_argument(f"--{prefix}beta", dest="gen_beta", default=None,
                    help="comma-separated ground-truth coefficients")


def _stream_from_args(args):
    if args.instances:
        return [_load_one(f) for f in args.instances]
    from .online import smooth_stream

    cfg = _gen_cfg_from_args(args)
    return smooth_stream(cfg, args.T, seed=args.seed)


def _load_one(path):
    fmt = "csv-pair" if not path.endswith(".json") else "json-bundle"
    return load_instance(path, fmt)


def _report_to_dict(rep, settings):
    return {
        "T": rep.T, "mode": rep.mode, "zeta": rep.zeta, "H": rep.H,
        "R_T": rep.R_T, "avg_regret": rep.avg_regret,
        "hindsight_params": list(rep.hindsight_params),
        "hindsight_total": rep.hindsight_total,
        "clamp_rate": rep.clamp_rate,
        "dispersion_counts": {str(k): v for k, v in rep.dispersion_counts.items()},
        "per_round_losses": [float(x) for x in rep.per_round_losses],
        "settings": settings,
    }


def _write_round_csvs(rep, per_round_path, regret_path):
    if per_round_path:
        with open(per_round_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "params", "loss"])
            for t, (ch, l) in enumerate(zip(rep.chosen, rep.per_round_losses), 1):
                w.writerow([t, " ".join(format(v, ".17g") for v in ch), format(l, ".17g")])
    if regret_path:
        cum = np.cumsum(rep.per_round_losses)
        bench = rep.hindsight_total / rep.T
        with open(regret_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "loss", "cum_loss", "cum_regret_vs_hindsight"])
            for t, l in enumerate(rep.per_round_losses, 1):
                w.writerow([
                    t, format(l, ".17g"), format(cum[t - 1], ".17g"),
                    format(cum[t - 1] - bench * t, ".17g"),
                ])


# -- subcommand handlers -------------------------------------------------------


def _cmd_gen(args):
    cfg = GeneratorConfig(m=args.m, p=args.p, m_prime=args.m_prime, R=args.R,
                          kappa_jitter=args.jitter,
                          beta_star=None if args.beta is None else
                          [float(x) for x in args.beta.split(",")],
                          seed=args.seed)
    inst = gen_synthetic(cfg)
    save_instance(inst, args.out)
    return 0


def _cmd_solve(args):
    inst = _load_one(args.instance)
    if args.mode == "ridge":
        coefs = ridge_fit(inst.train, args.lambda2)
        kkt = None
    else:
        lam2 = args.lambda2 if args.mode == "en" else 0.0
        params = ENParams(args.lambda1, lam2)
        coefs = en_fit_cd(inst.train, params, tol=args.tol)
        rep = kkt_check(inst.train, coefs, params)
        kkt = {
            "max_active_violation": rep.max_active_violation,
            "max_inactive_excess": rep.max_inactive_excess,
            "passed": rep.passed,
        }
    out = {
        "mode": args.mode,
        "lambda1": args.lambda1,
        "lambda2": args.lambda2 if args.mode != "lasso" else 0.0,
        "beta": [float(b) for b in coefs.beta],
        "support_size": coefs.support_size,
        "val_loss": val_loss(coefs, inst.val),
        "train_loss": val_loss(coefs, inst.train),
        "kkt": kkt,
        "settings": {"tol": args.tol, "instance": args.instance},
    }
    _write_json(out, args.out)
    return 0


def _cmd_path(args):
    inst = _load_one(args.instance)
    if args.lambda2 > 0:
        path = en_path(inst.train, args.lambda2, lambda_min=args.lambda_min)
    else:
        path = lars_path(inst.train, lambda_min=args.lambda_min)
    out = {
        "lambda2": path.lambda2,
        "lambda_max": path.lambda_max,
        "lambda_min": path.lambda_min,
        "p": path.p,
        "events": [
            {"lambda1": lam, "kind": kind, "feature": j}
            for lam, kind, j in path.event_log
        ],
        "segments": [
            {
                "lo": seg.lo, "hi": seg.hi,
                "support": list(seg.support.indices),
                "signs": list(seg.support.signs),
                "c1": [float(v) for v in seg.c1],
                "c2": [float(v) for v in seg.c2],
            }
            for seg in path.segments
        ],
        "stats": piece_stats(path),
        "settings": {"instance": args.instance, "lambda_min": args.lambda_min},
    }
    _write_json(out, args.out)
    return 0


def _tuning_result_dict(res, n_instances, extra=None):
    out = {
        "lambda1": res.lambda1,
        "lambda2": res.lambda2,
        "loss": res.loss,
        "objective": res.objective,
        "mode": res.mode,
        "n_instances": n_instances,
        "diagnostics": {
            k: (v if isinstance(v, (int, float, str, bool, list)) else str(v))
            for k, v in res.diagnostics.items()
        },
    }
    if res.tau is not None:
        out["tau"] = res.tau
    if extra:
        out["settings"] = extra
    return out


def _cmd_tune_erm(args):
    insts = _collect_instances(args)
    res = erm_tune(insts, tuple(args.box), mode=args.mode, objective=args.objective,
                   lambda2_grid_n=args.slices, refine_iters=args.refine)
    settings = {"box": list(args.box), "slices": args.slices, "refine": args.refine,
                "seed": args.seed, "cv": args.cv}
    _write_json(_tuning_result_dict(res, len(insts), settings), args.out)
    return 0


def _cmd_tune_online(args):
    stream = _stream_from_args(args)
    rep = run_online(stream, args.mode, tuple(args.domain), zeta=args.zeta,
                     seed=args.seed, lambda2_grid_n=args.slices,
                     horizon=args.horizon)
    settings = {"domain": list(args.domain), "slices": args.slices,
                "seed": args.seed, "T": len(stream)}
    _write_json(_report_to_dict(rep, settings), args.out)
    _write_round_csvs(rep, args.per_round_csv, args.regret_csv)
    return 0


def _cmd_classify_tune(args):
    insts = _collect_instances(args)
    res = classify_tune(insts, args.mode, tuple(args.box), tuple(args.tau_box),
                        tau_grid_n=args.tau_grid, lambda2_grid_n=args.slices)
    settings = {"box": list(args.box), "tau_box": list(args.tau_box),
                "tau_grid": args.tau_grid, "slices": args.slices, "seed": args.seed}
    _write_json(_tuning_result_dict(res, len(insts), settings), args.out)
    return 0


def _cmd_classify_online(args):
    stream = _stream_from_args(args)
    # labels must be binary: threshold generated labels when using the generator
    stream = [_binarize(inst, args.label_threshold) for inst in stream]
    rep = classify_online(stream, args.mode, tuple(args.domain),
                          tuple(args.tau_box), zeta=args.zeta, seed=args.seed,
                          tau_grid_n=args.tau_grid, lambda2_grid_n=args.slices,
                          horizon=args.horizon)
    settings = {"domain": list(args.domain), "tau_box": list(args.tau_box),
                "tau_grid": args.tau_grid, "seed": args.seed, "T": len(stream)}
    _write_json(_report_to_dict(rep, settings), args.out)
    _write_round_csvs(rep, args.per_round_csv, args.regret_csv)
    return 0


def _binarize(inst, thr):
    from .instances import ProblemInstance

    if np.all((inst.val.y == 0) | (inst.val.y == 1)):
        return inst
    val = Dataset(inst.val.X, (inst.val.y >= thr).astype(float))
    return ProblemInstance(inst.train, val, inst.meta)


def _cmd_diagnose_dispersion(args):
    cfg = _gen_cfg_from_args(args)
    rows = experiments.experiment_dispersion(
        cfg, T_values=args.T_values, seeds=range(args.seeds), mode=args.mode,
        domain=tuple(args.domain), out_csv=args.out,
    )
    if args.out is None:
        _write_json(rows, None)
    return 0


def _cmd_experiment(args):
    if args.kind == "sample-complexity":
        full = (
            _load_full_dataset(args.dataset)
            if args.dataset
            else experiments.synthetic_full_dataset(args.gen_m, args.gen_p, args.seed)
        )
        rows = experiments.experiment_sample_complexity(
            full, mode=args.mode, n_values=args.n_values, trials=args.trials,
            seed=args.seed, cv=args.cv, val_fraction=args.val_fraction,
            box=tuple(args.box), out_csv=args.out,
        )
        if args.out is None:
            _write_json(rows, None)
        return 0
    cfg = _gen_cfg_from_args(args)
    rows, summary = experiments.experiment_regret(
        cfg, args.mode, T_values=args.T_values, seeds=range(args.seeds),
        domain=tuple(args.domain), lambda2_grid_n=args.slices, out_csv=args.out,
    )
    _write_json(summary, args.summary_out)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="regtune", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("gen", help="generate a synthetic instance file")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--m-prime", type=int, default=5)
    sp.add_argument("--R", type=float, default=1.0)
    sp.add_argument("--jitter", type=float, default=0.05)
    sp.add_argument("--beta", default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("-o", "--out", required=True)
    sp.set_defaults(fn=_cmd_gen)

    sp = sub.add_parser("solve", help="fit one instance at fixed parameters")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--mode", choices=["ridge", "lasso", "en"], default="en")
    sp.add_argument("--lambda1", type=float, default=1.0)
    sp.add_argument("--lambda2", type=float, default=0.0)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("-o", "--out", default=None)
    sp.set_defaults(fn=_cmd_solve)

    sp = sub.add_parser("path", help="emit the exact solution path as JSON")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--lambda2", type=float, default=0.0)
    sp.add_argument("--lambda-min", type=float, default=1e-6)
    sp.add_argument("-o", "--out", default=None)
    sp.set_defaults(fn=_cmd_path)

    sp = sub.add_parser("tune-erm", help="empirical risk minimization over instances")
    sp.add_argument("--mode", choices=["ridge", "lasso", "en"], required=True)
    sp.add_argument("--objective", choices=["val", "aic", "bic"], default="val")
    sp.add_argument("--instances", nargs="*", default=None)
    sp.add_argument("--dataset", default=None, help="full dataset for CV draws")
    sp.add_argument("--cv", choices=["loo", "mc"], default="loo")
    sp.add_argument("--draws", type=int, default=20)
    sp.add_argument("--val-fraction", type=float, default=0.3)
    sp.add_argument("--box", type=float, nargs=2, default=[1e-3, 1e3])
    sp.add_argument("--slices", type=int, default=64)
    sp.add_argument("--refine", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("-o", "--out", default=None)
    sp.set_defaults(fn=_cmd_tune_erm)

    sp = sub.add_parser("tune-online", help="continuous exponential weights over a stream")
    sp.add_argument("--mode", choices=["ridge", "lasso", "en"], required=True)
    sp.add_argument("--zeta", type=float, default=None)
    sp.add_argument("--horizon", type=int, default=None)
    sp.add_argument("--domain", type=float, nargs=2, default=[1e-3, 1e3])
    sp.add_argument("--slices", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--instances", nargs="*", default=None)
    sp.add_argument("--T", type=int, default=100)
    _add_gen_flags(sp)
    sp.add_argument("--per-round-csv", default=None)
    sp.add_argument("--regret-csv", default=None)
    sp.add_argument("-o", "--out", default=None)
    sp.set_defaults(fn=_cmd_tune_online)

    sp = sub.add_parser("classify-tune", help="0-1 loss tuning over (lambda, tau)")
    sp.add_argument("--mode", choices=["ridge", "lasso", "en"], required=True)
    sp.add_argument("--instances", nargs="*", default=None)
    sp.add_argument("--dataset", default=None)
    sp.add_argument("--cv", choices=["loo", "mc"], default="loo")
    sp.add_argument("--draws", type=int, default=20)
    sp.add_argument("--val-fraction", type=float, default=0.3)
    sp.add_argument("--box", type=float, nargs=2, default=[1e-3, 1e3])
    sp.add_argument("--tau-box", type=float, nargs=2, default=[-2.0, 2.0])
    sp.add_argument("--tau-grid", type=int, default=65)
    sp.add_argument("--slices", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("-o", "--out", default=None)
    sp.set_defaults(fn=_cmd_classify_tune)

    sp = sub.add_parser("classify-online", help="online 0-1 tuning over (lambda, tau)")
    sp.add_argument("--mode", choices=["ridge", "lasso", "en"], required=True)
    sp.add_argument("--zeta", type=float, default=None)
    sp.add_argument("--horizon", type=int, default=None)
    sp.add_argument("--domain", type=float, nargs=2, default=[1e-3, 1e3])
    sp.add_argument("--tau-box", type=float, nargs=2, default=[-2.0, 2.0])
    sp.add_argument("--tau-grid", type=int, default=33)
    sp.add_argument("--slices", type=int, default=16)
    sp.add_argument("--label-threshold", type=float, default=0.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--instances", nargs="*", default=None)
    sp.add_argument("--T", type=int, default=50)
    _add_gen_flags(sp)
    sp.add_argument("--per-round-csv", default=None)
    sp.add_argument("--regret-csv", default=None)
    sp.add_argument("-o", "--out", default=None)
    sp.set_defaults(fn=_cmd_classify_online)

    sp = sub.add_parser("diagnose-dispersion", help="breakpoint concentration vs horizon")
    sp.add_argument("--mode", choices=["lasso", "en"], default="lasso")
    sp.add_argument("--T-values", type=int, nargs="+", default=[100, 200, 400, 800])
    sp.add_argument("--seeds", type=int, default=5)
    sp.add_argument("--domain", type=float, nargs=2, default=[1e-3, 2.0])
    sp.add_argument("--seed", type=int, default=0)
    _add_gen_flags(sp)
    sp.add_argument("-o", "--out", default=None)
    sp.set_defaults(fn=_cmd_diagnose_dispersion)

    sp = sub.add_parser("experiment", help="sample-complexity and regret studies")
    sp.add_argument("kind", choices=["sample-complexity", "regret"])
    sp.add_argument("--mode", choices=["ridge", "lasso", "en"], default="lasso")
    sp.add_argument("--dataset", default=None)
    sp.add_argument("--cv", choices=["loo", "mc"], default="loo")
    sp.add_argument("--val-fraction", type=float, default=0.3)
    sp.add_argument("--n-values", type=int, nargs="+", default=[1, 2, 4, 8, 16, 36])
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--T-values", type=int, nargs="+",
                    default=[100, 200, 400, 800, 1600, 3200])
    sp.add_argument("--seeds", type=int, default=10)
    sp.add_argument("--box", type=float, nargs=2, default=[1e-3, 10.0])
    sp.add_argument("--domain", type=float, nargs=2, default=[1e-3, 2.0])
    sp.add_argument("--slices", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    _add_gen_flags(sp)
    sp.add_argument("-o", "--out", default=None)
    sp.add_argument("--summary-out", default=None)
    sp.set_defaults(fn=_cmd_experiment)

    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    try:
        return args.fn(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RegtuneError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

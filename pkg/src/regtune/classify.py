"""Classification by thresholded regularized regression: exact breakpoints and tuning.

Predictions are sign(<x, beta> - tau) with sign(0) = 1, so the 0-1 validation
loss is piecewise constant in the regularization parameter and in tau.  Along
a LASSO/ElasticNet path every validation score is affine in lambda1 within a
segment (at most one tau crossing per segment per row); for ridge the scores
are smooth rational functions of lambda2 with at most p crossings per row.
Tuning enumerates the score-order events exactly: between consecutive events
the label sequence in score order is fixed, so the best threshold on each
interval is found by sorting scores once.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidConfig
from .instances import Dataset
from .online import OnlineState, RegretReport, default_zeta, dispersion_probe
from .paths import en_path, lars_path
from .piecewise import (
    TuningResult,
    piecewise_constant,
    ridge_loss_evaluator,
)

_BISECT_ITERS = 80


@dataclass(frozen=True)
class BreakpointSet:
    """Sorted parameter values where the 0-1 loss jumps, with per-piece losses."""

    axis: str
    points: np.ndarray
    piece_losses: np.ndarray
    domain: tuple

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        pls = np.asarray(self.piece_losses, dtype=float)
        pts.setflags(write=False)
        pls.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "piece_losses", pls)
        if pls.shape[0] != pts.shape[0] + 1:
            raise InvalidConfig("need one piece loss per interval")

    def loss_at(self, x):
        i = np.searchsorted(self.points, x, side="right")
        return self.piece_losses[i]

    def to_curve(self):
        breaks = np.concatenate([[self.domain[0]], self.points, [self.domain[1]]])
        return piecewise_constant(breaks, self.piece_losses)


def threshold_predict(c, Xv, tau):
    """Binary predictions 1{<x, beta> >= tau} for the rows of Xv."""
    Xv = np.atleast_2d(np.asarray(Xv, dtype=float))
    if Xv.shape[1] != c.beta.shape[0]:
        raise DimensionMismatch("feature count mismatch")
    return (Xv @ c.beta >= tau).astype(int)


def zero_one_loss(pred, y):
    pred = np.ravel(np.asarray(pred))
    y = np.ravel(np.asarray(y))
    if pred.shape[0] != y.shape[0]:
        raise DimensionMismatch("prediction/label length mismatch")
    _check_binary(y)
    _check_binary(pred)
    return float(np.mean(pred != y))


def _check_binary(y):
    if not np.all((y == 0) | (y == 1)):
        raise InvalidConfig("labels must be binary 0/1")


def _bisect(fn, lo, hi, f_lo):
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if f_lo * f_mid <= 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def _row_crossings_ridge(ev, rows, target_fn, box, scan_n):
    """Roots of target_fn(mu_row(lam2)) per row, by log-scan plus bisection."""
    lo, hi = box
    grid = np.geomspace(lo, hi, scan_n)
    mu = ev.predictions(grid)  # (rows, scan_n)
    out = []
    for j in rows:
        f = target_fn(mu[j], j)
        flips = np.flatnonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)
        for i in flips:
            root = _bisect(
                lambda x: target_fn(ev.predictions(np.array([x]))[j, 0], j),
                grid[i], grid[i + 1], f[i],
            )
            out.append(root)
        out.extend(grid[np.flatnonzero(f == 0.0)].tolist())
    return out


def ridge_breakpoints(inst, tau, box, scan_n=512, evaluator=None):
    """lambda2 values in ``box`` where any validation prediction crosses tau.

    Root isolation scans ``scan_n`` log-spaced points per row; pairs of roots
    closer than the scan step can be missed (documented limitation).
    """
    _check_binary(inst.val.y)
    ev = evaluator if evaluator is not None else ridge_loss_evaluator(inst)
    pts = _row_crossings_ridge(
        ev, range(inst.val.m), lambda mu, j: mu - tau, box, scan_n
    )
    pts = np.sort(np.array([p for p in pts if box[0] < p < box[1]]))
    mids = _interval_midpoints(box, pts)
    losses = [
        zero_one_loss((ev.predictions(np.array([x]))[:, 0] >= tau).astype(int), inst.val.y)
        for x in mids
    ]
    return BreakpointSet("lambda2", pts, np.array(losses), box)


def _interval_midpoints(box, pts):
    edges = np.concatenate([[box[0]], pts, [box[1]]])
    return 0.5 * (edges[:-1] + edges[1:])


def _segment_score_maps(path, val, box):
    """Per lambda1-interval affine score maps (u - lam1 * v) clipped to box.

    Returns a list of (lo, hi, u, v) with u, v of length val.m; includes the
    all-zero region above the path's entry point when the box reaches it.
    """
    lo_box, hi_box = box
    out = []
    for seg in reversed(path.segments):
        lo, hi = max(seg.lo, lo_box), min(seg.hi, hi_box)
        if hi <= lo:
            continue
        idx = list(seg.support.indices)
        XvE = val.X[:, idx]
        out.append((lo, hi, XvE @ seg.c1, XvE @ seg.c2))
    top = out[-1][1] if out else lo_box
    if hi_box > top:
        out.append((top, hi_box, np.zeros(val.m), np.zeros(val.m)))
    return out


def lasso_breakpoints(path, val, tau, box):
    """lambda1 values where a thresholded path prediction changes (<=1 per segment per row)."""
    _check_binary(val.y)
    pts = []
    maps = _segment_score_maps(path, val, box)
    for lo, hi, u, v in maps:
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = (u - tau) / v
        ok = np.isfinite(lam) & (lam > lo) & (lam <= hi)
        pts.extend(lam[ok].tolist())
    pts = np.sort(np.array(pts))
    losses = []
    for x in _interval_midpoints(box, pts):
        scores = _scores_at(maps, x)
        losses.append(zero_one_loss((scores >= tau).astype(int), val.y))
    return BreakpointSet("lambda1", pts, np.array(losses), box)


def _scores_at(maps, lam1):
    for lo, hi, u, v in maps:
        if lo <= lam1 <= hi:
            return u - lam1 * v
    lo, hi, u, v = maps[-1]
    return u - lam1 * v


def _best_tau_sweep(scores, labels, weights, tau_box):
    """Exact best threshold for fixed scores: O(N log N) prefix-sum sweep.

    Predictions are 1{score >= tau}; candidate thresholds are the distinct
    scores and the tau box endpoints.  Ties prefer the smaller tau.
    """
    tlo, thi = tau_box
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    wy = (weights * labels)[order]
    wny = (weights * (1 - labels))[order]
    cum_y = np.concatenate([[0.0], np.cumsum(wy)])
    cum_ny = np.concatenate([[0.0], np.cumsum(wny)])
    total_ny = cum_ny[-1]
    n = s.shape[0]
    # position k: exactly k scores are < tau, i.e. tau in (s[k-1], s[k]]
    errs = (total_ny - cum_ny) + cum_y
    best = None
    for k in range(n + 1):
        lo_k = -np.inf if k == 0 else s[k - 1]
        hi_k = np.inf if k == n else s[k]
        rep = min(hi_k, thi)
        if rep < tlo:
            rep = tlo
        if not (lo_k < rep <= hi_k) or rep < tlo or rep > thi:
            continue
        cand = (float(errs[k]), float(rep))
        if best is None or cand < best:
            best = cand
    if best is None:  # tau box between two adjacent scores; fall back to endpoints
        for rep in (tlo, thi):
            pred_err = float(
                np.sum(weights * np.abs((scores >= rep).astype(float) - labels))
            )
            cand = (pred_err, float(rep))
            if best is None or cand < best:
                best = cand
    return best[1], best[0]


def _pooled_rows(insts):
    weights, labels = [], []
    for inst in insts:
        _check_binary(inst.val.y)
        w = 1.0 / (len(insts) * inst.val.m)
        weights.extend([w] * inst.val.m)
        labels.extend(inst.val.y.astype(int).tolist())
    return np.array(weights), np.array(labels)


def _lasso_events_and_scores(insts, box):
    """Event lambdas (knots + cross-label score crossings) and a pooled score fn."""
    paths = [lars_path(inst.train, lambda_min=box[0]) for inst in insts]
    return _path_events_and_scores(paths, insts, box)


def _path_events_and_scores(paths, insts, box):
    maps_per_inst = [
        _segment_score_maps(path, inst.val, box) for path, inst in zip(paths, insts)
    ]
    weights, labels = _pooled_rows(insts)

    knots = set()
    for maps in maps_per_inst:
        for lo, hi, _, _ in maps:
            knots.update((lo, hi))
    knots = np.array(sorted(k for k in knots if box[0] <= k <= box[1]))

    events = set(knots.tolist()) | {box[0], box[1]}
    for k_lo, k_hi in zip(knots[:-1], knots[1:]):
        mid = 0.5 * (k_lo + k_hi)
        u_all, v_all = [], []
        for maps in maps_per_inst:
            for lo, hi, u, v in maps:
                if lo <= mid <= hi:
                    u_all.append(u)
                    v_all.append(v)
                    break
        u_all = np.concatenate(u_all)
        v_all = np.concatenate(v_all)
        # score order changes only where rows with opposite labels cross
        pos = np.flatnonzero(labels == 1)
        neg = np.flatnonzero(labels == 0)
        du = u_all[pos][:, None] - u_all[neg][None, :]
        dv = v_all[pos][:, None] - v_all[neg][None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = du / dv
        ok = np.isfinite(lam) & (lam > k_lo) & (lam < k_hi)
        events.update(lam[ok].tolist())

    def scores_at(lam1):
        return np.concatenate([_scores_at(maps, lam1) for maps in maps_per_inst])

    return np.array(sorted(events)), scores_at, weights, labels


def _ridge_events_and_scores(insts, box, scan_n):
    evs = [ridge_loss_evaluator(inst) for inst in insts]
    weights, labels = _pooled_rows(insts)
    grid = np.geomspace(box[0], box[1], scan_n)
    mu_all = np.vstack([ev.predictions(grid) for ev in evs])  # pooled rows x grid
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == 0)
    events = {box[0], box[1]}

    def mu_row(r, x):
        row, acc = r, 0
        for ev in evs:
            if row < acc + ev.A.shape[0]:
                return float(ev.predictions(np.array([x]))[row - acc, 0])
            acc += ev.A.shape[0]
        raise IndexError(r)

    for j in pos:
        for k in neg:
            f = mu_all[j] - mu_all[k]
            flips = np.flatnonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)
            for i in flips:
                events.add(
                    _bisect(
                        lambda x: mu_row(j, x) - mu_row(k, x),
                        grid[i], grid[i + 1], f[i],
                    )
                )

    def scores_at(lam2):
        return np.concatenate(
            [ev.predictions(np.array([lam2]))[:, 0] for ev in evs]
        )

    return np.array(sorted(events)), scores_at, weights, labels


def _tune_1d(events, scores_at, weights, labels, tau_box, tau_grid_n):
    """Scan event intervals; exact tau sweep at interval midpoints and events."""
    cands = set(events.tolist())
    cands.update(0.5 * (events[:-1] + events[1:]))
    taus = np.linspace(tau_box[0], tau_box[1], tau_grid_n)
    best = None  # (loss, lam, tau)
    for lam in sorted(cands):
        s = scores_at(float(lam))
        tau, loss = _best_tau_sweep(s, labels, weights, tau_box)
        cand = (loss, float(lam), tau)
        if best is None or cand < best:
            best = cand
        # tau-grid pass at the same lambda, matching the grid-based online
        # representation (the exact sweep already dominates it)
        grid_losses = ((s[None, :] >= taus[:, None]) != labels[None, :]) @ weights
        k = int(np.argmin(grid_losses))
        cand = (float(grid_losses[k]), float(lam), float(taus[k]))
        if cand < best:
            best = cand
    return best


def classify_tune(insts, mode, box, tau_box, tau_grid_n=65, lambda2_grid_n=64,
                  scan_n=512):
    """Exact (lambda, tau) 0-1 tuning for lasso/ridge; lambda2-sliced for en."""
    if not insts:
        raise InvalidConfig("no instances")
    diagnostics = {"n_instances": len(insts)}
    if mode == "lasso":
        ev, sc, w, lab = _lasso_events_and_scores(insts, box)
        loss, lam, tau = _tune_1d(ev, sc, w, lab, tau_box, tau_grid_n)
        return TuningResult(lam, 0.0, loss, mode, "val01", tau, diagnostics)
    if mode == "ridge":
        ev, sc, w, lab = _ridge_events_and_scores(insts, box, scan_n)
        loss, lam, tau = _tune_1d(ev, sc, w, lab, tau_box, tau_grid_n)
        return TuningResult(0.0, lam, loss, mode, "val01", tau, diagnostics)
    if mode != "en":
        raise InvalidConfig(f"unknown mode {mode!r}")

    best = None  # (loss, lam2, lam1, tau)
    for lam2 in np.geomspace(box[0], box[1], lambda2_grid_n):
        paths = [en_path(inst.train, lam2, lambda_min=box[0]) for inst in insts]
        ev, sc, w, lab = _path_events_and_scores(paths, insts, box)
        loss, lam1, tau = _tune_1d(ev, sc, w, lab, tau_box, tau_grid_n)
        cand = (loss, float(lam2), lam1, tau)
        if best is None or cand < best:
            best = cand
    diagnostics["slices"] = int(lambda2_grid_n)
    return TuningResult(best[2], best[1], best[0], "en", "val01", best[3], diagnostics)


# -- online classification -----------------------------------------------------


def _round_losses_classify(inst, mode, box, taus, lam2_values):
    if mode == "lasso":
        path = lars_path(inst.train, lambda_min=box[0])
        return [lasso_breakpoints(path, inst.val, tau, box).to_curve() for tau in taus]
    if mode == "ridge":
        ev = ridge_loss_evaluator(inst)
        return [
            ridge_breakpoints(inst, tau, box, evaluator=ev).to_curve() for tau in taus
        ]
    if mode == "en":
        out = []
        for lam2 in lam2_values:
            path = en_path(inst.train, lam2, lambda_min=box[0])
            for tau in taus:
                out.append(
                    lasso_breakpoints(path, inst.val, tau, box).to_curve()
                )
        return out
    raise InvalidConfig(f"unknown mode {mode!r}")


def classify_online(stream, mode, box, tau_box, zeta=None, seed=0,
                    tau_grid_n=33, lambda2_grid_n=16, horizon=None):
    """Exponential weights over (lambda, tau): exact in lambda, tau on a grid."""
    stream = list(stream)
    if not stream:
        raise InvalidConfig("empty stream")
    T = len(stream)
    if zeta is None:
        zeta = default_zeta(horizon or T)
    taus = np.linspace(tau_box[0], tau_box[1], tau_grid_n)
    lam2_values = (
        np.geomspace(box[0], box[1], lambda2_grid_n) if mode == "en" else None
    )
    if mode == "en":
        slice_keys = [(float(l2), float(t)) for l2 in lam2_values for t in taus]
    else:
        slice_keys = [(float(t),) for t in taus]

    state = OnlineState(box, zeta, 1.0, seed, slice_keys, "pwq")  # 0-1 loss: H = 1
    losses, chosen = [], []
    for inst in stream:
        round_losses = _round_losses_classify(inst, mode, box, taus, lam2_values)
        pt = state.sample()
        loss_t = float(round_losses[pt.slice_index].evaluate(pt.x))
        losses.append(loss_t)
        chosen.append(pt.key + (pt.x,))
        state.update(round_losses)

    key, x, total = state.hindsight()
    R_T = float(np.sum(losses) - total)
    eps = 1.0 / math.sqrt(T)
    bps = [bp for sl in state.slices for bp in sl.breakpoints]
    return RegretReport(
        T=T, mode=mode, zeta=float(zeta), H=1.0,
        per_round_losses=np.array(losses), chosen=tuple(chosen),
        hindsight_params=key + (x,), hindsight_total=float(total),
        R_T=R_T, avg_regret=R_T / T,
        clamp_rate=float(np.mean(state.clamp_fracs)),
        dispersion_counts=dispersion_probe(bps, [eps]),
    )

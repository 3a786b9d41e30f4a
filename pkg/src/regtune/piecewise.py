"""Exact piecewise loss surfaces in the regularization parameters, and ERM tuning.

Along a solution path every validation prediction is affine in lambda1, so the
mean squared validation loss is piecewise quadratic with knots at the path
events; those curves support exact merging, penalizing (AIC/BIC) and global
minimization.  The ridge loss is a smooth rational function of lambda2,
evaluated exactly through the spectrum of the training Gram matrix.  The
two-parameter ElasticNet surface is handled by lambda2 slices, each exact in
lambda1.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, DomainMismatch, InvalidConfig, OutOfRange
from .linalg import sym_eig
from .paths import en_path, lars_path
from ._parallel import parallel_map

_KNOT_SLACK = 1e-9


@dataclass(frozen=True)
class PiecewiseQuadratic:
    """loss(x) = a_i x^2 + b_i x + c_i on [breaks[i], breaks[i+1]].

    ``support`` holds the active-set size per piece (-1 once undefined, e.g.
    after merging curves).  Evaluation at a shared knot uses the piece to the
    right of the knot.
    """

    breaks: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    support: np.ndarray
    objective_kind: str = "val"

    def __post_init__(self):
        for name in ("breaks", "a", "b", "c"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        sup = np.asarray(self.support, dtype=int)
        sup.setflags(write=False)
        object.__setattr__(self, "support", sup)
        k = self.breaks.shape[0] - 1
        if not (self.a.shape[0] == self.b.shape[0] == self.c.shape[0] == sup.shape[0] == k):
            raise InvalidConfig("inconsistent piece arrays")
        if np.any(np.diff(self.breaks) < 0):
            raise InvalidConfig("breakpoints must be ascending")

    @property
    def n_pieces(self):
        return self.breaks.shape[0] - 1

    @property
    def domain(self):
        return float(self.breaks[0]), float(self.breaks[-1])

    def piece_index(self, x):
        i = np.searchsorted(self.breaks, x, side="right") - 1
        return np.clip(i, 0, self.n_pieces - 1)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain
        slack = _KNOT_SLACK * max(1.0, abs(lo), abs(hi))
        if np.any(x < lo - slack) or np.any(x > hi + slack):
            raise OutOfRange("evaluation point outside curve domain")
        i = self.piece_index(x)
        return (self.a[i] * x + self.b[i]) * x + self.c[i]

    def interior_breaks(self):
        return self.breaks[1:-1]

    def _candidates(self, sign):
        # endpoints of every piece plus interior vertices curving the right way
        lo, hi = self.breaks[:-1], self.breaks[1:]
        xs = [lo, hi]
        curve_ok = sign * self.a > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            vert = -self.b / (2.0 * self.a)
        inside = curve_ok & (vert > lo) & (vert < hi)
        if np.any(inside):
            xs.append(vert[inside])
        ii = [np.arange(self.n_pieces), np.arange(self.n_pieces)]
        if np.any(inside):
            ii.append(np.flatnonzero(inside))
        xs = np.concatenate(xs)
        ii = np.concatenate(ii)
        vals = (self.a[ii] * xs + self.b[ii]) * xs + self.c[ii]
        return xs, vals

    def minimize(self):
        """Global (x, value) minimum; ties broken toward smaller x."""
        if self.n_pieces == 0:
            raise InvalidConfig("empty curve")
        xs, vals = self._candidates(+1)
        k = np.lexsort((xs, vals))[0]
        return float(xs[k]), float(vals[k])

    def min_value(self):
        """Minimum value only (no tie-break bookkeeping)."""
        if self.n_pieces == 0:
            raise InvalidConfig("empty curve")
        return float(np.min(self._candidates(+1)[1]))

    def maximize(self):
        if self.n_pieces == 0:
            raise InvalidConfig("empty curve")
        xs, vals = self._candidates(-1)
        k = np.lexsort((xs, -vals))[0]
        return float(xs[k]), float(vals[k])


def _pwq_fast(breaks, a, b, c, support, objective_kind="val"):
    # internal constructor for hot paths: inputs are already validated float
    # arrays with ascending breaks
    out = object.__new__(PiecewiseQuadratic)
    object.__setattr__(out, "breaks", breaks)
    object.__setattr__(out, "a", a)
    object.__setattr__(out, "b", b)
    object.__setattr__(out, "c", c)
    object.__setattr__(out, "support", support)
    object.__setattr__(out, "objective_kind", objective_kind)
    return out


def constant_curve(lo, hi, value, support=0, objective_kind="val"):
    return PiecewiseQuadratic(
        np.array([lo, hi]), np.zeros(1), np.zeros(1), np.array([float(value)]),
        np.array([support]), objective_kind,
    )


def piecewise_constant(breaks, values, objective_kind="val"):
    k = len(values)
    return PiecewiseQuadratic(
        np.asarray(breaks, dtype=float), np.zeros(k), np.zeros(k),
        np.asarray(values, dtype=float), np.full(k, -1), objective_kind,
    )


def val_loss_curve(path, val, domain=None):
    """Exact validation loss of ``path`` as a piecewise quadratic in lambda1.

    ``domain`` defaults to the path's covered interval; a domain reaching above
    the path's lambda_max gains a constant piece for the all-zero solution.
    """
    if val.p != path.p:
        raise DimensionMismatch(f"val has {val.p} features, path has {path.p}")
    lo, hi = domain if domain is not None else (path.lambda_min, path.lambda_max)
    if hi <= lo:
        raise InvalidConfig("empty curve domain")
    slack = _KNOT_SLACK * max(1.0, hi)
    if lo < path.lambda_min - slack:
        raise OutOfRange("curve domain extends below the path's lambda_min")

    m_prime = val.m
    zero_loss = float(val.y @ val.y) / m_prime
    breaks, aa, bb, cc, sup = [lo], [], [], [], []
    for seg in reversed(path.segments):  # ascending in lambda1
        s_lo, s_hi = max(seg.lo, lo), min(seg.hi, hi)
        if s_hi <= s_lo:
            continue
        idx = list(seg.support.indices)
        XvE = val.X[:, idx]
        d = val.y - XvE @ seg.c1
        v = XvE @ seg.c2
        aa.append(float(v @ v) / m_prime)
        bb.append(2.0 * float(d @ v) / m_prime)
        cc.append(float(d @ d) / m_prime)
        sup.append(len(idx))
        breaks.append(s_hi)
    if hi > breaks[-1]:  # beyond the path's entry point the solution is zero
        aa.append(0.0)
        bb.append(0.0)
        cc.append(zero_loss)
        sup.append(0)
        breaks.append(hi)
    if not aa:  # degenerate path with no segments inside the domain
        aa, bb, cc, sup = [0.0], [0.0], [zero_loss], [0]
        breaks = [lo, hi]
    return _pwq_fast(
        np.array(breaks), np.array(aa), np.array(bb), np.array(cc),
        np.array(sup, dtype=int),
    )


def penalize(curve, kind, m):
    """Add the information-criterion offset 2*|E| (AIC) or 2*|E|*ln m (BIC)."""
    if kind not in ("aic", "bic"):
        raise InvalidConfig(f"unknown penalty kind {kind!r}")
    if np.any(curve.support < 0):
        raise InvalidConfig("curve pieces lack support sizes")
    factor = 2.0 if kind == "aic" else 2.0 * math.log(m)
    return PiecewiseQuadratic(
        curve.breaks, curve.a, curve.b, curve.c + factor * curve.support,
        curve.support, kind,
    )


def minimize_pw(curve):
    """(argmin, min) of a piecewise quadratic; ties go to the smaller abscissa."""
    return curve.minimize()


def _check_common_domain(curves):
    lo, hi = curves[0].domain
    scale = max(1.0, abs(lo), abs(hi))
    for cur in curves[1:]:
        lo2, hi2 = cur.domain
        if abs(lo2 - lo) > _KNOT_SLACK * scale or abs(hi2 - hi) > _KNOT_SLACK * scale:
            raise DomainMismatch(f"domains differ: [{lo},{hi}] vs [{lo2},{hi2}]")


def merge_curves(curves, average=False):
    """Breakpoint-union merge; coefficients are summed (averaged on request)."""
    if not curves:
        raise InvalidConfig("no curves to merge")
    _check_common_domain(curves)
    if len(curves) == 1:
        cur = curves[0]
        out = PiecewiseQuadratic(cur.breaks, cur.a, cur.b, cur.c,
                                 np.full(cur.n_pieces, -1), cur.objective_kind)
        return out
    breaks = curves[0].breaks
    for cur in curves[1:]:
        breaks = np.union1d(breaks, cur.breaks)
    breaks[0], breaks[-1] = curves[0].breaks[0], curves[0].breaks[-1]
    mids = 0.5 * (breaks[:-1] + breaks[1:])
    k = mids.shape[0]
    a, b, c = np.zeros(k), np.zeros(k), np.zeros(k)
    for cur in curves:
        i = cur.piece_index(mids)
        a += cur.a[i]
        b += cur.b[i]
        c += cur.c[i]
    if average:
        n = len(curves)
        a, b, c = a / n, b / n, c / n
    return PiecewiseQuadratic(breaks, a, b, c, np.full(k, -1), curves[0].objective_kind)


def sum_curves(curves):
    """Average of curves over their common domain (piece supports are dropped)."""
    return merge_curves(curves, average=True)


def merge_pair_sum(big, small):
    """Pointwise big + small, tuned for a large accumulator and a small addend.

    Breakpoints of ``small`` are spliced into ``big``'s (already sorted) break
    array without a re-sort, keeping the online accumulation loop linear in
    the accumulator size.
    """
    _check_common_domain((big, small))
    pts = small.breaks[1:-1]
    pos = np.searchsorted(big.breaks, pts)
    nb = np.insert(big.breaks, pos, pts)
    keep = np.empty(nb.shape[0], dtype=bool)
    keep[0] = True
    np.greater(nb[1:], nb[:-1], out=keep[1:])
    nb = nb[keep]
    mids = 0.5 * (nb[:-1] + nb[1:])
    ib, is_ = big.piece_index(mids), small.piece_index(mids)
    return _pwq_fast(
        nb,
        big.a[ib] + small.a[is_],
        big.b[ib] + small.b[is_],
        big.c[ib] + small.c[is_],
        np.full(mids.shape[0], -1),
        big.objective_kind,
    )


def clamp_curve(curve, hi):
    """Clamp values above ``hi``, splitting pieces at the crossings.

    Returns (clamped curve, fraction of the domain measure that was clamped).
    """
    if curve.maximize()[1] <= hi:
        return curve, 0.0
    lo_d, hi_d = curve.domain
    new_breaks, aa, bb, cc, sup = [curve.breaks[0]], [], [], [], []
    clamped_len = 0.0

    def emit(lo, up, a, b, c, s, clamp):
        nonlocal clamped_len
        if up <= lo:
            return
        if clamp:
            aa.append(0.0), bb.append(0.0), cc.append(float(hi))
            clamped_len += up - lo
        else:
            aa.append(a), bb.append(b), cc.append(c)
        sup.append(s)
        new_breaks.append(up)

    for i in range(curve.n_pieces):
        lo, up = curve.breaks[i], curve.breaks[i + 1]
        a, b, c = curve.a[i], curve.b[i], curve.c[i]
        s = curve.support[i]
        # roots of a x^2 + b x + (c - hi) inside (lo, up)
        roots = []
        if a != 0.0:
            disc = b * b - 4.0 * a * (c - hi)
            if disc > 0:
                sq = math.sqrt(disc)
                roots = sorted(((-b - sq) / (2 * a), (-b + sq) / (2 * a)))
        elif b != 0.0:
            roots = [(hi - c) / b]
        cuts = [lo] + [r for r in roots if lo < r < up] + [up]
        for xl, xr in zip(cuts[:-1], cuts[1:]):
            xm = 0.5 * (xl + xr)
            above = (a * xm + b) * xm + c > hi
            emit(xl, xr, a, b, c, s, above)

    frac = clamped_len / max(hi_d - lo_d, np.finfo(float).tiny)
    return (
        _pwq_fast(np.array(new_breaks), np.array(aa), np.array(bb),
                  np.array(cc), np.array(sup, dtype=int), curve.objective_kind),
        float(frac),
    )


# -- ridge loss as an exact rational function of lambda2 ----------------------


@dataclass(frozen=True)
class RidgeLossEvaluator:
    """Spectral form of the ridge validation loss.

    loss(lam2) = mean_j (y'_j - sum_i A_ji / (eig_i + lam2))^2, which is smooth
    for lam2 > 0 since the Gram eigenvalues are nonnegative.
    """

    eigvals: np.ndarray
    A: np.ndarray          # one row per validation example
    y_val: np.ndarray
    train_m: int
    train_p: int

    def predictions(self, lam2):
        lam2 = np.atleast_1d(np.asarray(lam2, dtype=float))
        inv = 1.0 / (self.eigvals[:, None] + lam2[None, :])
        return self.A @ inv  # (m', L)

    def loss(self, lam2):
        scalar = np.isscalar(lam2)
        mu = self.predictions(lam2)
        out = np.mean((np.asarray(self.y_val)[:, None] - mu) ** 2, axis=0)
        return float(out[0]) if scalar else out

    def dloss(self, lam2):
        scalar = np.isscalar(lam2)
        lam2v = np.atleast_1d(np.asarray(lam2, dtype=float))
        inv = 1.0 / (self.eigvals[:, None] + lam2v[None, :])
        mu = self.A @ inv
        dmu = -(self.A @ inv**2)
        out = np.mean(-2.0 * (self.y_val[:, None] - mu) * dmu, axis=0)
        return float(out[0]) if scalar else out


def ridge_loss_evaluator(inst):
    dec = sym_eig(inst.train.X.T @ inst.train.X)
    E = dec.eigvecs
    A = (inst.val.X @ E) * (E.T @ (inst.train.X.T @ inst.train.y))[None, :]
    return RidgeLossEvaluator(dec.eigvals, A, inst.val.y, inst.train.m, inst.train.p)


def ridge_minimize(evals, box, grid_n=512, tol=1e-10):
    """Exact-scan minimization of the averaged ridge loss over lambda2 in box.

    Scans the analytic derivative on a log grid, bisects every sign change,
    and returns the best of the critical points and the box endpoints.
    """
    if grid_n < 16:
        raise InvalidConfig("grid_n must be at least 16")
    lo, hi = box
    if not (0 < lo < hi):
        raise InvalidConfig("box must satisfy 0 < lo < hi")
    grid = np.geomspace(lo, hi, grid_n)

    def dmean(x):
        return np.mean([ev.dloss(x) for ev in evals], axis=0)

    def lmean(x):
        return float(np.mean([ev.loss(float(x)) for ev in evals]))

    d = dmean(grid)
    cands = [lo, hi]
    flips = np.flatnonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)
    for i in flips:
        a_x, b_x = grid[i], grid[i + 1]
        fa = d[i]
        while b_x - a_x > tol * max(1.0, b_x):
            m_x = 0.5 * (a_x + b_x)
            fm = dmean(np.array([m_x]))[0]
            if fa * fm <= 0:
                b_x = m_x
            else:
                a_x, fa = m_x, fm
        cands.append(0.5 * (a_x + b_x))
    # grid points where the derivative is exactly zero are critical points too
    cands.extend(grid[d == 0.0].tolist())
    best_x, best_v = None, np.inf
    for x in sorted(cands):
        v = lmean(x)
        if v < best_v:
            best_x, best_v = x, v
    return float(best_x), float(best_v)


# -- two-parameter surface via lambda2 slices ---------------------------------


@dataclass(frozen=True)
class SliceGrid2D:
    """One exact lambda1 curve per lambda2 grid value, plus support fingerprints."""

    lambda2_values: np.ndarray
    slices: tuple
    fingerprints: tuple

    def boundary_crossings(self):
        """Number of adjacent slice pairs whose support fingerprints differ."""
        return sum(
            1
            for f1, f2 in zip(self.fingerprints[:-1], self.fingerprints[1:])
            if f1 != f2
        )


def _instance_curve(inst, lam2, box, objective):
    lo, hi = box
    path = en_path(inst.train, lam2, lambda_min=lo) if lam2 > 0 else lars_path(
        inst.train, lambda_min=lo
    )
    curve = val_loss_curve(path, inst.val, domain=(lo, hi))
    if objective in ("aic", "bic"):
        curve = penalize(curve, objective, inst.train.m)
    return path, curve


def build_slice(insts, lam2, box, objective="val"):
    """Averaged (optionally penalized) lambda1 curve at fixed lambda2."""
    paths, curves = [], []
    for inst in insts:
        path, curve = _instance_curve(inst, lam2, box, objective)
        paths.append(path)
        curves.append(curve)
    merged = merge_curves(curves, average=True) if len(curves) > 1 else curves[0]
    fingerprint = tuple(
        (seg.support.indices, seg.support.signs) for seg in paths[0].segments
    )
    return merged, fingerprint


def en_surface(insts, box, lambda2_grid_n=64, objective="val"):
    """Slice the (lambda1, lambda2) box into exact lambda1 curves."""
    if lambda2_grid_n < 2:
        raise InvalidConfig("lambda2_grid_n must be at least 2")
    lam2s = np.geomspace(box[0], box[1], lambda2_grid_n)
    results = parallel_map(lambda l2: build_slice(insts, l2, box, objective), lam2s)
    slices = tuple(r[0] for r in results)
    fps = tuple(r[1] for r in results)
    return SliceGrid2D(lam2s, slices, fps)


@dataclass(frozen=True)
class TuningResult:
    lambda1: float
    lambda2: float
    loss: float
    mode: str
    objective: str
    tau: float | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)


def erm_tune(insts, box, mode="en", objective="val", lambda2_grid_n=64,
             refine_iters=20):
    """Empirical risk minimization over the regularization box.

    lasso: exact over lambda1 at lambda2 = 0.  ridge: analytic scan over
    lambda2.  en: exact lambda1 curves on a lambda2 grid, with golden-section
    refinement of lambda2 around the best slice (each probe rebuilds the exact
    slice).  Ties prefer smaller (lambda2, lambda1).
    """
    if not insts:
        raise InvalidConfig("no instances")
    lo, hi = box
    diagnostics = {"n_instances": len(insts), "box": [lo, hi]}

    if mode == "lasso":
        curve, _ = build_slice(insts, 0.0, box, objective)
        lam1, loss = curve.minimize()
        return TuningResult(lam1, 0.0, loss, mode, objective, None, diagnostics)

    if mode == "ridge":
        evals = [ridge_loss_evaluator(inst) for inst in insts]
        lam2, loss = ridge_minimize(evals, box)
        if objective in ("aic", "bic"):
            # ridge keeps every coefficient nonzero, so the penalty is flat
            pen = np.mean([
                2.0 * inst.p * (1.0 if objective == "aic" else math.log(inst.train.m))
                for inst in insts
            ])
            loss += float(pen)
        return TuningResult(0.0, lam2, loss, mode, objective, None, diagnostics)

    if mode != "en":
        raise InvalidConfig(f"unknown mode {mode!r}")

    surface = en_surface(insts, box, lambda2_grid_n, objective)
    lam2s = surface.lambda2_values
    per_slice = [s.minimize() for s in surface.slices]
    values = np.array([v for _, v in per_slice])
    k = int(np.argmin(values))
    best = (lam2s[k], per_slice[k][0], per_slice[k][1])

    def probe(lam2):
        curve, _ = build_slice(insts, lam2, box, objective)
        lam1, v = curve.minimize()
        return lam1, v

    # golden-section on log(lambda2) in the bracket around the best slice
    left = math.log(lam2s[max(k - 1, 0)])
    right = math.log(lam2s[min(k + 1, len(lam2s) - 1)])
    if right > left and refine_iters > 0:
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        x1 = right - invphi * (right - left)
        x2 = left + invphi * (right - left)
        f1, f2 = probe(math.exp(x1)), probe(math.exp(x2))
        for _ in range(refine_iters):
            if f1[1] <= f2[1]:
                right, x2, f2 = x2, x1, f1
                x1 = right - invphi * (right - left)
                f1 = probe(math.exp(x1))
            else:
                left, x1, f1 = x1, x2, f2
                x2 = left + invphi * (right - left)
                f2 = probe(math.exp(x2))
        for x, f in ((x1, f1), (x2, f2)):
            cand = (math.exp(x), f[0], f[1])
            if f[1] < best[2] or (
                f[1] == best[2] and (cand[0], cand[1]) < (best[0], best[1])
            ):
                best = cand

    diagnostics["slices"] = int(len(lam2s))
    diagnostics["fingerprint_changes"] = surface.boundary_crossings()
    return TuningResult(best[1], best[0], best[2], mode, objective, None, diagnostics)

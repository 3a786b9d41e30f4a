"""Exact homotopy of the LASSO / ElasticNet solution in lambda1.

The solver sweeps lambda1 downward from lambda_max = max_j |x_j^T y| (where
the all-zero solution stops being optimal) and emits one segment per
inter-event interval.  Within a segment the active coefficients are affine,
beta_E(lambda1) = c1 - lambda1 * c2 with c1 = G^-1 X_E^T y, c2 = G^-1 s and
G = X_E^T X_E.  Events are either a feature joining the active set (its
correlation with the residual reaching the lambda1 bound, at either sign) or
leaving it (its coefficient crossing zero).  The ElasticNet path at fixed
lambda2 is the same sweep on the row-augmented dataset, which only shifts G
by lambda2 * I and leaves feature indices untouched.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    GeneralPositionViolated,
    InvalidConfig,
    OutOfRange,
    PathBudgetExceeded,
)
from .solvers import Coefs, SignedSupport, augment

_REL_EPS = 1e-10


def _support_fast(idx, sgn):
    # idx comes from flatnonzero (sorted, unique); skip re-validation
    out = object.__new__(SignedSupport)
    object.__setattr__(out, "indices", tuple(int(i) for i in idx))
    object.__setattr__(out, "signs", tuple(int(s) for s in sgn))
    return out


@dataclass(frozen=True)
class PathSegment:
    """beta restricted to ``support`` equals c1 - lambda1 * c2 on [lo, hi]."""

    lo: float
    hi: float
    support: SignedSupport
    c1: np.ndarray
    c2: np.ndarray

    def beta_at(self, lam1, p):
        beta = np.zeros(p)
        if len(self.support):
            beta[list(self.support.indices)] = self.c1 - lam1 * self.c2
        return beta


@dataclass(frozen=True)
class RegPath:
    """Solution path over [lambda_min, lambda_max]; segments ordered by decreasing lambda1."""

    lambda2: float
    lambda_max: float
    lambda_min: float
    p: int
    n_train_rows: int
    segments: tuple
    event_log: tuple

    def __post_init__(self):
        los = np.array([seg.lo for seg in self.segments][::-1])
        los.setflags(write=False)
        object.__setattr__(self, "_asc_los", los)

    def knots(self):
        """Ascending breakpoints, endpoints included."""
        if not self.segments:
            return np.array([self.lambda_min, self.lambda_max])
        ks = [seg.lo for seg in self.segments[::-1]]
        ks.append(self.segments[0].hi)
        return np.array(ks)

    def interior_knots(self):
        return self.knots()[1:-1]

    def segment_at(self, lam1):
        if not self.segments:
            return None
        i = int(np.searchsorted(self._asc_los, lam1, side="right")) - 1
        i = min(max(i, 0), len(self.segments) - 1)
        return self.segments[len(self.segments) - 1 - i]

    def eval(self, lam1):
        lo = self.lambda_min
        hi = max(self.lambda_max, self.lambda_min)
        slack = _REL_EPS * max(1.0, hi)
        if lam1 < lo - slack or lam1 > hi + slack:
            raise OutOfRange(f"lambda1={lam1} outside [{lo}, {hi}]")
        if not self.segments or lam1 >= self.lambda_max:
            return np.zeros(self.p)
        seg = self.segment_at(lam1)
        return seg.beta_at(lam1, self.p)


def lambda1_max(ds):
    """Smallest lambda1 at which the solution is identically zero."""
    return float(np.max(np.abs(ds.X.T @ ds.y), initial=0.0))


def lars_path(ds, lambda_min, budget=None, lambda2=0.0):
    """LASSO homotopy of ``ds`` over [lambda_min, lambda_max].

    ``lambda2`` only annotates the returned path (used by en_path, which
    passes the augmented dataset); the sweep itself is pure LASSO.
    """
    if not lambda_min > 0:
        raise InvalidConfig("lambda_min must be > 0")
    X, y = ds.X, ds.y
    m, p = X.shape
    if budget is None:
        budget = 50 * (m + p)

    corr0 = X.T @ y
    lam_max = float(np.max(np.abs(corr0), initial=0.0))
    if lam_max <= lambda_min:
        return RegPath(lambda2, lam_max, lambda_min, p, m, (), ())

    active = np.zeros(p, dtype=bool)
    signs = np.zeros(p, dtype=int)
    segments = []
    events = []

    lam_cur = lam_max
    tie = _REL_EPS * max(1.0, lam_max)
    for j in np.flatnonzero(np.abs(corr0) >= lam_max - tie):
        active[j] = True
        signs[j] = int(np.sign(corr0[j])) or 1
        events.append((lam_max, "join", int(j)))

    old_err = np.seterr(divide="ignore", invalid="ignore")
    try:
        while True:
            if len(events) > budget:
                raise PathBudgetExceeded(f"more than {budget} path events")
            idx = np.flatnonzero(active)
            XE = X[:, idx]
            s_vec = signs[idx].astype(float)
            if idx.size:
                G = XE.T @ XE
                try:
                    np.linalg.cholesky(G)  # general-position / uniqueness check
                except np.linalg.LinAlgError as exc:
                    raise GeneralPositionViolated(
                        "rank-deficient active set during path sweep"
                    ) from exc
                rhs = np.empty((idx.size, 2))
                rhs[:, 0] = XE.T @ y
                rhs[:, 1] = s_vec
                sol = np.linalg.solve(G, rhs)
                c1, c2 = sol[:, 0], sol[:, 1]
            else:
                c1 = c2 = np.zeros(0)

            strict = _REL_EPS * max(1.0, lam_cur)
            hi_cut = lam_cur - strict

            inactive = np.flatnonzero(~active)
            if inactive.size:
                u = XE @ c1 if idx.size else np.zeros(m)
                w = XE @ c2 if idx.size else np.zeros(m)
                alpha = X[:, inactive].T @ (y - u)
                gamma = X[:, inactive].T @ w
                lam_plus = alpha / (1.0 - gamma)
                lam_minus = -alpha / (1.0 + gamma)
                bad = ~(np.isfinite(lam_plus) & (lam_plus > lambda_min) & (lam_plus < hi_cut))
                lam_plus[bad] = -np.inf
                bad = ~(np.isfinite(lam_minus) & (lam_minus > lambda_min) & (lam_minus < hi_cut))
                lam_minus[bad] = -np.inf
            else:
                lam_plus = lam_minus = np.full(0, -np.inf)
            if idx.size:
                lam_leave = c1 / c2
                bad = ~(np.isfinite(lam_leave) & (lam_leave > lambda_min) & (lam_leave < hi_cut))
                lam_leave[bad] = -np.inf
            else:
                lam_leave = np.full(0, -np.inf)

            lam_next = max(
                lam_plus.max(initial=-np.inf),
                lam_minus.max(initial=-np.inf),
                lam_leave.max(initial=-np.inf),
            )
            segments.append(
                PathSegment(
                    lo=max(lam_next, lambda_min),
                    hi=lam_cur,
                    support=_support_fast(idx, signs[idx]),
                    c1=c1.copy(),
                    c2=c2.copy(),
                )
            )
            if not np.isfinite(lam_next) or lam_next <= lambda_min:
                break

            # Simultaneous events (within tie tolerance) run leaves before
            # joins so the active design never goes rank deficient
            tie = _REL_EPS * max(1.0, lam_next)
            cut = lam_next - tie
            for k in np.flatnonzero(lam_leave >= cut):
                j = int(idx[k])
                active[j] = False
                signs[j] = 0
                events.append((lam_next, "leave", j))
            for lams, sign in ((lam_plus, 1), (lam_minus, -1)):
                for k in np.flatnonzero(lams >= cut):
                    j = int(inactive[k])
                    if not active[j]:
                        active[j] = True
                        signs[j] = sign
                        events.append((lam_next, "join", j))
            lam_cur = lam_next
    finally:
        np.seterr(**old_err)

    return RegPath(lambda2, lam_max, lambda_min, p, m, tuple(segments), tuple(events))


def en_path(ds, lambda2, lambda_min, budget=None):
    """ElasticNet path at fixed lambda2 via the row-augmented LASSO sweep."""
    if lambda2 < 0:
        raise InvalidConfig("lambda2 must be >= 0")
    if lambda2 == 0.0:
        return lars_path(ds, lambda_min, budget=budget)
    path = lars_path(augment(ds, lambda2), lambda_min, budget=budget, lambda2=lambda2)
    # Feature indices are untouched by augmentation; only the row count needs
    # restoring to the original training size.
    return RegPath(
        lambda2,
        path.lambda_max,
        path.lambda_min,
        path.p,
        ds.m,
        path.segments,
        path.event_log,
    )


def path_eval(path, lambda1):
    """Coefficients at lambda1, embedded in R^p (OutOfRange outside the path)."""
    return Coefs(path.eval(lambda1))


def piece_stats(path):
    """Segment counts against the structural bounds for this path."""
    count = len(path.segments)
    max_support = max((len(s.support) for s in path.segments), default=0)
    m, p = path.n_train_rows, path.p
    stats = {
        "count": count,
        "max_support": max_support,
        "bound_3p_ok": count <= 3**p,
        "overparam_bound_ok": True,
    }
    if path.lambda2 == 0.0 and p > m:
        stats["overparam_bound_ok"] = max_support <= m - 1
    return stats

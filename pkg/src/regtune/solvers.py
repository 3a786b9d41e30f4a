"""Point solvers for Ridge / LASSO / ElasticNet, plus KKT certificates.

Internal objective convention (used consistently by every routine here and by
the path code):

    f(beta) = 0.5 * ||y - X beta||^2 + lambda1 * ||beta||_1
              + 0.5 * lambda2 * ||beta||^2

Under this convention the closed forms hold exactly: the stationarity
condition on the active set is x_j^T (y - X beta) - lambda2 * beta_j
= lambda1 * sign(beta_j), the support solution is
(X_E^T X_E + lambda2 I)^-1 (X_E^T y - lambda1 s), and the ElasticNet equals
the LASSO on the row-augmented dataset [X; sqrt(lambda2) I], [y; 0] at the
same lambda1.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    GeneralPositionViolated,
    InvalidConfig,
    NoConvergence,
    NotSPD,
)
from .instances import Dataset
from .linalg import gram_shift_inverse, spd_solve


@dataclass(frozen=True)
class ENParams:
    """Regularization pair; lambda1 must be strictly positive."""

    lambda1: float
    lambda2: float = 0.0

    def __post_init__(self):
        if not (self.lambda1 > 0 and np.isfinite(self.lambda1)):
            raise InvalidConfig("lambda1 must be > 0")
        if not (self.lambda2 >= 0 and np.isfinite(self.lambda2)):
            raise InvalidConfig("lambda2 must be >= 0")


@dataclass(frozen=True)
class SignedSupport:
    """Feature indices (strictly increasing) with a +/-1 sign per index."""

    indices: tuple
    signs: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        sgn = tuple(int(s) for s in self.signs)
        if len(idx) != len(sgn):
            raise InvalidConfig("indices and signs must have equal length")
        if any(s not in (-1, 1) for s in sgn):
            raise InvalidConfig("signs must be +/-1")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise InvalidConfig("indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "signs", sgn)

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True)
class Coefs:
    beta: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.beta, dtype=float)
        if not np.all(np.isfinite(b)):
            raise InvalidConfig("coefficients must be finite")
        b = b.copy()
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)

    @property
    def support_size(self):
        return int(np.count_nonzero(self.beta))

    def signed_support(self, tol=0.0):
        idx = np.flatnonzero(np.abs(self.beta) > tol)
        return SignedSupport(tuple(idx), tuple(np.sign(self.beta[idx]).astype(int)))


@dataclass(frozen=True)
class KKTReport:
    """Stationarity residuals of the (augmented) LASSO optimality conditions."""

    max_active_violation: float
    max_inactive_excess: float
    tol: float

    @property
    def passed(self):
        return (
            self.max_active_violation <= self.tol
            and self.max_inactive_excess <= self.tol
        )


def ridge_fit(ds, lambda2):
    """Closed-form ridge coefficients (X^T X + lambda2 I)^-1 X^T y."""
    if not lambda2 > 0:
        raise InvalidConfig("ridge_fit needs lambda2 > 0")
    return Coefs(gram_shift_inverse(ds.X, lambda2) @ (ds.X.T @ ds.y))


def en_objective(ds, beta, params):
    beta = np.asarray(beta, dtype=float)
    r = ds.y - ds.X @ beta
    return (
        0.5 * float(r @ r)
        + params.lambda1 * float(np.sum(np.abs(beta)))
        + 0.5 * params.lambda2 * float(beta @ beta)
    )


def _soft(z, t):
    return np.sign(z) * max(abs(z) - t, 0.0)


def en_fit_cd(ds, params, tol=1e-10, max_iter=100_000):
    """Cyclic coordinate descent for the ElasticNet objective.

    Sweeps stop once the largest coordinate move in a sweep is <= tol and the
    KKT residual is <= 10 * tol; raises NoConvergence past max_iter sweeps.
    """
    if not tol > 0:
        raise InvalidConfig("tol must be positive")
    X, y = ds.X, ds.y
    p = ds.p
    col_sq = np.einsum("ij,ij->j", X, X)
    beta = np.zeros(p)
    r = y.copy()
    for _ in range(max_iter):
        delta = 0.0
        for j in range(p):
            denom = col_sq[j] + params.lambda2
            if denom == 0.0:
                continue
            z = X[:, j] @ r + col_sq[j] * beta[j]
            b_new = _soft(z, params.lambda1) / denom
            if b_new != beta[j]:
                r -= X[:, j] * (b_new - beta[j])
                delta = max(delta, abs(b_new - beta[j]))
                beta[j] = b_new
        if delta <= tol:
            rep = kkt_check(ds, Coefs(beta), params, tol=10 * tol)
            if rep.passed:
                return Coefs(beta)
    raise NoConvergence(f"coordinate descent did not converge in {max_iter} sweeps")


def en_fit_support(ds, params, supp):
    """Closed-form ElasticNet coefficients for a fixed signed support."""
    beta = np.zeros(ds.p)
    if len(supp) == 0:
        return Coefs(beta)
    idx = np.array(supp.indices)
    s = np.array(supp.signs, dtype=float)
    XE = ds.X[:, idx]
    G = XE.T @ XE + params.lambda2 * np.eye(len(idx))
    try:
        beta[idx] = spd_solve(G, XE.T @ ds.y - params.lambda1 * s)
    except NotSPD as exc:
        raise GeneralPositionViolated(
            "active design columns are rank deficient"
        ) from exc
    return Coefs(beta)


def kkt_check(ds, c, params, tol=1e-6, active_tol=0.0):
    """Residuals of the augmented-LASSO optimality conditions at ``c``.

    Active coordinates must have correlation lambda1 * sign(beta_j); inactive
    ones must not exceed lambda1 in absolute correlation.  Correlations are
    taken against the augmented residual, i.e. x_j^T (y - X beta) - lambda2
    * beta_j.
    """
    beta = c.beta
    corr = ds.X.T @ (ds.y - ds.X @ beta) - params.lambda2 * beta
    active = np.abs(beta) > active_tol
    act_viol = 0.0
    if np.any(active):
        act_viol = float(
            np.max(np.abs(corr[active] - params.lambda1 * np.sign(beta[active])))
        )
    inact_excess = 0.0
    if np.any(~active):
        inact_excess = float(max(np.max(np.abs(corr[~active])) - params.lambda1, 0.0))
    return KKTReport(act_viol, inact_excess, tol)


def augment(ds, lambda2):
    """Row-augmented dataset [X; sqrt(lambda2) I], [y; 0].

    LASSO on the augmented data at lambda1 equals the ElasticNet on the
    original data at (lambda1, lambda2) under the module's objective.
    """
    if lambda2 < 0:
        raise InvalidConfig("lambda2 must be >= 0")
    p = ds.p
    X_aug = np.vstack([ds.X, np.sqrt(lambda2) * np.eye(p)])
    y_aug = np.concatenate([ds.y, np.zeros(p)])
    return Dataset(X_aug, y_aug)


def val_loss(c, val):
    """Mean squared prediction error of coefficients ``c`` on ``val``."""
    if val.p != c.beta.shape[0]:
        raise DimensionMismatch(
            f"coefficients have {c.beta.shape[0]} features, val has {val.p}"
        )
    r = val.y - val.X @ c.beta
    return float(r @ r) / val.m

"""Dense kernels: SPD solves, symmetric eigendecomposition, shifted Gram inverses.

Everything here routes through Cholesky or the spectral form; no adjugate or
determinant arithmetic.  A Cholesky failure is surfaced as NotSPD because it
signals rank deficiency (and hence non-uniqueness) downstream.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotSPD, NotSymmetric

_SYM_TOL = 1e-10


@dataclass(frozen=True)
class SpectralDecomp:
    """Eigendecomposition G = eigvecs @ diag(eigvals) @ eigvecs.T, eigvals ascending."""

    eigvals: np.ndarray
    eigvecs: np.ndarray


def _check_symmetric(A, tol=_SYM_TOL):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSymmetric("matrix is not square")
    scale = max(1.0, np.max(np.abs(A), initial=0.0))
    if np.max(np.abs(A - A.T), initial=0.0) > tol * scale:
        raise NotSymmetric("matrix is not symmetric within tolerance")
    return A


def spd_solve(A, b):
    """Solve A x = b for symmetric positive-definite A via Cholesky."""
    A = _check_symmetric(A)
    b = np.asarray(b, dtype=float)
    try:
        c, low = scipy.linalg.cho_factor(A, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotSPD(str(exc)) from exc
    return scipy.linalg.cho_solve((c, low), b, check_finite=False)


def cholesky_factor(A):
    """Cholesky factor of a symmetric positive-definite matrix (NotSPD on failure)."""
    A = np.asarray(A, dtype=float)
    try:
        return scipy.linalg.cho_factor(A, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotSPD(str(exc)) from exc


def sym_eig(G):
    """Eigendecomposition of a symmetric matrix, eigenvalues sorted ascending."""
    G = _check_symmetric(G)
    vals, vecs = np.linalg.eigh(G)
    return SpectralDecomp(eigvals=vals, eigvecs=vecs)


def gram_shift_inverse(A, lam):
    """(A.T A + lam I)^-1 through the spectral form of the Gram matrix.

    Valid for any lam > 0: the Gram eigenvalues are nonnegative, so every
    shifted eigenvalue is positive and the inverse exists.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    A = np.asarray(A, dtype=float)
    dec = sym_eig(A.T @ A)
    E = dec.eigvecs
    return (E / (dec.eigvals + lam)) @ E.T


@dataclass(frozen=True)
class RationalFormReport:
    """Interpolation check that shifted-Gram-inverse entries share one monic denominator.

    With s columns, each entry of (A.T A + lam I)^-1 should be a ratio of a
    polynomial of degree <= s-1 over the monic degree-s polynomial
    prod(eigval_i + lam); diagonal numerators are monic of degree exactly s-1.
    """

    s: int
    max_degree_excess: float      # |coefficient of lam^s| in fitted numerators
    max_diag_leading_dev: float   # |coeff of lam^(s-1) - 1| on the diagonal
    max_offdiag_leading: float    # |coeff of lam^(s-1)| off the diagonal
    max_eval_err: float           # |P/Q - direct inverse| at held-out points


def rational_form_report(A, tol_nodes=None):
    """Fit numerators of the shifted Gram inverse at s+1 nodes and report structure.

    The fit is an independent oracle: entries of the inverse are computed by
    direct LU solves at each node, multiplied by Q(lam) from the eigenvalues,
    and interpolated by a degree-s polynomial.  Degrees and leading
    coefficients are read off the fit; accuracy is verified at fresh points.
    """
    A = np.asarray(A, dtype=float)
    s = A.shape[1]
    G = A.T @ A
    eigvals = sym_eig(G).eigvals
    nodes = np.arange(1.0, s + 2.0) if tol_nodes is None else np.asarray(tol_nodes)

    def q_of(lam):
        return float(np.prod(eigvals + lam))

    # P values at the nodes from direct inversion (LU, not the spectral route).
    P_vals = np.empty((len(nodes), s, s))
    for k, lam in enumerate(nodes):
        B = np.linalg.solve(G + lam * np.eye(s), np.eye(s))
        P_vals[k] = q_of(lam) * B

    # Degree-s interpolation through s+1 nodes; coefficients highest first.
    V = np.vander(nodes, s + 1)
    coefs = np.linalg.solve(V, P_vals.reshape(len(nodes), s * s))
    coefs = coefs.reshape(s + 1, s, s)

    lead_s = np.abs(coefs[0])                      # lam^s term: must vanish
    lead_s1 = coefs[1] if s >= 1 else np.zeros((s, s))
    diag_dev = np.abs(np.diag(lead_s1) - 1.0)
    off = np.abs(lead_s1 - np.diag(np.diag(lead_s1)))

    check_pts = nodes + 0.5
    errs = []
    for lam in check_pts:
        B_direct = np.linalg.solve(G + lam * np.eye(s), np.eye(s))
        powers = lam ** np.arange(s, -1, -1.0)
        P_at = np.tensordot(powers, coefs, axes=1)
        errs.append(np.max(np.abs(P_at / q_of(lam) - B_direct)))

    return RationalFormReport(
        s=s,
        max_degree_excess=float(np.max(lead_s)),
        max_diag_leading_dev=float(np.max(diag_dev)),
        max_offdiag_leading=float(np.max(off, initial=0.0)),
        max_eval_err=float(np.max(errs)),
    )

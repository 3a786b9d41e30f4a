import numpy as np
import pytest

from regtune.errors import NotSPD, NotSymmetric
from regtune.linalg import (
    gram_shift_inverse,
    rational_form_report,
    spd_solve,
    sym_eig,
)


def test_spd_solve_identity_and_diagonal():
    assert np.allclose(spd_solve(np.eye(2), [2.0, 4.0]), [2.0, 4.0])
    assert np.allclose(spd_solve(np.diag([2.0, 5.0]), [2.0, 5.0]), [1.0, 1.0])


def test_spd_solve_rejects_singular():
    with pytest.raises(NotSPD):
        spd_solve(np.ones((2, 2)), [1.0, 1.0])


def test_spd_solve_residual_bound():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = rng.integers(2, 8)
        M = rng.standard_normal((n + 2, n))
        A = M.T @ M + 0.1 * np.eye(n)
        b = rng.standard_normal(n)
        x = spd_solve(A, b)
        assert np.max(np.abs(A @ x - b)) <= 1e-8 * (1 + np.max(np.abs(b)))


def test_sym_eig_examples():
    dec = sym_eig(np.diag([4.0, 1.0]))
    assert np.allclose(dec.eigvals, [1.0, 4.0])
    dec2 = sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(dec2.eigvals, [1.0, 3.0])
    with pytest.raises(NotSymmetric):
        sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_sym_eig_reconstruction_and_orthogonality():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = rng.integers(2, 10)
        M = rng.standard_normal((n, n))
        G = M + M.T
        dec = sym_eig(G)
        R = dec.eigvecs @ np.diag(dec.eigvals) @ dec.eigvecs.T
        assert np.linalg.norm(R - G) <= 1e-9 * max(1.0, np.linalg.norm(G))
        assert np.max(np.abs(dec.eigvecs.T @ dec.eigvecs - np.eye(n))) <= 1e-9


def test_gram_shift_inverse_diagonal():
    B = gram_shift_inverse(np.diag([1.0, 2.0]), 1.0)
    assert np.allclose(B, np.diag([0.5, 0.2]))


def test_gram_shift_inverse_symmetry_and_inverse_property():
    rng = np.random.default_rng(2)
    for _ in range(20):
        r, s = rng.integers(2, 8), rng.integers(2, 6)
        A = rng.uniform(-1, 1, (r, s))
        for lam in (1e-3, 0.3, 7.0, 1e3):
            B = gram_shift_inverse(A, lam)
            assert np.max(np.abs(B - B.T)) <= 1e-10
            P = B @ (A.T @ A + lam * np.eye(s))
            assert np.max(np.abs(P - np.eye(s))) <= 1e-8


def test_rational_form_structure_small():
    # numerators of the shifted inverse: shared monic denominator of degree s,
    # diagonal numerators monic of degree s-1, off-diagonal degree <= s-2
    rng = np.random.default_rng(3)
    for s in (1, 2, 3, 4):
        for _ in range(5):
            A = rng.uniform(-1, 1, (s + 2, s))
            rep = rational_form_report(A)
            assert rep.max_degree_excess <= 1e-7
            assert rep.max_diag_leading_dev <= 1e-7
            if s >= 2:
                assert rep.max_offdiag_leading <= 1e-7
            assert rep.max_eval_err <= 1e-7

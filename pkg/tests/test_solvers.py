import numpy as np
import pytest

from conftest import random_instance
from regtune.errors import DimensionMismatch, GeneralPositionViolated, InvalidConfig
from regtune.instances import Dataset
from regtune.paths import lars_path, path_eval
from regtune.solvers import (
    Coefs,
    ENParams,
    SignedSupport,
    augment,
    en_fit_cd,
    en_fit_support,
    en_objective,
    kkt_check,
    ridge_fit,
    val_loss,
)


def test_ridge_identity():
    beta = ridge_fit(Dataset(np.eye(2), [2.0, 4.0]), 1.0).beta
    assert np.allclose(beta, [1.0, 2.0])


def test_ridge_large_lambda_shrinks():
    rng = np.random.default_rng(0)
    ds = Dataset(rng.uniform(-1, 1, (6, 3)), rng.uniform(-1, 1, 6))
    beta = ridge_fit(ds, 1e9).beta
    bound = np.max(np.abs(ds.X.T @ ds.y)) / 1e9
    assert np.max(np.abs(beta)) <= bound * (1 + 1e-9)


def test_ridge_matches_cd_at_tiny_lambda1():
    rng = np.random.default_rng(1)
    ds = Dataset(rng.uniform(-1, 1, (5, 3)), rng.uniform(-1, 1, 5))
    lam2 = 0.7
    ridge = ridge_fit(ds, lam2).beta
    cd = en_fit_cd(ds, ENParams(1e-12, lam2)).beta
    assert np.max(np.abs(ridge - cd)) <= 1e-6


def test_ridge_perturbation_never_improves():
    rng = np.random.default_rng(7)
    ds = Dataset(rng.uniform(-1, 1, (8, 4)), rng.uniform(-1, 1, 8))
    lam2 = 0.5
    beta = ridge_fit(ds, lam2).beta

    def obj(b):
        r = ds.y - ds.X @ b
        return 0.5 * r @ r + 0.5 * lam2 * b @ b

    base = obj(beta)
    for _ in range(100):
        d = rng.standard_normal(4)
        d /= np.linalg.norm(d)
        assert obj(beta + 1e-3 * d) >= base - 1e-12


def test_cd_identity_soft_threshold():
    ds = Dataset(np.eye(2), [3.0, 0.5])
    beta = en_fit_cd(ds, ENParams(1.0, 0.0)).beta
    assert np.allclose(beta, [2.0, 0.0], atol=1e-10)


def test_cd_scalar_stationarity():
    ds = Dataset([[1.0]], [3.0])
    beta = en_fit_cd(ds, ENParams(1.0, 1.0)).beta
    assert np.allclose(beta, [1.0], atol=1e-10)  # (3-1)/(1+1)


def test_cd_beats_random_probes():
    rng = np.random.default_rng(2)
    ds = Dataset(rng.uniform(-1, 1, (8, 4)), rng.uniform(-1, 1, 8))
    params = ENParams(0.3, 0.7)
    beta = en_fit_cd(ds, params).beta
    best = en_objective(ds, beta, params)
    for _ in range(10_000):
        probe = rng.uniform(-1.5, 1.5, 4)
        assert en_objective(ds, probe, params) >= best - 1e-12


def test_support_scalar_closed_form():
    ds = Dataset(np.eye(2), [3.0, 0.5])
    supp = SignedSupport((0,), (1,))
    beta = en_fit_support(ds, ENParams(1.0, 1.0), supp).beta
    assert np.allclose(beta, [1.0, 0.0])


def test_support_matches_cd_on_recovered_support():
    rng = np.random.default_rng(3)
    for _ in range(100):
        inst = random_instance(rng, m=int(rng.integers(5, 20)), p=int(rng.integers(2, 7)))
        ds = inst.train
        lam1 = float(np.exp(rng.uniform(np.log(1e-2), np.log(1.0))))
        lam2 = float(rng.uniform(0, 1)) * int(rng.integers(0, 2))
        params = ENParams(lam1, lam2)
        cd = en_fit_cd(ds, params)
        supp = cd.signed_support(tol=1e-9)
        closed = en_fit_support(ds, params, supp)
        assert np.max(np.abs(cd.beta - closed.beta)) <= 1e-6


def test_support_duplicate_column_rank_deficient():
    X = np.array([[1.0, 1.0], [2.0, 2.0], [0.5, 0.5]])
    ds = Dataset(X, [1.0, 2.0, 0.5])
    with pytest.raises(GeneralPositionViolated):
        en_fit_support(ds, ENParams(0.1, 0.0), SignedSupport((0, 1), (1, 1)))


def test_kkt_identity_example():
    ds = Dataset(np.eye(2), [3.0, 0.5])
    rep = kkt_check(ds, Coefs([2.0, 0.0]), ENParams(1.0, 0.0))
    assert rep.max_active_violation <= 1e-12
    assert rep.max_inactive_excess == 0.0
    assert rep.passed


def test_kkt_zero_solution():
    rng = np.random.default_rng(4)
    ds = Dataset(rng.uniform(-1, 1, (6, 3)), rng.uniform(-1, 1, 6))
    lam1 = float(np.max(np.abs(ds.X.T @ ds.y))) + 0.1
    rep = kkt_check(ds, Coefs(np.zeros(3)), ENParams(lam1, 0.0))
    assert rep.passed


def test_kkt_detects_perturbation():
    ds = Dataset(np.eye(2), [3.0, 0.5])
    rep = kkt_check(ds, Coefs([2.1, 0.0]), ENParams(1.0, 0.0), tol=1e-6)
    assert not rep.passed


def test_augment_construction():
    ds = Dataset(np.arange(6.0).reshape(3, 2), [1.0, 2.0, 3.0])
    aug = augment(ds, 4.0)
    assert aug.X.shape == (5, 2)
    assert np.allclose(aug.X[3:], 2.0 * np.eye(2))
    assert np.allclose(aug.y[3:], 0.0)


def test_augment_zero_is_inert():
    rng = np.random.default_rng(5)
    ds = Dataset(rng.uniform(-1, 1, (5, 3)), rng.uniform(-1, 1, 5))
    aug = augment(ds, 0.0)
    a = en_fit_cd(ds, ENParams(0.2, 0.0)).beta
    b = en_fit_cd(aug, ENParams(0.2, 0.0)).beta
    assert np.max(np.abs(a - b)) <= 1e-9


def test_augment_equivalence_oracle():
    rng = np.random.default_rng(6)
    ds = Dataset(rng.uniform(-1, 1, (6, 3)), rng.uniform(-1, 1, 6))
    en = en_fit_cd(ds, ENParams(0.5, 1.3)).beta
    lasso_aug = en_fit_cd(augment(ds, 1.3), ENParams(0.5, 0.0)).beta
    assert np.max(np.abs(en - lasso_aug)) <= 1e-6


def test_val_loss_examples():
    assert val_loss(Coefs([1.0, 2.0]), Dataset(np.eye(2), [1.0, 2.0])) == 0.0
    assert val_loss(Coefs([0.0, 0.0]), Dataset(np.eye(2), [3.0, 4.0])) == 12.5
    assert val_loss(Coefs([2.5, 0.0]), Dataset([[1.0, 1.0]], [2.0])) == 0.25
    with pytest.raises(DimensionMismatch):
        val_loss(Coefs([1.0]), Dataset(np.eye(2), [1.0, 2.0]))


def test_params_validation():
    with pytest.raises(InvalidConfig):
        ENParams(0.0, 0.0)
    with pytest.raises(InvalidConfig):
        ENParams(1.0, -0.1)
    with pytest.raises(InvalidConfig):
        SignedSupport((1, 1), (1, 1))


def test_convention_consistency_three_routes():
    # cd, fixed-support closed form, and augment+homotopy all minimize the
    # same objective: pairwise agreement on random instances
    rng = np.random.default_rng(8)
    for _ in range(30):
        m, p = int(rng.integers(5, 25)), int(rng.integers(2, 8))
        ds = Dataset(rng.uniform(-1, 1, (m, p)), rng.uniform(-1, 1, m))
        lam1 = float(np.exp(rng.uniform(np.log(1e-3), np.log(10.0))))
        lam2 = float(np.exp(rng.uniform(np.log(1e-3), np.log(10.0))))
        params = ENParams(lam1, lam2)
        cd = en_fit_cd(ds, params)
        supp = cd.signed_support(tol=1e-9)
        closed = en_fit_support(ds, params, supp)
        aug = augment(ds, lam2)
        lam_max = float(np.max(np.abs(aug.X.T @ aug.y)))
        if lam1 < lam_max:
            path = lars_path(aug, lambda_min=min(lam1 * 0.9, lam_max * 0.5))
            homotopy = path_eval(path, lam1).beta
        else:
            homotopy = np.zeros(p)
        scale = 1 + np.linalg.norm(cd.beta)
        assert np.linalg.norm(cd.beta - closed.beta) <= 1e-6 * scale
        assert np.linalg.norm(cd.beta - homotopy) <= 1e-6 * scale
        assert kkt_check(ds, cd, params, tol=1e-6).passed


def test_unique_support_across_routes():
    rng = np.random.default_rng(9)
    for _ in range(20):
        ds = Dataset(rng.uniform(-1, 1, (10, 5)), rng.uniform(-1, 1, 10))
        params = ENParams(0.2, 0.0)
        cd = en_fit_cd(ds, params)
        path = lars_path(ds, lambda_min=0.1)
        hom = path_eval(path, 0.2)
        s1 = np.flatnonzero(np.abs(cd.beta) > 1e-8)
        s2 = np.flatnonzero(np.abs(hom.beta) > 1e-8)
        assert np.array_equal(s1, s2)

import numpy as np
import pytest

from conftest import random_instance
from regtune.errors import GeneralPositionViolated, OutOfRange, PathBudgetExceeded
from regtune.instances import Dataset
from regtune.paths import en_path, lambda1_max, lars_path, path_eval, piece_stats
from regtune.solvers import ENParams, en_fit_cd, kkt_check


def test_identity_path_structure():
    ds = Dataset(np.eye(2), [3.0, 1.0])
    path = lars_path(ds, lambda_min=0.01)
    assert path.lambda_max == 3.0
    assert len(path.segments) == 2
    s0, s1 = path.segments
    assert (s0.lo, s0.hi) == (1.0, 3.0)
    assert s0.support.indices == (0,) and s0.support.signs == (1,)
    assert np.allclose([s0.c1[0], s0.c2[0]], [3.0, 1.0])  # beta = 3 - lam
    assert (s1.lo, s1.hi) == (0.01, 1.0)
    assert s1.support.indices == (0, 1)
    assert [(lam, kind, j) for lam, kind, j in path.event_log] == [
        (3.0, "join", 0), (1.0, "join", 1)]


def test_path_eval_points():
    ds = Dataset(np.eye(2), [3.0, 1.0])
    path = lars_path(ds, lambda_min=0.01)
    assert np.allclose(path_eval(path, 2.0).beta, [1.0, 0.0])
    assert np.allclose(path_eval(path, 1.0).beta, [2.0, 0.0])  # knot continuity
    assert np.allclose(path_eval(path, 3.0).beta, [0.0, 0.0])  # entry point
    with pytest.raises(OutOfRange):
        path_eval(path, 4.0)
    with pytest.raises(OutOfRange):
        path_eval(path, 0.001)


def test_entry_kkt_equality():
    rng = np.random.default_rng(0)
    ds = Dataset(rng.uniform(-1, 1, (8, 4)), rng.uniform(-1, 1, 8))
    lam_max = lambda1_max(ds)
    beta = path_eval(lars_path(ds, lambda_min=lam_max / 100), lam_max).beta
    assert np.allclose(beta, 0.0)
    corr = np.abs(ds.X.T @ ds.y)
    assert np.isclose(np.max(corr), lam_max)


def test_path_matches_cd_oracle():
    rng = np.random.default_rng(1)
    for trial in range(40):
        m, p = int(rng.integers(5, 30)), int(rng.integers(2, 8))
        ds = Dataset(rng.uniform(-1, 1, (m, p)), rng.uniform(-1, 1, m))
        lam2 = float(rng.uniform(0.0, 2.0)) * (trial % 2)
        path = en_path(ds, lam2, lambda_min=1e-4)
        if path.lambda_max <= 1e-4:
            continue
        lams = np.exp(rng.uniform(np.log(1e-4), np.log(path.lambda_max * 0.999), 10))
        for lam1 in lams:
            direct = en_fit_cd(ds, ENParams(float(lam1), lam2)).beta
            assert np.max(np.abs(path.eval(float(lam1)) - direct)) <= 1e-6


def test_en_path_scalar_closed_form():
    ds = Dataset([[1.0]], [3.0])
    path = en_path(ds, 1.0, lambda_min=0.01)
    assert np.isclose(path.lambda_max, 3.0)
    for lam1 in (0.02, 1.0, 2.5):
        assert np.isclose(path.eval(lam1)[0], (3.0 - lam1) / 2.0)


def test_en_path_zero_lambda2_equals_lasso():
    rng = np.random.default_rng(2)
    ds = Dataset(rng.uniform(-1, 1, (10, 4)), rng.uniform(-1, 1, 10))
    a = lars_path(ds, lambda_min=1e-3)
    b = en_path(ds, 0.0, lambda_min=1e-3)
    assert a.knots().shape == b.knots().shape
    assert np.allclose(a.knots(), b.knots())


def test_leave_event_detected():
    # correlated two-feature design where a coefficient returns to zero:
    # scan with the independent solver to certify the support change, then
    # check the event log and the zero crossing
    rng = np.random.default_rng(3)
    found = None
    for _ in range(300):
        m = int(rng.integers(4, 10))
        X = rng.uniform(-1, 1, (m, 2))
        X[:, 1] = 0.9 * X[:, 0] + 0.25 * rng.uniform(-1, 1, m)
        ds = Dataset(X, rng.uniform(-1, 1, m))
        path = lars_path(ds, lambda_min=1e-5)
        leaves = [(lam, j) for lam, kind, j in path.event_log if kind == "leave"]
        if leaves:
            found = (ds, path, leaves)
            break
    assert found is not None, "no leave event in 300 correlated instances"
    ds, path, leaves = found
    for lam_e, j in leaves:
        assert abs(path.eval(lam_e)[j]) <= 1e-9
        below = en_fit_cd(ds, ENParams(lam_e * 0.999, 0.0)).beta
        above = en_fit_cd(ds, ENParams(lam_e * 1.001, 0.0)).beta
        assert (abs(below[j]) <= 1e-7) != (abs(above[j]) <= 1e-7)


def test_tiling_continuity_and_interior_kkt():
    rng = np.random.default_rng(4)
    for _ in range(15):
        inst = random_instance(rng, m=10, p=5)
        ds = inst.train
        path = lars_path(ds, lambda_min=1e-3)
        segs = path.segments
        # exact tiling, no gaps
        for s_hi, s_lo in zip(segs[:-1], segs[1:]):
            assert s_hi.lo == s_lo.hi
            b1 = s_hi.beta_at(s_hi.lo, ds.p)
            b2 = s_lo.beta_at(s_lo.hi, ds.p)
            assert np.max(np.abs(b1 - b2)) <= 1e-9
        assert segs[0].hi == path.lambda_max
        assert np.isclose(segs[-1].lo, path.lambda_min)
        # interior sign and strict-inequality checks at 5 points per segment
        for seg in segs:
            for lam1 in np.linspace(seg.lo, seg.hi, 7)[1:-1]:
                beta = seg.beta_at(lam1, ds.p)
                idx = list(seg.support.indices)
                if idx:
                    assert np.all(np.sign(beta[idx]) == np.array(seg.support.signs))
                rep = kkt_check(ds, type("C", (), {"beta": beta})(), ENParams(lam1, 0.0))
                assert rep.max_active_violation <= 1e-8
                assert rep.max_inactive_excess <= 1e-8


def test_event_correlation_equality():
    rng = np.random.default_rng(5)
    for _ in range(10):
        ds = random_instance(rng, m=12, p=6).train
        path = lars_path(ds, lambda_min=1e-3)
        for lam_e, kind, j in path.event_log:
            beta = path.eval(lam_e)
            corr = ds.X[:, j] @ (ds.y - ds.X @ beta)
            if kind == "join":
                assert abs(abs(corr) - lam_e) <= 1e-8 * max(1.0, lam_e)
            else:
                assert abs(beta[j]) <= 1e-9


def test_piece_stats_identity():
    path = lars_path(Dataset(np.eye(2), [3.0, 1.0]), lambda_min=0.01)
    stats = piece_stats(path)
    assert stats == {
        "count": 2, "max_support": 2, "bound_3p_ok": True, "overparam_bound_ok": True,
    }


def test_piece_count_bound_3p():
    rng = np.random.default_rng(6)
    for _ in range(20):
        ds = Dataset(rng.uniform(-1, 1, (10, 4)), rng.uniform(-1, 1, 10))
        stats = piece_stats(lars_path(ds, lambda_min=1e-6))
        assert stats["count"] <= 81 and stats["bound_3p_ok"]


def _centered(rng, m, p):
    X = rng.uniform(-1, 1, (m, p))
    X -= X.mean(axis=0)
    y = rng.uniform(-1, 1, m)
    y -= y.mean()
    return Dataset(X, y)


def test_overparameterized_active_set_bound():
    # p >> m with column-centered data: the active set never exceeds m-1
    rng = np.random.default_rng(7)
    for _ in range(10):
        ds = _centered(rng, m=5, p=20)
        stats = piece_stats(lars_path(ds, lambda_min=1e-8))
        assert stats["max_support"] <= 4
        assert stats["overparam_bound_ok"]


def test_budget_exceeded():
    rng = np.random.default_rng(8)
    ds = Dataset(rng.uniform(-1, 1, (10, 5)), rng.uniform(-1, 1, 10))
    with pytest.raises(PathBudgetExceeded):
        lars_path(ds, lambda_min=1e-6, budget=1)


def test_duplicate_columns_not_general_position():
    X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    ds = Dataset(X, [1.0, 2.0, 2.5])
    with pytest.raises(GeneralPositionViolated):
        lars_path(ds, lambda_min=1e-6)

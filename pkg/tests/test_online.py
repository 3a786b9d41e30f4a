import math

import numpy as np
import pytest
from scipy import integrate, stats

from conftest import random_instance
from regtune.errors import DomainMismatch, InvalidConfig
from regtune.instances import Dataset, GeneratorConfig, ProblemInstance
from regtune.online import (
    OnlineState,
    default_zeta,
    dispersion_probe,
    ew_init,
    ew_sample,
    ew_update,
    run_online,
    smooth_stream,
)
from regtune.piecewise import (
    PiecewiseQuadratic,
    clamp_curve,
    constant_curve,
    merge_curves,
    piecewise_constant,
    ridge_loss_evaluator,
    ridge_minimize,
)


def test_init_validation():
    with pytest.raises(InvalidConfig):
        ew_init((0.0, 1.0), 0.0, 1.0, seed=0)
    with pytest.raises(InvalidConfig):
        ew_init((0.0, 1.0), 0.5, 0.0, seed=0)
    with pytest.raises(InvalidConfig):
        ew_init((1.0, 1.0), 0.5, 1.0, seed=0)


def test_seed_determinism():
    a = ew_init((0.0, 1.0), 0.5, 1.0, seed=11)
    b = ew_init((0.0, 1.0), 0.5, 1.0, seed=11)
    assert [ew_sample(a).x for _ in range(5)] == [ew_sample(b).x for _ in range(5)]


def test_round0_uniform():
    st = ew_init((0.0, 1.0), 0.5, 1.0, seed=1)
    xs = np.array([ew_sample(st).x for _ in range(10_000)])
    assert stats.kstest(xs, "uniform").statistic < 0.02


def test_step_loss_two_piece_masses():
    st = ew_init((0.0, 1.0), 0.5, 1.0, seed=2)
    ew_update(st, piecewise_constant([0.0, 0.5, 1.0], [0.0, 1.0]))
    draws = np.array([ew_sample(st).x for _ in range(10_000)])
    expect = math.exp(0.5) / (math.exp(0.5) + 1.0)
    assert abs(np.mean(draws < 0.5) - expect) <= 0.02


def test_constant_loss_stays_uniform():
    st = ew_init((0.0, 1.0), 0.8, 2.0, seed=3)
    for _ in range(5):
        ew_update(st, constant_curve(0.0, 1.0, 1.5))
    xs = np.array([ew_sample(st).x for _ in range(10_000)])
    assert stats.kstest(xs, "uniform").statistic < 0.02


def test_cum_loss_linearity():
    rng = np.random.default_rng(4)
    st = ew_init((0.0, 2.0), 0.5, 50.0, seed=5)
    curves = []
    for _ in range(8):
        br = np.sort(np.concatenate([[0.0, 2.0], rng.uniform(0, 2, 2)]))
        k = br.shape[0] - 1
        curves.append(PiecewiseQuadratic(br, rng.uniform(0, 1, k),
                                         rng.uniform(-0.5, 0.5, k),
                                         rng.uniform(0, 2, k), np.zeros(k, int)))
        ew_update(st, curves[-1])
    for x in rng.uniform(0, 2, 20):
        want = sum(cur.evaluate(x) for cur in curves)
        assert abs(st.slices[0].cum.evaluate(np.array([x]))[0] - want) <= 1e-8


def test_clamp_reported():
    st = ew_init((0.0, 1.0), 0.5, 1.0, seed=6)
    frac = st.update(piecewise_constant([0.0, 0.4, 1.0], [0.5, 3.0]))
    assert frac > 0.0
    assert st.clamp_fracs[-1] == frac


def test_update_domain_mismatch():
    st = ew_init((0.0, 1.0), 0.5, 1.0, seed=7)
    with pytest.raises(DomainMismatch):
        ew_update(st, constant_curve(0.0, 2.0, 1.0))


def test_sampler_chi_square_vs_independent_quadrature():
    st = ew_init((0.0, 1.0), 0.9, 1.0, seed=8)
    rng = np.random.default_rng(9)
    for _ in range(3):
        br = np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0, 1, 2)]))
        k = br.shape[0] - 1
        ew_update(st, PiecewiseQuadratic(br, rng.uniform(0, 0.4, k),
                                         rng.uniform(-0.2, 0.2, k),
                                         rng.uniform(0, 0.5, k), np.zeros(k, int)))
    cum = st.slices[0].cum.curve
    shift = cum.minimize()[1]
    kk = st.zeta / st.H

    def dens(x):
        return math.exp(-kk * (float(cum.evaluate(x)) - shift))

    masses = np.array([
        integrate.quad(dens, cum.breaks[i], cum.breaks[i + 1], epsrel=1e-12)[0]
        for i in range(cum.n_pieces)
    ])
    probs = masses / masses.sum()
    n = 10_000
    idx = np.searchsorted(cum.breaks, [ew_sample(st).x for _ in range(n)]) - 1
    counts = np.bincount(np.clip(idx, 0, cum.n_pieces - 1), minlength=cum.n_pieces)
    p = stats.chisquare(counts, probs * n).pvalue
    assert p > 0.01


def test_no_lookahead_replay():
    cfg = GeneratorConfig(m=10, p=3, m_prime=4, seed=0, beta_star=[0.3, -0.2, 0.1])
    stream = smooth_stream(cfg, 12, seed=21)
    full = run_online(stream, "lasso", (1e-3, 2.0), zeta=0.3, seed=5)
    half = run_online(stream[:6], "lasso", (1e-3, 2.0), zeta=0.3, seed=5)
    assert full.chosen[:6] == half.chosen


def test_regret_identity_recompute():
    cfg = GeneratorConfig(m=10, p=3, m_prime=4, seed=0, beta_star=[0.3, -0.2, 0.1])
    stream = smooth_stream(cfg, 15, seed=22)
    rep = run_online(stream, "lasso", (1e-3, 2.0), seed=6, keep_curves=True)
    suffered = sum(
        float(curves[0].evaluate(ch[-1]))
        for curves, ch in zip(rep.round_curves, rep.chosen)
    )
    clamped = [clamp_curve(curves[0], rep.H)[0] for curves in rep.round_curves]
    cum = merge_curves(clamped, average=False)
    _, hind = cum.minimize()
    assert abs((suffered - hind) - rep.R_T) <= 1e-8


def test_avg_regret_trend_identity_stream(identity_instance):
    # fixed stream with unique zero-loss minimizer: longer horizons shrink
    # the average regret (median over 10 seeds)
    stream_long = [identity_instance] * 500
    med = {}
    for T in (50, 500):
        med[T] = np.median([
            run_online(stream_long[:T], "lasso", (1e-2, 5.0), seed=s).avg_regret
            for s in range(10)
        ])
    assert med[500] <= med[50]


def test_zeta_default_echo():
    cfg = GeneratorConfig(m=8, p=3, m_prime=4, seed=0, beta_star=[0.3, -0.2, 0.1])
    stream = smooth_stream(cfg, 30, seed=23)
    rep = run_online(stream, "lasso", (1e-3, 2.0), seed=7)
    assert rep.zeta == default_zeta(30)
    rep2 = run_online(stream, "lasso", (1e-3, 2.0), seed=7, zeta=0.25)
    assert rep2.zeta == 0.25


def test_en_mode_slices_and_keys():
    cfg = GeneratorConfig(m=8, p=3, m_prime=4, seed=0, beta_star=[0.3, -0.2, 0.1])
    stream = smooth_stream(cfg, 6, seed=24)
    rep = run_online(stream, "en", (1e-2, 2.0), seed=8, lambda2_grid_n=5)
    lam2s = np.geomspace(1e-2, 2.0, 5)
    assert all(ch[0] in [float(v) for v in lam2s] for ch in rep.chosen)
    assert len(rep.hindsight_params) == 2


def test_ridge_mode_hindsight_matches_ridge_minimize():
    rng = np.random.default_rng(10)
    stream = [random_instance(rng, m=8, p=3) for _ in range(10)]
    rep = run_online(stream, "ridge", (1e-3, 1e3), seed=9)
    evs = [ridge_loss_evaluator(inst) for inst in stream]
    lam, mean_loss = ridge_minimize(evs, (1e-3, 1e3))
    assert abs(rep.hindsight_total - 10 * mean_loss) <= 1e-6 * (1 + 10 * mean_loss)
    assert abs(rep.hindsight_params[-1] - lam) <= 1e-4 * (1 + lam)


def test_anytime_doubling_runs():
    cfg = GeneratorConfig(m=8, p=3, m_prime=4, seed=0, beta_star=[0.3, -0.2, 0.1])
    stream = smooth_stream(cfg, 40, seed=25)
    rep = run_online(stream, "lasso", (1e-3, 2.0), seed=10, anytime=True,
                     checkpoint_rounds=(10, 20, 40))
    assert rep.checkpoints["rounds"] == [10, 20, 40]
    assert len(rep.per_round_losses) == 40


def test_dispersion_probe_examples():
    assert dispersion_probe([[0.5], [0.5], [0.9]], [0.1]) == {0.1: 2}
    assert dispersion_probe([[0.5], [0.5], [0.9]], [10.0]) == {10.0: 3}
    assert dispersion_probe([], [0.1]) == {0.1: 0}
    assert dispersion_probe([[0.1, 0.2], [0.15]], [0.06]) == {0.06: 2}

"""Continuous exponential weights over the regularization domain.

Weights after t rounds are w(x) = exp(zeta * sum_{i<=t} (1 - l_i(x)/H)) with
round losses clamped to [0, H]; the shared exp(zeta * t) factor cancels under
normalization, so sampling uses the density exp(-zeta/H * (cum(x) - min cum)).
The cumulative loss is kept exact: a merged piecewise quadratic along the
exact axis (lambda1 for LASSO / ElasticNet slices, or any piecewise-constant
classification loss), or the spectral ridge representation summed lazily.
For two-parameter domains the weight function lives on a grid of slices, each
slice exact along its own axis.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainMismatch, InvalidConfig
from .instances import gen_synthetic
from .paths import lars_path, en_path
from .piecewise import (
    PiecewiseQuadratic,
    RidgeLossEvaluator,
    clamp_curve,
    constant_curve,
    merge_pair_sum,
    ridge_loss_evaluator,
    val_loss_curve,
)

_MASS_REL_TOL = 1e-8
_INV_CDF_REL_TOL = 1e-10


# -- vectorized adaptive Simpson ----------------------------------------------


def _simpson_batch(f, los, his, rel_tol=_MASS_REL_TOL, max_depth=40):
    """Per-interval integrals of f, refined adaptively (classic |S2-S1|/15 test)."""
    los = np.asarray(los, dtype=float)
    his = np.asarray(his, dtype=float)
    out = np.zeros(los.shape[0])
    mids = 0.5 * (los + his)
    flo, fm, fhi = f(los), f(mids), f(his)
    S = (his - los) / 6.0 * (flo + 4.0 * fm + fhi)
    state = (los, his, flo, fm, fhi, S, np.arange(los.shape[0]))
    for _ in range(max_depth):
        lo, hi, flo, fm, fhi, S, pid = state
        if lo.size == 0:
            break
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        Sl = (mid - lo) / 6.0 * (flo + 4.0 * flm + fm)
        Sr = (hi - mid) / 6.0 * (fm + 4.0 * frm + fhi)
        S2 = Sl + Sr
        err = np.abs(S2 - S) / 15.0
        ok = err <= rel_tol * np.abs(S2) + 1e-300
        np.add.at(out, pid[ok], S2[ok] + (S2[ok] - S[ok]) / 15.0)
        bad = ~ok
        state = (
            np.concatenate([lo[bad], mid[bad]]),
            np.concatenate([mid[bad], hi[bad]]),
            np.concatenate([flo[bad], fm[bad]]),
            np.concatenate([flm[bad], frm[bad]]),
            np.concatenate([fm[bad], fhi[bad]]),
            np.concatenate([Sl[bad], Sr[bad]]),
            np.concatenate([pid[bad], pid[bad]]),
        )
    if state[0].size:  # depth exhausted: keep the latest refined estimates
        np.add.at(out, state[6], state[5])
    return out


def _exp_quad_batch(a, b, c, los, his, rel_tol=_MASS_REL_TOL, max_depth=40):
    """Adaptive Simpson of exp(-(a x^2 + b x + c)) with per-interval coefficients.

    Same refinement rule as _simpson_batch, but the integrand is evaluated
    straight from the per-interval quadratic, skipping piece lookup.
    """

    def val(aa, bb, cc, x):
        return np.exp(-((aa * x + bb) * x + cc))

    los = np.asarray(los, dtype=float)
    his = np.asarray(his, dtype=float)
    out = np.zeros(los.shape[0])
    mids = 0.5 * (los + his)
    q_lo = (a * los + b) * los + c
    q_mid = (a * mids + b) * mids + c
    q_hi = (a * his + b) * his + c
    flo, fm, fhi = np.exp(-q_lo), np.exp(-q_mid), np.exp(-q_hi)
    S = (his - los) / 6.0 * (flo + 4.0 * fm + fhi)
    # flat-exponent pieces: the Simpson error of exp(-q) is bounded by
    # spread^4 / 2880 relative, so a spread under 0.05 is below 1e-8 already
    curve_dev = np.abs(q_lo + q_hi - 2.0 * q_mid)
    spread = (
        np.maximum(np.maximum(q_lo, q_hi), q_mid)
        - np.minimum(np.minimum(q_lo, q_hi), q_mid)
        + 0.5 * curve_dev
    )
    easy = spread <= 0.05
    out[easy] = S[easy]
    hard = ~easy
    state = (
        los[hard], his[hard], flo[hard], fm[hard], fhi[hard], S[hard],
        np.flatnonzero(hard), a[hard], b[hard], c[hard],
    )
    for _ in range(max_depth):
        lo, hi, flo, fm, fhi, S, pid, aa, bb, cc = state
        if lo.size == 0:
            break
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = val(aa, bb, cc, lm), val(aa, bb, cc, rm)
        Sl = (mid - lo) / 6.0 * (flo + 4.0 * flm + fm)
        Sr = (hi - mid) / 6.0 * (fm + 4.0 * frm + fhi)
        S2 = Sl + Sr
        err = np.abs(S2 - S) / 15.0
        ok = err <= rel_tol * np.abs(S2) + 1e-300
        np.add.at(out, pid[ok], S2[ok] + (S2[ok] - S[ok]) / 15.0)
        bad = ~ok
        state = (
            np.concatenate([lo[bad], mid[bad]]),
            np.concatenate([mid[bad], hi[bad]]),
            np.concatenate([flo[bad], fm[bad]]),
            np.concatenate([flm[bad], frm[bad]]),
            np.concatenate([fm[bad], fhi[bad]]),
            np.concatenate([Sl[bad], Sr[bad]]),
            np.concatenate([pid[bad], pid[bad]]),
            np.concatenate([aa[bad], aa[bad]]),
            np.concatenate([bb[bad], bb[bad]]),
            np.concatenate([cc[bad], cc[bad]]),
        )
    if state[0].size:
        np.add.at(out, state[6], state[5])
    return out


# -- cumulative-loss representations ------------------------------------------


class PwqCum:
    """Exact running sum of piecewise-quadratic round losses."""

    def __init__(self, lo, hi):
        self.curve = constant_curve(lo, hi, 0.0)

    def add(self, curve):
        self.curve = merge_pair_sum(self.curve, curve)

    def evaluate(self, x):
        return self.curve.evaluate(x)

    def min(self):
        return self.curve.minimize()

    def reset(self):
        lo, hi = self.curve.domain
        self.curve = constant_curve(lo, hi, 0.0)

    def sample_panels(self):
        return self.curve.breaks


class RidgeCum:
    """Running sum of smooth spectral ridge losses, clamped at evaluation time."""

    def __init__(self, lo, hi, H=np.inf, panels=64):
        self.lo, self.hi = lo, hi
        self.H = H
        self.evaluators = []
        self._panels = np.geomspace(lo, hi, panels + 1) if lo > 0 else np.linspace(
            lo, hi, panels + 1
        )

    def add(self, ev):
        self.evaluators.append(ev)

    def evaluate(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        total = np.zeros(x.shape[0])
        for ev in self.evaluators:
            total += np.minimum(ev.loss(x), self.H)
        return total

    def min(self, scan_n=4096):
        xs = np.geomspace(self.lo, self.hi, scan_n) if self.lo > 0 else np.linspace(
            self.lo, self.hi, scan_n
        )
        vals = self.evaluate(xs)
        k = int(np.argmin(vals))
        a = xs[max(k - 1, 0)]
        b = xs[min(k + 1, scan_n - 1)]
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        x1, x2 = b - invphi * (b - a), a + invphi * (b - a)
        f1, f2 = self.evaluate([x1])[0], self.evaluate([x2])[0]
        for _ in range(60):
            if f1 <= f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - invphi * (b - a)
                f1 = self.evaluate([x1])[0]
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + invphi * (b - a)
                f2 = self.evaluate([x2])[0]
            if b - a <= 1e-12 * max(1.0, b):
                break
        cands = [(xs[k], vals[k]), (x1, f1), (x2, f2)]
        best = min(cands, key=lambda t: (t[1], t[0]))
        return float(best[0]), float(best[1])

    def reset(self):
        self.evaluators = []

    def sample_panels(self):
        return self._panels


@dataclass
class _Slice:
    key: tuple          # e.g. (lambda2,) or (tau,) or (lambda2, tau)
    cum: object
    breakpoints: list = field(default_factory=list)


@dataclass(frozen=True)
class SamplePoint:
    x: float
    slice_index: int
    key: tuple


class OnlineState:
    """Weight state for continuous exponential weights (strictly sequential)."""

    def __init__(self, domain, zeta, H, seed, slice_keys=None, cum_kind="pwq"):
        if not (0.0 < zeta <= 1.0):
            raise InvalidConfig("zeta must lie in (0, 1]")
        if not (H > 0 and math.isfinite(H)):
            raise InvalidConfig("H must be positive and finite")
        lo, hi = float(domain[0]), float(domain[1])
        if not lo < hi:
            raise InvalidConfig("domain must be a nonempty interval")
        self.domain = (lo, hi)
        self.zeta = float(zeta)
        self.H = float(H)
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        keys = (
            [()]
            if slice_keys is None
            else [tuple(float(v) for v in np.atleast_1d(k)) for k in slice_keys]
        )
        make = PwqCum if cum_kind == "pwq" else lambda a, b: RidgeCum(a, b, H=H)
        self.slices = [_Slice(k, make(lo, hi)) for k in keys]
        self.round = 0
        self.clamp_fracs = []

    # densities share the factor exp(zeta * round), dropped throughout

    def _slice_masses_and_panels(self):
        """Per slice: (piece masses, log scale from the min shift, breakpoints)."""
        k = self.zeta / self.H
        pwq = [sl.cum for sl in self.slices if isinstance(sl.cum, PwqCum)]
        out = []
        if len(pwq) == len(self.slices):
            # one batched integration across all slices' pieces; the per-slice
            # min (the underflow shift) comes from one fused reduceat pass
            curves = [cum.curve for cum in pwq]
            counts = np.array([cur.n_pieces for cur in curves])
            offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
            A = np.concatenate([cur.a for cur in curves])
            B = np.concatenate([cur.b for cur in curves])
            C = np.concatenate([cur.c for cur in curves])
            los = np.concatenate([cur.breaks[:-1] for cur in curves])
            his = np.concatenate([cur.breaks[1:] for cur in curves])
            v_lo = (A * los + B) * los + C
            v_hi = (A * his + B) * his + C
            vmin = np.minimum(v_lo, v_hi)
            pos_a = A > 0
            if np.any(pos_a):
                with np.errstate(divide="ignore", invalid="ignore"):
                    vx = -B / (2.0 * A)
                inside = pos_a & (vx > los) & (vx < his)
                if np.any(inside):
                    vv = (A[inside] * vx[inside] + B[inside]) * vx[inside] + C[inside]
                    vmin[inside] = np.minimum(vmin[inside], vv)
            shifts = np.minimum.reduceat(vmin, offsets)
            per_piece = np.repeat(shifts, counts)
            masses = _exp_quad_batch(k * A, k * B, k * (C - per_piece), los, his)
            pos = 0
            for cur, sh, n in zip(curves, shifts, counts):
                out.append((masses[pos : pos + n], -k * sh, cur.breaks))
                pos += n
            return out
        for sl in self.slices:
            shift = sl.cum.min()[1]
            br = sl.cum.sample_panels()

            def g(x, cum=sl.cum, shift=shift):
                return np.exp(-k * (cum.evaluate(x) - shift))

            piece_mass = _simpson_batch(g, br[:-1], br[1:])
            out.append((piece_mass, -k * shift, br))
        return out

    def sample(self):
        per_slice = self._slice_masses_and_panels()
        log_tot = np.array(
            [ls + math.log(max(float(np.sum(pm)), 1e-300)) for pm, ls, _ in per_slice]
        )
        w = np.exp(log_tot - np.max(log_tot))
        w /= np.sum(w)
        si = int(self.rng.choice(len(self.slices), p=w))
        piece_mass, _, br = per_slice[si]
        total = float(np.sum(piece_mass))
        u = self.rng.uniform()
        cdf = np.cumsum(piece_mass)
        pi = int(np.searchsorted(cdf, u * total, side="right"))
        pi = min(pi, piece_mass.shape[0] - 1)
        lo_p, hi_p = float(br[pi]), float(br[pi + 1])
        target_frac = (u * total - (cdf[pi - 1] if pi else 0.0)) / max(
            piece_mass[pi], 1e-300
        )
        x = self._inverse_cdf(
            self.slices[si].cum, pi, lo_p, hi_p, min(max(target_frac, 0.0), 1.0)
        )
        return SamplePoint(x, si, self.slices[si].key)

    def _inverse_cdf(self, cum, piece, lo, hi, frac):
        """Narrow [lo, hi] onto the quantile; 16-way interval splits per level."""
        k = self.zeta / self.H
        width_tol = _INV_CDF_REL_TOL * (hi - lo)
        if isinstance(cum, PwqCum):
            cur = cum.curve
            qa, qb, qc = k * cur.a[piece], k * cur.b[piece], k * cur.c[piece]
            ends = qa * np.array([lo, hi]) ** 2 + qb * np.array([lo, hi]) + qc
            local = float(np.min(ends))
            if qa > 0:
                v = -qb / (2 * qa)
                if lo < v < hi:
                    local = min(local, (qa * v + qb) * v + qc)

            def panel_masses(a, b, n):
                edges = np.linspace(a, b, n + 1)
                return edges, _exp_quad_batch(
                    np.full(n, qa), np.full(n, qb), np.full(n, qc - local),
                    edges[:-1], edges[1:],
                )
        else:
            xs = np.array([lo, 0.5 * (lo + hi), hi])
            local = float(np.min(cum.evaluate(xs)))

            def g(x):
                return np.exp(-k * (cum.evaluate(x) - local))

            def panel_masses(a, b, n):
                edges = np.linspace(a, b, n + 1)
                return edges, _simpson_batch(g, edges[:-1], edges[1:])

        a, b = lo, hi
        edges, masses = panel_masses(a, b, 16)
        target = frac * float(np.sum(masses))
        while b - a > width_tol:
            cdf = np.cumsum(masses)
            i = int(np.searchsorted(cdf, target, side="right"))
            i = min(i, masses.shape[0] - 1)
            target -= float(cdf[i - 1]) if i else 0.0
            a, b = float(edges[i]), float(edges[i + 1])
            if b - a <= width_tol:
                break
            edges, masses = panel_masses(a, b, 16)
            # rescale so the target stays consistent with the refined panels
            sub = float(np.sum(masses))
            prev = float(cdf[i] - (cdf[i - 1] if i else 0.0))
            target *= sub / max(prev, 1e-300)
        return 0.5 * (a + b)

    def update(self, round_losses):
        """Clamp each slice's round loss to [0, H] and fold it into the sums."""
        if not isinstance(round_losses, (list, tuple)):
            round_losses = [round_losses]
        if len(round_losses) != len(self.slices):
            raise DomainMismatch(
                f"{len(round_losses)} round losses for {len(self.slices)} slices"
            )
        fracs = []
        scale = 1e-9 * max(1.0, abs(self.domain[0]), abs(self.domain[1]))
        for sl, curve in zip(self.slices, round_losses):
            if isinstance(curve, PiecewiseQuadratic):
                d = curve.domain
                if abs(d[0] - self.domain[0]) > scale or abs(d[1] - self.domain[1]) > scale:
                    raise DomainMismatch("round curve domain differs from the state's")
                clamped, frac = clamp_curve(curve, self.H)
                sl.cum.add(clamped)
                sl.breakpoints.append(np.asarray(clamped.interior_breaks()))
                fracs.append(frac)
            elif isinstance(curve, RidgeLossEvaluator):
                sl.cum.add(curve)  # clamping happens inside RidgeCum.evaluate
                sl.breakpoints.append(np.zeros(0))
                fracs.append(0.0)
            else:
                raise InvalidConfig(f"unsupported round loss {type(curve)!r}")
        self.round += 1
        frac = float(np.mean(fracs))
        self.clamp_fracs.append(frac)
        return frac

    def reset_weights(self):
        for sl in self.slices:
            sl.cum.reset()

    def hindsight(self):
        """(key + x, total) minimizing the cumulative (clamped) loss across slices."""
        best = None
        for sl in self.slices:
            x, v = sl.cum.min()
            if best is None or v < best[2] or (v == best[2] and (sl.key, x) < (best[0], best[1])):
                best = (sl.key, x, v)
        return best


def ew_init(domain, zeta, H, seed, slice_keys=None, cum_kind="pwq"):
    return OnlineState(domain, zeta, H, seed, slice_keys, cum_kind)


def ew_sample(state):
    return state.sample()


def ew_update(state, round_losses):
    state.update(round_losses)
    return state


def default_zeta(T):
    return min(1.0, math.sqrt(math.log(max(T, 2)) / max(T, 2)))


# -- regression online loop ----------------------------------------------------


@dataclass(frozen=True)
class RegretReport:
    T: int
    mode: str
    zeta: float
    H: float
    per_round_losses: np.ndarray
    chosen: tuple                 # per-round sampled parameters
    hindsight_params: tuple
    hindsight_total: float
    R_T: float
    avg_regret: float
    clamp_rate: float
    dispersion_counts: dict
    round_curves: tuple | None = None
    checkpoints: dict | None = None


def _round_losses_regression(inst, mode, domain, lam2_values):
    lo, hi = domain
    if mode == "lasso":
        path = lars_path(inst.train, lambda_min=lo)
        return [val_loss_curve(path, inst.val, domain=domain)]
    if mode == "en":
        out = []
        for lam2 in lam2_values:
            path = en_path(inst.train, lam2, lambda_min=lo)
            out.append(val_loss_curve(path, inst.val, domain=domain))
        return out
    if mode == "ridge":
        return [ridge_loss_evaluator(inst)]
    raise InvalidConfig(f"unknown mode {mode!r}")


def _loss_at(round_loss, x):
    if isinstance(round_loss, PiecewiseQuadratic):
        return float(round_loss.evaluate(x))
    return float(round_loss.loss(float(x)))


def _max_round_loss(round_losses, domain):
    tops = []
    for rl in round_losses:
        if isinstance(rl, PiecewiseQuadratic):
            tops.append(rl.maximize()[1])
        else:
            xs = np.geomspace(domain[0], domain[1], 512)
            tops.append(float(np.max(rl.loss(xs))))
    return max(tops)


def run_online(stream, mode, domain, zeta=None, seed=0, H=None,
               lambda2_grid_n=64, keep_curves=False, horizon=None,
               anytime=False, checkpoint_rounds=()):
    """Algorithm loop: sample parameters, suffer the validation loss, reweight.

    The parameter for round t depends only on the seed and rounds before t;
    each round's exact loss curve is folded into the state afterwards.  The
    hindsight optimum is read off the final cumulative representation.
    """
    stream = list(stream)
    if not stream:
        raise InvalidConfig("empty stream")
    T = len(stream)
    if zeta is None:
        zeta = default_zeta(horizon or T)

    lam2_values = (
        np.geomspace(domain[0], domain[1], lambda2_grid_n) if mode == "en" else None
    )
    slice_keys = [(float(v),) for v in lam2_values] if mode == "en" else None
    cum_kind = "ridge" if mode == "ridge" else "pwq"

    state = None
    hind = None  # survives the doubling-trick weight resets
    losses, chosen, kept = [], [], []
    checkpoints = {"rounds": [], "cum_suffered": [], "hindsight_total": []}
    next_double = 1

    def full_hindsight():
        if hind is None:
            return state.hindsight()
        best = None
        for sl_key, cum in zip(state.slices, hind):
            x, v = cum.min()
            if best is None or v < best[2]:
                best = (sl_key.key, x, v)
        return best

    for t, inst in enumerate(stream, start=1):
        round_losses = _round_losses_regression(inst, mode, domain, lam2_values)
        if state is None:
            if H is None:
                top = _max_round_loss(round_losses, domain)
                H = 4.0 * top if top > 0 else 1.0
            state = OnlineState(domain, zeta, H, seed, slice_keys, cum_kind)
            if anytime:
                make = PwqCum if cum_kind == "pwq" else lambda a, b: RidgeCum(a, b, H=H)
                hind = [make(*domain) for _ in state.slices]
        if anytime and t == next_double:
            if t > 1:
                state.zeta = default_zeta(2 * t)
                state.reset_weights()
            next_double *= 2

        pt = state.sample()
        loss_t = _loss_at(round_losses[pt.slice_index], pt.x)
        losses.append(loss_t)
        chosen.append(pt.key + (pt.x,))
        state.update(round_losses)
        if hind is not None:
            for cum, rl in zip(hind, round_losses):
                if isinstance(rl, PiecewiseQuadratic):
                    cum.add(clamp_curve(rl, state.H)[0])
                else:
                    cum.add(rl)
        if keep_curves:
            kept.append(round_losses)
        if t in checkpoint_rounds:
            key, x, v = full_hindsight()
            checkpoints["rounds"].append(t)
            checkpoints["cum_suffered"].append(float(np.sum(losses)))
            checkpoints["hindsight_total"].append(v)

    key, x, total = full_hindsight()
    R_T = float(np.sum(losses) - total)

    eps = 1.0 / math.sqrt(T)
    bps = [bp for sl in state.slices for bp in sl.breakpoints]
    disp = dispersion_probe(bps, [eps])

    return RegretReport(
        T=T,
        mode=mode,
        zeta=float(state.zeta),
        H=float(state.H),
        per_round_losses=np.array(losses),
        chosen=tuple(chosen),
        hindsight_params=key + (x,),
        hindsight_total=float(total),
        R_T=R_T,
        avg_regret=R_T / T,
        clamp_rate=float(np.mean(state.clamp_fracs)),
        dispersion_counts=disp,
        round_curves=tuple(kept) if keep_curves else None,
        checkpoints=checkpoints if checkpoint_rounds else None,
    )


def smooth_stream(cfg_base, T, seed):
    """T fresh synthetic instances drawn from the bounded smooth generator."""
    root = np.random.default_rng(seed)
    seeds = root.integers(0, 2**63 - 1, size=T)
    out = []
    for s in seeds:
        cfg = type(cfg_base)(
            m=cfg_base.m, p=cfg_base.p, m_prime=cfg_base.m_prime, R=cfg_base.R,
            kappa_jitter=cfg_base.kappa_jitter, beta_star=cfg_base.beta_star,
            seed=int(s),
        )
        out.append(gen_synthetic(cfg))
    return out


def dispersion_probe(breakpoint_sets, epsilons):
    """Max number of pooled breakpoints falling in any interval of length eps."""
    arrays = [np.ravel(np.asarray(b, dtype=float)) for b in breakpoint_sets]
    pts = np.sort(np.concatenate(arrays)) if arrays else np.zeros(0)
    out = {}
    for eps in epsilons:
        if pts.size == 0:
            out[float(eps)] = 0
            continue
        hi = np.searchsorted(pts, pts + eps, side="right")
        out[float(eps)] = int(np.max(hi - np.arange(pts.size)))
    return out

import math

import numpy as np
import pytest

from sntc.continuation import (
    ContinuationSettings,
    EquilibriumSystem,
    continue_equilibrium,
    continue_fold_curve,
    continue_hopf_curve,
    continue_tc_curve,
    fold_seed,
    hopf_seed,
    newton_correct,
    tc_seed,
    verify_point,
)
from sntc.errors import ConfigurationError, DomainError, PreconditionError, StepFailure
from sntc.models import (
    KooiParams,
    NormalFormId,
    get_system,
    kooi_maintenance_rate,
    kooi_system,
    normal_form,
    oracle_fold_curve,
)
from sntc.testfunctions import SNTC_DOUBLE_ZERO, SNTC_SINGLE_ZERO


def test_settings_validation():
    ContinuationSettings()
    with pytest.raises(ConfigurationError):
        ContinuationSettings(h0=1.0, h_max=0.1)
    with pytest.raises(ConfigurationError):
        ContinuationSettings(h_min=0.0)
    with pytest.raises(ConfigurationError):
        ContinuationSettings(shrink=1.0)


def test_newton_examples():
    sys = normal_form("cusp")
    params = {"a": 2.0 + 1e-3, "b": -3.0}
    ext = EquilibriumSystem(sys, params, "a")
    t = np.array([1.0, 0.0])
    z, _ = newton_correct(ext, ext.pack(np.array([1.02]), params), t)
    assert abs(ext.residual(z)[0]) <= 1e-10
    assert z[0] == pytest.approx(1.02)
    exact = ext.pack(np.array([1.02]), {"a": 3 * 1.02 - 1.02**3, "b": -3.0})
    _, iters = newton_correct(ext, exact, t)
    assert iters <= 1
    with pytest.raises(StepFailure):
        newton_correct(ext, ext.pack(np.array([100.0]), params), np.array([0.0, 1.0]))


def test_cusp_equilibrium_folds():
    sys = normal_form("cusp")
    c = continue_equilibrium(sys, [2.28], {"a": -5.0, "b": -3.0}, "a", (-5.5, 5.5),
                             ContinuationSettings(h0=0.01, h_max=0.05))
    folds = sorted(sp.params["a"] for sp in c.specials_of("Fold"))
    assert folds == pytest.approx([-2.0, 2.0], abs=1e-8)
    for pt in c.points:
        assert verify_point(c, pt) <= 1e-9


def test_kooi_washout_transcritical():
    kp = KooiParams(c_r=1.0, D=0.15, N_r=5.0)
    sys = kooi_system(kp)
    c = continue_equilibrium(sys, [5.0, 0.0, 0.0], kp.as_dict(), "N_r", (1.0, 60.0),
                             ContinuationSettings(h0=0.1, h_max=1.0))
    tc = [sp for sp in c.specials_of("Transcritical") if sp.transversal == 1]
    assert len(tc) == 1
    rate = kp.D + kooi_maintenance_rate(0.0, kp)
    n_star = rate * kp.kappa_NR / (kp.mu_NR - rate)
    assert tc[0].params["N_r"] == pytest.approx(n_star, abs=1e-8)


def test_single_zero_transcritical_in_a():
    sys = normal_form("sntc-single-zero")
    c = continue_equilibrium(sys, [0.0], {"a": -0.5, "b": -0.3}, "a", (-1.0, 1.0))
    tc = c.specials_of("Transcritical")
    assert len(tc) == 1 and abs(tc[0].params["a"]) <= 1e-10


def _cusp_fold(direction="both", seed_b=-3.0, bounds=None):
    sys = normal_form("cusp")
    x = math.sqrt(-seed_b / 3)
    seed = fold_seed(sys, [x], {"a": oracle_fold_curve("cusp", seed_b), "b": seed_b}, ("a", "b"))
    return continue_fold_curve(sys, seed, ContinuationSettings(h0=0.01, h_max=0.05),
                               bounds=bounds or {"b": (-4.0, -0.1)}, direction=direction)


def test_cusp_fold_curve_oracle_and_consistency():
    c = _cusp_fold()
    a, b = c.column("a"), c.column("b")
    assert b.min() < -3.9 and b.max() > -0.2
    assert np.max(np.abs(a * a / 4 + b**3 / 27)) <= 1e-8
    for pt in c.points:
        assert verify_point(c, pt) <= 1e-9
        assert abs(pt.testvals["gamma"]) <= 1e-8
        assert np.min(np.abs(pt.eigenvalues)) <= 1e-6


def test_direction_reversal():
    both = _cusp_fold("both")
    minus = _cusp_fold(-1)
    plus = _cusp_fold(1)
    stitched = list(reversed(minus.points[1:])) + plus.points
    assert len(stitched) == len(both.points)
    for p1, p2 in zip(stitched, both.points):
        assert np.max(np.abs(p1.z - p2.z)) <= 1e-8
    # restart at the far end with the tangent pointing back: same locus, reversed order
    end = plus.points[-1]
    sys = normal_form("cusp")
    seed = fold_seed(sys, end.x, end.params, ("a", "b"))
    eb = end.params["b"]
    lo, hi = sorted((eb, -3.0))
    back = continue_fold_curve(sys, seed, ContinuationSettings(h0=0.01, h_max=0.05),
                               bounds={"b": (lo - 1e-9, hi + 1e-9)}, direction="both")
    b_back = back.column("b")
    a_back = back.column("a")
    assert np.max(np.abs(a_back * a_back / 4 + b_back**3 / 27)) <= 1e-8
    assert b_back.min() == pytest.approx(lo, abs=1e-8)
    assert b_back.max() == pytest.approx(hi, abs=1e-8)
    assert np.sign(np.diff(b_back)).tolist() == [np.sign(np.diff(b_back))[0]] * (len(b_back) - 1)


def test_curve_ends_on_bounds_with_consistent_orientation():
    sys = normal_form("sntc-single-zero")
    seed = fold_seed(sys, [0.15], {"a": 0.0225, "b": -0.3}, ("a", "b"))
    c = continue_fold_curve(sys, seed, ContinuationSettings(h0=0.01, h_max=0.05), bounds={"b": (-0.5, 0.4)})
    assert c.meta["termination"] == ("boundary", "boundary")
    b = c.column("b")
    assert b[0] == pytest.approx(-0.5, abs=1e-12) and b[-1] == pytest.approx(0.4, abs=1e-12)
    # tangents of both half-runs point along the assembled curve
    tangents = np.array([pt.tangent for pt in c.points])
    assert np.all(np.einsum("ij,ij->i", tangents[:-1], tangents[1:]) > 0)
    assert np.all(tangents[:, -1] > 0)
    alpha = c.column("alpha")
    assert np.all(np.sign(alpha[b < -1e-6]) == np.sign(alpha[0]))
    assert np.all(np.sign(alpha[b > 1e-6]) == -np.sign(alpha[0]))


def test_single_zero_fold_and_tc_tangency():
    sys = normal_form("sntc-single-zero")
    st = ContinuationSettings(h0=0.01, h_max=0.05)
    seed = fold_seed(sys, [0.15], {"a": 0.0225, "b": -0.3}, ("a", "b"))
    fold = continue_fold_curve(sys, seed, st, bounds={"b": (-0.5, 0.5)})
    a, b = fold.column("a"), fold.column("b")
    assert b.min() < -0.45 and b.max() > 0.45
    assert np.max(np.abs(a - b * b / 4)) <= 1e-8
    sz = fold.specials_of(SNTC_SINGLE_ZERO)
    assert len(sz) == 1 and abs(sz[0].params["b"]) <= 1e-8

    tc = continue_tc_curve(sys, tc_seed(sys, [0.0], {"a": 0.0, "b": -0.3}, ("a", "b"), (0,), 0), st,
                           bounds={"b": (-0.5, 0.5)})
    assert np.max(np.abs(tc.column("a"))) <= 1e-12
    for pt in tc.points:
        assert pt.testvals["beta_cusp"] == pytest.approx(2 * pt.params["b"], abs=1e-12)
    cand = tc.specials_of(SNTC_SINGLE_ZERO)
    assert len(cand) == 1 and abs(cand[0].params["b"]) <= 1e-8 and cand[0].diagnostics["candidate"]

    def plane_dir(t):
        v = t[-2:]
        return v / np.linalg.norm(v)

    d1, d2 = plane_dir(sz[0].tangent), plane_dir(cand[0].tangent)
    angle = math.atan2(abs(d1[0] * d2[1] - d1[1] * d2[0]), abs(d1 @ d2))
    assert angle < 1e-4


def test_sntc1_fold_matches_closed_form():
    nf = NormalFormId("sntc-minimal", {"eps": 1.0, "k1": 1.0})
    sys = normal_form(nf)
    from sntc.models import oracle_fold_state
    b0 = -0.15
    seed = fold_seed(sys, oracle_fold_state(nf, b0), {"a": oracle_fold_curve(nf, b0), "b": b0}, ("a", "b"))
    c = continue_fold_curve(sys, seed, ContinuationSettings(h0=0.01, h_max=0.05), bounds={"b": (-0.2, 0.2)})
    dev = [abs(pt.params["a"] - oracle_fold_curve(nf, pt.params["b"])) for pt in c.points]
    assert max(dev) <= 1e-7
    dz = c.specials_of(SNTC_DOUBLE_ZERO)
    assert len(dz) == 1 and abs(dz[0].params["b"]) <= 1e-7


def test_sntc2_tc_curve():
    sys = get_system("sntc2")
    b = -0.2
    X = -b  # mu2 = 1: transversal eigenvalue b + X vanishes
    seed = tc_seed(sys, [X, 0.0], {"a": X * X, "b": b}, ("a", "b"), (1,), 1)
    c = continue_tc_curve(sys, seed, ContinuationSettings(h0=0.01, h_max=0.05), bounds={"b": (-0.3, 0.3)})
    dz = c.specials_of(SNTC_DOUBLE_ZERO)
    assert len(dz) == 1 and abs(dz[0].params["b"]) <= 1e-8
    for pt in c.points:
        assert verify_point(c, pt) <= 1e-9


def test_tc_seed_off_plane():
    sys = normal_form("sntc-single-zero")
    seed = tc_seed(sys, [0.0], {"a": 0.0, "b": -0.3}, ("a", "b"), (0,), 0)
    seed.x = np.array([0.1])
    with pytest.raises(DomainError):
        continue_tc_curve(sys, seed)


def test_linear_oscillator_hopf_curve():
    sys = get_system("linear-oscillator")
    seed = hopf_seed(sys, [0.0, 0.0], {"lam1": 0.0, "lam2": 0.0}, ("lam1", "lam2"))
    c = continue_hopf_curve(sys, seed, ContinuationSettings(h0=0.01, h_max=0.1), bounds={"lam2": (-1.0, 1.0)})
    assert np.max(np.abs(c.column("lam1"))) <= 1e-12
    l2 = c.column("lam2")
    assert l2.min() < -0.9 and l2.max() > 0.9
    for pt in c.points:
        assert pt.aux["omega"] == pytest.approx(1 + pt.params["lam2"] ** 2, rel=1e-10)
        assert verify_point(c, pt) <= 1e-9
    with pytest.raises(PreconditionError):
        hopf_seed(normal_form("cusp"), [1.0], {"a": 2.0, "b": -3.0}, ("a", "b"))


def test_kooi_curves_reverify(kooi_dz):
    for key in ("sn", "tc", "hb", "prey", "coex"):
        c = kooi_dz[key]
        assert len(c) > 10
        assert max(verify_point(c, pt) for pt in c.points) <= 1e-9
    for pt in kooi_dz["sn"].points:
        assert abs(pt.testvals["gamma"]) <= 1e-8
        assert np.min(np.abs(pt.eigenvalues)) <= 1e-6
    hb = kooi_dz["hb"]
    assert hb.meta["endpoints"] and hb.meta["min_omega"] < 1e-6

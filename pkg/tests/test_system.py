import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sntc.errors import ConfigurationError, DerivativeMismatchError, KinkError
from sntc.models import BUILTIN_SYSTEMS, KooiParams, get_system, kooi_system, linear_system
from sntc.system import (
    ParamPoint,
    SystemDef,
    eval_hess_action,
    eval_jac_params,
    eval_jacobian,
    eval_rhs,
    fd_check,
    fd_sweep,
    numeric_system,
    resolve_params,
)

finite = st.floats(-3.0, 3.0, allow_nan=False)


def test_systemdef_validation():
    f = lambda x, p: x
    with pytest.raises(ConfigurationError):
        SystemDef("bad", 0, (), f, f, f, f)
    with pytest.raises(ConfigurationError):
        SystemDef("bad", 2, (), f, f, f, f, invariant_components=(2,))
    s = SystemDef("ok", 2, ("a",), f, f, f, f)
    assert s.state_names == ("x1", "x2")


def test_param_point_pair_must_be_distinct_and_present():
    with pytest.raises(ConfigurationError):
        ParamPoint({"a": 1.0}, ("a", "a"))
    with pytest.raises(ConfigurationError):
        ParamPoint({"a": 1.0}, ("a", "b"))
    pp = ParamPoint({"a": 1.0, "b": 2.0}, ("b", "a"))
    assert pp.pair_values == (2.0, 1.0)
    assert pp.with_values(a=5.0).values["a"] == 5.0


def test_unknown_parameter_is_configuration_error():
    with pytest.raises(ConfigurationError, match="unknown parameter"):
        eval_rhs(get_system("cusp"), [0.0], {"c": 1.0})
    with pytest.raises(ConfigurationError):
        eval_jac_params(get_system("cusp"), [0.0], {}, "c")
    with pytest.raises(ConfigurationError):
        eval_rhs(get_system("cusp"), [0.0, 1.0])


def test_rhs_examples():
    kp = KooiParams()
    assert np.all(eval_rhs(kooi_system(kp), [kp.N_r, 0.0, 0.0]) == 0.0)
    assert eval_rhs(get_system("cusp"), [0.0], {"a": 0.0, "b": 0.0})[0] == 0.0
    assert np.all(eval_rhs(get_system("sntc2"), [1.0, 0.0], {"a": 1.0, "b": 0.0}) == 0.0)


def test_jacobian_examples():
    J = eval_jacobian(get_system("sntc2"), [0.0, 0.0], {"a": 0.0, "b": 0.37})
    assert np.array_equal(J, [[0.0, 1.0], [0.0, 0.37]])
    A = np.array([[1.0, 2.0], [-3.0, 0.5]])
    lin = linear_system(A)
    assert np.array_equal(eval_jacobian(lin, [5.0, -7.0]), A)
    kp = KooiParams()
    J = eval_jacobian(kooi_system(kp), [kp.N_r, 0.0, 0.0])
    assert J[2, 2] == pytest.approx(-(kp.D + kp.m_P0), rel=1e-15)


def test_fd_check_cusp_random_points():
    rng = np.random.default_rng(1)
    sys = get_system("cusp")
    for _ in range(20):
        x, a, b = rng.uniform(-1, 1, 3)
        rep = fd_check(sys, [x], {"a": a, "b": b}, 1e-5)
        assert rep.passed


def test_fd_check_kooi_positive_state():
    rep = fd_check(kooi_system(), [12.0, 2.5, 0.3], None, 1e-5)
    assert set(rep.errors) == {"jac", "jac_params", "hess_action"}
    assert max(rep.errors.values()) < 1e-8


def test_fd_check_detects_corrupted_jacobian():
    good = get_system("bogdanov-takens")

    def bad_jac(x, p):
        J = good.jac(x, p).copy()
        J[1, 0] += 0.1
        return J

    bad = SystemDef("corrupt", 2, good.param_names, good.rhs, bad_jac, good.jac_params, good.hess_action,
                    defaults=good.defaults)
    with pytest.raises(DerivativeMismatchError) as ei:
        fd_check(bad, [0.3, -0.2], {"a": 0.1, "b": 0.2})
    assert ei.value.block == "jac"


def test_fd_check_refuses_to_straddle_kink():
    kp = KooiParams(c_r=1.0)
    sys = kooi_system(kp)
    r_star = (kp.BCF * kp.c_r / kp.c_RM0 - 1.0) / kp.BCF
    with pytest.raises(KinkError) as ei:
        fd_check(sys, [10.0, r_star, 0.1])
    assert ei.value.component == 1
    assert ei.value.location == pytest.approx(r_star)


@pytest.mark.parametrize("name", sorted(BUILTIN_SYSTEMS))
def test_fd_sweep_builtin_systems(name):
    rep = fd_sweep(get_system(name), 100, seed=3)
    assert rep["points"] == 100
    assert max(rep["max_errors"].values()) <= 1e-5


def test_fd_sweep_redraws_points_at_the_kink():
    sys = kooi_system(KooiParams(c_r=1.0))
    # a narrow box around the kink forces redraws
    rep = fd_sweep(sys, 20, seed=0, state_box=[(5.0, 15.0), (8.999, 9.001), (0.1, 1.0)],
                   param_spread=0.0)
    assert rep["kink_skips"] > 0
    assert rep["points"] == 20


@pytest.mark.parametrize("name", sorted(BUILTIN_SYSTEMS))
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_hess_action_symmetric(name, data):
    sys = get_system(name)
    n = sys.dim
    vec = st.lists(finite, min_size=n, max_size=n)
    x = np.abs(data.draw(vec)) + 0.01 if sys.nonnegative else np.array(data.draw(vec))
    q1, q2 = np.array(data.draw(vec)), np.array(data.draw(vec))
    p = resolve_params(sys, None)
    assert np.array_equal(eval_hess_action(sys, x, p, q1, q2), eval_hess_action(sys, x, p, q2, q1))


@pytest.mark.parametrize("name", sorted(BUILTIN_SYSTEMS))
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_invariant_components_have_zero_rhs(name, data):
    sys = get_system(name)
    for i in sys.invariant_components:
        x = np.abs(np.array(data.draw(st.lists(finite, min_size=sys.dim, max_size=sys.dim))))
        x[i] = 0.0
        p = {k: data.draw(st.floats(0.05, 2.0)) for k in ("a", "b") if k in sys.param_names}
        assert eval_rhs(sys, x, p)[i] == 0.0


def test_numeric_system_fallback():
    def rhs(x, p):
        return np.array([p["a"] * x[0] - x[0] * x[1] ** 2, x[0] ** 2 * x[1] + p["b"]])

    sys = numeric_system("user", rhs, 2, ("a", "b"), defaults={"a": 0.5, "b": -0.2})
    assert not sys.analytic
    x = np.array([0.7, -1.3])
    J = eval_jacobian(sys, x)
    exact = np.array([[0.5 - x[1] ** 2, -2 * x[0] * x[1]], [2 * x[0] * x[1], x[0] ** 2]])
    assert np.allclose(J, exact, atol=1e-9)
    q1, q2 = np.array([0.3, 1.1]), np.array([-0.8, 0.4])
    h12 = eval_hess_action(sys, x, None, q1, q2)
    h21 = eval_hess_action(sys, x, None, q2, q1)
    assert np.max(np.abs(h12 - h21)) <= 1e-12
    assert fd_check(sys, x).passed

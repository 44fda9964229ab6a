from __future__ import annotations

import pytest

_CRITERIA: dict[int, list[str]] = {}
_TITLES: dict[int, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number n")


def pytest_runtest_makereport(item, call):
    m = item.get_closest_marker("criterion")
    if m is None or call.when != "call" and not (call.when == "setup" and call.excinfo):
        return
    n = m.args[0]
    _TITLES[n] = m.args[1] if len(m.args) > 1 else ""
    outcome = "passed" if call.excinfo is None else "failed"
    _CRITERIA.setdefault(n, []).append(outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status = "PASS" if all(o == "passed" for o in _CRITERIA[n]) else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status}  {_TITLES[n]}")


@pytest.fixture(scope="session")
def kooi_dz():
    """Double-zero chemostat setting: curves shared across test modules."""
    from sntc.continuation import (
        ContinuationSettings as S,
        continue_equilibrium,
        continue_fold_curve,
        continue_hopf_curve,
        continue_tc_curve,
    )
    from sntc.models import KooiParams, kooi_boundary_equilibria, kooi_coexistence_equilibrium, kooi_system

    kp = KooiParams(c_r=9.0, mu_RP=0.7, N_r=24.6, D=0.142)
    sys = kooi_system(kp)
    p = kp.as_dict()
    bounds = {"N_r": (5.0, 60.0), "D": (0.03, 0.4)}
    prey = continue_equilibrium(sys, kooi_boundary_equilibria(kp)[0], p, "N_r", (5.0, 40.0),
                                S(h0=0.05, h_max=0.5), direction="both")
    coex = continue_equilibrium(sys, kooi_coexistence_equilibrium(kp), p, "N_r", (5.0, 40.0),
                                S(h0=0.05, h_max=0.5), direction="both")
    st = S(h0=0.01, h_max=0.2)
    sn = continue_fold_curve(sys, prey.specials_of("Fold")[0], st, pair=("N_r", "D"), bounds=bounds)
    tc = continue_tc_curve(sys, prey.specials_of("Transcritical")[0], st, pair=("N_r", "D"), bounds=bounds)
    hb = continue_hopf_curve(sys, coex.specials_of("Hopf")[0], st, pair=("N_r", "D"), bounds=bounds)
    return {"sys": sys, "params": p, "prey": prey, "coex": coex, "sn": sn, "tc": tc, "hb": hb}


@pytest.fixture(scope="session")
def kooi_sz():
    """Single-zero chemostat setting (c_r = 1, mu_RP = 0.2)."""
    from sntc.continuation import ContinuationSettings as S, continue_equilibrium, continue_fold_curve, continue_tc_curve
    from sntc.models import KooiParams, kooi_boundary_equilibria, kooi_system

    kp = KooiParams(c_r=1.0, mu_RP=0.2, D=0.15, N_r=5.0)
    sys = kooi_system(kp)
    p = kp.as_dict()
    bounds = {"N_r": (0.5, 60.0), "D": (0.05, 0.45)}
    washout = continue_equilibrium(sys, [5.0, 0.0, 0.0], p, "N_r", (1.0, 60.0), S(h0=0.1, h_max=1.0))
    p_prey = dict(p, N_r=6.8)
    prey = continue_equilibrium(sys, kooi_boundary_equilibria(KooiParams.from_mapping(p_prey))[0], p_prey, "N_r",
                                (0.5, 60.0), S(h0=0.05, h_max=1.0), direction="both")
    st = S(h0=0.01, h_max=0.2)
    sn = continue_fold_curve(sys, prey.specials_of("Fold")[0], st, pair=("N_r", "D"), bounds=bounds)
    tc = continue_tc_curve(sys, washout.specials_of("Transcritical")[0], st, pair=("N_r", "D"), bounds=bounds)
    return {"sys": sys, "params": p, "washout": washout, "prey": prey, "sn": sn, "tc": tc}

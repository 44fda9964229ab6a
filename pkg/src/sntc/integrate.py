"""Adaptive Dormand-Prince 5(4) integration with positivity and kink handling."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import ConfigurationError, StiffnessError
from .system import SystemDef, resolve_params

__all__ = [
    "Trajectory",
    "Section",
    "integrate",
    "estimate_period",
    "write_trajectory_csv",
    "long_run_outcome",
]

log = logging.getLogger(__name__)

# Dormand-Prince coefficients
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

NEG_REJECT = -1e-10
NEG_SNAP = -1e-13


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    events: list[tuple[float, str]] = field(default_factory=list)
    system: SystemDef | None = None
    params: dict[str, float] = field(default_factory=dict)
    tol: float = 1e-9
    stats: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def component(self, i: int | str) -> np.ndarray:
        if isinstance(i, str):
            i = self.system.state_names.index(i)
        return self.states[:, i]

    def window(self, t0: float, t1: float = math.inf) -> "Trajectory":
        m = (self.times >= t0) & (self.times <= t1)
        return Trajectory(self.times[m], self.states[m], [e for e in self.events if t0 <= e[0] <= t1],
                          self.system, self.params, self.tol, self.stats)


@dataclass(frozen=True)
class Section:
    """Hyperplane ``normal . x = offset`` crossed in direction ``sign(direction)``."""

    normal: tuple[float, ...]
    offset: float = 0.0
    direction: int = 1

    @classmethod
    def component(cls, dim: int, index: int, value: float, direction: int = 1) -> "Section":
        n = [0.0] * dim
        n[index] = 1.0
        return cls(tuple(n), float(value), direction)

    def __call__(self, x) -> float:
        return float(np.dot(self.normal, x) - self.offset)


def _rk_step(f, t, y, h, k1):
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks))
        ks.append(f(yi))
    y5 = y + h * sum(b * k for b, k in zip(_B5, ks) if b != 0.0)
    err = h * sum(e * k for e, k in zip(_E, ks))
    return y5, err, ks[6]


def integrate(sys: SystemDef, x0, p=None, t_end: float = 1000.0, tol: float = 1e-9, *,
              h0: float | None = None, h_max: float | None = None, max_steps: int = 5_000_000,
              t0: float = 0.0) -> Trajectory:
    """Integrate ``x' = f(x)`` from ``t0`` to ``t_end`` with Dormand-Prince 5(4).

    The scaled error ``max_i |err_i| / (1 + max(|y_i|, |y_new_i|))`` of each
    step is held below ``tol**1.25`` (never above ``tol``). With local
    extrapolation the global error of a step-size-per-tolerance controller
    grows only linearly in ``tol``; the extra power makes it superlinear.
    """
    if not tol > 0:
        raise ConfigurationError("tol must be positive")
    if not t_end > t0:
        raise ConfigurationError("t_end must exceed t0")
    params = resolve_params(sys, p)
    y = np.asarray(x0, dtype=float).copy()
    if y.shape != (sys.dim,):
        raise ConfigurationError(f"x0 has shape {y.shape}, expected ({sys.dim},)")
    if sys.nonnegative and np.any(y < 0):
        raise ConfigurationError("initial state has negative components")

    def f(x):
        return sys.rhs(x, params)

    kinks = sys.kink_locations(params)
    span = t_end - t0
    h_max = span if h_max is None else h_max
    k1 = f(y)
    if h0 is None:
        scale = 1.0 + np.abs(y)
        d0 = float(np.max(np.abs(y) / scale))
        d1 = float(np.max(np.abs(k1) / scale))
        h0 = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
        h0 = min(h0, 1e-2 * span)
    h = min(h0, h_max)
    t = t0
    times = [t]
    states = [y.copy()]
    events: list[tuple[float, str]] = []
    err_prev = 1e-4
    accepted = rejected = 0
    alpha, beta = 0.7 / 5.0, 0.4 / 5.0

    while t < t_end:
        if accepted + rejected >= max_steps:
            raise StiffnessError(t, y, h)
        h = min(h, t_end - t)
        if h < 1e-12 * max(1.0, abs(t)):
            raise StiffnessError(t, y, h)
        y_new, err, k7 = _rk_step(f, t, y, h, k1)
        sc = 1.0 + np.maximum(np.abs(y), np.abs(y_new))
        en = float(np.max(np.abs(err) / sc)) / _target(tol, h)
        if not math.isfinite(en):
            rejected += 1
            h *= 0.2
            continue
        if en > 1.0:
            rejected += 1
            h *= max(0.2, 0.9 * en ** -alpha)
            continue
        if sys.nonnegative and np.any(y_new < NEG_REJECT):
            rejected += 1
            h *= 0.5
            continue
        kink_hit = None
        for comp, loc in kinks:
            if (y[comp] - loc) * (y_new[comp] - loc) < 0:
                kink_hit = (comp, loc)
                break
        if kink_hit is not None:
            # shorten the step so it ends on the kink
            comp, loc = kink_hit
            lo, hi = 0.0, h
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                ym = _rk_step(f, t, y, mid, k1)[0]
                if (y[comp] - loc) * (ym[comp] - loc) > 0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 1e-13 * max(1.0, abs(t)):
                    break
            h = hi
            y_new = _rk_step(f, t, y, h, k1)[0]
            y_new[comp] = loc
            k7 = f(y_new)
            events.append((t + h, f"kink:{comp}"))
        if sys.nonnegative:
            snap = (y_new < 0) & (y_new > NEG_SNAP)
            if np.any(snap):
                y_new[snap] = 0.0
                k7 = f(y_new)
        t = t + h
        y = y_new
        k1 = k7
        accepted += 1
        times.append(t)
        states.append(y.copy())
        en = max(en, 1e-10)
        fac = 0.9 * en ** -alpha * err_prev ** beta
        h = min(h * min(5.0, max(0.2, fac)), h_max)
        err_prev = en
    return Trajectory(np.array(times), np.array(states), events, sys, params, tol,
                      {"accepted": accepted, "rejected": rejected})


def _refine_crossing(traj: Trajectory, i: int, section: Section) -> float:
    """Crossing time inside step ``i -> i+1`` by secant on a single RK step."""
    sys, params = traj.system, traj.params
    t, y = traj.times[i], traj.states[i]
    H = traj.times[i + 1] - t
    g0, g1 = section(y), section(traj.states[i + 1])
    if sys is None:
        return t + H * g0 / (g0 - g1)

    def f(x):
        return sys.rhs(x, params)

    k1 = f(y)
    a, b, ga, gb = 0.0, H, g0, g1
    s = H * g0 / (g0 - g1)
    for _ in range(50):
        gs = section(_rk_step(f, t, y, s, k1)[0])
        if abs(gs) <= 1e-14 * (1.0 + abs(section.offset)):
            break
        if ga * gs < 0:
            b, gb = s, gs
        else:
            a, ga = s, gs
        s_new = b - gb * (b - a) / (gb - ga)
        if not a < s_new < b:
            s_new = 0.5 * (a + b)
        if abs(s_new - s) <= 1e-15 * max(1.0, abs(t)):
            s = s_new
            break
        s = s_new
    return float(t + s)


def estimate_period(traj: Trajectory, section: Section, *, min_amplitude: float = 1e-6) -> float | None:
    """Mean return time to ``section`` over the second half of ``traj``.

    Returns None when fewer than three same-direction crossings occur there
    or when the oscillation about the section decays.
    """
    t_mid = traj.times[0] + 0.5 * (traj.times[-1] - traj.times[0])
    g = np.array([section(x) for x in traj.states])
    sgn = 1 if section.direction >= 0 else -1
    crossings = []
    for i in range(len(g) - 1):
        if traj.times[i] < t_mid:
            continue
        if sgn * g[i] < 0 <= sgn * g[i + 1]:
            crossings.append(_refine_crossing(traj, i, section) if g[i + 1] != 0 else traj.times[i + 1])
    if len(crossings) < 3:
        log.info("period estimate: %d crossings in second half, need 3", len(crossings))
        return None
    amps = []
    for c0, c1 in zip(crossings[:-1], crossings[1:]):
        m = (traj.times >= c0) & (traj.times <= c1)
        amps.append(float(np.ptp(g[m])) if np.any(m) else 0.0)
    ref = 1.0 + abs(section.offset)
    if max(amps) < min_amplitude * ref or amps[-1] < 0.1 * amps[0]:
        log.info("period estimate: oscillation decays (amplitudes %.3g -> %.3g)", amps[0], amps[-1])
        return None
    return float(np.mean(np.diff(crossings)))


def long_run_outcome(traj: Trajectory, section: Section | None = None, *, eq_tol: float = 1e-6) -> dict[str, Any]:
    """Coarse classification of the late-time behaviour of a trajectory."""
    late = traj.window(traj.times[0] + 0.75 * (traj.times[-1] - traj.times[0]))
    spread = np.ptp(late.states, axis=0)
    out: dict[str, Any] = {"final": traj.final.copy(), "spread": spread, "period": None}
    if np.all(spread <= eq_tol * (1.0 + np.abs(traj.final))):
        out["kind"] = "equilibrium"
        return out
    if section is not None:
        out["period"] = estimate_period(traj, section)
    out["kind"] = "oscillation" if out["period"] is not None else "transient"
    return out


def write_trajectory_csv(traj: Trajectory, path: str | Path, stride: int = 1) -> Path:
    """CSV with a ``# system=... params=...`` header row and columns ``t, <state names>``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(traj.system.state_names) if traj.system is not None else [
        f"x{i + 1}" for i in range(traj.states.shape[1])]
    sysname = traj.system.name if traj.system is not None else "unknown"
    pstr = ",".join(f"{k}={v:.17g}" for k, v in traj.params.items())
    with path.open("w", newline="") as fh:
        fh.write(f"# system={sysname} params={pstr}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *names])
        idx = list(range(0, len(traj.times), max(1, stride)))
        if idx[-1] != len(traj.times) - 1:
            idx.append(len(traj.times) - 1)
        for i in idx:
            w.writerow([repr(float(traj.times[i]))] + [repr(float(v)) for v in traj.states[i]])
    return path


def _target(tol: float, h: float) -> float:
    # tol**1.25 per step: global error then scales like tol**1.25, so halving tol gains > 2x
    return min(tol, tol ** 1.25)

"""Parameterized ODE systems with derivatives and invariant-plane metadata."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, DerivativeMismatchError, KinkError

__all__ = [
    "SystemDef",
    "ParamPoint",
    "FDReport",
    "eval_rhs",
    "eval_jacobian",
    "eval_jac_params",
    "eval_hess_action",
    "jac_param_derivative",
    "numeric_system",
    "fd_check",
    "fd_sweep",
    "resolve_params",
]

EPS = np.finfo(float).eps
CBRT_EPS = EPS ** (1.0 / 3.0)

Params = Mapping[str, float]


@dataclass(frozen=True)
class SystemDef:
    """An ODE ``x' = f(x, params)`` with first and second derivatives.

    ``invariant_components`` holds 0-based state indices ``i`` such that the
    hyperplane ``x_i = 0`` is invariant under the flow. ``kinks`` optionally
    returns ``[(component, value), ...]`` locations where the right-hand side
    is only continuous.
    """

    name: str
    dim: int
    param_names: tuple[str, ...]
    rhs: Callable[[np.ndarray, Params], np.ndarray]
    jac: Callable[[np.ndarray, Params], np.ndarray]
    jac_params: Callable[[np.ndarray, Params, str], np.ndarray]
    hess_action: Callable[[np.ndarray, Params, np.ndarray, np.ndarray], np.ndarray]
    invariant_components: tuple[int, ...] = ()
    state_names: tuple[str, ...] = ()
    defaults: Mapping[str, float] = field(default_factory=dict)
    default_pair: tuple[str, str] | None = None
    kinks: Callable[[Params], list[tuple[int, float]]] | None = None
    nonnegative: bool = False
    analytic: bool = True

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigurationError("dim must be positive")
        if not self.state_names:
            object.__setattr__(self, "state_names", tuple(f"x{i + 1}" for i in range(self.dim)))
        for i in self.invariant_components:
            if not 0 <= i < self.dim:
                raise ConfigurationError(f"invariant component {i} out of range")

    def kink_locations(self, params: Params) -> list[tuple[int, float]]:
        return [] if self.kinks is None else list(self.kinks(params))


@dataclass(frozen=True)
class ParamPoint:
    values: dict[str, float]
    active_pair: tuple[str, str]

    def __post_init__(self):
        a, b = self.active_pair
        if a == b:
            raise ConfigurationError("active parameters must be distinct")
        for name in self.active_pair:
            if name not in self.values:
                raise ConfigurationError(f"active parameter '{name}' has no value")

    @property
    def pair_values(self) -> tuple[float, float]:
        return self.values[self.active_pair[0]], self.values[self.active_pair[1]]

    def with_values(self, **updates: float) -> "ParamPoint":
        vals = dict(self.values)
        vals.update(updates)
        return ParamPoint(vals, self.active_pair)


def resolve_params(sys: SystemDef, p: ParamPoint | Params | None) -> dict[str, float]:
    """Merge ``p`` over the system defaults, rejecting unknown names."""
    values = p.values if isinstance(p, ParamPoint) else (p or {})
    unknown = [k for k in values if k not in sys.param_names]
    if unknown:
        raise ConfigurationError(f"unknown parameter(s) for system '{sys.name}': {', '.join(unknown)}")
    merged = {k: float(v) for k, v in sys.defaults.items()}
    merged.update({k: float(v) for k, v in values.items()})
    missing = [k for k in sys.param_names if k not in merged]
    if missing:
        raise ConfigurationError(f"missing parameter(s): {', '.join(missing)}")
    return merged


def _state(sys: SystemDef, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (sys.dim,):
        raise ConfigurationError(f"state has shape {x.shape}, expected ({sys.dim},)")
    return x


def eval_rhs(sys: SystemDef, x, p=None) -> np.ndarray:
    return np.asarray(sys.rhs(_state(sys, x), resolve_params(sys, p)), dtype=float)


def eval_jacobian(sys: SystemDef, x, p=None) -> np.ndarray:
    return np.asarray(sys.jac(_state(sys, x), resolve_params(sys, p)), dtype=float)


def eval_jac_params(sys: SystemDef, x, p, name: str) -> np.ndarray:
    if name not in sys.param_names:
        raise ConfigurationError(f"unknown parameter '{name}'")
    return np.asarray(sys.jac_params(_state(sys, x), resolve_params(sys, p), name), dtype=float)


def eval_hess_action(sys: SystemDef, x, p, q1, q2) -> np.ndarray:
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    return np.asarray(sys.hess_action(_state(sys, x), resolve_params(sys, p), q1, q2), dtype=float)


def jac_param_derivative(sys: SystemDef, x: np.ndarray, params: Params, name: str) -> np.ndarray:
    """Mixed derivative d(D_x f)/d(param) by central differences of ``jac``."""
    v = params[name]
    h = CBRT_EPS * max(1.0, abs(v))
    hi = dict(params)
    lo = dict(params)
    hi[name] = v + h
    lo[name] = v - h
    return (sys.jac(x, hi) - sys.jac(x, lo)) / (2.0 * h)


def _step(v: float) -> float:
    return CBRT_EPS * max(1.0, abs(v))


def numeric_system(
    name: str,
    rhs: Callable[[np.ndarray, Params], np.ndarray],
    dim: int,
    param_names: Sequence[str],
    *,
    defaults: Mapping[str, float] | None = None,
    invariant_components: Sequence[int] = (),
    state_names: Sequence[str] = (),
    default_pair: tuple[str, str] | None = None,
) -> SystemDef:
    """Wrap a bare right-hand side with central-difference derivatives.

    Intended for user-supplied systems; built-in models carry analytic
    derivatives.
    """

    def f(x, p):
        return np.asarray(rhs(x, p), dtype=float)

    def jac(x, p):
        J = np.empty((dim, dim))
        for j in range(dim):
            h = _step(x[j])
            e = np.zeros(dim)
            e[j] = h
            J[:, j] = (f(x + e, p) - f(x - e, p)) / (2.0 * h)
        return J

    def jac_params(x, p, pname):
        v = p[pname]
        h = _step(v)
        hi = dict(p)
        lo = dict(p)
        hi[pname] = v + h
        lo[pname] = v - h
        return (f(x, hi) - f(x, lo)) / (2.0 * h)

    def hess_action(x, p, q1, q2):
        # symmetric by construction: q1 + q2 commutes, q1 - q2 only flips sign
        h = EPS ** 0.25 * max(1.0, float(np.max(np.abs(x))))
        s = q1 + q2
        d = q1 - q2
        return ((f(x + h * s, p) + f(x - h * s, p)) - (f(x + h * d, p) + f(x - h * d, p))) / (4.0 * h * h)

    return SystemDef(
        name=name,
        dim=dim,
        param_names=tuple(param_names),
        rhs=f,
        jac=jac,
        jac_params=jac_params,
        hess_action=hess_action,
        invariant_components=tuple(invariant_components),
        state_names=tuple(state_names),
        defaults=dict(defaults or {}),
        default_pair=default_pair,
        analytic=False,
    )


@dataclass
class FDReport:
    errors: dict[str, float]
    tol: float

    @property
    def passed(self) -> bool:
        return all(e <= self.tol for e in self.errors.values())


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b) / (1.0 + np.abs(a)))) if a.size else 0.0


def fd_check(sys: SystemDef, x, p=None, tol: float = 1e-5, rng: np.random.Generator | None = None) -> FDReport:
    """Compare analytic derivatives against central differences of ``rhs``.

    Raises :class:`DerivativeMismatchError` naming the first failing block
    ("jac", "jac_params" or "hess_action") and :class:`KinkError` if any
    stencil would straddle a kink of the right-hand side.
    """
    x = _state(sys, x)
    params = resolve_params(sys, p)
    rng = np.random.default_rng(0) if rng is None else rng
    n = sys.dim
    q1 = rng.standard_normal(n)
    q2 = rng.standard_normal(n)

    hs = np.array([_step(v) for v in x])
    reach = hs + CBRT_EPS * max(1.0, float(np.max(np.abs(x)))) * (np.abs(q1) + np.abs(q2))
    for comp, loc in sys.kink_locations(params):
        if abs(x[comp] - loc) <= 2.0 * reach[comp]:
            raise KinkError(comp, loc)

    errors: dict[str, float] = {}

    J = sys.jac(x, params)
    J_fd = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = hs[j]
        J_fd[:, j] = (sys.rhs(x + e, params) - sys.rhs(x - e, params)) / (2.0 * hs[j])
    errors["jac"] = _rel(np.asarray(J), J_fd)

    err = 0.0
    for name in sys.param_names:
        v = params[name]
        h = _step(v)
        hi = dict(params)
        lo = dict(params)
        hi[name] = v + h
        lo[name] = v - h
        # a parameter step can move the kink across x
        for (comp, k_lo), (_, k_hi) in zip(sys.kink_locations(lo), sys.kink_locations(hi)):
            if (x[comp] - k_lo) * (x[comp] - k_hi) <= 0:
                raise KinkError(comp, dict(sys.kink_locations(params)).get(comp, k_lo))
        fd = (sys.rhs(x, hi) - sys.rhs(x, lo)) / (2.0 * h)
        err = max(err, _rel(np.asarray(sys.jac_params(x, params, name)), fd))
    errors["jac_params"] = err

    h = CBRT_EPS * max(1.0, float(np.max(np.abs(x))))
    B = np.asarray(sys.hess_action(x, params, q1, q2))
    B_fd = (sys.jac(x + h * q2, params) - sys.jac(x - h * q2, params)) @ q1 / (2.0 * h)
    errors["hess_action"] = _rel(B, B_fd)

    report = FDReport(errors, tol)
    for block in ("jac", "jac_params", "hess_action"):
        if errors[block] > tol:
            raise DerivativeMismatchError(block, errors[block], tol)
    return report


def fd_sweep(sys: SystemDef, n_points: int = 100, seed: int = 0, tol: float = 1e-5,
             state_box: Sequence[tuple[float, float]] | None = None,
             param_spread: float = 0.1, max_kink_skips: int = 1000) -> dict:
    """:func:`fd_check` at ``n_points`` random states and parameter values.

    States are uniform in ``state_box`` (default ``[0.01, 20]`` per component
    for nonnegative systems, ``[-2, 2]`` otherwise). Each parameter is drawn
    within ``param_spread`` relative to its default (absolute for zero
    defaults). Points whose stencil straddles a kink are redrawn.
    Returns the worst error per derivative block.
    """
    rng = np.random.default_rng(seed)
    if state_box is None:
        state_box = [(0.01, 20.0) if sys.nonnegative else (-2.0, 2.0)] * sys.dim
    lo = np.array([b[0] for b in state_box], dtype=float)
    hi = np.array([b[1] for b in state_box], dtype=float)
    if lo.shape != (sys.dim,):
        raise ConfigurationError(f"state box has {lo.size} entries, system has dimension {sys.dim}")
    worst = {"jac": 0.0, "jac_params": 0.0, "hess_action": 0.0}
    skips = 0
    done = 0
    while done < n_points:
        x = rng.uniform(lo, hi)
        p = {}
        for name in sys.param_names:
            v = float(sys.defaults.get(name, 0.0))
            p[name] = v + (param_spread * abs(v) if v != 0.0 else param_spread) * rng.uniform(-1.0, 1.0)
        try:
            rep = fd_check(sys, x, p, tol, rng)
        except KinkError:
            skips += 1
            if skips > max_kink_skips:
                raise
            continue
        for k, e in rep.errors.items():
            worst[k] = max(worst[k], e)
        done += 1
    return {"system": sys.name, "points": done, "kink_skips": skips, "tol": tol, "max_errors": worst}

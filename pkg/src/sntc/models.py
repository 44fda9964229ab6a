"""Built-in systems: the stressed nutrient-prey-predator chemostat and normal forms.

Every system here carries analytic first and second derivatives. State
indices are 0-based; the chemostat state is ``(N, R, P)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Mapping

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, DomainError, InvalidConstantsError
from .system import SystemDef

__all__ = [
    "KooiParams",
    "NormalFormId",
    "kooi_maintenance_rate",
    "kooi_kink",
    "kooi_system",
    "kooi_boundary_equilibria",
    "kooi_coexistence_equilibrium",
    "sntc_minimal_constants",
    "cusp_system",
    "sntc_single_zero_system",
    "sntc_minimal_system",
    "sntc2_system",
    "bogdanov_takens_system",
    "normal_form",
    "oracle_fold_curve",
    "oracle_fold_state",
    "linear_system",
    "linear_oscillator",
    "BUILTIN_SYSTEMS",
    "get_system",
]


# --------------------------------------------------------------------------
# stressed chemostat
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class KooiParams:
    """Parameters of the reduced (toxicant at equilibrium) chemostat.

    Units: time in hours, densities in mg/dm^3, toxicant in ug/dm^3.
    ``mu_RP`` and ``c_r`` default to the double-zero setting (0.7, 9).
    """

    mu_NR: float = 0.5
    I_NR: float = 1.25
    kappa_NR: float = 8.0
    m_R0: float = 0.025
    c_RM0: float = 0.1
    c_RM: float = 0.5
    BCF: float = 1.0
    mu_RP: float = 0.7
    I_RP: float = 0.333
    kappa_RP: float = 9.0
    m_P0: float = 0.01
    c_r: float = 9.0
    N_r: float = 24.6
    D: float = 0.142

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ConfigurationError(f"KooiParams.{f.name} must be a positive real, got {v!r}")

    def as_dict(self) -> dict[str, float]:
        return {k: float(v) for k, v in asdict(self).items()}

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> "KooiParams":
        names = {f.name for f in fields(cls)}
        unknown = set(values) - names
        if unknown:
            raise ConfigurationError(f"unknown chemostat parameter(s): {', '.join(sorted(unknown))}")
        return cls(**{k: float(v) for k, v in values.items()})


KOOI_PARAM_NAMES = tuple(f.name for f in fields(KooiParams))


def _ramp(u: float, delta: float | None) -> tuple[float, float, float]:
    """max(u, 0) or its smoothed version, with first and second derivative."""
    if delta is None:
        return (u, 1.0, 0.0) if u > 0 else (0.0, 0.0, 0.0)
    r = math.hypot(u, delta)
    return 0.5 * (u + r), 0.5 * (1.0 + u / r), 0.5 * delta * delta / r**3


def _mR_terms(R: float, p: Mapping[str, float], delta: float | None):
    """m_R and its R-derivatives plus the ramp pieces needed for parameter sensitivities."""
    bcf, cr, m0, cRM = p["BCF"], p["c_r"], p["m_R0"], p["c_RM"]
    w = 1.0 + bcf * R
    u = bcf * cr / w - p["c_RM0"]
    du = -bcf * bcf * cr / w**2
    d2u = 2.0 * bcf**3 * cr / w**3
    s, ds, d2s = _ramp(u, delta)
    k = m0 / cRM
    m = m0 + k * s
    dm = k * ds * du
    d2m = k * (d2s * du * du + ds * d2u)
    return m, dm, d2m, s, ds, w


def kooi_maintenance_rate(R: float, kp: KooiParams | Mapping[str, float] | None = None,
                          delta: float | None = None) -> float:
    """Prey maintenance rate m_R(R) with the toxicant eliminated (1/h)."""
    if R < 0:
        raise DomainError(f"prey density must be nonnegative, got {R}")
    p = _as_param_dict(kp)
    return _mR_terms(float(R), p, delta)[0]


def kooi_kink(kp: KooiParams | Mapping[str, float] | None = None) -> float | None:
    """Prey density above which the toxicant effect switches off, or None."""
    p = _as_param_dict(kp)
    r = (p["BCF"] * p["c_r"] / p["c_RM0"] - 1.0) / p["BCF"]
    return r if r > 0 else None


def _as_param_dict(kp) -> dict[str, float]:
    if kp is None:
        return KooiParams().as_dict()
    if isinstance(kp, KooiParams):
        return kp.as_dict()
    base = KooiParams().as_dict()
    base.update({k: float(v) for k, v in kp.items()})
    return base


def kooi_system(kp: KooiParams | None = None, smoothing: float | None = None) -> SystemDef:
    """Nutrient N, prey R, predator P chemostat with toxicant-dependent prey mortality.

    All fourteen constants are parameters of the returned system (defaults
    from ``kp``); the active pair defaults to ``(N_r, D)``. With
    ``smoothing=delta`` the ``max(u, 0)`` in the maintenance rate is replaced
    by ``(u + sqrt(u^2 + delta^2)) / 2``.
    """
    kp = KooiParams() if kp is None else kp
    if smoothing is not None and smoothing <= 0:
        raise ConfigurationError("smoothing width must be positive")
    delta = smoothing

    def parts(x, p):
        N, R, P = float(x[0]), float(x[1]), float(x[2])
        kN, kP = p["kappa_NR"], p["kappa_RP"]
        g = N / (kN + N)
        dg = kN / (kN + N) ** 2
        d2g = -2.0 * kN / (kN + N) ** 3
        h = R / (kP + R)
        dh = kP / (kP + R) ** 2
        d2h = -2.0 * kP / (kP + R) ** 3
        return N, R, P, g, dg, d2g, h, dh, d2h

    def rhs(x, p):
        N, R, P, g, _, _, h, _, _ = parts(x, p)
        mR = _mR_terms(R, p, delta)[0]
        D = p["D"]
        return np.array([
            (p["N_r"] - N) * D - p["I_NR"] * g * R,
            (p["mu_NR"] * g - (D + mR)) * R - p["I_RP"] * h * P,
            (p["mu_RP"] * h - (D + p["m_P0"])) * P,
        ])

    def jac(x, p):
        N, R, P, g, dg, _, h, dh, _ = parts(x, p)
        mR, dmR, _, _, _, _ = _mR_terms(R, p, delta)
        D = p["D"]
        return np.array([
            [-D - p["I_NR"] * dg * R, -p["I_NR"] * g, 0.0],
            [p["mu_NR"] * dg * R, p["mu_NR"] * g - D - mR - dmR * R - p["I_RP"] * dh * P, -p["I_RP"] * h],
            [0.0, p["mu_RP"] * dh * P, p["mu_RP"] * h - D - p["m_P0"]],
        ])

    def jac_params(x, p, name):
        N, R, P, g, _, _, h, _, _ = parts(x, p)
        out = np.zeros(3)
        if name == "N_r":
            out[0] = p["D"]
        elif name == "D":
            out[:] = (p["N_r"] - N, -R, -P)
        elif name == "I_NR":
            out[0] = -g * R
        elif name == "kappa_NR":
            dgk = -N / (p["kappa_NR"] + N) ** 2
            out[0] = -p["I_NR"] * dgk * R
            out[1] = p["mu_NR"] * dgk * R
        elif name == "mu_NR":
            out[1] = g * R
        elif name == "I_RP":
            out[1] = -h * P
        elif name == "kappa_RP":
            dhk = -R / (p["kappa_RP"] + R) ** 2
            out[1] = -p["I_RP"] * dhk * P
            out[2] = p["mu_RP"] * dhk * P
        elif name == "mu_RP":
            out[2] = h * P
        elif name == "m_P0":
            out[2] = -P
        elif name in ("m_R0", "c_RM", "c_RM0", "c_r", "BCF"):
            _, _, _, s, ds, w = _mR_terms(R, p, delta)
            k = p["m_R0"] / p["c_RM"]
            dm = {
                "m_R0": 1.0 + s / p["c_RM"],
                "c_RM": -p["m_R0"] * s / p["c_RM"] ** 2,
                "c_RM0": -k * ds,
                "c_r": k * ds * p["BCF"] / w,
                "BCF": k * ds * p["c_r"] / w**2,
            }[name]
            out[1] = -dm * R
        else:
            raise ConfigurationError(f"unknown parameter '{name}'")
        return out

    def hess_action(x, p, q1, q2):
        N, R, P, g, dg, d2g, h, dh, d2h = parts(x, p)
        _, dmR, d2mR, _, _, _ = _mR_terms(R, p, delta)
        a1, b1, c1 = q1
        a2, b2, c2 = q2
        nr = a1 * b2 + b1 * a2
        rp = b1 * c2 + c1 * b2
        H0 = -p["I_NR"] * d2g * R * (a1 * a2) - p["I_NR"] * dg * nr
        H1 = (p["mu_NR"] * d2g * R * (a1 * a2) + p["mu_NR"] * dg * nr
              + (-2.0 * dmR - d2mR * R - p["I_RP"] * d2h * P) * (b1 * b2) - p["I_RP"] * dh * rp)
        H2 = p["mu_RP"] * d2h * P * (b1 * b2) + p["mu_RP"] * dh * rp
        return np.array([H0, H1, H2])

    def kinks(p):
        if delta is not None:
            return []
        r = kooi_kink(p)
        return [] if r is None else [(1, r)]

    return SystemDef(
        name="kooi",
        dim=3,
        param_names=KOOI_PARAM_NAMES,
        rhs=rhs,
        jac=jac,
        jac_params=jac_params,
        hess_action=hess_action,
        invariant_components=(1, 2),
        state_names=("N", "R", "P"),
        defaults=kp.as_dict(),
        default_pair=("N_r", "D"),
        kinks=kinks,
        nonnegative=True,
    )


def kooi_boundary_equilibria(kp: KooiParams | Mapping[str, float] | None = None,
                             r_max: float = 200.0, samples: int = 20001) -> list[np.ndarray]:
    """Predator-free equilibria ``(N, R, 0)`` with ``R > 0``, ordered by R.

    On such an equilibrium ``mu_NR g(N) = D + m_R(R)`` fixes N as a function
    of R, and the nutrient balance then reads ``N_r = N(R) + I_NR g R / D``.
    Roots of that scalar equation are bracketed on a grid and refined.
    """
    p = _as_param_dict(kp)
    D = p["D"]

    def n_of_r(R):
        gq = (D + _mR_terms(R, p, None)[0]) / p["mu_NR"]
        if gq >= 1.0:
            return None, gq
        return p["kappa_NR"] * gq / (1.0 - gq), gq

    def resid(R):
        N, gq = n_of_r(R)
        return N + p["I_NR"] * gq * R / D - p["N_r"]

    grid = np.linspace(r_max / samples, r_max, samples)
    vals = []
    for R in grid:
        N, gq = n_of_r(R)
        vals.append(np.nan if N is None else resid(R))
    vals = np.array(vals)
    out = []
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if np.isfinite(a) and np.isfinite(b) and a * b < 0:
            R = brentq(resid, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-15)
            out.append(np.array([n_of_r(R)[0], R, 0.0]))
    return out


def kooi_coexistence_equilibrium(kp: KooiParams | Mapping[str, float] | None = None) -> np.ndarray | None:
    """Interior equilibrium with ``P != 0``; the predator balance fixes R.

    Returns None if the predator cannot balance its losses. The returned P
    may be negative (equilibrium outside the positive orthant).
    """
    p = _as_param_dict(kp)
    D = p["D"]
    loss = D + p["m_P0"]
    if p["mu_RP"] <= loss:
        return None
    R = p["kappa_RP"] * loss / (p["mu_RP"] - loss)
    # nutrient balance is monotone in N on [0, N_r]
    N = brentq(lambda N: (p["N_r"] - N) * D - p["I_NR"] * N / (p["kappa_NR"] + N) * R,
               0.0, p["N_r"], xtol=1e-14, rtol=1e-15)
    g = N / (p["kappa_NR"] + N)
    mR = _mR_terms(R, p, None)[0]
    P = (p["mu_NR"] * g - D - mR) * (p["kappa_RP"] + R) / p["I_RP"]
    return np.array([N, R, P])


# --------------------------------------------------------------------------
# normal forms
# --------------------------------------------------------------------------

NORMAL_FORM_KINDS = ("cusp", "sntc-single-zero", "sntc-minimal", "sntc2", "bogdanov-takens")


@dataclass(frozen=True)
class NormalFormId:
    """A normal form plus its fixed constants.

    ``sntc-minimal`` takes ``eps`` and ``k1`` (k2, k3 derived), ``sntc2``
    takes ``mu1`` and ``mu2``, ``bogdanov-takens`` takes ``a2`` and ``b2``.
    """

    kind: str
    constants: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in NORMAL_FORM_KINDS:
            raise ConfigurationError(f"unknown normal form '{self.kind}'")
        defaults = {
            "sntc-minimal": {"eps": 1.0, "k1": 1.0},
            "sntc2": {"mu1": -1.0, "mu2": 1.0},
            "bogdanov-takens": {"a2": 1.0, "b2": 1.0},
        }.get(self.kind, {})
        unknown = set(self.constants) - set(defaults)
        if unknown:
            raise ConfigurationError(f"unknown constant(s) for {self.kind}: {', '.join(sorted(unknown))}")
        merged = dict(defaults)
        merged.update({k: float(v) for k, v in self.constants.items()})
        object.__setattr__(self, "constants", merged)
        if self.kind == "sntc-minimal":
            sntc_minimal_constants(merged["eps"], merged["k1"])
        if self.kind == "sntc2" and (merged["mu1"] == 0 or merged["mu2"] == 0):
            raise InvalidConstantsError("sntc2 requires mu1, mu2 != 0")

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self.constants.items()))))


def sntc_minimal_constants(eps: float, k1: float) -> tuple[float, float]:
    """Solve ``2 eps k1^2 - k1 k2 = 1`` and ``3 k1 k3 = 1`` for (k2, k3)."""
    if k1 == 0:
        raise InvalidConstantsError("k1 must be nonzero")
    k2 = (2.0 * eps * k1 * k1 - 1.0) / k1
    k3 = 1.0 / (3.0 * k1)
    if k2 == 0 or k3 == 0:
        raise InvalidConstantsError(f"derived constants must be nonzero (k2={k2}, k3={k3})")
    return k2, k3


_AB = ("a", "b")


def cusp_system() -> SystemDef:
    """x' = a + b x + x^3."""
    return SystemDef(
        name="cusp",
        dim=1,
        param_names=_AB,
        rhs=lambda x, p: np.array([p["a"] + p["b"] * x[0] + x[0] ** 3]),
        jac=lambda x, p: np.array([[p["b"] + 3.0 * x[0] ** 2]]),
        jac_params=lambda x, p, n: np.array([1.0]) if n == "a" else np.array([x[0]]),
        hess_action=lambda x, p, q1, q2: np.array([6.0 * x[0] * (q1[0] * q2[0])]),
        defaults={"a": 0.0, "b": 0.0},
        default_pair=_AB,
    )


def sntc_single_zero_system() -> SystemDef:
    """x' = a x + b x^2 + x^3 with the invariant point x = 0."""
    return SystemDef(
        name="sntc-single-zero",
        dim=1,
        param_names=_AB,
        rhs=lambda x, p: np.array([p["a"] * x[0] + p["b"] * x[0] ** 2 + x[0] ** 3]),
        jac=lambda x, p: np.array([[p["a"] + 2.0 * p["b"] * x[0] + 3.0 * x[0] ** 2]]),
        jac_params=lambda x, p, n: np.array([x[0]]) if n == "a" else np.array([x[0] ** 2]),
        hess_action=lambda x, p, q1, q2: np.array([(2.0 * p["b"] + 6.0 * x[0]) * (q1[0] * q2[0])]),
        invariant_components=(0,),
        defaults={"a": 0.0, "b": 0.0},
        default_pair=_AB,
    )


def sntc_minimal_system(eps: float = 1.0, k1: float = 1.0) -> SystemDef:
    """x' = y,  y' = a x + k1 b y + b x^2 + k2 x y + x^2 y + eps x^3 + k3 x^4."""
    k2, k3 = sntc_minimal_constants(eps, k1)

    def rhs(x, p):
        X, Y = x
        a, b = p["a"], p["b"]
        return np.array([Y, a * X + k1 * b * Y + b * X**2 + k2 * X * Y + X**2 * Y + eps * X**3 + k3 * X**4])

    def jac(x, p):
        X, Y = x
        a, b = p["a"], p["b"]
        return np.array([
            [0.0, 1.0],
            [a + 2 * b * X + k2 * Y + 2 * X * Y + 3 * eps * X**2 + 4 * k3 * X**3, k1 * b + k2 * X + X**2],
        ])

    def jac_params(x, p, n):
        X, Y = x
        return np.array([0.0, X]) if n == "a" else np.array([0.0, k1 * Y + X**2])

    def hess_action(x, p, q1, q2):
        X, Y = x
        hxx = 2 * p["b"] + 2 * Y + 6 * eps * X + 12 * k3 * X**2
        hxy = k2 + 2 * X
        return np.array([0.0, hxx * (q1[0] * q2[0]) + hxy * (q1[0] * q2[1] + q1[1] * q2[0])])

    return SystemDef(
        name="sntc-minimal", dim=2, param_names=_AB, rhs=rhs, jac=jac, jac_params=jac_params,
        hess_action=hess_action, state_names=("x", "y"), defaults={"a": 0.0, "b": 0.0}, default_pair=_AB,
    )


def sntc2_system(mu1: float = -1.0, mu2: float = 1.0) -> SystemDef:
    """x' = a + y + mu1 x^2,  y' = b y + mu2 x y, with invariant line y = 0."""
    if mu1 == 0 or mu2 == 0:
        raise InvalidConstantsError("sntc2 requires mu1, mu2 != 0")

    def rhs(x, p):
        X, Y = x
        return np.array([p["a"] + Y + mu1 * X**2, p["b"] * Y + mu2 * X * Y])

    def jac(x, p):
        X, Y = x
        return np.array([[2 * mu1 * X, 1.0], [mu2 * Y, p["b"] + mu2 * X]])

    def jac_params(x, p, n):
        return np.array([1.0, 0.0]) if n == "a" else np.array([0.0, x[1]])

    def hess_action(x, p, q1, q2):
        return np.array([2 * mu1 * (q1[0] * q2[0]), mu2 * (q1[0] * q2[1] + q1[1] * q2[0])])

    return SystemDef(
        name="sntc2", dim=2, param_names=_AB, rhs=rhs, jac=jac, jac_params=jac_params,
        hess_action=hess_action, invariant_components=(1,), state_names=("x", "y"),
        defaults={"a": 0.0, "b": 0.0}, default_pair=_AB,
    )


def bogdanov_takens_system(a2: float = 1.0, b2: float = 1.0) -> SystemDef:
    """x' = y,  y' = a + b x + a2 x^2 + b2 x y  (unfolding parameters a, b)."""

    def rhs(x, p):
        X, Y = x
        return np.array([Y, p["a"] + p["b"] * X + a2 * X**2 + b2 * X * Y])

    def jac(x, p):
        X, Y = x
        return np.array([[0.0, 1.0], [p["b"] + 2 * a2 * X + b2 * Y, b2 * X]])

    def jac_params(x, p, n):
        return np.array([0.0, 1.0]) if n == "a" else np.array([0.0, x[0]])

    def hess_action(x, p, q1, q2):
        return np.array([0.0, 2 * a2 * (q1[0] * q2[0]) + b2 * (q1[0] * q2[1] + q1[1] * q2[0])])

    return SystemDef(
        name="bogdanov-takens", dim=2, param_names=_AB, rhs=rhs, jac=jac, jac_params=jac_params,
        hess_action=hess_action, state_names=("x", "y"), defaults={"a": 0.0, "b": 0.0}, default_pair=_AB,
    )


def normal_form(nf: NormalFormId | str) -> SystemDef:
    nf = NormalFormId(nf) if isinstance(nf, str) else nf
    c = nf.constants
    if nf.kind == "cusp":
        return cusp_system()
    if nf.kind == "sntc-single-zero":
        return sntc_single_zero_system()
    if nf.kind == "sntc-minimal":
        return sntc_minimal_system(c["eps"], c["k1"])
    if nf.kind == "sntc2":
        return sntc2_system(c["mu1"], c["mu2"])
    return bogdanov_takens_system(c["a2"], c["b2"])


def oracle_fold_curve(nf: NormalFormId | str, b: float, branch: int = 1) -> float:
    """Closed-form saddle-node curve ``a(b)`` of a normal form.

    ``branch`` selects the sign of the cusp's two fold branches
    (``a = +-2 (-b/3)^(3/2)``); it is ignored for the other forms.
    """
    nf = NormalFormId(nf) if isinstance(nf, str) else nf
    if nf.kind == "cusp":
        if b > 0:
            raise DomainError("cusp fold curve is real only for b <= 0")
        return math.copysign(1.0, branch) * 2.0 * (-b / 3.0) ** 1.5
    if nf.kind == "sntc-single-zero":
        return b * b / 4.0
    if nf.kind == "sntc-minimal":
        eps = nf.constants["eps"]
        _, k3 = sntc_minimal_constants(eps, nf.constants["k1"])
        if abs(abs(eps) - 1.0) > 1e-15:
            # the closed form assumes eps^2 = 1
            raise DomainError("closed-form fold curve of the minimal model needs |eps| = 1")
        disc = 1.0 - 3.0 * k3 * b
        if disc < 0:
            raise DomainError("b outside the fold curve's domain (1 - 3 k3 b < 0)")
        return eps * (2.0 * disc**1.5 - 2.0 + 9.0 * k3 * b) / (27.0 * k3 * k3)
    if nf.kind == "sntc2":
        return 0.0
    return b * b / (4.0 * nf.constants["a2"])


def oracle_fold_state(nf: NormalFormId | str, b: float, branch: int = 1) -> np.ndarray:
    """Equilibrium at the fold point matching :func:`oracle_fold_curve`."""
    nf = NormalFormId(nf) if isinstance(nf, str) else nf
    if nf.kind == "cusp":
        if b > 0:
            raise DomainError("cusp fold curve is real only for b <= 0")
        return np.array([math.copysign(1.0, branch) * math.sqrt(-b / 3.0)])
    if nf.kind == "sntc-single-zero":
        return np.array([-b / 2.0])
    if nf.kind == "sntc-minimal":
        eps = nf.constants["eps"]
        _, k3 = sntc_minimal_constants(eps, nf.constants["k1"])
        oracle_fold_curve(nf, b)
        return np.array([eps * (math.sqrt(1.0 - 3.0 * k3 * b) - 1.0) / (3.0 * k3), 0.0])
    if nf.kind == "sntc2":
        return np.zeros(2)
    return np.array([-b / (2.0 * nf.constants["a2"]), 0.0])


# --------------------------------------------------------------------------
# small utility systems
# --------------------------------------------------------------------------

def linear_system(A, name: str = "linear") -> SystemDef:
    """x' = A x; carries two inert parameters so it can be continued."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    return SystemDef(
        name=name,
        dim=n,
        param_names=_AB,
        rhs=lambda x, p: A @ x,
        jac=lambda x, p: A.copy(),
        jac_params=lambda x, p, nm: np.zeros(n),
        hess_action=lambda x, p, q1, q2: np.zeros(n),
        defaults={"a": 0.0, "b": 0.0},
        default_pair=_AB,
    )


def linear_oscillator(omega0: float = 1.0) -> SystemDef:
    """x' = l1 x - w y,  y' = w x + l1 y  with  w = omega0 (1 + l2^2)."""

    def w(p):
        return omega0 * (1.0 + p["lam2"] ** 2)

    def rhs(x, p):
        return np.array([p["lam1"] * x[0] - w(p) * x[1], w(p) * x[0] + p["lam1"] * x[1]])

    def jac(x, p):
        return np.array([[p["lam1"], -w(p)], [w(p), p["lam1"]]])

    def jac_params(x, p, n):
        if n == "lam1":
            return x.copy()
        dw = 2.0 * omega0 * p["lam2"]
        return np.array([-dw * x[1], dw * x[0]])

    return SystemDef(
        name="linear-oscillator", dim=2, param_names=("lam1", "lam2"), rhs=rhs, jac=jac,
        jac_params=jac_params, hess_action=lambda x, p, q1, q2: np.zeros(2),
        defaults={"lam1": 0.0, "lam2": 0.0}, default_pair=("lam1", "lam2"),
    )


BUILTIN_SYSTEMS: dict[str, Callable[..., SystemDef]] = {
    "kooi": lambda **kw: kooi_system(KooiParams.from_mapping(kw) if kw else None),
    "cusp": lambda **kw: cusp_system(**kw),
    "sntc-single-zero": lambda **kw: sntc_single_zero_system(**kw),
    "sntc-minimal": lambda **kw: sntc_minimal_system(**kw),
    "sntc2": lambda **kw: sntc2_system(**kw),
    "bogdanov-takens": lambda **kw: bogdanov_takens_system(**kw),
    "linear-oscillator": lambda **kw: linear_oscillator(**kw),
}


def get_system(name: str, **constants) -> SystemDef:
    """Build a registered system; ``constants`` are construction-time values."""
    try:
        factory = BUILTIN_SYSTEMS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown system '{name}' (known: {', '.join(sorted(BUILTIN_SYSTEMS))})"
        ) from None
    try:
        return factory(**constants)
    except TypeError as exc:
        raise ConfigurationError(f"bad constants for system '{name}': {exc}") from None

"""Pseudo-arclength continuation of equilibria and of fold, transcritical and Hopf curves.

Every curve is traced through an :class:`ExtendedSystem` whose residual has
one equation fewer than unknowns. Components of the state that lie on an
invariant hyperplane at the seed are *pinned*: they are removed from the
unknowns and held at zero, which keeps boundary branches on their plane and
turns the transversal eigenvalue into a plain diagonal entry of the Jacobian.

Test functions are evaluated at every accepted point; sign changes between
consecutive points are refined by :func:`~sntc.testfunctions.localize_test_zero`
and stored as :class:`~sntc.testfunctions.SpecialPoint` objects.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import numpy as np

from .bordered import BorderVectors, bordered_factors, curve_tangent, initial_borders, solve_bordered
from .errors import (
    BorderDegeneracyError,
    ConfigurationError,
    DegenerateTangentError,
    DomainError,
    LocalizationError,
    AmbiguousPointError,
    PreconditionError,
    StepFailure,
    TangentDegeneracyError,
)
from .system import SystemDef, jac_param_derivative, resolve_params
from .testfunctions import (
    FOLD,
    HOPF,
    TC_HOPF_CANDIDATE,
    TRANSCRITICAL,
    SpecialPoint,
    alpha_sntc,
    beta_cusp,
    classify_codim2,
    localize_test_zero,
    normalized_tests,
)

__all__ = [
    "EQUILIBRIUM",
    "ContinuationSettings",
    "BranchPoint",
    "Curve",
    "ExtendedSystem",
    "EquilibriumSystem",
    "FoldSystem",
    "TranscriticalSystem",
    "HopfSystem",
    "newton_correct",
    "continue_equilibrium",
    "continue_fold_curve",
    "continue_tc_curve",
    "continue_hopf_curve",
    "fold_seed",
    "hopf_seed",
    "tc_seed",
    "defining_residual",
    "verify_point",
]

log = logging.getLogger(__name__)

EQUILIBRIUM = "Equilibrium"

# step failures the driver recovers from by shrinking the step
_RECOVERABLE = (StepFailure, TangentDegeneracyError, BorderDegeneracyError,
                DegenerateTangentError, np.linalg.LinAlgError, DomainError, FloatingPointError)


@dataclass
class ContinuationSettings:
    h0: float = 0.01
    h_min: float = 1e-7
    h_max: float = 0.1
    newton_tol: float = 1e-10
    newton_max_iter: int = 10
    max_points: int = 2000
    grow: float = 1.3
    shrink: float = 0.5
    grow_iters: int = 3
    max_angle: float = 0.3
    localize_tol: float = 1e-10
    localize_width: float = 1e-12
    tol_zero: float = 1e-6
    omega_min: float = 1e-6

    def __post_init__(self):
        if not (0 < self.h_min <= self.h0 <= self.h_max):
            raise ConfigurationError("step sizes must satisfy 0 < h_min <= h0 <= h_max")
        if self.newton_tol <= 0 or self.newton_max_iter < 1 or self.max_points < 2:
            raise ConfigurationError("invalid Newton or point-count settings")
        if not (self.grow >= 1.0 and 0.0 < self.shrink < 1.0):
            raise ConfigurationError("grow must be >= 1 and shrink in (0, 1)")


@dataclass
class BranchPoint:
    """One accepted point of a curve."""

    x: np.ndarray
    params: dict[str, float]
    active: tuple[str, ...]
    tangent: np.ndarray
    eigenvalues: np.ndarray
    testvals: dict[str, float]
    kind_flags: dict[str, Any]
    z: np.ndarray
    aux: dict[str, Any] = field(default_factory=dict)
    residual: float = 0.0

    @property
    def location(self) -> tuple[float, ...]:
        return tuple(self.params[k] for k in self.active)

    @property
    def max_re_eig(self) -> float:
        return float(np.max(self.eigenvalues.real))


@dataclass
class Curve:
    kind: str
    system: SystemDef
    active: tuple[str, ...]
    params: dict[str, float]
    points: list[BranchPoint] = field(default_factory=list)
    specials: list[SpecialPoint] = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.points)

    def column(self, name: str) -> np.ndarray:
        """Parameter, state-name or test-value column across all points."""
        if name in self.active:
            return np.array([pt.params[name] for pt in self.points])
        if name in self.system.state_names:
            i = self.system.state_names.index(name)
            return np.array([pt.x[i] for pt in self.points])
        return np.array([pt.testvals.get(name, np.nan) for pt in self.points])

    def specials_of(self, kind: str) -> list[SpecialPoint]:
        return [sp for sp in self.specials if sp.kind == kind]


# --------------------------------------------------------------------------
# extended systems
# --------------------------------------------------------------------------

class ExtendedSystem:
    """Residual map ``F: R^{m+1} -> R^m`` whose zero set is the traced curve."""

    kind = ""

    def __init__(self, sys: SystemDef, params: Mapping[str, float], active: Sequence[str],
                 pinned: Sequence[int] = ()):
        self.sys = sys
        self.base = dict(params)
        self.active = tuple(active)
        for name in self.active:
            if name not in sys.param_names:
                raise ConfigurationError(f"unknown parameter '{name}' for system '{sys.name}'")
        self.pinned = tuple(sorted(set(int(k) for k in pinned)))
        for k in self.pinned:
            if k not in sys.invariant_components:
                raise ConfigurationError(f"component {k} is not an invariant component of '{sys.name}'")
        self.free = np.array([i for i in range(sys.dim) if i not in self.pinned], dtype=int)
        self.nf = int(self.free.size)

    def params_of(self, z) -> dict[str, float]:
        p = dict(self.base)
        k = len(self.active)
        for i, name in enumerate(self.active):
            p[name] = float(z[len(z) - k + i])
        return p

    def state_of(self, z) -> np.ndarray:
        x = np.zeros(self.sys.dim)
        x[self.free] = z[: self.nf]
        return x

    def _fp(self, x, p):
        return np.column_stack([self.sys.jac_params(x, p, name)[self.free] for name in self.active])

    def residual(self, z) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, z) -> np.ndarray:
        raise NotImplementedError

    def after_accept(self, z, t):
        """Update phase/normalization references; returns the possibly rescaled (z, t)."""
        return z, t

    def aux(self, z) -> dict[str, Any]:
        return {}

    def clone(self) -> "ExtendedSystem":
        raise NotImplementedError


class EquilibriumSystem(ExtendedSystem):
    kind = EQUILIBRIUM

    def __init__(self, sys, params, free_param: str, pinned=()):
        super().__init__(sys, params, (free_param,), pinned)

    def pack(self, x, params) -> np.ndarray:
        return np.append(np.asarray(x, dtype=float)[self.free], params[self.active[0]])

    def residual(self, z):
        x, p = self.state_of(z), self.params_of(z)
        return self.sys.rhs(x, p)[self.free]

    def jacobian(self, z):
        x, p = self.state_of(z), self.params_of(z)
        J = self.sys.jac(x, p)[np.ix_(self.free, self.free)]
        return np.hstack([J, self._fp(x, p)])

    def clone(self):
        return EquilibriumSystem(self.sys, self.base, self.active[0], self.pinned)


class FoldSystem(ExtendedSystem):
    """``f = 0``, ``J q = 0``, ``q_ref . q = 1`` in ``(x, q, l1, l2)``."""

    kind = FOLD

    def __init__(self, sys, params, pair, q_ref, pinned=()):
        super().__init__(sys, params, pair, pinned)
        q_ref = np.asarray(q_ref, dtype=float)
        if q_ref.size == sys.dim:
            q_ref = q_ref[self.free]
        self.q_ref = q_ref / np.linalg.norm(q_ref)

    def pack(self, x, q, params):
        x = np.asarray(x, dtype=float)[self.free]
        q = np.asarray(q, dtype=float)
        if q.size == self.sys.dim:
            q = q[self.free]
        q = q / float(self.q_ref @ q)
        return np.concatenate([x, q, [params[n] for n in self.active]])

    def q_of(self, z):
        q = np.zeros(self.sys.dim)
        q[self.free] = z[self.nf: 2 * self.nf]
        return q

    def residual(self, z):
        x, p = self.state_of(z), self.params_of(z)
        qf = z[self.nf: 2 * self.nf]
        J = self.sys.jac(x, p)[np.ix_(self.free, self.free)]
        return np.concatenate([self.sys.rhs(x, p)[self.free], J @ qf, [self.q_ref @ qf - 1.0]])

    def jacobian(self, z):
        nf = self.nf
        x, p = self.state_of(z), self.params_of(z)
        q = self.q_of(z)
        qf = q[self.free]
        J = self.sys.jac(x, p)[np.ix_(self.free, self.free)]
        H = np.empty((nf, nf))
        for col, j in enumerate(self.free):
            e = np.zeros(self.sys.dim)
            e[j] = 1.0
            H[:, col] = self.sys.hess_action(x, p, q, e)[self.free]
        dJq = np.column_stack([
            jac_param_derivative(self.sys, x, p, name)[np.ix_(self.free, self.free)] @ qf for name in self.active
        ])
        out = np.zeros((2 * nf + 1, 2 * nf + 2))
        out[:nf, :nf] = J
        out[:nf, 2 * nf:] = self._fp(x, p)
        out[nf: 2 * nf, :nf] = H
        out[nf: 2 * nf, nf: 2 * nf] = J
        out[nf: 2 * nf, 2 * nf:] = dJq
        out[2 * nf, nf: 2 * nf] = self.q_ref
        return out

    def after_accept(self, z, t):
        nf = self.nf
        qf = z[nf: 2 * nf]
        c = 1.0 / np.linalg.norm(qf)
        z = z.copy()
        z[nf: 2 * nf] = qf * c
        self.q_ref = z[nf: 2 * nf].copy()
        t = t.copy()
        t[nf: 2 * nf] *= c
        return z, curve_tangent(self.jacobian(z), t)

    def aux(self, z):
        return {"q": self.q_of(z)}

    def clone(self):
        return FoldSystem(self.sys, self.base, self.active, self.q_ref.copy(), self.pinned)


class TranscriticalSystem(ExtendedSystem):
    """Boundary equilibrium with ``J[k, k] = 0`` for the transversal component ``k``."""

    kind = TRANSCRITICAL

    def __init__(self, sys, params, pair, pinned, transversal: int):
        super().__init__(sys, params, pair, pinned)
        if transversal not in self.pinned:
            raise ConfigurationError("transversal component must be pinned")
        self.k = int(transversal)

    def pack(self, x, params):
        return np.concatenate([np.asarray(x, dtype=float)[self.free], [params[n] for n in self.active]])

    def residual(self, z):
        x, p = self.state_of(z), self.params_of(z)
        k = self.k
        return np.append(self.sys.rhs(x, p)[self.free], self.sys.jac(x, p)[k, k])

    def jacobian(self, z):
        nf, k = self.nf, self.k
        x, p = self.state_of(z), self.params_of(z)
        J = self.sys.jac(x, p)
        ek = np.zeros(self.sys.dim)
        ek[k] = 1.0
        row = np.empty(nf)
        for col, j in enumerate(self.free):
            e = np.zeros(self.sys.dim)
            e[j] = 1.0
            row[col] = self.sys.hess_action(x, p, ek, e)[k]
        dpar = [jac_param_derivative(self.sys, x, p, name)[k, k] for name in self.active]
        out = np.zeros((nf + 1, nf + 2))
        out[:nf, :nf] = J[np.ix_(self.free, self.free)]
        out[:nf, nf:] = self._fp(x, p)
        out[nf, :nf] = row
        out[nf, nf:] = dpar
        return out

    def clone(self):
        return TranscriticalSystem(self.sys, self.base, self.active, self.pinned, self.k)


class HopfSystem(ExtendedSystem):
    """``f = 0``, ``J w_r + w w_i = 0``, ``J w_i - w w_r = 0``, ``|w|^2 = 1``, ``w_i . w_r_ref = 0``.

    Unknowns ``(x, w_r, w_i, omega, l1, l2)``; ``w_r + i w_i`` is the
    eigenvector of ``i omega``.
    """

    kind = HOPF

    def __init__(self, sys, params, pair, wr_ref):
        super().__init__(sys, params, pair, ())
        self.wr_ref = np.asarray(wr_ref, dtype=float).copy()

    def pack(self, x, wr, wi, omega, params):
        return np.concatenate([x, wr, wi, [omega], [params[n] for n in self.active]])

    def split(self, z):
        n = self.sys.dim
        return z[:n], z[n: 2 * n], z[2 * n: 3 * n], float(z[3 * n])

    def state_of(self, z):
        return np.array(z[: self.sys.dim], dtype=float)

    def residual(self, z):
        x, wr, wi, om = self.split(z)
        p = self.params_of(z)
        J = self.sys.jac(x, p)
        return np.concatenate([
            self.sys.rhs(x, p), J @ wr + om * wi, J @ wi - om * wr,
            [wr @ wr + wi @ wi - 1.0, wi @ self.wr_ref],
        ])

    def jacobian(self, z):
        n = self.sys.dim
        x, wr, wi, om = self.split(z)
        p = self.params_of(z)
        J = self.sys.jac(x, p)
        I = np.eye(n)
        Hr = np.column_stack([self.sys.hess_action(x, p, wr, I[j]) for j in range(n)])
        Hi = np.column_stack([self.sys.hess_action(x, p, wi, I[j]) for j in range(n)])
        dJ = [jac_param_derivative(self.sys, x, p, name) for name in self.active]
        fp = self._fp(x, p)
        out = np.zeros((3 * n + 2, 3 * n + 3))
        out[:n, :n] = J
        out[:n, 3 * n + 1:] = fp
        out[n: 2 * n, :n] = Hr
        out[n: 2 * n, n: 2 * n] = J
        out[n: 2 * n, 2 * n: 3 * n] = om * I
        out[n: 2 * n, 3 * n] = wi
        out[n: 2 * n, 3 * n + 1:] = np.column_stack([d @ wr for d in dJ])
        out[2 * n: 3 * n, :n] = Hi
        out[2 * n: 3 * n, n: 2 * n] = -om * I
        out[2 * n: 3 * n, 2 * n: 3 * n] = J
        out[2 * n: 3 * n, 3 * n] = -wr
        out[2 * n: 3 * n, 3 * n + 1:] = np.column_stack([d @ wi for d in dJ])
        out[3 * n, n: 2 * n] = 2.0 * wr
        out[3 * n, 2 * n: 3 * n] = 2.0 * wi
        out[3 * n + 1, 2 * n: 3 * n] = self.wr_ref
        return out

    def after_accept(self, z, t):
        # lock the phase against the new w_r: rotate w by exp(i theta) so that w_i' . w_r = 0
        n = self.sys.dim
        _, wr, wi, _ = self.split(z)
        theta = math.atan2(-(wi @ wr), wr @ wr)
        c, s = math.cos(theta), math.sin(theta)

        def rot(v):
            v = v.copy()
            a, b = v[n: 2 * n].copy(), v[2 * n: 3 * n].copy()
            v[n: 2 * n] = c * a - s * b
            v[2 * n: 3 * n] = s * a + c * b
            return v

        self.wr_ref = wr.copy()
        z = rot(z)
        return z, curve_tangent(self.jacobian(z), rot(t))

    def aux(self, z):
        _, wr, wi, om = self.split(z)
        return {"omega": om, "wr": wr.copy(), "wi": wi.copy()}

    def clone(self):
        return HopfSystem(self.sys, self.base, self.active, self.wr_ref.copy())


# --------------------------------------------------------------------------
# corrector
# --------------------------------------------------------------------------

def newton_correct(ext: ExtendedSystem, guess, tangent, settings: ContinuationSettings | None = None):
    """Newton iteration on ``[F(z); t^T (z - guess)] = 0``.

    Returns ``(z, iterations)``. Raises :class:`StepFailure` if the residual
    does not drop below ``newton_tol`` within ``newton_max_iter`` iterations.
    """
    settings = settings or ContinuationSettings()
    guess = np.asarray(guess, dtype=float)
    t = np.asarray(tangent, dtype=float)
    z = guess.copy()
    res = np.inf
    step = None
    with np.errstate(over="raise", invalid="raise", divide="raise"):
        for it in range(settings.newton_max_iter + 1):
            try:
                F = ext.residual(z)
            except (FloatingPointError, DomainError, ZeroDivisionError, OverflowError) as exc:
                raise StepFailure(f"residual evaluation failed: {exc}", res, it) from exc
            c = float(t @ (z - guess))
            res = max(float(np.max(np.abs(F))) if F.size else 0.0, abs(c))
            if not math.isfinite(res):
                raise StepFailure("non-finite residual", res, it)
            # near branch points a small residual does not pin z; also require a small update
            if res <= settings.newton_tol and (step is None or step <= settings.newton_tol * (1.0 + np.linalg.norm(z))):
                return z, it
            if it == settings.newton_max_iter:
                if res <= settings.newton_tol:
                    return z, it
                break
            try:
                A = np.vstack([ext.jacobian(z), t])
                dz = np.linalg.solve(A, -np.append(F, c))
            except (np.linalg.LinAlgError, FloatingPointError, DomainError, ZeroDivisionError) as exc:
                raise StepFailure(f"singular corrector system: {exc}", res, it) from exc
            z = z + dz
            step = float(np.linalg.norm(dz))
    raise StepFailure(f"no convergence in {settings.newton_max_iter} iterations", res, settings.newton_max_iter)


def _polish(ext: ExtendedSystem, z0, fix_index: int, settings: ContinuationSettings):
    """Newton with one unknown frozen; used to put seeds exactly on the curve."""
    e = np.zeros(len(z0))
    e[fix_index] = 1.0
    try:
        return newton_correct(ext, z0, e, replace(settings, newton_max_iter=max(30, settings.newton_max_iter)))[0]
    except StepFailure as exc:
        raise PreconditionError(f"seed does not converge onto the {ext.kind} curve: {exc}") from exc


# --------------------------------------------------------------------------
# monitors: test functions per curve kind
# --------------------------------------------------------------------------

def _closest_complex_re(eig: np.ndarray) -> float:
    cplx = eig[np.abs(eig.imag) > 1e-10 * max(1.0, float(np.max(np.abs(eig))))]
    if cplx.size == 0:
        return float("nan")
    return float(cplx.real[np.argmin(np.abs(cplx.real))])


def _aligned(old: np.ndarray, new: np.ndarray) -> np.ndarray:
    return -new if float(old @ new) < 0 else new


class _Monitor:
    groups: tuple[tuple[str, ...], ...] = ()

    def __init__(self, ext: ExtendedSystem):
        self.ext = ext
        self.borders: BorderVectors | None = None

    def _factors(self, A, with_bt):
        if self.borders is None:
            self.borders = initial_borders(A)
        try:
            return bordered_factors(A, self.borders, with_bt)
        except BorderDegeneracyError:
            fresh = initial_borders(A)
            self.borders = BorderVectors(_aligned(self.borders.p_bar, fresh.p_bar),
                                         _aligned(self.borders.q_bar, fresh.q_bar))
            return bordered_factors(A, self.borders, with_bt)

    def evaluate(self, z, t) -> tuple[dict[str, float], dict[str, Any]]:
        raise NotImplementedError

    def accept(self, info):
        if "p" in info and "q" in info:
            self.borders = self.borders.refreshed(info["p"], info["q"])

    def special(self, seg: "_Segment", s, point, vals, test_id, sign_changes) -> SpecialPoint | None:
        raise NotImplementedError

    def stop_reason(self, vals) -> str | None:
        return None


class _EquilibriumMonitor(_Monitor):
    def __init__(self, ext: EquilibriumSystem):
        super().__init__(ext)
        self.groups = (("gamma",), ("hopf",)) + tuple((f"tc_{k}",) for k in ext.pinned)

    def evaluate(self, z, t):
        ext = self.ext
        x, p = ext.state_of(z), ext.params_of(z)
        J = ext.sys.jac(x, p)
        eig = np.linalg.eigvals(J)
        vals = {"hopf": _closest_complex_re(eig), "max_re_eig": float(np.max(eig.real))}
        info: dict[str, Any] = {"eig": eig}
        if ext.nf:
            bf = self._factors(J[np.ix_(ext.free, ext.free)], with_bt=False)
            vals["gamma"] = bf.gamma
            info.update(p=bf.p, q=bf.q)
        for k in ext.pinned:
            vals[f"tc_{k}"] = float(J[k, k])
        return vals, info

    def special(self, seg, s, point, vals, test_id, sign_changes):
        ext = self.ext
        z, t, info = point
        x, p = ext.state_of(z), ext.params_of(z)
        diag = {"test_id": test_id, "value": vals[test_id], "eigenvalues": info["eig"],
                "bracket": (seg.values_lo[test_id], seg.values_hi[test_id])}
        if test_id == "gamma":
            q = np.zeros(ext.sys.dim)
            q[ext.free] = info["q"] / np.linalg.norm(info["q"])
            diag["gamma"] = vals["gamma"]
            return SpecialPoint(FOLD, x, p, ext.active, diag, ext.sys.name, EQUILIBRIUM, t, None, q, ext.pinned)
        if test_id == "hopf":
            eig = info["eig"]
            diag["omega"] = float(np.max(np.abs(eig.imag)))
            return SpecialPoint(HOPF, x, p, ext.active, diag, ext.sys.name, EQUILIBRIUM, t)
        k = int(test_id.split("_")[1])
        return SpecialPoint(TRANSCRITICAL, x, p, ext.active, diag, ext.sys.name, EQUILIBRIUM, t,
                            pinned=ext.pinned, transversal=k)


class _Codim2Monitor(_Monitor):
    """Fold and transcritical curves: alpha, beta_cusp, beta_bt from full-space null vectors."""

    def __init__(self, ext: ExtendedSystem):
        super().__init__(ext)
        if ext.kind == FOLD:
            self.groups = (("beta_bt", "beta_cusp"),)
        else:
            self.groups = (("beta_bt", "beta_cusp"), ("hopf",))

    def evaluate(self, z, t):
        ext = self.ext
        sys = ext.sys
        x, p = ext.state_of(z), ext.params_of(z)
        J = sys.jac(x, p)
        eig = np.linalg.eigvals(J)
        bf = self._factors(J, with_bt=True)
        vals = {
            "gamma": bf.gamma,
            "beta_cusp": beta_cusp(sys, x, p, bf.p, bf.q),
            "beta_bt": bf.beta_bt,
            "max_re_eig": float(np.max(eig.real)),
        }
        if ext.kind == FOLD:
            try:
                vals["alpha"] = alpha_sntc(sys, x, p, ext.active, bf.p, t[-2:])
            except DegenerateTangentError:
                vals["alpha"] = float("nan")
        else:
            vals["hopf"] = _closest_complex_re(eig)
        info = {"eig": eig, "p": bf.p, "q": bf.q, "normalized": normalized_tests(vals, bf.p, bf.q)}
        return vals, info

    def special(self, seg, s, point, vals, test_id, sign_changes):
        ext = self.ext
        z, t, info = point
        x, p = ext.state_of(z), ext.params_of(z)
        diag = {
            "test_id": test_id,
            "alpha": vals.get("alpha"),
            "beta_cusp": vals["beta_cusp"],
            "beta_bt": vals["beta_bt"],
            "gamma": vals["gamma"],
            "normalized": info["normalized"],
            "sign_changes": tuple(sign_changes),
            "eigenvalues": info["eig"],
            "bracket": {k: (seg.values_lo.get(k), seg.values_hi.get(k)) for k in ("alpha", "beta_cusp", "beta_bt", "hopf")
                        if k in seg.values_lo},
        }
        if ext.kind == FOLD and not math.isfinite(vals.get("alpha", 0.0)):
            # parameter-plane cusp of the curve: take the one-sided limit of the tangent direction
            delta = min(1e-5, 0.5 * seg.length)
            s_near = s + delta if s + delta <= seg.length else s - delta
            try:
                (_, t_near, _), _ = seg.evaluate(s_near)
                diag["alpha"] = alpha_sntc(ext.sys, x, p, ext.active, info["p"], t_near[-2:])
                diag["normalized"] = dict(diag["normalized"], alpha=diag["alpha"] / np.linalg.norm(info["p"]))
                diag["alpha_one_sided"] = True
            except _RECOVERABLE:
                pass
        pinned = ext.pinned
        transversal = getattr(ext, "k", None)
        if test_id == "hopf":
            kind = TC_HOPF_CANDIDATE
        else:
            try:
                kind = classify_codim2(diag, ext.kind, seg.settings.tol_zero)
            except AmbiguousPointError:
                kind = None
                diag["ambiguous"] = True
        if ext.kind == TRANSCRITICAL and kind is not None:
            diag["candidate"] = True
        return SpecialPoint(kind, x, p, ext.active, diag, ext.sys.name, ext.kind, t,
                            info["p"], info["q"], pinned, transversal)


class _HopfMonitor(_Monitor):
    groups = (("omega",),)
    end_reason = "zero-frequency endpoint"

    def evaluate(self, z, t):
        ext = self.ext
        x, p = ext.state_of(z), ext.params_of(z)
        eig = np.linalg.eigvals(ext.sys.jac(x, p))
        om = ext.split(z)[3]
        return {"omega": om, "max_re_eig": float(np.max(eig.real))}, {"eig": eig}

    def special(self, seg, s, point, vals, test_id, sign_changes):
        ext = self.ext
        z, t, info = point
        diag = {"omega": vals["omega"], "eigenvalues": info["eig"], "endpoint": True, "_point": point}
        return SpecialPoint(None, ext.state_of(z), ext.params_of(z), ext.active, diag,
                            ext.sys.name, HOPF, t)

    def stop_reason(self, vals):
        if vals["omega"] < self.settings.omega_min:
            return "zero-frequency endpoint"
        return None


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------

class _Segment:
    """Family ``z(s)`` corrected from ``z0 + s t0``; ``s`` in ``[0, length]``."""

    def __init__(self, ext, monitor, z0, t0, length, values_lo, values_hi, settings, sign_changes, z_hi):
        self.ext = ext
        self.z_hi = z_hi
        self.monitor = monitor
        self.z0 = z0
        self.t0 = t0
        self.length = length
        self.values_lo = values_lo
        self.values_hi = values_hi
        self.settings = settings
        self._newton = replace(settings, newton_max_iter=max(60, settings.newton_max_iter))
        self.sign_changes = sign_changes

    def evaluate(self, s):
        # zeros often sit on branch points where Newton degrades to linear convergence
        z, _ = newton_correct(self.ext, self.z0 + s * self.t0, self.t0, self._newton)
        try:
            t = curve_tangent(self.ext.jacobian(z), self.t0)
        except TangentDegeneracyError:
            t = self._one_sided_tangent(s)
        vals, info = self.monitor.evaluate(z, t)
        return (z, t, info), vals

    def _one_sided_tangent(self, s):
        # branch point of the defining system: limit of the tangent from inside the bracket
        for delta in (1e-6, 1e-4):
            d = min(delta, 0.5 * self.length)
            s_near = s - d if s - d >= 0.0 else s + d
            try:
                z, _ = newton_correct(self.ext, self.z0 + s_near * self.t0, self.t0, self._newton)
                return curve_tangent(self.ext.jacobian(z), self.t0)
            except (StepFailure, TangentDegeneracyError, np.linalg.LinAlgError):
                continue
        return self.t0

    def special(self, s, point, vals, test_id):
        return self.monitor.special(self, s, point, vals, test_id, self.sign_changes)


def _sign_change(a, b) -> bool:
    return a is not None and b is not None and math.isfinite(a) and math.isfinite(b) and a * b < 0


def _orient(ext, t, direction: int) -> np.ndarray:
    k = len(ext.active)
    par = t[-k:]
    idx = len(t) - k + int(np.argmax(np.abs(par))) if np.max(np.abs(par)) > 1e-8 else int(np.argmax(np.abs(t)))
    return t * (direction if t[idx] > 0 else -direction)


def _out_of_bounds(params, x, bounds, state_bounds) -> str | None:
    for name, (lo, hi) in (bounds or {}).items():
        v = params[name]
        if not (lo <= v <= hi):
            return name
    for i, (lo, hi) in (state_bounds or {}).items():
        if not (lo <= x[int(i)] <= hi):
            return f"x{int(i)}"
    return None


def _bound_gap(ext, z, which, bounds, state_bounds, side):
    if which in (bounds or {}):
        v = ext.params_of(z)[which]
        lo, hi = bounds[which]
    else:
        i = int(which[1:])
        v = float(ext.state_of(z)[i])
        lo, hi = state_bounds[i] if i in state_bounds else state_bounds[str(i)]
    return v - (hi if side > 0 else lo)


def _land_on_bound(ext, z, t, h, which, bounds, state_bounds, settings):
    """Shorten the last step so the curve ends on the violated bound.

    Safeguarded secant on the step length; returns ``(z, tangent, h)`` or
    None when the corrector fails inside the bracket.
    """

    def corrected(s):
        zs, _ = newton_correct(ext, z + s * t, t, settings)
        return zs

    try:
        z_hi = corrected(h)
    except _RECOVERABLE:
        return None
    side = 1 if _bound_gap(ext, z_hi, which, bounds, state_bounds, 1) > 0 else -1
    a, ga = 0.0, _bound_gap(ext, z, which, bounds, state_bounds, side)
    b, gb = h, _bound_gap(ext, z_hi, which, bounds, state_bounds, side)
    if ga * gb > 0:
        return None
    zs = z_hi
    for _ in range(60):
        s = b - gb * (b - a) / (gb - ga)
        if not a < s < b:
            s = 0.5 * (a + b)
        try:
            zs = corrected(s)
        except _RECOVERABLE:
            return None
        gs = _bound_gap(ext, zs, which, bounds, state_bounds, side)
        if abs(gs) <= 1e-13 * (1.0 + abs(gs - _bound_gap(ext, zs, which, bounds, state_bounds, -side))):
            break
        if ga * gs < 0:
            b, gb = s, gs
        else:
            a, ga = s, gs
        if b - a <= 1e-15 * h:
            break
    try:
        ts = curve_tangent(ext.jacobian(zs), t)
    except TangentDegeneracyError:
        ts = t
    return zs, ts, s


def _events(ext, monitor, settings, z, t, vals, h, z1, vals1, meta):
    found: list[SpecialPoint] = []
    for group in monitor.groups:
        changed = [k for k in group if _sign_change(vals.get(k), vals1.get(k))]
        if not changed:
            continue
        if group == ("gamma",) and ext.kind == EQUILIBRIUM:
            t1 = meta["_t1"]
            if t[-1] * t1[-1] > 0:
                meta.setdefault("unclassified", []).append({"test": "gamma", "params": ext.params_of(z)})
                continue
        all_changed = [k for k in vals if _sign_change(vals.get(k), vals1.get(k))]
        seg = _Segment(ext, monitor, z, t, h, vals, vals1, settings, all_changed, z1)
        done: list[SpecialPoint] = []
        for test_id in changed:
            if done and all(abs(sp.diagnostics.get("normalized", {}).get(test_id, np.inf)) <= settings.tol_zero
                            for sp in done):
                continue
            try:
                sp = localize_test_zero(seg, test_id, settings.localize_tol, settings.localize_width)
            except (LocalizationError, PreconditionError) as exc:
                log.warning("localization of %s failed: %s", test_id, exc)
                meta.setdefault("localization_failures", []).append({"test": test_id, "error": str(exc)})
                continue
            done.append(sp)
        found.extend(done)
    return found


def _make_point(ext, z, t, vals, info) -> BranchPoint:
    x = ext.state_of(z)
    eig = info["eig"]
    res = ext.residual(z)
    return BranchPoint(
        x=x,
        params=ext.params_of(z),
        active=ext.active,
        tangent=t.copy(),
        eigenvalues=eig,
        testvals=dict(vals),
        kind_flags={"stable": bool(np.all(eig.real < 0)), "boundary": ext.pinned},
        z=z.copy(),
        aux=ext.aux(z),
        residual=float(np.max(np.abs(res))) if res.size else 0.0,
    )


def _check_plane_capture(ext, z, zp, z1):
    """Reject a step that jumps from off-plane onto an invariant plane.

    The trivial branch ``x_k = 0`` also solves the fold and equilibrium
    systems, so curves that cross the plane meet it at a branch point. A
    corrector result much closer to the plane than both the previous point
    and the predictor has switched branches.
    """
    x, xp, x1 = ext.state_of(z), ext.state_of(zp), ext.state_of(z1)
    scale = 1.0 + float(np.max(np.abs(x1)))
    for k in ext.sys.invariant_components:
        if k in ext.pinned:
            continue
        ref = max(abs(x[k]), abs(xp[k]))
        if abs(x[k]) > 1e-6 * scale and abs(x1[k]) < 1e-3 * ref:
            raise StepFailure(f"corrector collapsed onto the invariant plane of component {k}")


def _trace(ext, monitor, z0, t0, settings, bounds, state_bounds):
    monitor.settings = settings
    z, t = z0, t0
    vals, info = monitor.evaluate(z, t)
    points = [_make_point(ext, z, t, vals, info)]
    monitor.accept(info)
    specials: list[SpecialPoint] = []
    meta: dict[str, Any] = {"steps": 0, "failures": 0, "newton_iterations": 0}
    h = settings.h0
    reason = "max-points"
    cos_max = math.cos(settings.max_angle)
    while len(points) < settings.max_points:
        if h < settings.h_min:
            reason = "step-failure"
            break
        try:
            zp = z + h * t
            z1, iters = newton_correct(ext, zp, t, settings)
            t1 = curve_tangent(ext.jacobian(z1), t)
            if float(t1 @ t) < cos_max:
                raise StepFailure("tangent turned too far")
            _check_plane_capture(ext, z, zp, z1)
            vals1, info1 = monitor.evaluate(z1, t1)
        except _RECOVERABLE as exc:
            meta["failures"] += 1
            log.debug("step h=%.3g rejected: %s", h, exc)
            h *= settings.shrink
            continue
        meta["steps"] += 1
        meta["newton_iterations"] += iters
        out = _out_of_bounds(ext.params_of(z1), ext.state_of(z1), bounds, state_bounds)
        if out is not None:
            reason = "boundary"
            meta["boundary"] = out
            landed = _land_on_bound(ext, z, t, h, out, bounds, state_bounds, settings)
            if landed is not None:
                zb, tb, hb = landed
                vals_b, info_b = monitor.evaluate(zb, tb)
                meta["_t1"] = tb
                specials.extend(sp for sp in _events(ext, monitor, settings, z, t, vals, hb, zb, vals_b, meta)
                                if not sp.diagnostics.get("endpoint"))
                points.append(_make_point(ext, zb, tb, vals_b, info_b))
            break
        meta["_t1"] = t1
        found = _events(ext, monitor, settings, z, t, vals, h, z1, vals1, meta)
        ends = [sp for sp in found if sp.diagnostics.get("endpoint")]
        specials.extend(sp for sp in found if not sp.diagnostics.get("endpoint"))
        if ends:
            # the curve ends inside this step: store the localized end instead of the overshoot
            zt, tt, it_info = ends[0].diagnostics.pop("_point")
            points.append(_make_point(ext, zt, tt, monitor.evaluate(zt, tt)[0], it_info))
            reason = monitor.end_reason
            break
        points.append(_make_point(ext, z1, t1, vals1, info1))
        monitor.accept(info1)
        z, t = ext.after_accept(z1, t1)
        vals = vals1
        stop = monitor.stop_reason(vals)
        if stop:
            reason = stop
            break
        if iters <= settings.grow_iters:
            h = min(h * settings.grow, settings.h_max)
    meta.pop("_t1", None)
    meta["termination"] = reason
    meta["last_h"] = h
    return points, specials, meta


# test functions that change sign with the tangent orientation
_ORIENTATION_ODD = ("alpha",)


def _reverse_orientation(points, specials) -> None:
    """Flip the backward half-run so tangents follow the assembled curve."""
    for pt in points:
        pt.tangent = -pt.tangent
        for k in _ORIENTATION_ODD:
            if pt.testvals.get(k) is not None:
                pt.testvals[k] = -pt.testvals[k]
    for sp in specials:
        if sp.tangent is not None:
            sp.tangent = -np.asarray(sp.tangent)
        d = sp.diagnostics
        for k in _ORIENTATION_ODD:
            if isinstance(d.get(k), float):
                d[k] = -d[k]
            if isinstance(d.get("normalized"), dict) and isinstance(d["normalized"].get(k), float):
                d["normalized"] = dict(d["normalized"], **{k: -d["normalized"][k]})
            if isinstance(d.get("bracket"), dict) and k in d["bracket"]:
                lo, hi = d["bracket"][k]
                d["bracket"] = dict(d["bracket"], **{k: (None if hi is None else -hi, None if lo is None else -lo)})


def _dedupe(specials: list[SpecialPoint]) -> list[SpecialPoint]:
    out: list[SpecialPoint] = []
    for sp in specials:
        loc = np.array(sp.location)
        if any(o.kind == sp.kind and np.max(np.abs(np.array(o.location) - loc)) <= 1e-8 for o in out):
            continue
        out.append(sp)
    return out


def _run(kind, make_ext, make_monitor, z0, settings, bounds, state_bounds, direction, params, sys, active):
    dirs = (-1, 1) if direction == "both" else (int(direction),)
    if any(d not in (-1, 1) for d in dirs):
        raise ConfigurationError("direction must be +1, -1 or 'both'")
    runs = []
    for d in dirs:
        ext = make_ext()
        try:
            t0 = _orient(ext, curve_tangent(ext.jacobian(z0), np.ones(len(z0))), d)
        except TangentDegeneracyError as exc:
            raise PreconditionError(f"seed is a singular point of the {kind} curve: {exc}") from exc
        monitor = make_monitor(ext)
        runs.append(_trace(ext, monitor, z0.copy(), t0, settings, bounds, state_bounds))
    curve = Curve(kind, sys, tuple(active), dict(params))
    if len(runs) == 2:
        (pm, sm, mm), (pp, sp, mp) = runs
        _reverse_orientation(pm, sm)
        curve.points = list(reversed(pm[1:])) + pp
        curve.specials = _dedupe(list(reversed(sm)) + sp)
        curve.meta = {"backward": mm, "forward": mp, "termination": (mm["termination"], mp["termination"])}
    else:
        pts, sps, mt = runs[0]
        curve.points, curve.specials, curve.meta = pts, _dedupe(sps), mt
    for sp in curve.specials:
        sp.system = sys.name
    return curve


# --------------------------------------------------------------------------
# public entry points
# --------------------------------------------------------------------------

def _default_pinned(sys: SystemDef, x) -> tuple[int, ...]:
    return tuple(k for k in sys.invariant_components if x[k] == 0.0)


def continue_equilibrium(sys: SystemDef, x0, p0=None, free_param: str | None = None,
                         range: tuple[float, float] | None = None,
                         settings: ContinuationSettings | None = None, *,
                         pinned: Sequence[int] | None = None, direction: int | str = 1,
                         state_bounds: Mapping[int, tuple[float, float]] | None = None) -> Curve:
    """Trace equilibria in one parameter and localize Fold, Hopf and Transcritical points."""
    settings = settings or ContinuationSettings()
    params = resolve_params(sys, p0)
    if free_param is None:
        if sys.default_pair is None:
            raise ConfigurationError("free_param required")
        free_param = sys.default_pair[0]
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys.dim,):
        raise ConfigurationError(f"x0 has shape {x0.shape}, expected ({sys.dim},)")
    pinned = _default_pinned(sys, x0) if pinned is None else tuple(pinned)
    ext0 = EquilibriumSystem(sys, params, free_param, pinned)
    z0 = ext0.pack(x0, params)
    z0 = _polish(ext0, z0, len(z0) - 1, settings)
    bounds = {free_param: tuple(range)} if range is not None else None
    curve = _run(EQUILIBRIUM, ext0.clone, _EquilibriumMonitor, z0, settings, bounds, state_bounds,
                 direction, params, sys, (free_param,))
    curve.meta["pinned"] = pinned
    return curve


def _pair(sys, seed, pair):
    if pair is None:
        if seed.active and len(seed.active) == 2:
            pair = seed.active
        elif seed.active and sys.default_pair and seed.active[0] in sys.default_pair:
            pair = sys.default_pair if sys.default_pair[0] == seed.active[0] else sys.default_pair[::-1]
        else:
            pair = sys.default_pair
    if pair is None or len(pair) != 2 or pair[0] == pair[1]:
        raise ConfigurationError("a pair of distinct active parameters is required")
    return tuple(pair)


def fold_seed(sys: SystemDef, x, params, pair: tuple[str, str], q=None, pinned: Sequence[int] | None = None,
              settings: ContinuationSettings | None = None) -> SpecialPoint:
    """Polish an approximate fold point with the second parameter frozen."""
    settings = settings or ContinuationSettings()
    params = resolve_params(sys, params)
    x = np.asarray(x, dtype=float)
    pinned = _default_pinned(sys, x) if pinned is None else tuple(pinned)
    free = [i for i in range(sys.dim) if i not in pinned]
    if q is None:
        J = sys.jac(x, params)[np.ix_(free, free)]
        qf = np.linalg.svd(J)[2][-1]
        q = np.zeros(sys.dim)
        q[free] = qf
    q = np.asarray(q, dtype=float)
    ext = FoldSystem(sys, params, pair, q, pinned)
    z = _polish(ext, ext.pack(x, q, params), len(ext.free) * 2 + 1, settings)
    return SpecialPoint(FOLD, ext.state_of(z), ext.params_of(z), tuple(pair), {}, sys.name, FOLD,
                        q=ext.q_of(z), pinned=tuple(pinned))


def continue_fold_curve(sys: SystemDef, seed: SpecialPoint, settings: ContinuationSettings | None = None, *,
                        pair: tuple[str, str] | None = None, bounds=None, state_bounds=None,
                        direction: int | str = "both") -> Curve:
    """Trace a fold curve in two parameters, monitoring alpha, beta_cusp and beta_bt."""
    settings = settings or ContinuationSettings()
    if seed.kind != FOLD:
        raise PreconditionError(f"fold continuation needs a Fold seed, got {seed.kind}")
    pair = _pair(sys, seed, pair)
    params = resolve_params(sys, seed.params)
    pinned = tuple(seed.pinned)
    x = np.asarray(seed.x, dtype=float)
    q = seed.q
    if q is None:
        free = [i for i in range(sys.dim) if i not in pinned]
        q = np.zeros(sys.dim)
        q[free] = np.linalg.svd(sys.jac(x, params)[np.ix_(free, free)])[2][-1]
    ext0 = FoldSystem(sys, params, pair, q, pinned)
    z0 = _polish(ext0, ext0.pack(x, q, params), 2 * ext0.nf + 1, settings)
    ext0.q_ref = z0[ext0.nf: 2 * ext0.nf] / np.linalg.norm(z0[ext0.nf: 2 * ext0.nf])
    z0[ext0.nf: 2 * ext0.nf] = ext0.q_ref
    curve = _run(FOLD, ext0.clone, _Codim2Monitor, z0, settings, bounds, state_bounds, direction, params, sys, pair)
    curve.meta["pinned"] = pinned
    return curve


def tc_seed(sys: SystemDef, x, params, pair, pinned: Sequence[int], transversal: int,
            settings: ContinuationSettings | None = None) -> SpecialPoint:
    settings = settings or ContinuationSettings()
    params = resolve_params(sys, params)
    ext = TranscriticalSystem(sys, params, pair, pinned, transversal)
    z = _polish(ext, ext.pack(np.asarray(x, dtype=float), params), len(ext.free) + 1, settings)
    return SpecialPoint(TRANSCRITICAL, ext.state_of(z), ext.params_of(z), tuple(pair), {}, sys.name,
                        TRANSCRITICAL, pinned=tuple(ext.pinned), transversal=int(transversal))


def continue_tc_curve(sys: SystemDef, seed: SpecialPoint, settings: ContinuationSettings | None = None, *,
                      pair: tuple[str, str] | None = None, bounds=None, state_bounds=None,
                      direction: int | str = "both") -> Curve:
    """Trace a transcritical curve on an invariant plane."""
    settings = settings or ContinuationSettings()
    if seed.transversal is None or not seed.pinned:
        raise PreconditionError("seed carries no pinned/transversal components")
    x = np.asarray(seed.x, dtype=float)
    for k in seed.pinned:
        if abs(x[k]) > 1e-12:
            raise DomainError(f"seed component {k} = {x[k]:.3g} is not on the invariant plane")
    pair = _pair(sys, seed, pair)
    params = resolve_params(sys, seed.params)
    ext0 = TranscriticalSystem(sys, params, pair, seed.pinned, seed.transversal)
    z0 = _polish(ext0, ext0.pack(x, params), ext0.nf + 1, settings)
    curve = _run(TRANSCRITICAL, ext0.clone, _Codim2Monitor, z0, settings, bounds, state_bounds, direction,
                 params, sys, pair)
    curve.meta.update(pinned=tuple(seed.pinned), transversal=int(seed.transversal))
    return curve


def _hopf_vectors(J: np.ndarray, tol: float):
    eig, vec = np.linalg.eig(J)
    cand = [i for i in range(len(eig)) if eig[i].imag > 0]
    if not cand:
        raise PreconditionError("no complex conjugate pair at the seed")
    i = min(cand, key=lambda j: abs(eig[j].real))
    lam = eig[i]
    if abs(lam.real) > tol * max(1.0, abs(lam)):
        raise PreconditionError(f"closest complex pair has real part {lam.real:.3e}")
    v = vec[:, i] / np.linalg.norm(vec[:, i])
    wr, wi = v.real, v.imag
    theta = math.atan2(-(wi @ wr), wr @ wr) if wr @ wr > 0 else 0.5 * math.pi
    v = v * complex(math.cos(theta), math.sin(theta))
    return v.real.copy(), v.imag.copy(), float(lam.imag)


def hopf_seed(sys: SystemDef, x, params, pair, settings: ContinuationSettings | None = None,
              tol: float = 1e-6) -> SpecialPoint:
    """Hopf seed from an equilibrium with a pair of eigenvalues close to the imaginary axis."""
    params = resolve_params(sys, params)
    x = np.asarray(x, dtype=float)
    hopf_vectors = _hopf_vectors(sys.jac(x, params), tol)
    return SpecialPoint(HOPF, x, params, tuple(pair), {"omega": hopf_vectors[2]}, sys.name, HOPF)


def continue_hopf_curve(sys: SystemDef, seed: SpecialPoint, settings: ContinuationSettings | None = None, *,
                        pair: tuple[str, str] | None = None, bounds=None, state_bounds=None,
                        direction: int | str = "both", tol: float = 1e-6) -> Curve:
    """Trace a Hopf curve; stops where the frequency drops below ``omega_min``."""
    settings = settings or ContinuationSettings()
    pair = _pair(sys, seed, pair)
    params = resolve_params(sys, seed.params)
    x = np.asarray(seed.x, dtype=float)
    wr, wi, om = _hopf_vectors(sys.jac(x, params), tol)
    ext0 = HopfSystem(sys, params, pair, wr)
    z0 = _polish(ext0, ext0.pack(x, wr, wi, om, params), len(ext0.pack(x, wr, wi, om, params)) - 1, settings)
    curve = _run(HOPF, ext0.clone, _HopfMonitor, z0, settings, bounds, state_bounds, direction, params, sys, pair)
    ends = []
    for key in ("backward", "forward"):
        m = curve.meta.get(key, curve.meta)
        ends.append(m.get("termination"))
    endpoints = [pt for pt, why in ((curve.points[0], ends[0]), (curve.points[-1], ends[-1]))
                 if why == "zero-frequency endpoint"]
    curve.meta["endpoints"] = [{"params": pt.params, "x": pt.x, "omega": pt.aux["omega"]} for pt in endpoints]
    curve.meta["min_omega"] = float(min(pt.aux["omega"] for pt in curve.points))
    return curve


# --------------------------------------------------------------------------
# verification
# --------------------------------------------------------------------------

def defining_residual(sys: SystemDef, kind: str, x, params, *, q=None, wr=None, wi=None, omega=None,
                      transversal: int | None = None) -> float:
    """Max-norm residual of the defining equations, computed from scratch."""
    x = np.asarray(x, dtype=float)
    params = resolve_params(sys, params)
    f = sys.rhs(x, params)
    parts = [np.abs(f)]
    J = sys.jac(x, params)
    if kind == FOLD:
        q = np.asarray(q, dtype=float)
        parts.append(np.abs(J @ q) / np.linalg.norm(q))
    elif kind == TRANSCRITICAL:
        parts.append(np.array([abs(J[transversal, transversal])]))
    elif kind == HOPF:
        wr = np.asarray(wr, dtype=float)
        wi = np.asarray(wi, dtype=float)
        parts.append(np.abs(J @ wr + omega * wi))
        parts.append(np.abs(J @ wi - omega * wr))
    return float(max(np.max(a) for a in parts))


def verify_point(curve: Curve, pt: BranchPoint) -> float:
    kind = curve.kind
    if kind == EQUILIBRIUM:
        return defining_residual(curve.system, kind, pt.x, pt.params)
    if kind == FOLD:
        return defining_residual(curve.system, kind, pt.x, pt.params, q=pt.aux["q"])
    if kind == TRANSCRITICAL:
        return defining_residual(curve.system, kind, pt.x, pt.params, transversal=curve.meta["transversal"])
    return defining_residual(curve.system, kind, pt.x, pt.params, wr=pt.aux["wr"], wi=pt.aux["wi"],
                             omega=pt.aux["omega"])


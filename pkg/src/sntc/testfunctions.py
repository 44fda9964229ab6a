"""Codimension-two test functions along fold and transcritical curves.

Three scalars are monitored on a fold curve:

* ``beta_cusp = <p, B(q, q)>``, the quadratic normal-form coefficient whose
  zero standard continuation software reports as a cusp;
* ``beta_bt = p^T q`` from the second bordered system, whose zero is
  reported as a Bogdanov-Takens point;
* ``alpha = <p, f_l1 v2 - f_l2 v1>``, the constant term of the unfolding
  along the direction normal to the curve. It vanishes when the fold
  interacts with a transcritical bifurcation forced by an invariant plane,
  and stays away from zero at genuine cusp and BT points.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Mapping, Protocol

import numpy as np

from .bordered import BorderVectors, bordered_factors
from .errors import (
    AmbiguousPointError,
    DegenerateTangentError,
    LocalizationError,
    PreconditionError,
    StepFailure,
    TangentDegeneracyError,
)
from .system import SystemDef

__all__ = [
    "FOLD", "TRANSCRITICAL", "HOPF", "CUSP", "BOGDANOV_TAKENS",
    "SNTC_SINGLE_ZERO", "SNTC_DOUBLE_ZERO", "TC_HOPF_CANDIDATE", "CODIM2_KINDS",
    "SpecialPoint",
    "alpha_sntc",
    "beta_cusp",
    "beta_bt_along_curve",
    "normalized_tests",
    "classify_codim2",
    "localize_test_zero",
    "TOL_ZERO",
]

log = logging.getLogger(__name__)

FOLD = "Fold"
TRANSCRITICAL = "Transcritical"
HOPF = "Hopf"
CUSP = "Cusp"
BOGDANOV_TAKENS = "BogdanovTakens"
SNTC_SINGLE_ZERO = "SntcSingleZero"
SNTC_DOUBLE_ZERO = "SntcDoubleZero"
TC_HOPF_CANDIDATE = "TcHopfCandidate"
CODIM2_KINDS = (CUSP, BOGDANOV_TAKENS, SNTC_SINGLE_ZERO, SNTC_DOUBLE_ZERO, TC_HOPF_CANDIDATE)

TOL_ZERO = 1e-6


@dataclass
class SpecialPoint:
    """A localized bifurcation point with the data needed to seed or classify."""

    kind: str | None
    x: np.ndarray
    params: dict[str, float]
    active: tuple[str, ...]
    diagnostics: dict[str, Any] = field(default_factory=dict)
    system: str = ""
    curve_kind: str = ""
    tangent: np.ndarray | None = None
    p: np.ndarray | None = None
    q: np.ndarray | None = None
    pinned: tuple[int, ...] = ()
    transversal: int | None = None

    @property
    def location(self) -> tuple[float, ...]:
        return tuple(self.params[k] for k in self.active)

    def to_json(self) -> dict:
        diag = self.diagnostics
        eig = diag.get("eigenvalues")
        out = {
            "kind": self.kind,
            "params": {k: float(v) for k, v in self.params.items()},
            "state": [float(v) for v in self.x],
            "diagnostics": {
                "alpha": _jsonable(diag.get("alpha")),
                "beta_cusp": _jsonable(diag.get("beta_cusp")),
                "beta_bt": _jsonable(diag.get("beta_bt")),
                "eigenvalues": [] if eig is None else [[float(np.real(e)), float(np.imag(e))] for e in eig],
            },
            "system": self.system,
            "curve_kind": self.curve_kind,
            "active": list(self.active),
        }
        if self.pinned:
            out["pinned"] = list(self.pinned)
        if self.transversal is not None:
            out["transversal"] = self.transversal
        if self.q is not None:
            out["q"] = [float(v) for v in self.q]
        if "omega" in diag:
            out["diagnostics"]["omega"] = _jsonable(diag["omega"])
        return out


def _jsonable(v):
    if v is None:
        return None
    v = float(v)
    return v if np.isfinite(v) else None


def alpha_sntc(sys: SystemDef, x, params: Mapping[str, float], pair: tuple[str, str], p, v) -> float:
    """Test function ``<p, f_l1 v2 - f_l2 v1>`` on a fold curve.

    ``v`` holds the parameter-plane components ``(v1, v2)`` of the curve
    tangent; they are rescaled to unit length before use.
    """
    v = np.asarray(v, dtype=float)
    nv = float(np.hypot(v[0], v[1]))
    if nv < 1e-12:
        raise DegenerateTangentError(f"parameter-plane tangent has norm {nv:.2e}")
    v1, v2 = v[0] / nv, v[1] / nv
    x = np.asarray(x, dtype=float)
    f1 = sys.jac_params(x, params, pair[0])
    f2 = sys.jac_params(x, params, pair[1])
    return float(np.dot(p, f1 * v2 - f2 * v1))


def beta_cusp(sys: SystemDef, x, params: Mapping[str, float], p, q) -> float:
    """Quadratic coefficient ``<p, B(q, q)>`` of the fold normal form."""
    q = np.asarray(q, dtype=float)
    return float(np.dot(p, sys.hess_action(np.asarray(x, dtype=float), params, q, q)))


def beta_bt_along_curve(sys: SystemDef, x, params: Mapping[str, float], borders: BorderVectors) -> float:
    """BT test scalar ``p^T q`` from the two pairs of bordered systems."""
    bf = bordered_factors(sys.jac(np.asarray(x, dtype=float), params), borders)
    return bf.beta_bt


def normalized_tests(values: Mapping[str, float], p, q) -> dict[str, float]:
    """Scale test values so a single zero tolerance applies across systems."""
    npn = float(np.linalg.norm(p))
    nq = float(np.linalg.norm(q))
    out = {}
    if "alpha" in values:
        out["alpha"] = values["alpha"] / npn
    for key in ("beta_cusp", "beta_bt"):
        if key in values:
            out[key] = values[key] / (npn * nq)
    return out


def _is_zero(diag: Mapping[str, Any], name: str, tol: float) -> bool:
    val = diag.get("normalized", {}).get(name)
    if val is None or not np.isfinite(val):
        return False
    if abs(val) > tol:
        return False
    if diag.get("endpoint"):
        log.warning("zero of %s accepted on magnitude alone at a curve endpoint", name)
        return True
    return name in diag.get("sign_changes", ())


def classify_codim2(diagnostics: Mapping[str, Any], curve_kind: str = FOLD, tol_zero: float = TOL_ZERO) -> str:
    """Classify a localized zero of ``beta_cusp`` or ``beta_bt``.

    ``diagnostics`` carries ``normalized`` test values and the set
    ``sign_changes`` of tests whose sign flipped across the bracket. A test
    counts as zero only if it is small *and* changed sign.

    On fold curves a vanishing ``alpha`` turns a cusp into a single-zero
    interaction and a BT point into a double-zero interaction. At a
    double-zero interaction ``beta_cusp`` vanishes together with ``beta_bt``
    (the left null vector becomes transversal to the invariant plane), so a
    simultaneous zero is only ambiguous when ``alpha`` stays nonzero.
    On transcritical curves ``beta_bt`` and ``beta_cusp`` zeros mark
    double- and single-zero candidates respectively.
    """
    zc = _is_zero(diagnostics, "beta_cusp", tol_zero)
    zb = _is_zero(diagnostics, "beta_bt", tol_zero)
    if curve_kind == TRANSCRITICAL:
        if zb:
            return SNTC_DOUBLE_ZERO
        if zc:
            return SNTC_SINGLE_ZERO
        raise PreconditionError("no vanishing test function in diagnostics")
    za = _is_zero(diagnostics, "alpha", tol_zero)
    if zb and zc and not za:
        raise AmbiguousPointError(dict(diagnostics))
    if zb:
        return SNTC_DOUBLE_ZERO if za else BOGDANOV_TAKENS
    if zc:
        return SNTC_SINGLE_ZERO if za else CUSP
    raise PreconditionError("no vanishing test function in diagnostics")


class CurveSegment(Protocol):
    """Two consecutive curve points joined by a one-parameter family."""

    length: float
    values_lo: Mapping[str, float]
    values_hi: Mapping[str, float]

    def evaluate(self, s: float) -> tuple[Any, Mapping[str, float]]: ...

    def special(self, s: float, point: Any, values: Mapping[str, float], test_id: str) -> SpecialPoint: ...


def localize_test_zero(segment: CurveSegment, test_id: str, tol: float = 1e-10,
                       width: float = 1e-12, max_iter: int = 200) -> SpecialPoint:
    """Refine a sign change of ``test_id`` by safeguarded regula falsi on arclength.

    Stops when ``|value| <= tol`` or the bracket is narrower than ``width``.
    A bracket that collapses onto a jump rather than a zero raises
    :class:`LocalizationError`.
    """
    fa = segment.values_lo.get(test_id, np.nan)
    fb = segment.values_hi.get(test_id, np.nan)
    if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0:
        raise PreconditionError(f"test '{test_id}' does not change sign on the segment")
    a, b = 0.0, float(segment.length)
    scale = max(abs(fa), abs(fb))
    best = None
    side = 0
    last_width = b - a
    for it in range(max_iter):
        if fa == 0.0 or fb == 0.0:
            s = a if fa == 0.0 else b
            point, vals = segment.evaluate(s)
            best = (s, point, vals)
            break
        c = b - fb * (b - a) / (fb - fa)
        if not (a < c < b) or (it % 3 == 2 and (b - a) > 0.5 * last_width):
            c = 0.5 * (a + b)
        if it % 3 == 2:
            last_width = b - a
        try:
            point, vals = segment.evaluate(c)
        except (StepFailure, TangentDegeneracyError, np.linalg.LinAlgError):
            c = 0.5 * (a + b)
            try:
                point, vals = segment.evaluate(c)
            except (StepFailure, TangentDegeneracyError, np.linalg.LinAlgError) as exc:
                raise LocalizationError(f"corrector failed inside bracket: {exc}",
                                        {"a": a, "b": b, "fa": fa, "fb": fb}) from exc
        fc = vals.get(test_id, np.nan)
        if not np.isfinite(fc):
            raise LocalizationError(f"test '{test_id}' undefined inside bracket",
                                    {"a": a, "b": b, "fa": fa, "fb": fb})
        if best is None or abs(fc) < abs(best[2][test_id]):
            best = (c, point, vals)
        if abs(fc) <= tol:
            break
        if fc * fb < 0:
            a, fa = b, fb
            b, fb = c, fc
            side = 0
        else:
            b, fb = c, fc
            # Illinois modification: halve the stale endpoint value
            if side == -1:
                fa *= 0.5
            side = -1
        if abs(b - a) <= width:
            break
    s, point, vals = best
    if abs(vals[test_id]) > 1e-3 * scale:
        raise LocalizationError(
            f"bracket for '{test_id}' collapsed without a zero (jump of the test function)",
            {"s": s, "value": vals[test_id], "scale": scale},
        )
    return segment.special(s, point, vals, test_id)

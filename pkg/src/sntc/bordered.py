"""Bordered linear solves for null vectors, the fold scalar and the BT scalar."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import BorderDegeneracyError, TangentDegeneracyError

__all__ = [
    "BorderVectors",
    "BorderedFactors",
    "solve_bordered",
    "solve_bt_bordered",
    "bordered_factors",
    "initial_borders",
    "curve_tangent",
    "RCOND_MIN",
]

RCOND_MIN = 1e-10


@dataclass(frozen=True)
class BorderVectors:
    """Borders for the bordered matrix ``[[A, p_bar], [q_bar^T, 0]]``."""

    p_bar: np.ndarray
    q_bar: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.p_bar, dtype=float))
        q = np.atleast_1d(np.asarray(self.q_bar, dtype=float))
        if p.shape != q.shape:
            raise ValueError("border vectors must have equal length")
        if not (np.any(p) and np.any(q)):
            raise ValueError("border vectors must be nonzero")
        object.__setattr__(self, "p_bar", p)
        object.__setattr__(self, "q_bar", q)

    def refreshed(self, p: np.ndarray, q: np.ndarray) -> "BorderVectors":
        """Borders for the next point: the new null vectors at unit length."""
        return BorderVectors(p / np.linalg.norm(p), q / np.linalg.norm(q))


@dataclass
class BorderedFactors:
    p: np.ndarray
    q: np.ndarray
    gamma: float
    gamma_left: float
    beta_bt: float | None = None
    u: np.ndarray | None = None
    v_gen: np.ndarray | None = None


def _factor(A: np.ndarray, borders: BorderVectors):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    if borders.p_bar.shape != (n,):
        raise ValueError(f"borders have length {borders.p_bar.size}, matrix is {n}x{n}")
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = A
    M[:n, n] = borders.p_bar
    M[n, :n] = borders.q_bar
    rcond = 1.0 / np.linalg.cond(M)
    if not rcond >= RCOND_MIN:
        raise BorderDegeneracyError(rcond)
    return sla.lu_factor(M, check_finite=False), n


def solve_bordered(A, borders: BorderVectors) -> BorderedFactors:
    """Right and left null vectors of ``A`` from the bordered systems.

    Right: ``A q + gamma p_bar = 0``, ``q_bar^T q = 1``.
    Left:  ``p^T A + gamma' q_bar^T = 0``, ``p_bar^T p = 1``.
    ``gamma`` vanishes exactly when ``A`` is singular.
    """
    lu, n = _factor(A, borders)
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    right = sla.lu_solve(lu, rhs, check_finite=False)
    left = sla.lu_solve(lu, rhs, trans=1, check_finite=False)
    return BorderedFactors(p=left[:n], q=right[:n], gamma=float(right[n]), gamma_left=float(left[n]))


def solve_bt_bordered(A, borders: BorderVectors, p: np.ndarray, q: np.ndarray):
    """Generalized-eigenvector systems solved after :func:`solve_bordered`.

    Returns ``(u, v_gen, beta_bt)`` with ``beta_bt = p^T q`` by the
    solvability condition. Only when ``beta_bt = 0`` are ``u`` and ``v_gen``
    genuine left/right generalized eigenvectors.
    """
    lu, n = _factor(A, borders)
    right = sla.lu_solve(lu, np.append(np.asarray(q, dtype=float), 0.0), check_finite=False)
    left = sla.lu_solve(lu, np.append(np.asarray(p, dtype=float), 0.0), trans=1, check_finite=False)
    return left[:n], right[:n], float(right[n])


def bordered_factors(A, borders: BorderVectors, with_bt: bool = True) -> BorderedFactors:
    bf = solve_bordered(A, borders)
    if with_bt:
        bf.u, bf.v_gen, bf.beta_bt = solve_bt_bordered(A, borders, bf.p, bf.q)
    return bf


def initial_borders(A) -> BorderVectors:
    """Borders from the singular vectors of the smallest singular value."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    U, _, Vt = np.linalg.svd(A)
    return BorderVectors(U[:, -1].copy(), Vt[-1].copy())


def curve_tangent(J_ext, prev_tangent) -> np.ndarray:
    """Unit null vector of an ``m x (m+1)`` matrix, oriented along ``prev_tangent``."""
    J_ext = np.asarray(J_ext, dtype=float)
    prev = np.asarray(prev_tangent, dtype=float)
    m1 = prev.size
    if J_ext.size == 0:
        t = np.ones(m1) if m1 == 1 else None
        if t is None:
            raise TangentDegeneracyError("empty Jacobian with more than one unknown")
    else:
        J_ext = J_ext.reshape(-1, m1)
        m = J_ext.shape[0]
        if m != m1 - 1:
            raise ValueError(f"expected {m1 - 1} rows, got {m}")
        _, s, Vt = np.linalg.svd(J_ext)
        if s[-1] <= 1e-13 * max(s[0], 1e-300):
            raise TangentDegeneracyError(f"extended Jacobian rank-deficient (sigma_min/sigma_max={s[-1] / s[0]:.2e})")
        t = Vt[-1].copy()
    t /= np.linalg.norm(t)
    if float(t @ prev) < 0:
        t = -t
    return t

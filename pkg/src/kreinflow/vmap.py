"""The unitary V(T) attached to a J-unitary T, its rotated family V(z̄T),
the real-part identity and the phase-speed form Q_z(T)."""

from __future__ import annotations

import numpy as np

from .errors import InputError, NumericalError
from .junitary import JUnitaryOperator
from .numerics import DEFAULT_TOL, Tolerances, dag, opnorm, solve_right, unitarity_defect


def _pieces(t: JUnitaryOperator):
    if not t.symmetry.balanced:
        raise InputError("V(T) needs a balanced symmetry")
    a, b, c, d = t.blocks()
    n = a.shape[0]
    one = np.eye(n)
    a_star_inv = np.linalg.solve(dag(a), one)
    d_inv = np.linalg.solve(d, one)
    return a, b, c, d, a_star_inv, d_inv


def _check_unitary(v, tol: Tolerances):
    defect = unitarity_defect(v)
    if defect > tol.unitary * max(1.0, v.shape[0] ** 0.5):
        raise NumericalError(f"V(T) is not unitary (defect {defect:.3e})")
    return v


def v_of(t: JUnitaryOperator, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """V(T) = [[(a*)^{-1}, b d^{-1}], [-d^{-1} c, d^{-1}]]."""
    a, b, c, d, a_star_inv, d_inv = _pieces(t)
    v = np.block([[a_star_inv, b @ d_inv], [-d_inv @ c, d_inv]])
    return _check_unitary(v, tol)


def v_of_z(t: JUnitaryOperator, z: complex, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """V(z̄T) = [[z̄(a*)^{-1}, b d^{-1}], [-d^{-1} c, z d^{-1}]] for |z| = 1."""
    if abs(abs(z) - 1) > 1e-12:
        raise InputError("z must lie on the unit circle")
    a, b, c, d, a_star_inv, d_inv = _pieces(t)
    v = np.block([[np.conj(z) * a_star_inv, b @ d_inv], [-d_inv @ c, z * d_inv]])
    return _check_unitary(v, tol)


def re_v(t: JUnitaryOperator) -> np.ndarray:
    """(1 + T)(1 + T*T)^{-1}(1 + T)* - 1, with T in the standard basis."""
    m = t.standard_matrix()
    one = np.eye(m.shape[0])
    x = one + m
    return solve_right(x, one + dag(m) @ m) @ dag(x) - one


def q_form(t: JUnitaryOperator, z: complex) -> np.ndarray:
    """Q_z(T) = [[-(a*a)^{-1}, -z a^{-1} b d^{-1}], [h.c., (d d*)^{-1}]]."""
    if abs(abs(z) - 1) > 1e-12:
        raise InputError("z must lie on the unit circle")
    a, b, c, d, _, d_inv = _pieces(t)
    one = np.eye(a.shape[0])
    top = -np.linalg.solve(dag(a) @ a, one)
    off = -z * np.linalg.solve(a, b) @ d_inv
    bottom = np.linalg.solve(d @ dag(d), one)
    q = np.block([[top, off], [dag(off), bottom]])
    return (q + dag(q)) / 2


def q_form_min_abs_eig(t: JUnitaryOperator, z: complex) -> float:
    return float(np.min(np.abs(np.linalg.eigvalsh(q_form(t, z)))))


def path_derivative_form(t: JUnitaryOperator, dt) -> np.ndarray:
    """V(T)* dV(T) predicted from T*J dT by the congruence with
    B = [[1, 0], [-d^{-1}c, d^{-1}]]."""
    a, b, c, d, _, d_inv = _pieces(t)
    n = a.shape[0]
    u = t.symmetry.standard_basis()
    m = t.standard_matrix()
    dm = dag(u) @ np.asarray(dt) @ u
    jstd = np.diag(np.r_[np.ones(n), -np.ones(n)])
    bmat = np.block([[np.eye(n), np.zeros((n, n))], [-d_inv @ c, d_inv]])
    return dag(bmat) @ (dag(m) @ jstd @ dm) @ bmat


def mobius_derivative_form(t: JUnitaryOperator, dt, u) -> np.ndarray:
    """(T·u)* d(T·u) predicted from T*J dT for a unitary u."""
    a, b, c, d = t.blocks()
    n = a.shape[0]
    s = t.symmetry.standard_basis()
    m = t.standard_matrix()
    dm = dag(s) @ np.asarray(dt) @ s
    jstd = np.diag(np.r_[np.ones(n), -np.ones(n)])
    w = np.linalg.solve((c @ u + d).T, np.eye(n)).T  # (cu + d)^{-1}
    col = np.vstack([u, np.eye(n)]) @ w
    return dag(col) @ (dag(m) @ jstd @ dm) @ col


def circle_scan(t: JUnitaryOperator, samples: int = 1024,
                tol: Tolerances = DEFAULT_TOL) -> list:
    """Grid cells [z_k, z_{k+1}] on which an eigenphase of V(z̄T) passes 0.

    An empty list means the grid sees no circle eigenvalue of T.
    """
    ts = 2 * np.pi * np.arange(samples + 1) / samples
    phases = []
    for s in ts:
        phases.append(np.sort(np.angle(np.linalg.eigvals(v_of_z(t, np.exp(1j * s), tol)))))
    hits = []
    for k in range(samples):
        lo, hi = phases[k], phases[k + 1]
        near = np.min(np.abs(lo)) < np.pi / 2 or np.min(np.abs(hi)) < np.pi / 2
        crossed = np.sum(lo > 0) != np.sum(hi > 0) or np.min(np.abs(lo)) < tol.phase_window
        if near and crossed:
            hits.append((float(ts[k]), float(ts[k + 1])))
    return hits


def finite_difference(f, s: float, step: float):
    return (f(s + step) - f(s - step)) / (2 * step)


def speed_form_fd(t: JUnitaryOperator, z: complex, step: float | None = None,
                  tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """(1/i) V(e^{-is}T)* d/ds V(e^{-is}T) at e^{is} = z, by central differences."""
    step = tol.fd_step if step is None else step
    s0 = float(np.angle(z))
    v0 = v_of_z(t, np.exp(1j * s0), tol)
    dv = finite_difference(lambda s: v_of_z(t, np.exp(1j * s), tol), s0, step)
    return dag(v0) @ dv / 1j


def norm_diff(x, y) -> float:
    return opnorm(np.asarray(x) - np.asarray(y))

"""Lagrangian frames and their stereographic projection onto unitaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError
from .krein_core import FundamentalSymmetry, angle_spectrum, as_frame, standard_j
from .numerics import DEFAULT_TOL, Tolerances, dag, opnorm, unitarity_defect


@dataclass(frozen=True, eq=False)
class LagrangianFrame:
    frame: np.ndarray
    symmetry: FundamentalSymmetry

    @property
    def n(self) -> int:
        return self.frame.shape[1]


def lagrangian_frame(phi, symmetry: FundamentalSymmetry,
                     tol: Tolerances = DEFAULT_TOL) -> LagrangianFrame:
    if not symmetry.balanced:
        raise InputError("Lagrangian frames need a balanced symmetry")
    f = as_frame(phi, tol)
    if f.shape != (symmetry.dim, symmetry.dim // 2):
        raise InputError(f"Lagrangian frame must be {symmetry.dim}x{symmetry.dim // 2}")
    iso = opnorm(dag(f) @ symmetry.matrix @ f)
    if iso > 1e-9:
        raise InputError(f"frame is not isotropic: |Phi*J Phi| = {iso:.3e}")
    return LagrangianFrame(f, symmetry)


def standard_reference(n: int) -> LagrangianFrame:
    """The frame 2^{-1/2}(1; 1) for J = diag(1, -1)."""
    one = np.eye(n, dtype=complex)
    return LagrangianFrame(np.vstack([one, one]) / np.sqrt(2), standard_j(n))


def frame_from_blocks(a, b) -> LagrangianFrame:
    """Lagrangian frame spanned by (a; b) for the standard J, with a, b unitary-ish."""
    m = np.vstack([np.asarray(a, complex), np.asarray(b, complex)])
    u, _, vh = np.linalg.svd(m, full_matrices=False)
    return lagrangian_frame(u @ vh, standard_j(m.shape[1]))


def _check_pair(phi: LagrangianFrame, psi: LagrangianFrame):
    if phi.symmetry.dim != psi.symmetry.dim or \
            opnorm(phi.symmetry.matrix - psi.symmetry.matrix) > 1e-12:
        raise InputError("frames refer to different symmetries")


def stereographic(phi: LagrangianFrame, psi: LagrangianFrame,
                  tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """The unitary (x + y)(x - y)^{-1}, where Phi = Psi x + J Psi y."""
    _check_pair(phi, psi)
    j = psi.symmetry.matrix
    x = dag(psi.frame) @ phi.frame
    y = dag(psi.frame) @ j @ phi.frame
    u = np.linalg.solve((x - y).T, (x + y).T).T
    defect = unitarity_defect(u)
    if defect > tol.unitary:
        raise NumericalError(f"stereographic image not unitary (defect {defect:.3e})")
    return u


def stereographic_inverse(u, psi: LagrangianFrame,
                          tol: Tolerances = DEFAULT_TOL) -> LagrangianFrame:
    u = np.asarray(u, dtype=complex)
    if u.shape != (psi.n, psi.n) or unitarity_defect(u) > tol.unitary:
        raise InputError("stereographic inverse needs a unitary of matching size")
    one = np.eye(psi.n)
    jpsi = psi.symmetry.matrix @ psi.frame
    phi = psi.frame @ (u + one) / 2 + jpsi @ (u - one) / 2
    return lagrangian_frame(phi, psi.symmetry, tol)


def _phases(u) -> np.ndarray:
    return np.angle(np.linalg.eigvals(u))


def intersection_dim(phi: LagrangianFrame, psi: LagrangianFrame,
                     eps: float | None = None, tol: Tolerances = DEFAULT_TOL) -> int:
    """Dimension of span(Phi) ∩ span(Psi), read off at eigenvalue 1 of pi_Psi(Phi)."""
    eps = tol.intersection if eps is None else eps
    return int(np.sum(np.abs(_phases(stereographic(phi, psi, tol))) <= eps))


def angle_phase_link(phi: LagrangianFrame, psi: LagrangianFrame,
                     tol: Tolerances = DEFAULT_TOL):
    """Half the absolute eigenphases of pi_Psi(Phi), paired with the principal angles.

    Both lists are sorted; a mismatch above 1e-8 raises.
    """
    halves = np.sort(np.abs(_phases(stereographic(phi, psi, tol))) / 2)
    angles = angle_spectrum(phi.frame, psi.frame)
    if np.max(np.abs(halves - angles)) > 1e-8:
        raise NumericalError("eigenphases and principal angles do not pair up")
    return halves, angles


def act_on_frame(t, phi: LagrangianFrame) -> LagrangianFrame:
    """T·Phi: the polar part of T Phi, which is again a Lagrangian frame."""
    tp = np.asarray(t) @ phi.frame
    u, _, vh = np.linalg.svd(tp, full_matrices=False)
    return LagrangianFrame(u @ vh, phi.symmetry)

"""Fundamental symmetries, frames, inertia and the associated projections."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateError, InputError
from .numerics import (DEFAULT_TOL, Tolerances, as_matrix, dag, hermitian_eig,
                       matrix_from_json, matrix_to_json, opnorm)

KINDS = ("standard-J", "standard-G", "general")


class InertiaTriple(NamedTuple):
    nu_plus: int
    nu_minus: int
    nu_zero: int

    @property
    def signature(self) -> int:
        return self.nu_plus - self.nu_minus

    @property
    def dim(self) -> int:
        return self.nu_plus + self.nu_minus + self.nu_zero

    def __add__(self, other):
        return InertiaTriple(*(a + b for a, b in zip(self, other)))


@dataclass(frozen=True, eq=False)
class FundamentalSymmetry:
    """A self-adjoint involution together with its inertia."""

    matrix: np.ndarray
    kind: str
    n_plus: int
    n_minus: int

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def balanced(self) -> bool:
        return self.n_plus == self.n_minus

    def standard_basis(self) -> np.ndarray:
        """Unitary U with U* J U = diag(1_{n+}, -1_{n-})."""
        if self.kind == "standard-J":
            return np.eye(self.dim, dtype=complex)
        if self.kind == "standard-G":
            return dag(cayley(self.dim // 2))
        w, v = np.linalg.eigh(self.matrix)
        order = np.argsort(-w, kind="stable")
        return v[:, order]

    def to_json(self) -> dict:
        n = self.dim // 2 if self.kind != "general" else self.dim
        return {"kind": self.kind, "n": n, "matrix": matrix_to_json(self.matrix)}


def symmetry_from_matrix(m, kind: str = "general") -> FundamentalSymmetry:
    j = as_matrix(m, square=True)
    if kind not in KINDS:
        raise InputError(f"unknown symmetry kind {kind!r}")
    if opnorm(j - dag(j)) > 1e-12 * max(opnorm(j), 1.0):
        raise InputError("fundamental symmetry must be self-adjoint")
    if opnorm(j @ j - np.eye(j.shape[0])) > 1e-12:
        raise InputError("fundamental symmetry must square to the identity")
    w = np.linalg.eigvalsh((j + dag(j)) / 2)
    return FundamentalSymmetry(j, kind, int(np.sum(w > 0)), int(np.sum(w < 0)))


def symmetry_from_json(obj) -> FundamentalSymmetry:
    if not isinstance(obj, dict):
        raise InputError("symmetry must be a JSON object")
    extra = set(obj) - {"kind", "n", "matrix"}
    if extra:
        raise InputError(f"unknown symmetry keys: {sorted(extra)}")
    kind = obj.get("kind", "general")
    if kind == "standard-J" and "matrix" not in obj:
        return standard_j(int(obj["n"]))
    if kind == "standard-G" and "matrix" not in obj:
        return standard_g(int(obj["n"]))
    if "matrix" not in obj:
        raise InputError("general symmetry needs a matrix")
    sym = symmetry_from_matrix(matrix_from_json(obj["matrix"]), kind)
    if kind == "standard-J" and opnorm(sym.matrix - standard_j(sym.dim // 2).matrix) > 1e-12:
        raise InputError("matrix does not match the standard J form")
    if kind == "standard-G" and opnorm(sym.matrix - standard_g(sym.dim // 2).matrix) > 1e-12:
        raise InputError("matrix does not match the standard G form")
    return sym


def diagonal_symmetry(signs) -> FundamentalSymmetry:
    """J = diag(signs) with entries ±1, e.g. an unbalanced (1, 1, -1)."""
    s = np.asarray(signs, dtype=float)
    if not np.all(np.abs(s) == 1):
        raise InputError("signs must be ±1")
    n_plus = int(np.sum(s > 0))
    kind = "general"
    if n_plus * 2 == len(s) and np.all(s[:n_plus] > 0):
        kind = "standard-J"
    return FundamentalSymmetry(np.diag(s).astype(complex), kind, n_plus, len(s) - n_plus)


def standard_j(n: int) -> FundamentalSymmetry:
    if n < 1:
        raise InputError("n must be positive")
    j = np.diag(np.r_[np.ones(n), -np.ones(n)]).astype(complex)
    return FundamentalSymmetry(j, "standard-J", n, n)


def standard_g(n: int) -> FundamentalSymmetry:
    if n < 1:
        raise InputError("n must be positive")
    one = np.eye(n)
    g = np.block([[0 * one, -1j * one], [1j * one, 0 * one]])
    return FundamentalSymmetry(g, "standard-G", n, n)


def cayley(n: int) -> np.ndarray:
    """The unitary C with C* J C = G."""
    one = np.eye(n)
    return np.block([[one, -1j * one], [one, 1j * one]]) / np.sqrt(2)


def standard_symmetries(n: int):
    return standard_j(n), standard_g(n), cayley(n)


def as_frame(phi, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Validate an isometry, repairing small drift by re-orthonormalization."""
    m = as_matrix(phi)
    if m.shape[1] > m.shape[0]:
        raise InputError("a frame cannot have more columns than rows")
    defect = opnorm(dag(m) @ m - np.eye(m.shape[1]))
    if defect <= tol.frame:
        return m
    if defect <= tol.frame_repair:
        q, r = np.linalg.qr(m)
        # keep the column orientation of the input
        return q * np.sign(np.diag(r).real + (np.diag(r).real == 0))
    raise InputError(f"not a frame: |Phi*Phi - 1| = {defect:.3e}")


def orthonormal_frame(m) -> np.ndarray:
    """Orthonormal frame for the column span of a full-rank matrix."""
    q, _ = np.linalg.qr(as_matrix(m))
    return q


def inertia_of_hermitian(h, eps: float | None = None,
                         tol: Tolerances = DEFAULT_TOL) -> InertiaTriple:
    m = np.asarray(h, dtype=complex)
    if m.size == 0:
        return InertiaTriple(0, 0, 0)
    w, _ = hermitian_eig(m, tol)
    band = (tol.inertia if eps is None else eps) * opnorm(m)
    return InertiaTriple(int(np.sum(w > band)), int(np.sum(w < -band)),
                         int(np.sum(np.abs(w) <= band)))


def _jmat(j) -> np.ndarray:
    return j.matrix if isinstance(j, FundamentalSymmetry) else np.asarray(j)


def subspace_inertia(phi, j, tol: Tolerances = DEFAULT_TOL) -> InertiaTriple:
    """Inertia of the form Phi* J Phi restricted to span(Phi).

    The zero band is measured against |J| = 1, so it does not shrink with
    the form itself.
    """
    jm = _jmat(j)
    phi = np.asarray(phi)
    if phi.shape[0] != jm.shape[0]:
        raise InputError("frame and symmetry dimensions differ")
    if phi.shape[1] == 0:
        return InertiaTriple(0, 0, 0)
    form = dag(phi) @ jm @ phi
    w, _ = hermitian_eig((form + dag(form)) / 2, tol)
    band = tol.inertia
    return InertiaTriple(int(np.sum(w > band)), int(np.sum(w < -band)),
                         int(np.sum(np.abs(w) <= band)))


def j_orthogonal_projection(phi, j, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Projection onto span(Phi) along its J-orthogonal complement."""
    jm = _jmat(j)
    gram = dag(phi) @ jm @ phi
    smin = np.linalg.svd(gram, compute_uv=False).min()
    if smin <= tol.degenerate * opnorm(jm):
        raise DegenerateError(f"subspace is degenerate for J (sigma_min = {smin:.3e})")
    return phi @ np.linalg.solve(gram, dag(phi) @ jm)


def oblique_projection(phi, psi_perp, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Idempotent with range span(Phi) whose kernel is the complement of span(Psi_perp)."""
    pairing = dag(psi_perp) @ phi
    if pairing.shape[0] != pairing.shape[1]:
        raise InputError("frames must have the same number of columns")
    smin = np.linalg.svd(pairing, compute_uv=False).min()
    if smin <= tol.degenerate:
        raise DegenerateError(f"subspaces not transversal (sigma_min = {smin:.3e})")
    return phi @ np.linalg.solve(pairing, dag(psi_perp))


def angle_spectrum(phi, psi) -> np.ndarray:
    """Principal angles in [0, pi/2], ascending.

    Cosines are the clamped square roots of the eigenvalues of
    Psi* Phi Phi* Psi; small angles are read from the sines instead, where
    arccos loses half the digits.
    """
    if phi.shape[1] < psi.shape[1]:
        raise InputError("first frame must span at least as many dimensions")
    overlap = dag(psi) @ phi
    c2 = np.linalg.eigvalsh(overlap @ dag(overlap))
    cos = np.sort(np.sqrt(np.clip(c2, 0.0, 1.0)))[::-1]
    sin = np.sort(np.linalg.svd(psi - phi @ (dag(phi) @ psi), compute_uv=False))
    sin = np.clip(sin, 0.0, 1.0)
    angles = np.where(sin < cos, np.arcsin(sin), np.arccos(cos))
    return np.sort(angles)

"""Dense numerical primitives shared by the rest of the package.

Matrices are plain complex ``numpy`` arrays.  Every routine here is a pure
function of its arguments.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import AmbiguousSplitError, InputError, NumericalError


@dataclass(frozen=True)
class Tolerances:
    """Central table of numerical thresholds.

    Relative tolerances are scaled by an operator norm where the caller says
    so.  Override individual fields with :func:`dataclasses.replace` or
    :meth:`with_overrides`.
    """

    eig: float = 1e-9
    invariance: float = 1e-8
    cluster: float = 1e-7
    hermitian: float = 1e-10
    frame: float = 1e-10
    frame_repair: float = 1e-6
    degenerate: float = 1e-9
    inertia: float = 1e-9
    junitary: float = 1e-8
    unitary: float = 1e-9
    intersection: float = 1e-7
    circle: float = 1e-8
    fd_step: float = 1e-5
    fd_tol: float = 1e-6
    delta_max: float = np.pi / 8
    overlap: float = 0.5
    halvings: int = 12
    bisect: float = 1e-10
    phase_window: float = 1e-6
    integrator: float = 1e-10

    def with_overrides(self, **values) -> "Tolerances":
        names = {f.name: f.type for f in dataclasses.fields(self)}
        clean = {}
        for key, val in values.items():
            if key not in names:
                raise InputError(f"unknown tolerance {key!r}")
            clean[key] = int(val) if key == "halvings" else float(val)
        return dataclasses.replace(self, **clean)


DEFAULT_TOL = Tolerances()


def as_matrix(a, square: bool = False) -> np.ndarray:
    """Return ``a`` as a finite 2-d complex array."""
    m = np.array(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise InputError(f"expected a non-empty matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError("matrix has non-finite entries")
    if square and m.shape[0] != m.shape[1]:
        raise InputError(f"expected a square matrix, got shape {m.shape}")
    return m


def opnorm(a: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def dag(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def matrix_to_json(a) -> dict:
    m = as_matrix(a)
    flat = m.ravel()
    return {
        "rows": m.shape[0],
        "cols": m.shape[1],
        "re": [float(x) for x in flat.real],
        "im": [float(x) for x in flat.imag],
    }


def matrix_from_json(obj) -> np.ndarray:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict):
        raise InputError("matrix must be a JSON object")
    extra = set(obj) - {"rows", "cols", "re", "im"}
    if extra:
        raise InputError(f"unknown matrix keys: {sorted(extra)}")
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", [0.0] * (rows * cols)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed matrix: {exc}") from None
    if re.shape != (rows * cols,) or im.shape != (rows * cols,):
        raise InputError("matrix entry count does not match rows*cols")
    return as_matrix((re + 1j * im).reshape(rows, cols))


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    condition_flags: np.ndarray
    residuals: np.ndarray


def _order(values: np.ndarray) -> np.ndarray:
    # modulus first, then phase in (-pi, pi]; rounding keeps ties stable
    mods = np.round(np.abs(values), 12)
    phases = np.round(np.angle(values), 12)
    return np.lexsort((phases, mods))


def dense_eig(a, tol: Tolerances = DEFAULT_TOL) -> EigenDecomposition:
    """Eigenvalues and unit right eigenvectors, ordered by modulus then phase.

    Pairs whose left/right eigenvector overlap is tiny (ill-conditioned
    eigenvalues, typically near Jordan structure) are flagged.
    """
    m = as_matrix(a, square=True)
    try:
        w, vl, vr = sla.eig(m, left=True, right=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from None
    if not np.all(np.isfinite(w)):
        raise NumericalError("eigensolver returned non-finite values")
    idx = _order(w)
    w, vl, vr = w[idx], vl[:, idx], vr[:, idx]
    vr = vr / np.linalg.norm(vr, axis=0)
    vl = vl / np.linalg.norm(vl, axis=0)
    scale = max(opnorm(m), np.finfo(float).tiny)
    res = np.linalg.norm(m @ vr - vr * w, axis=0)
    if np.any(res > tol.eig * scale):
        raise NumericalError(
            f"eigen-residual {res.max():.3e} exceeds {tol.eig:g}*|A|")
    cond = np.abs(np.sum(vl.conj() * vr, axis=0))
    return EigenDecomposition(w, vr, cond < 1e-8, res)


def eigvals_sorted(a) -> np.ndarray:
    w = sla.eigvals(as_matrix(a, square=True))
    return w[_order(w)]


def _predicate_is_stable(pred, lam: complex, radius: float) -> bool:
    inside = bool(pred(lam))
    for k in range(8):
        probe = lam + radius * np.exp(2j * np.pi * k / 8)
        if bool(pred(probe)) != inside:
            return False
    return True


def invariant_subspace_for_region(a, region, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal frame of the invariant subspace for eigenvalues in a region.

    ``region`` is a predicate on complex numbers.  The frame comes from an
    ordered complex Schur form, so generalized eigenspaces are handled
    without forming eigenvector bases.  Eigenvalues closer than
    ``tol.cluster`` (relative) to the region boundary raise
    :class:`AmbiguousSplitError`.
    """
    m = as_matrix(a, square=True)
    w = sla.eigvals(m)
    for lam in w:
        if not _predicate_is_stable(region, lam, tol.cluster * max(1.0, abs(lam))):
            raise AmbiguousSplitError(
                f"eigenvalue {lam:.10g} lies on the region boundary", eigenvalue=lam)
    expected = int(sum(bool(region(lam)) for lam in w))
    if expected == 0:
        return np.zeros((m.shape[0], 0), dtype=complex)
    if expected == m.shape[0]:
        return np.eye(m.shape[0], dtype=complex)
    t, z, sdim = sla.schur(m, output="complex", sort=lambda x: bool(region(x)))
    if sdim != expected:
        raise NumericalError(
            f"Schur reordering selected {sdim} eigenvalues, expected {expected}")
    phi = z[:, :sdim]
    resid = opnorm(m @ phi - phi @ (dag(phi) @ m @ phi))
    if resid > tol.invariance * max(opnorm(m), 1.0):
        raise NumericalError(f"invariance residual {resid:.3e} too large")
    return phi


def hermitian_eig(h, tol: Tolerances = DEFAULT_TOL):
    """Ascending real eigenvalues and orthonormal eigenvectors."""
    m = as_matrix(h, square=True)
    scale = max(opnorm(m), 1e-300)
    if opnorm(m - dag(m)) > tol.hermitian * scale:
        raise InputError("matrix is not Hermitian")
    return np.linalg.eigh((m + dag(m)) / 2)


def hermitian_function(h, f) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix by spectral calculus."""
    w, v = np.linalg.eigh((h + dag(h)) / 2)
    return (v * f(w)) @ dag(v)


def matrix_exp(a) -> np.ndarray:
    return sla.expm(as_matrix(a, square=True))


def unitary_eig(u):
    """Eigen-decomposition of a unitary (normal) matrix via complex Schur.

    Returns eigenvalues and an orthonormal eigenbasis, which stays well
    defined inside degenerate clusters.
    """
    t, z = sla.schur(as_matrix(u, square=True), output="complex")
    return np.diag(t).copy(), z


def unitarity_defect(u) -> float:
    return opnorm(dag(u) @ u - np.eye(u.shape[1]))


def cluster_values(values, radius: float) -> list[list[int]]:
    """Single-linkage clusters of complex numbers (relative radius)."""
    vals = np.asarray(values)
    n = len(vals)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(vals[i] - vals[j]) <= radius * max(1.0, abs(vals[i]), abs(vals[j])):
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def solve_right(x, m) -> np.ndarray:
    """Return x @ inv(m) without forming the inverse."""
    return np.linalg.solve(m.T, x.T).T


def safe_inv(m) -> np.ndarray:
    if m.size == 0:
        return m.copy()
    return np.linalg.inv(m)

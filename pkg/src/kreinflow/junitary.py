"""J-unitary operators: validation, Möbius action, spectral splitting,
eigenvalue inertia, signature, block diagonalization, gap functional and
stability probes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (AmbiguousSplitError, DegenerateError, GapError, InputError,
                     NotJUnitaryError, NumericalError)
from .krein_core import (FundamentalSymmetry, InertiaTriple, standard_j,
                         subspace_inertia)
from .numerics import (DEFAULT_TOL, Tolerances, as_matrix, cluster_values, dag,
                       hermitian_function, invariant_subspace_for_region,
                       matrix_exp, opnorm, safe_inv, solve_right)


@dataclass(frozen=True, eq=False)
class JUnitaryOperator:
    matrix: np.ndarray
    symmetry: FundamentalSymmetry
    residual: float

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def standard_matrix(self) -> np.ndarray:
        """The operator written in a basis where J = diag(1, -1)."""
        u = self.symmetry.standard_basis()
        return dag(u) @ self.matrix @ u

    def blocks(self):
        """(a, b, c, d) of the standard-basis matrix; requires balance."""
        if not self.symmetry.balanced:
            raise InputError("block form needs a balanced symmetry")
        t = self.standard_matrix()
        n = self.dim // 2
        return t[:n, :n], t[:n, n:], t[n:, :n], t[n:, n:]

    def inverse(self) -> "JUnitaryOperator":
        j = self.symmetry.matrix
        return JUnitaryOperator(j @ dag(self.matrix) @ j, self.symmetry, self.residual)

    def adjoint(self) -> "JUnitaryOperator":
        return JUnitaryOperator(dag(self.matrix), self.symmetry, self.residual)

    def scaled(self, z: complex) -> "JUnitaryOperator":
        return JUnitaryOperator(z * self.matrix, self.symmetry, self.residual)


def validate(t, symmetry: FundamentalSymmetry,
             tol: Tolerances = DEFAULT_TOL) -> JUnitaryOperator:
    m = as_matrix(t, square=True)
    j = symmetry.matrix
    if m.shape != j.shape:
        raise InputError(f"operator shape {m.shape} does not match symmetry {j.shape}")
    residual = opnorm(dag(m) @ j @ m - j)
    if residual > tol.junitary * max(opnorm(m) ** 2, 1.0):
        raise NotJUnitaryError(f"not J-unitary: |T*JT - J| = {residual:.3e}", residual)
    op = JUnitaryOperator(m, symmetry, residual)
    if symmetry.balanced:
        a, b, c, d = op.blocks()
        for name, blk in (("a", a), ("d", d)):
            if np.linalg.svd(blk, compute_uv=False).min() < 1e-12:
                raise NotJUnitaryError(f"block {name} is singular", residual)
        if opnorm(np.linalg.solve(a, b)) >= 1 or opnorm(np.linalg.solve(d, c)) >= 1:
            raise NotJUnitaryError("block contraction bound violated", residual)
    return op


def j_anti_selfadjoint_defect(k, symmetry: FundamentalSymmetry) -> float:
    j = symmetry.matrix
    return opnorm(j @ k + dag(k) @ j)


def random_generator(symmetry: FundamentalSymmetry, rng: np.random.Generator,
                     scale: float = 1.0) -> np.ndarray:
    """Random K with JK = -K*J, i.e. K = iJH for Hermitian H."""
    n = symmetry.dim
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = (x + dag(x)) / (2 * np.sqrt(n))
    return 1j * scale * symmetry.matrix @ h


def random_junitary(symmetry: FundamentalSymmetry, rng: np.random.Generator,
                    scale: float = 0.5) -> JUnitaryOperator:
    t = matrix_exp(random_generator(symmetry, rng, scale))
    return validate(t, symmetry)


def planted_junitary(n: int, rng: np.random.Generator, circle_plus=(), circle_minus=(),
                     hyperbolic=(), mixing: float = 0.4) -> JUnitaryOperator:
    """Balanced J-unitary M D M^{-1} with prescribed spectrum.

    ``circle_plus``/``circle_minus`` are phases of definite circle
    eigenvalues living on positive/negative directions of J, and
    ``hyperbolic`` lists complex numbers mu (|mu| > 1) giving pairs
    mu, 1/conj(mu).  The counts must fill n positive and n negative slots.
    """
    hyper = list(hyperbolic)
    plus, minus = list(circle_plus), list(circle_minus)
    if len(plus) + len(hyper) != n or len(minus) + len(hyper) != n:
        raise InputError("planted spectrum does not fill the space")
    d = np.zeros((2 * n, 2 * n), dtype=complex)
    for i, ph in enumerate(plus):
        d[i, i] = np.exp(1j * ph)
    for i, ph in enumerate(minus):
        d[n + i, n + i] = np.exp(1j * ph)
    for k, mu in enumerate(hyper):
        p, q = len(plus) + k, n + len(minus) + k
        eta, ph = np.log(abs(mu)), np.angle(mu)
        d[p, p] = d[q, q] = np.exp(1j * ph) * np.cosh(eta)
        d[p, q] = d[q, p] = np.exp(1j * ph) * np.sinh(eta)
    sym = standard_j(n)
    m = matrix_exp(random_generator(sym, rng, mixing))
    j = sym.matrix
    return validate(m @ d @ j @ dag(m) @ j, sym)


def mobius_act(t: JUnitaryOperator, u) -> np.ndarray:
    """(a u + b)(c u + d)^{-1}."""
    a, b, c, d = t.blocks()
    u = np.asarray(u, dtype=complex)
    den = c @ u + d
    if np.linalg.svd(den, compute_uv=False).min() < 1e-12:
        raise NumericalError("c u + d is singular")
    return solve_right(a @ u + b, den)


@dataclass(frozen=True, eq=False)
class EigenGroup:
    value: complex
    members: np.ndarray
    frame: np.ndarray
    on_circle: bool
    cls: str = ""

    @property
    def multiplicity(self) -> int:
        return len(self.members)


@dataclass(frozen=True, eq=False)
class SpectralSplit:
    h: float
    groups: list
    frames: dict
    symmetry: FundamentalSymmetry
    j_orthogonality_residual: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.symmetry.dim

    def group_inertias(self, tol: Tolerances = DEFAULT_TOL) -> list:
        return [eigenvalue_inertia(self, g, tol) for g in self.groups]

    def signature_by_groups(self, tol: Tolerances = DEFAULT_TOL) -> int:
        return sum(eigenvalue_inertia(self, g, tol).signature
                   for g in self.groups if g.cls == "annulus")

    def to_json(self, tol: Tolerances = DEFAULT_TOL) -> dict:
        out = []
        for g in self.groups:
            nu = eigenvalue_inertia(self, g, tol)
            out.append({"re": float(g.value.real), "im": float(g.value.imag),
                        "multiplicity": g.multiplicity, "class": g.cls,
                        "inertia": [nu.nu_plus, nu.nu_minus, nu.nu_zero]})
        return {"h": float(self.h), "groups": out}


def _group_frames(m: np.ndarray, values: np.ndarray, tol: Tolerances):
    clusters = cluster_values(values, tol.cluster)
    centers = [values[c].mean() for c in clusters]
    groups = []
    for idx, cl in enumerate(clusters):
        c = centers[idx]
        others = [abs(c - centers[k]) for k in range(len(centers)) if k != idx]
        spread = max(abs(values[i] - c) for i in cl)
        radius = 0.5 * min(others) if others else 1.0 + abs(c)
        radius = max(radius, 2 * spread + 1e-12)
        frame = invariant_subspace_for_region(m, lambda z, c=c, r=radius: abs(z - c) < r, tol)
        if frame.shape[1] != len(cl):
            raise NumericalError("Riesz frame dimension differs from cluster size")
        on_circle = abs(abs(c) - 1.0) <= tol.cluster
        groups.append(EigenGroup(complex(c), values[cl], frame, on_circle))
    return groups


def eigen_groups(t: JUnitaryOperator, tol: Tolerances = DEFAULT_TOL) -> list:
    """Eigenvalue clusters with Riesz-range frames, without an annulus split."""
    values = np.linalg.eigvals(t.matrix)
    return _group_frames(t.matrix, values, tol)


def admissible_h_intervals(t: JUnitaryOperator, tol: Tolerances = DEFAULT_TOL,
                           h_max: float = 50.0) -> list:
    """Open intervals of h > 0 for which the annulus boundary avoids the spectrum."""
    rho = np.abs(np.log(np.abs(np.linalg.eigvals(t.matrix))))
    cuts = sorted(r for r in set(np.round(rho, 12)) if r > tol.cluster)
    edges = [0.0] + cuts + [h_max]
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        lo_in, hi_in = lo + 2 * tol.cluster * max(1, lo), hi - 2 * tol.cluster * max(1, hi)
        if hi_in > lo_in:
            out.append((float(lo_in), float(hi_in)))
    return out


def default_h(t: JUnitaryOperator, tol: Tolerances = DEFAULT_TOL) -> float:
    """Midpoint of the innermost admissible h interval."""
    intervals = admissible_h_intervals(t, tol)
    if not intervals:
        raise GapError("no admissible annulus")
    lo, hi = intervals[0]
    if len(intervals) > 1:
        return 0.5 * (lo + hi)
    return lo + min(0.5, 0.5 * (hi - lo))


def spectral_split(t: JUnitaryOperator, h: float,
                   tol: Tolerances = DEFAULT_TOL) -> SpectralSplit:
    """Split the spectrum into |z| <= e^{-h}, the open annulus, and |z| >= e^{h}."""
    if not h > 0:
        raise InputError("h must be positive")
    m = t.matrix
    values = np.linalg.eigvals(m)
    for lam in values:
        for r in (np.exp(-h), np.exp(h)):
            if abs(abs(lam) - r) <= tol.cluster * r:
                raise GapError(
                    f"eigenvalue {lam:.10g} on the annulus boundary; choose different h",
                    eigenvalue=lam, admissible=admissible_h_intervals(t, tol))
    groups = []
    for g in _group_frames(m, values, tol):
        r = abs(g.value)
        cls = "inside" if r <= np.exp(-h) else "outside" if r >= np.exp(h) else "annulus"
        groups.append(EigenGroup(g.value, g.members, g.frame, g.on_circle, cls))
    _check_pairing(groups, tol)
    frames = {
        "inside": invariant_subspace_for_region(m, lambda z: abs(z) < np.exp(-h), tol),
        "annulus": invariant_subspace_for_region(
            m, lambda z: np.exp(-h) < abs(z) < np.exp(h), tol),
        "outside": invariant_subspace_for_region(m, lambda z: abs(z) > np.exp(h), tol),
    }
    resid = _j_orthogonality(groups, t.symmetry.matrix)
    if resid > 1e-6 * max(1.0, opnorm(m) ** 2):
        raise NumericalError(f"Riesz ranges fail J-orthogonality ({resid:.3e})")
    return SpectralSplit(float(h), groups, frames, t.symmetry, resid)


def _check_pairing(groups, tol: Tolerances):
    for g in groups:
        if g.on_circle:
            continue
        mirror = 1 / np.conj(g.value)
        match = [o for o in groups
                 if abs(o.value - mirror) <= 1e-6 * max(1.0, abs(mirror))]
        if not match or match[0].multiplicity != g.multiplicity:
            raise NumericalError(f"eigenvalue {g.value:.6g} has no reflected partner")


def _j_orthogonality(groups, j) -> float:
    worst = 0.0
    for i, g in enumerate(groups):
        for o in groups[i:]:
            if abs(g.value * np.conj(o.value) - 1) <= 1e-6:
                continue
            worst = max(worst, opnorm(dag(g.frame) @ j @ o.frame))
    return worst


def eigenvalue_inertia(split: SpectralSplit, group,
                       tol: Tolerances = DEFAULT_TOL) -> InertiaTriple:
    """Inertia of one eigenvalue group.

    On the circle it is the inertia of J on the generalized eigenspace;
    off the circle the convention (mult, 0) outside and (0, mult) inside
    the unit disc applies.
    """
    g = split.groups[group] if isinstance(group, int) else group
    if g.on_circle:
        nu = subspace_inertia(g.frame, split.symmetry, tol)
        if nu.nu_zero:
            form = dag(g.frame) @ split.symmetry.matrix @ g.frame
            small = np.min(np.abs(np.linalg.eigvalsh((form + dag(form)) / 2)))
            raise DegenerateError(
                f"degenerate eigenspace (numerical) at {g.value:.6g}: "
                f"form eigenvalue {small:.3e}")
        return nu
    if abs(g.value) > 1:
        return InertiaTriple(g.multiplicity, 0, 0)
    return InertiaTriple(0, g.multiplicity, 0)


def signature(t: JUnitaryOperator, h: float | None = None,
              tol: Tolerances = DEFAULT_TOL) -> int:
    """nu_+ - nu_- of J on the Riesz range of the annulus e^{-h} < |z| < e^{h}."""
    split = spectral_split(t, default_h(t, tol) if h is None else h, tol)
    return signature_of_split(split, tol)


def signature_of_split(split: SpectralSplit, tol: Tolerances = DEFAULT_TOL) -> int:
    phi = split.frames["annulus"]
    nu = subspace_inertia(phi, split.symmetry, tol)
    if nu.nu_zero:
        raise DegenerateError("annulus subspace is degenerate for J")
    return nu.signature


@dataclass(frozen=True, eq=False)
class BlockDiagonalization:
    m: np.ndarray
    m_inv: np.ndarray
    blocks: tuple
    off_block_residual: float


def block_diagonalize(t: JUnitaryOperator, split: SpectralSplit,
                      tol: Tolerances = DEFAULT_TOL) -> BlockDiagonalization:
    """M = (Phi_<, Phi_=, Phi_>) with M^{-1} from the anti-diagonal Gram inverse."""
    j = split.symmetry.matrix
    lo, mid, hi = (split.frames[k] for k in ("inside", "annulus", "outside"))
    if lo.shape[1] != hi.shape[1]:
        raise NumericalError("inside and outside ranges differ in dimension")
    m = np.hstack([lo, mid, hi])
    k1, k2 = lo.shape[1], mid.shape[1]
    pair_lo_hi = dag(hi) @ j @ lo
    pair_hi_lo = dag(lo) @ j @ hi
    gram_mid = dag(mid) @ j @ mid
    for blk in (pair_lo_hi, gram_mid):
        if blk.size and np.linalg.svd(blk, compute_uv=False).min() < tol.degenerate:
            raise DegenerateError("Gram pairing of the Riesz ranges is singular")
    x = np.zeros((m.shape[1], m.shape[1]), dtype=complex)
    x[:k1, k1 + k2:] = safe_inv(pair_lo_hi)
    x[k1:k1 + k2, k1:k1 + k2] = safe_inv(gram_mid)
    x[k1 + k2:, :k1] = safe_inv(pair_hi_lo)
    m_inv = x @ dag(m) @ j
    d = m_inv @ t.matrix @ m
    mask = np.zeros_like(d, dtype=bool)
    for s, e in ((0, k1), (k1, k1 + k2), (k1 + k2, m.shape[1])):
        mask[s:e, s:e] = True
    resid = float(np.abs(np.where(mask, 0, d)).max()) if d.size else 0.0
    if resid > tol.invariance * max(opnorm(t.matrix), 1.0) * max(1.0, opnorm(m_inv)):
        raise NumericalError(f"off-block residual {resid:.3e} too large")
    blocks = tuple(dag(f) @ t.matrix @ f for f in (lo, mid, hi))
    return BlockDiagonalization(m, m_inv, blocks, resid)


def gap(t) -> float:
    """g(T): smallest eigenvalue of (1+T*T)^{-1/2}(1-T)*(1-T)(1+T*T)^{-1/2}."""
    a = t.matrix if isinstance(t, JUnitaryOperator) else as_matrix(t, square=True)
    one = np.eye(a.shape[0])
    s = hermitian_function(one + dag(a) @ a, lambda w: 1 / np.sqrt(w))
    x = (one - a) @ s
    return max(float(np.linalg.eigvalsh(dag(x) @ x).min()), 0.0)


@dataclass(frozen=True)
class ProbeStep:
    t: float
    eigenvalues: np.ndarray
    groups: list  # (value, multiplicity, on_circle, inertia or None)


@dataclass(frozen=True)
class ProbeReport:
    steps: list
    tracked_initial: np.ndarray
    tracked_moduli: np.ndarray
    definite_on_circle: bool
    max_modulus_defect: float


def _step_record(t: JUnitaryOperator, param: float, tol: Tolerances) -> ProbeStep:
    values = np.linalg.eigvals(t.matrix)
    recs = []
    for g in _group_frames(t.matrix, values, tol):
        nu = subspace_inertia(g.frame, t.symmetry, tol) if g.on_circle else None
        recs.append((g.value, g.multiplicity, g.on_circle, nu))
    return ProbeStep(float(param), values, recs)


def family_probe(family, grid, symmetry: FundamentalSymmetry,
                 tol: Tolerances = DEFAULT_TOL) -> ProbeReport:
    """Follow eigenvalues of a J-unitary family over a parameter grid.

    Definite circle eigenvalues at the first grid point are continued by
    nearest-neighbour assignment; the report says whether they stayed on
    the circle within ``tol.circle``.
    """
    steps = []
    tracked = None
    start = None
    moduli = []
    for s in grid:
        op = validate(family(s), symmetry, tol)
        rec = _step_record(op, s, tol)
        steps.append(rec)
        if tracked is None:
            keep = [v for v, mult, circ, nu in rec.groups
                    if circ and nu is not None and (nu.nu_plus == 0 or nu.nu_minus == 0)]
            vals = rec.eigenvalues
            idx = [int(np.argmin(np.abs(vals - v))) for v in keep]
            tracked = vals[idx] if idx else np.zeros(0, complex)
            start = tracked.copy()
        elif tracked.size:
            cost = np.abs(tracked[:, None] - rec.eigenvalues[None, :])
            rows, cols = linear_sum_assignment(cost)
            tracked = rec.eigenvalues[cols[np.argsort(rows)]]
        moduli.append(np.abs(tracked))
    moduli = np.array(moduli) if moduli else np.zeros((0, 0))
    defect = float(np.abs(moduli - 1).max()) if moduli.size else 0.0
    return ProbeReport(steps, start, moduli, defect <= tol.circle, defect)


def stability_probe(t: JUnitaryOperator, k, t_grid,
                    tol: Tolerances = DEFAULT_TOL) -> ProbeReport:
    """Eigenvalues and circle inertia of T exp(sK) along a grid of s."""
    k = as_matrix(k, square=True)
    if j_anti_selfadjoint_defect(k, t.symmetry) > tol.hermitian * max(1.0, opnorm(k)):
        raise InputError("K must satisfy JK = -K*J")
    return family_probe(lambda s: t.matrix @ matrix_exp(s * k), t_grid, t.symmetry, tol)


__all__ = [
    "JUnitaryOperator", "validate", "mobius_act", "spectral_split", "SpectralSplit",
    "EigenGroup", "eigenvalue_inertia", "signature", "block_diagonalize", "gap",
    "stability_probe", "family_probe", "admissible_h_intervals", "random_junitary",
    "random_generator", "planted_junitary", "eigen_groups", "AmbiguousSplitError",
]

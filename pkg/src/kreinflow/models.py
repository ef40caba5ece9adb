"""Model generators: the 2x2 catalog, linear Hamiltonian systems, bound-state
counting, transfer operators, the shift loop and the Harper edge problem."""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Callable

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment

from .errors import GapError, InputError, NumericalError
from .junitary import JUnitaryOperator, validate
from .krein_core import FundamentalSymmetry, standard_g, standard_j
from .numerics import DEFAULT_TOL, Tolerances, as_matrix, dag, hermitian_eig, matrix_exp, opnorm
from .specflow import Crossing, FlowReport, UnitaryPath, spectral_flow

# --- 2x2 catalog -----------------------------------------------------------

KINDS = ("boost", "rotation", "jordan", "family-E")


@dataclass(frozen=True)
class TwoByTwoExample:
    kind: str
    phi: float = 0.0
    eta: float = 0.0
    a: float = 0.0
    E: float = 0.0


def example_2x2(spec: TwoByTwoExample):
    """Return (T, closed_form) where closed_form(t) gives the two eigenvalues
    of V(e^{-it}T)."""
    phi, eta, a, E = spec.phi, spec.eta, spec.a, spec.E
    if spec.kind == "boost":
        t = np.exp(1j * phi) * np.array([[np.cosh(eta), np.sinh(eta)],
                                         [np.sinh(eta), np.cosh(eta)]])

        def closed(s):
            c = np.cos(phi - s) / np.cosh(eta)
            r = np.sqrt(max(1 - c * c, 0.0))
            return np.array([c + 1j * r, c - 1j * r])
    elif spec.kind == "rotation":
        t = np.exp(1j * phi) * np.diag([np.exp(-1j * eta), np.exp(1j * eta)])

        def closed(s):
            # the upper entry is e^{i(phi - eta - s)}, as V(T) = (a*)^{-1} forces
            return np.array([np.exp(1j * (phi - eta - s)), np.exp(-1j * (eta - s + phi))])
    elif spec.kind == "jordan":
        t = np.exp(1j * phi) * np.array([[1 - 1j * a, 1j * a], [-1j * a, 1 + 1j * a]])

        def closed(s):
            r = np.sqrt(a * a + np.sin(phi - s) ** 2)
            return np.array([np.cos(phi - s) + 1j * r, np.cos(phi - s) - 1j * r]) / (1 + 1j * a)
    elif spec.kind == "family-E":
        t = np.array([[E - 1j, E], [E, E + 1j]])

        def closed(s):
            r = np.sqrt(E * E + np.sin(s) ** 2)
            return np.array([np.cos(s) + 1j * r, np.cos(s) - 1j * r]) / (E + 1j)
    else:
        raise InputError(f"unknown example kind {spec.kind!r}")
    return validate(t, standard_j(1)), closed


def family_e(E: float) -> np.ndarray:
    return np.array([[E - 1j, E], [E, E + 1j]])


# --- Hamiltonian systems ---------------------------------------------------

class HamiltonianPath:
    """Solution of J dT/dt = i(H_t + E P_t) T by exponential-midpoint steps.

    Calling the object at an intermediate time takes one partial step from
    the nearest earlier grid point.
    """

    def __init__(self, H: Callable, P: Callable, E: float, T0: JUnitaryOperator,
                 t0: float, t1: float, steps: int, tol: Tolerances = DEFAULT_TOL):
        self.H, self.P, self.E = H, P, E
        self.sym = T0.symmetry
        self.t0, self.t1, self.steps = t0, t1, steps
        self.dt = (t1 - t0) / steps
        self.tol = tol
        self.grid = [T0.matrix]
        self.residuals = [T0.residual]
        j = self.sym.matrix
        for k in range(steps):
            t = self.grid[-1]
            nxt = self._step(t0 + k * self.dt, self.dt) @ t
            res = opnorm(dag(nxt) @ j @ nxt - j)
            if res > 1e3 * tol.integrator * max(1.0, opnorm(nxt) ** 2):
                raise NumericalError(
                    f"J-unitarity residual {res:.3e} at step {k}; reduce the step size")
            self.grid.append(nxt)
            self.residuals.append(res)

    def generator(self, t: float) -> np.ndarray:
        return 1j * self.sym.matrix @ (self.H(t) + self.E * self.P(t))

    def _step(self, t: float, h: float) -> np.ndarray:
        return matrix_exp(h * self.generator(t + h / 2))

    def __call__(self, t: float) -> JUnitaryOperator:
        k = int(np.clip(np.floor((t - self.t0) / self.dt), 0, self.steps - 1))
        rest = t - (self.t0 + k * self.dt)
        m = self._step(self.t0 + k * self.dt, rest) @ self.grid[k] if rest else self.grid[k]
        return JUnitaryOperator(m, self.sym, 0.0)

    def derivative(self, t: float) -> np.ndarray:
        return self.generator(t) @ self(t).matrix


def hamiltonian_flow(H, P, E: float, T0: JUnitaryOperator, t_range, dt: float,
                     tol: Tolerances = DEFAULT_TOL) -> HamiltonianPath:
    """Integrate J dT/dt = i(H_t + E P_t) T from T0 over t_range."""
    t0, t1 = t_range
    steps = max(1, int(round((t1 - t0) / dt)))
    as_fn = lambda x: x if callable(x) else (lambda t, m=as_matrix(x): m)
    return HamiltonianPath(as_fn(H), as_fn(P), E, T0, t0, t1, steps, tol)


# --- bound states ----------------------------------------------------------

def cayley_resolvent(h, E: float) -> np.ndarray:
    """V^E = (1 - i(H - E))(1 + i(H - E))^{-1}."""
    one = np.eye(h.shape[0])
    x = 1j * (h - E * one)
    return np.linalg.solve((one + x).T, (one - x).T).T


def bound_state_count(h, interval, tol: Tolerances = DEFAULT_TOL, report: bool = False):
    """Eigenvalues of H in (E_lo, E_hi), counted as spectral flow of E -> V^E."""
    h = as_matrix(h, square=True)
    hermitian_eig(h, tol)
    lo, hi = map(float, interval)
    if not hi > lo:
        raise InputError("interval must satisfy E_lo < E_hi")
    w = np.linalg.eigvalsh((h + dag(h)) / 2)
    for e in (lo, hi):
        if np.min(np.abs(w - e)) < 1e-8:
            raise InputError(f"interval endpoint {e} collides with an eigenvalue")
    # the phase -2 arctan(w - E) increases with E
    flow = spectral_flow(UnitaryPath(lambda e: cayley_resolvent(h, e), lo, hi), tol,
                         speeds=False)
    return (flow.total, flow) if report else flow.total


# --- transfer operators ----------------------------------------------------

def transfer_operator(h, a, symmetry: FundamentalSymmetry | None = None,
                      tol: Tolerances = DEFAULT_TOL) -> JUnitaryOperator:
    """T = [[2H A^{-1}, -A*], [A^{-1}, 0]], G-unitary."""
    h = as_matrix(h, square=True)
    a = as_matrix(a, square=True)
    n = h.shape[0]
    if np.linalg.svd(a, compute_uv=False).min() <= 1e-9:
        raise InputError("A must be invertible")
    a_inv = np.linalg.inv(a)
    t = np.block([[2 * h @ a_inv, -dag(a)], [a_inv, np.zeros((n, n))]])
    return validate(t, symmetry or standard_g(n), tol)


def transfer_eigen_sign(lam: complex, w, a) -> int:
    """Sign of the G-form -2 Im(lam w* A w) on the eigenvector (lam A w; w)."""
    val = -2 * np.imag(lam * np.vdot(w, np.asarray(a) @ w))
    return int(np.sign(val))


def transfer_circle_eigenvalues(h, a, tol: float = 1e-8) -> list:
    """Unit-circle eigenvalues of the transfer operator, via the kernel criterion
    on a fine phase grid refined by root finding."""
    h = as_matrix(h, square=True)
    a = as_matrix(a, square=True)

    def smallest(phi):
        lam = np.exp(1j * phi)
        m = 2 * h - lam * a - dag(lam * a)
        return np.linalg.eigvalsh((m + dag(m)) / 2)

    grid = np.linspace(-np.pi, np.pi, 2049)
    vals = np.array([smallest(p) for p in grid])
    out = []
    for k in range(vals.shape[1]):
        f = lambda p, k=k: smallest(p)[k]
        for i in range(len(grid) - 1):
            if vals[i, k] == 0:
                out.append(grid[i])
            elif vals[i, k] * vals[i + 1, k] < 0:
                out.append(brentq(f, grid[i], grid[i + 1], xtol=1e-14))
    return sorted(np.exp(1j * np.array(out)), key=np.angle)


# --- shift loop ------------------------------------------------------------

def cyclic_shift(n: int) -> np.ndarray:
    return np.roll(np.eye(n), 1, axis=0)


def shift_loop(N: int, r: float, tol: Tolerances = DEFAULT_TOL):
    """Closed path t -> T_0 exp(tK) of G-unitaries on a cyclic chain of N sites.

    T_0 = diag(r S, S / r), K = [[0, P], [-P, 0]] with P the projection on
    site 0.  Returns (evaluator, K).
    """
    if N < 8:
        raise InputError("shift loop needs N >= 8")
    if not 0 < r < 1:
        raise InputError("r must lie in (0, 1)")
    s = cyclic_shift(N)
    zero = np.zeros((N, N))
    t0 = np.block([[r * s, zero], [zero, s / r]]).astype(complex)
    p = zero.copy()
    p[0, 0] = 1.0
    k = np.block([[zero, p], [-p, zero]]).astype(complex)
    sym = standard_g(N)

    def evaluate(t: float) -> JUnitaryOperator:
        # K^2 = -diag(P, P), so exp(tK) = 1 - Q + cos(t) Q + sin(t) K
        q = np.block([[p, zero], [zero, p]])
        e = np.eye(2 * N) - q + np.cos(t) * q + np.sin(t) * k
        return validate(t0 @ e, sym, tol)

    return evaluate, k


# --- Harper edge model -----------------------------------------------------

@dataclass(frozen=True)
class HarperEdgeProblem:
    p: int
    q: int
    E: float
    grid: int = 2048
    N: int | None = None
    boundary: tuple = (1.0, 0.0)

    @property
    def theta(self) -> float:
        return 2 * np.pi * self.q / self.p

    @property
    def sites(self) -> int:
        return self.N if self.N is not None else 20 * self.p


def _period_transfer(p: int, theta: float, E, phi):
    """Entries of prod_{n=p-1..0} [[E - 2cos(theta n + phi), -1], [1, 0]],
    broadcast over arrays E and phi."""
    E, phi = np.broadcast_arrays(np.asarray(E, float), np.asarray(phi, float))
    m11, m12 = np.ones_like(E), np.zeros_like(E)
    m21, m22 = np.zeros_like(E), np.ones_like(E)
    for n in range(p):
        v = E - 2 * np.cos(theta * n + phi)
        m11, m12, m21, m22 = v * m11 - m21, v * m12 - m22, m11, m12
    return m11, m12, m21, m22


def period_transfer(p: int, q: int, E: float, phi: float) -> np.ndarray:
    m = _period_transfer(p, 2 * np.pi * q / p, E, phi)
    return np.array([[m[0], m[1]], [m[2], m[3]]], dtype=float)


def bulk_gaps(p: int, q: int, phi_points: int = 512, e_points: int = 8001,
              margin: float = 1e-3) -> list:
    """Energy intervals with |Tr T^E_phi| > 2 for every phi on the grid."""
    theta = 2 * np.pi * q / p
    es = np.linspace(-4.2, 4.2, e_points)
    phis = 2 * np.pi * np.arange(phi_points) / phi_points
    m11, _, _, m22 = _period_transfer(p, theta, es[:, None], phis[None, :])
    in_gap = np.min(np.abs(m11 + m22), axis=1) > 2
    gaps = []
    k = 0
    while k < len(es):
        if in_gap[k]:
            s = k
            while k < len(es) and in_gap[k]:
                k += 1
            if s > 0 and k < len(es):
                lo, hi = es[s - 1], es[k]
                gaps.append((_refine_edge(p, theta, phis, lo, es[s]),
                             _refine_edge(p, theta, phis, hi, es[k - 1])))
        k += 1
    return [(lo + margin, hi - margin) for lo, hi in gaps if hi - lo > 2 * margin]


def _refine_edge(p, theta, phis, band_e, gap_e):
    def excess(e):
        m11, _, _, m22 = _period_transfer(p, theta, e, phis)
        return np.min(np.abs(m11 + m22)) - 2
    return brentq(excess, min(band_e, gap_e), max(band_e, gap_e), xtol=1e-12)


def check_harper_problem(problem: HarperEdgeProblem):
    if problem.p < 1 or gcd(problem.p, problem.q) != 1:
        raise InputError("p and q must be coprime positive integers")
    phis = 2 * np.pi * np.arange(512) / 512
    for e in (problem.E - 1e-3, problem.E, problem.E + 1e-3):
        m11, _, _, m22 = _period_transfer(problem.p, problem.theta, e, phis)
        if np.min(np.abs(m11 + m22)) <= 2:
            raise GapError(f"E = {problem.E} is not inside a bulk gap (margin 1e-3)",
                           admissible=bulk_gaps(problem.p, problem.q))


@dataclass(frozen=True)
class EdgeRoot:
    phi: float
    kappa: float
    sign: int
    weight_value: float


def _boundary_mismatch(problem: HarperEdgeProblem, phi):
    b1, b2 = problem.boundary
    m11, m12, m21, m22 = _period_transfer(problem.p, problem.theta, problem.E, phi)
    tb1, tb2 = m11 * b1 + m12 * b2, m21 * b1 + m22 * b2
    return b1 * tb2 - b2 * tb1


def edge_state(problem: HarperEdgeProblem, phi: float, n_sites: int | None = None):
    """Decaying solution on n_sites sites from partial transfer products and
    the per-period factor kappa."""
    p, theta, E = problem.p, problem.theta, problem.E
    b = np.array(problem.boundary, dtype=float)
    n_sites = problem.sites if n_sites is None else n_sites
    tm = period_transfer(p, problem.q, E, phi)
    kappa = float(b @ tm @ b / (b @ b))
    one_period = np.empty(p)
    vec = b.copy()
    for ell in range(p):
        one_period[ell] = vec[0]
        v = E - 2 * np.cos(theta * ell + phi)
        vec = np.array([v * vec[0] - vec[1], vec[0]])
    w = np.array([kappa ** (n // p) * one_period[n % p] for n in range(n_sites)])
    return w, kappa


def harper_edge_count(problem: HarperEdgeProblem, tol: Tolerances = DEFAULT_TOL):
    """Weighted count of half-line edge states crossing E as phi winds once.

    Returns (weighted_count, roots).
    """
    check_harper_problem(problem)
    offset = 0.0
    for _ in range(4):
        phis = offset + 2 * np.pi * np.arange(problem.grid + 1) / problem.grid
        f = _boundary_mismatch(problem, phis)
        if np.all(np.abs(f) > 1e-13):
            break
        offset += np.pi / problem.grid / 3
    else:
        raise NumericalError("boundary function vanishes on grid nodes")
    roots = []
    for i in range(problem.grid):
        if f[i] * f[i + 1] < 0:
            phi = brentq(lambda x: _boundary_mismatch(problem, x), phis[i], phis[i + 1],
                         xtol=1e-12)
            w, kappa = edge_state(problem, phi)
            if abs(abs(kappa) - 1) < 1e-6:
                raise NumericalError(f"marginal state at phi = {phi:.10g}")
            if abs(kappa) >= 1:
                continue
            n = np.arange(len(w))
            val = -2 * np.sum(np.abs(w) ** 2 * np.sin(problem.theta * n + phi))
            roots.append(EdgeRoot(float(np.mod(phi, 2 * np.pi)), kappa, int(np.sign(val)),
                                  float(val)))
    roots.sort(key=lambda r: r.phi)
    return sum(r.sign for r in roots), roots


def harper_hamiltonian(problem: HarperEdgeProblem, phi: float, n_sites: int | None = None):
    """Truncated half-line operator S + S* + 2cos(theta X + phi) with the
    boundary term implied by the boundary vector."""
    n = problem.sites if n_sites is None else n_sites
    h = np.diag(2 * np.cos(problem.theta * np.arange(n) + phi))
    h += np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    b1, b2 = problem.boundary
    h[0, 0] += b2 / b1 if b1 else 0.0
    return h


def harper_flow_oracle(problem: HarperEdgeProblem, grid: int | None = None):
    """Net upward crossings of E by left-localized eigenvalues of the truncated
    Harper operator as phi runs over [0, 2 pi).

    The truncation also carries right-edge states; an eigenvector counts as
    left-localized when more than half its weight sits on the left half.
    Returns (total, crossings) with one Crossing per left-edge event.
    """
    check_harper_problem(problem)
    grid = grid or problem.grid
    n = problem.sites
    E = problem.E
    phis = 2 * np.pi * np.arange(grid + 1) / grid
    ev = np.array([np.linalg.eigvalsh(harper_hamiltonian(problem, ph)) for ph in phis]) - E
    crossings = []
    for k in range(n):
        col = ev[:, k]
        for i in range(grid):
            if col[i] == 0 or col[i] * col[i + 1] < 0:
                g = lambda x, k=k: np.linalg.eigvalsh(harper_hamiltonian(problem, x))[k] - E
                phi = phis[i] if col[i] == 0 else brentq(g, phis[i], phis[i + 1], xtol=1e-12)
                _, vec = np.linalg.eigh(harper_hamiltonian(problem, phi))
                v = vec[:, k]
                left = float(np.sum(np.abs(v[: n // 2]) ** 2))
                if left <= 0.5:
                    continue
                up = col[i + 1] > col[i]
                crossings.append(Crossing(float(phi), 1, int(up), int(not up),
                                          int(not up), int(up)))
    crossings.sort(key=lambda c: c.t_star)
    return sum(c.signature for c in crossings), crossings


def harper_transfer_operator(problem: HarperEdgeProblem, n_sites: int = 40) -> JUnitaryOperator:
    """Finite transfer operator with 2H = E - S - S* and A = exp(i theta X)."""
    n = n_sites
    s = np.diag(np.ones(n - 1), -1)
    two_h = problem.E * np.eye(n) - s - s.T
    b1, b2 = problem.boundary
    two_h[0, 0] -= b2 / b1 if b1 else 0.0
    a = np.diag(np.exp(1j * problem.theta * np.arange(n)))
    return transfer_operator(two_h / 2, a)


def flow_report_from_crossings(crossings) -> FlowReport:
    return FlowReport(list(crossings), int(sum(c.signature for c in crossings)),
                      np.zeros(0), np.zeros((0, 0)))


def harper_transfer_crosscheck(problem: HarperEdgeProblem, n_sites: int = 40,
                               tol: Tolerances = DEFAULT_TOL):
    """Pair each edge root with the nearest circle eigenvalue of the truncated
    transfer operator and read off that eigenvalue's inertia.

    Returns a list of (root, eigenvalue, inertia sign).
    """
    from .junitary import eigen_groups
    from .krein_core import subspace_inertia

    _, roots = harper_edge_count(problem, tol)
    op = harper_transfer_operator(problem, n_sites)
    circle = [g for g in eigen_groups(op, tol) if g.on_circle]
    out = []
    for r in roots:
        target = np.exp(1j * r.phi)
        if not circle:
            raise NumericalError("truncated transfer operator has no circle eigenvalues")
        g = min(circle, key=lambda g: abs(g.value - target))
        if abs(g.value - target) > 1e-6:
            raise NumericalError(f"no circle eigenvalue near exp(i {r.phi:.6g})")
        nu = subspace_inertia(g.frame, op.symmetry, tol)
        out.append((r, g.value, nu.signature))
    return out


def closed_form_deviation(op: JUnitaryOperator, closed, samples: int = 256,
                          tol: Tolerances = DEFAULT_TOL) -> float:
    """Largest distance between the eigenvalues of V(e^{-it}T) and the closed
    form, over an equispaced grid of t in [0, 2 pi)."""
    from .vmap import v_of_z

    worst = 0.0
    for t in 2 * np.pi * np.arange(samples) / samples:
        got = np.linalg.eigvals(v_of_z(op, np.exp(1j * t), tol))
        want = np.asarray(closed(t))
        cost = np.abs(got[:, None] - want[None, :])
        r, c = linear_sum_assignment(cost)
        worst = max(worst, float(cost[r, c].max()))
    return worst


def unbalanced_example(lam: complex, eta: float, n_extra: int = 1, m: int = 1):
    """J-unitary with spectrum {lam, e^{i eta}, 1/conj(lam)} for J = diag(1_m, 1_N, -1_m).

    The pair lam, 1/conj(lam) lives on a hyperbolic plane: it is diagonal in
    the G-form and moved to the (+, -) coordinates by the Cayley matrix.
    Its signature is N = n_extra.
    """
    from .krein_core import cayley, diagonal_symmetry

    if not 0 < abs(lam) < 1:
        raise InputError("need 0 < |lam| < 1")
    c = cayley(m)
    hyper = c @ np.diag(np.r_[np.full(m, lam), np.full(m, 1 / np.conj(lam))]) @ dag(c)
    dim = 2 * m + n_extra
    t = np.zeros((dim, dim), dtype=complex)
    plus = np.r_[np.arange(m), 2 * m + n_extra - m + np.arange(m)]
    t[np.ix_(plus, plus)] = hyper
    mid = np.arange(m, m + n_extra)
    t[mid, mid] = np.exp(1j * eta)
    sym = diagonal_symmetry(np.r_[np.ones(m + n_extra), -np.ones(m)])
    return validate(t, sym)

"""Eigenphase tracking along unitary paths and the signed crossing counts
built on it: spectral flow, Bott-Maslov index, intersection index and the
signature of a J-unitary read off from its rotation loop."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import InputError, NumericalError, PathResolutionError, TransversalityError
from .junitary import JUnitaryOperator, admissible_h_intervals, spectral_split, default_h
from .lagrangian import LagrangianFrame, stereographic
from .numerics import DEFAULT_TOL, Tolerances, dag, unitarity_defect, unitary_eig
from .vmap import v_of_z


@dataclass
class UnitaryPath:
    evaluator: Callable[[float], np.ndarray]
    t0: float
    t1: float
    closed: bool = False
    initial_step: float | None = None

    @property
    def span(self) -> float:
        return self.t1 - self.t0

    def reversed(self) -> "UnitaryPath":
        f, a, b = self.evaluator, self.t0, self.t1
        return UnitaryPath(lambda s: f(a + b - s), a, b, self.closed, self.initial_step)


@dataclass
class Crossing:
    t_star: float
    l: int
    n_minus: int
    n_plus: int
    p_minus: int
    p_plus: int
    speeds: list = field(default_factory=list)

    @property
    def signature(self) -> int:
        return (self.p_plus - self.n_plus - self.p_minus + self.n_minus) // 2

    def to_json(self) -> dict:
        return {"t_star": float(self.t_star), "l": self.l, "n_minus": self.n_minus,
                "n_plus": self.n_plus, "p_minus": self.p_minus, "p_plus": self.p_plus,
                "signature": self.signature, "speeds": [float(s) for s in self.speeds]}


@dataclass
class FlowReport:
    crossings: list
    total: int
    ts: np.ndarray
    phases: np.ndarray  # samples x k, sorted per sample

    def to_json(self, trace: bool = False) -> dict:
        out = {"total": int(self.total), "crossings": [c.to_json() for c in self.crossings]}
        if trace:
            out["trajectories"] = {"t": [float(t) for t in self.ts],
                                   "phases": [[float(x) for x in row] for row in self.phases]}
        return out


def _sign(theta: np.ndarray, window: float) -> np.ndarray:
    s = np.sign(theta).astype(int)
    s[np.abs(theta) <= window] = 0
    return s


def _ang(x):
    return np.angle(np.exp(1j * np.asarray(x)))


class _Tracker:
    def __init__(self, path: UnitaryPath, tol: Tolerances):
        self.path = path
        self.tol = tol
        self.calls = 0

    def eig(self, t: float):
        u = np.asarray(self.path.evaluator(t), dtype=complex)
        self.calls += 1
        defect = unitarity_defect(u)
        if defect > self.tol.unitary * max(1.0, np.sqrt(u.shape[0])):
            raise InputError(f"path value at t={t:.6g} is not unitary ({defect:.3e})")
        vals, vecs = unitary_eig(u)
        return np.angle(vals), vecs

    def match(self, old_ph, old_vec, new_ph, new_vec):
        """Overlap matching between (near-)degenerate clusters.

        The squared overlaps summed over an old cluster and a new cluster
        must round to whole dimensions; for simple eigenvalues this means a
        squared overlap above 1/2, which singles out one partner.
        Returns index array p with new[p[j]] continuing old[j], or None.
        """
        n = len(old_ph)
        ov = np.abs(dag(old_vec) @ new_vec) ** 2
        old_cl, new_cl = _clusters(old_ph), _clusters(new_ph)
        mo = np.zeros((n, len(old_cl)))
        for a, idx in enumerate(old_cl):
            mo[idx, a] = 1.0
        mn = np.zeros((n, len(new_cl)))
        for c, idx in enumerate(new_cl):
            mn[idx, c] = 1.0
        weight = mo.T @ ov @ mn
        share = np.floor(weight + 0.5).astype(int)
        if np.any(share.sum(axis=1) != mo.sum(axis=0)) or \
                np.any(share.sum(axis=0) != mn.sum(axis=0)):
            return None
        if np.any((share > 0) & (weight < share - 0.5 + 1e-12)):
            return None
        perm = np.empty(n, dtype=int)
        per_new = [[] for _ in new_cl]
        for a, idx in enumerate(old_cl):
            free = list(idx)
            for c in np.argsort(-weight[a]):
                for _ in range(share[a, c]):
                    cols = new_cl[c]
                    best = max(free, key=lambda i: ov[i, cols].sum())
                    free.remove(best)
                    per_new[c].append(best)
        for c, idx in enumerate(new_cl):
            olds = np.array(per_new[c])
            ref = new_ph[idx[0]]
            olds = olds[np.argsort(_ang(old_ph[olds] - ref), kind="stable")]
            news = np.array(idx)[np.argsort(_ang(new_ph[idx] - ref), kind="stable")]
            perm[olds] = news
        move = np.abs(_ang(new_ph[perm] - old_ph))
        if move.max() > self.tol.delta_max:
            return None
        return perm


def _clusters(ph, gap: float = 1e-6) -> list:
    """Group phases closer than ``gap`` on the circle."""
    order = np.argsort(ph)
    groups, cur = [], [int(order[0])]
    for a, b in zip(order[:-1], order[1:]):
        if abs(_ang(ph[b] - ph[a])) <= gap:
            cur.append(int(b))
        else:
            groups.append(cur)
            cur = [int(b)]
    groups.append(cur)
    if len(groups) > 1 and abs(_ang(ph[groups[0][0]] - ph[groups[-1][-1]])) <= gap:
        groups[0] = groups.pop() + groups[0]
    return groups


def _track(tr: _Tracker):
    path, tol = tr.path, tr.tol
    span = path.span
    if not span > 0:
        raise InputError("path interval must have t1 > t0")
    h = path.initial_step or span / 64
    t = path.t0
    ph, vec = tr.eig(t)
    ts, traj, vecs = [t], [ph], [vec]
    while t < path.t1 - 1e-14 * max(1.0, abs(path.t1)):
        h = min(h, path.t1 - t)
        for _ in range(tol.halvings + 1):
            tn = path.t1 if path.t1 - (t + h) < 1e-12 * span else t + h
            nph, nvec = tr.eig(tn)
            perm = tr.match(ph, vec, nph, nvec)
            if perm is not None:
                break
            h /= 2
        else:
            raise PathResolutionError(f"path resolution failure near t={t:.10g}", t=t)
        moved = np.abs(_ang(nph[perm] - ph)).max()
        t, ph, vec = tn, nph[perm], nvec[:, perm]
        ts.append(t)
        traj.append(ph)
        vecs.append(vec)
        if moved < tol.delta_max / 4:
            h *= 2
    return np.array(ts), np.array(traj), vecs


def _phase_of(tr: _Tracker, t: float, ref_vec: np.ndarray):
    ph, vec = tr.eig(t)
    k = int(np.argmax(np.abs(dag(vec) @ ref_vec)))
    return ph[k], vec[:, k]


def _bisect(tr: _Tracker, lo: float, hi: float, s_lo: int, ref: np.ndarray):
    """Bisect until the bracket is small, then finish with Brent's method.

    Falls back to counting eigenphases when the tracked eigenvector cannot
    be followed through the bracket (avoided crossings nearby).
    """
    span = max(1.0, abs(tr.path.span))
    tol_t = tr.tol.bisect * span
    lo0, hi0 = lo, hi
    while hi - lo > 1e-3 * span:
        mid = 0.5 * (lo + hi)
        th, v = _phase_of(tr, mid, ref)
        if th == 0:
            return mid, v
        if np.sign(th) == s_lo:
            lo, ref = mid, v
        else:
            hi = mid
    f = lambda x: _phase_of(tr, x, ref)[0]
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0 or f_hi == 0:
        t = lo if f_lo == 0 else hi
        return t, _phase_of(tr, t, ref)[1]
    if np.sign(f_lo) != np.sign(f_hi):
        t = brentq(f, lo, hi, xtol=tol_t / 100, rtol=4 * np.finfo(float).eps)
        th, v = _phase_of(tr, t, ref)
        if abs(th) <= tr.tol.phase_window:
            return t, v
    return _count_localize(tr, lo0, hi0, s_lo, tol_t)


def _negatives(tr: _Tracker, t: float) -> int:
    ph, _ = tr.eig(t)
    return int(np.sum((ph < 0) & (ph > -np.pi / 2)))


def _count_localize(tr: _Tracker, lo: float, hi: float, s_lo: int, tol_t: float):
    """Locate a zero of some eigenphase moving in direction -s_lo inside
    [lo, hi] by bisection on the number of eigenphases in (-pi/2, 0)."""
    step = 1 if s_lo > 0 else -1  # a downward crossing adds a negative phase
    grid = np.linspace(lo, hi, 65)
    counts = [_negatives(tr, t) for t in grid]
    a = b = None
    for i in range(64):
        if counts[i + 1] - counts[i] == step:
            a, b, c = grid[i], grid[i + 1], counts[i]
            break
    if a is None:
        raise PathResolutionError(f"path resolution failure near t={lo:.10g}", t=lo)
    while b - a > tol_t:
        mid = 0.5 * (a + b)
        if _negatives(tr, mid) == c:
            a = mid
        else:
            b = mid
    t = 0.5 * (a + b)
    ph, vec = tr.eig(t)
    k = int(np.argmin(np.abs(ph)))
    return t, vec[:, k]


def _speed(tr: _Tracker, t_star: float, ref: np.ndarray) -> float:
    """Quadratic fit over 5 samples; the spacing shrinks with the distance to
    the nearest other eigenphase, since close neighbours bend the branch."""
    ph, vec = tr.eig(t_star)
    k = int(np.argmax(np.abs(dag(vec) @ ref)))
    others = np.delete(ph, k)
    sep = np.min(np.abs(_ang(others - ph[k]))) if others.size else np.pi
    span = tr.path.span
    s = float(np.clip(1e-4 * sep * span, 1e-9 * span, 1e-6 * span))
    offs = s * np.arange(-2, 3)
    vals = [_phase_of(tr, t_star + o, ref)[0] for o in offs]
    vals = np.unwrap(np.array(vals))
    return float(np.polyfit(offs, vals, 2)[1])


def _pre_signs(tr: _Tracker, ph0, vec0):
    """Signs just before t0, used for eigenphases sitting at 0 at the start."""
    path = tr.path
    eps = 1e-4 * path.span
    t_before = path.t1 - eps if path.closed else path.t0 - eps
    try:
        ph, vec = tr.eig(t_before)
    except Exception:
        return None
    idx = np.argmax(np.abs(dag(vec) @ vec0), axis=0)
    return _sign(ph[idx], tr.tol.phase_window)


def spectral_flow(path: UnitaryPath, tol: Tolerances = DEFAULT_TOL,
                  speeds: bool = True) -> FlowReport:
    """Signed count of eigenphases crossing 0 on [t0, t1).

    Crossings at t0 are included, crossings at t1 excluded.  Each crossing
    carries the counts (n-, n+, p-, p+) of the participating eigenphases
    below/above 0 just before/after it.
    """
    tr = _Tracker(path, tol)
    ts, traj, vecs = _track(tr)
    window = tol.phase_window
    span = path.span
    signs = np.array([_sign(row, window) for row in traj])
    nsamp, k = traj.shape
    events = []  # (t_star, before, after, ref_vec)
    pre = None
    for j in range(k):
        idx = 0
        while idx < nsamp:
            if signs[idx, j] != 0:
                nxt = idx + 1
                if nxt < nsamp and signs[nxt, j] != 0 and signs[nxt, j] != signs[idx, j] \
                        and min(abs(traj[idx, j]), abs(traj[nxt, j])) < np.pi / 2:
                    t_star, v = _bisect(tr, ts[idx], ts[nxt], signs[idx, j], vecs[idx][:, j])
                    if t_star < path.t1 - tol.bisect * max(1.0, span):
                        events.append((t_star, signs[idx, j], signs[nxt, j], v))
                idx += 1
                continue
            start = idx
            while idx < nsamp and signs[idx, j] == 0:
                idx += 1
            stop = idx - 1
            if stop == nsamp - 1:
                if start == 0:
                    raise TransversalityError(
                        "non-transversal path: eigenphase pinned at 0", t=float(ts[0]))
                break  # run touches the final point, excluded
            extent = ts[stop] - ts[start]
            if stop - start >= 2 and extent > 1e-2 * span:
                raise TransversalityError(
                    f"non-transversal path: eigenphase pinned at 0 on "
                    f"[{ts[start]:.6g}, {ts[stop]:.6g}]", t=float(ts[start]))
            after = signs[idx, j]
            if start == 0:
                if pre is None:
                    pre = _pre_signs(tr, traj[0], vecs[0])
                before = pre[j] if pre is not None and pre[j] != 0 else -after
            else:
                before = signs[start - 1, j]
            run = range(start, stop + 1)
            best = min(run, key=lambda r: abs(traj[r, j]))
            events.append((float(ts[best]), before, after, vecs[best][:, j]))
    events.sort(key=lambda e: e[0])
    merge = 1e-7 * max(1.0, span)
    crossings = []
    for t_star, before, after, v in events:
        if crossings and abs(t_star - crossings[-1][0][-1][0]) <= merge:
            crossings[-1][0].append((t_star, before, after, v))
        else:
            crossings.append(([(t_star, before, after, v)],))
    out = []
    for (group,) in crossings:
        c = Crossing(float(np.mean([g[0] for g in group])), len(group),
                     int(sum(g[1] < 0 for g in group)), int(sum(g[2] < 0 for g in group)),
                     int(sum(g[1] > 0 for g in group)), int(sum(g[2] > 0 for g in group)))
        if speeds:
            c.speeds = [_speed(tr, c.t_star, g[3]) for g in group]
        out.append(c)
    total = sum(c.signature for c in out)
    return FlowReport(out, int(total), ts, np.sort(traj, axis=1))


def bott_maslov(frame_path: Callable[[float], LagrangianFrame], psi: LagrangianFrame,
                t0: float, t1: float, closed: bool = False,
                tol: Tolerances = DEFAULT_TOL) -> FlowReport:
    """Spectral flow of t -> pi_Psi(Phi_t)."""
    return spectral_flow(UnitaryPath(lambda t: stereographic(frame_path(t), psi, tol),
                                     t0, t1, closed), tol)


def intersection_index(jpath: Callable[[float], JUnitaryOperator], z: complex,
                       t0: float, t1: float, closed: bool = False,
                       tol: Tolerances = DEFAULT_TOL) -> FlowReport:
    """Spectral flow of t -> V(z̄ T_t): oriented count of solutions of T_t phi = z phi."""
    return spectral_flow(UnitaryPath(lambda t: v_of_z(jpath(t), z, tol), t0, t1, closed), tol)


def rotation_loop(t: JUnitaryOperator, tol: Tolerances = DEFAULT_TOL) -> UnitaryPath:
    """The closed loop s -> V(e^{-is} T), s in [0, 2 pi)."""
    return UnitaryPath(lambda s: v_of_z(t, np.exp(1j * s), tol), 0.0, 2 * np.pi, closed=True)


def signature_via_flow(t: JUnitaryOperator, tol: Tolerances = DEFAULT_TOL,
                       report: bool = False):
    """Minus the spectral flow of the rotation loop."""
    if not admissible_h_intervals(t, tol):
        raise InputError("operator has no admissible annulus")
    spectral_split(t, default_h(t, tol), tol)
    flow = spectral_flow(rotation_loop(t, tol), tol)
    return (-flow.total, flow) if report else -flow.total


def winding_trace_oracle(path: UnitaryPath, samples: int = 512,
                         tol: Tolerances = DEFAULT_TOL) -> int:
    """(1/2 pi i) ∮ Tr(U* dU), trapezoid rule with central differences."""
    if not path.closed:
        raise InputError("winding needs a closed path")
    span = path.span
    step = tol.fd_step * span
    total = 0.0 + 0.0j
    for s in path.t0 + span * np.arange(samples) / samples:
        u = path.evaluator(s)
        du = (path.evaluator(s + step) - path.evaluator(s - step)) / (2 * step)
        total += np.trace(dag(u) @ du)
    value = total * (span / samples) / (2j * np.pi)
    nearest = round(value.real)
    if abs(value - nearest) > 0.2:
        raise NumericalError(f"insufficient sampling: winding {value:.4f} not near an integer")
    return int(nearest)

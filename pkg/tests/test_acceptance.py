"""End-to-end acceptance checks, one per criterion.

Each check returns (passed, detail) and the test prints a single
``criterion N: PASS|FAIL ...`` line.  Run the module directly to get just
the ten lines.
"""

import time

import numpy as np
import pytest

from kreinflow.errors import NotJUnitaryError
from kreinflow.junitary import (family_probe, gap, planted_junitary, random_generator,
                                random_junitary, signature, stability_probe, validate)
from kreinflow.krein_core import diagonal_symmetry, standard_j
from kreinflow.models import (KINDS, HarperEdgeProblem, TwoByTwoExample, bound_state_count,
                              bulk_gaps, closed_form_deviation, example_2x2, family_e,
                              hamiltonian_flow, harper_edge_count, harper_flow_oracle, shift_loop,
                              unbalanced_example)
from kreinflow.numerics import dag, matrix_exp, opnorm
from kreinflow.specflow import (intersection_index, rotation_loop, signature_via_flow,
                                spectral_flow, winding_trace_oracle)
from kreinflow.vmap import q_form, re_v, speed_form_fd, v_of

SEED = 20240611


def criterion_1():
    rng = np.random.default_rng(SEED + 1)
    start = time.perf_counter()
    bad = 0
    for _ in range(50):
        n = int(rng.integers(1, 13))
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        h = (a + dag(a)) / 2
        w = np.linalg.eigvalsh(h)
        while True:
            lo, hi = np.sort(rng.uniform(-5, 5, 2))
            if min(np.abs(w - lo).min(), np.abs(w - hi).min()) > 1e-6:
                break
        bad += bound_state_count(h, (lo, hi)) != int(np.sum((w > lo) & (w < hi)))
    elapsed = time.perf_counter() - start
    return bad == 0 and elapsed < 5, f"{50 - bad}/50 exact, {elapsed:.2f} s"


def criterion_2():
    rng = np.random.default_rng(SEED + 2)
    worst = 0.0
    for kind in KINDS:
        for _ in range(10):
            spec = TwoByTwoExample(kind, phi=rng.uniform(-np.pi, np.pi),
                                   eta=rng.uniform(0.1, 2), a=rng.uniform(-1.5, 1.5),
                                   E=rng.uniform(-3, 3))
            t, closed = example_2x2(spec)
            worst = max(worst, closed_form_deviation(t, closed, samples=256))
    # boost: the largest real part over the loop, maximized by a bounded search
    from scipy.optimize import minimize_scalar
    eta = 1.0
    t1, _ = example_2x2(TwoByTwoExample("boost", phi=0.0, eta=eta))
    neg = lambda s: -np.linalg.eigvals(v_of(t1.scaled(np.exp(-1j * s)))).real.max()
    best = -minimize_scalar(neg, bounds=(-1, 1), method="bounded",
                            options={"xatol": 1e-12}).fun
    sech_err = abs(best - 1 / np.cosh(eta))
    t3, _ = example_2x2(TwoByTwoExample("jordan", phi=0.4, a=0.5))
    flow3 = spectral_flow(rotation_loop(t3)).total
    e_half = spectral_flow(rotation_loop(example_2x2(TwoByTwoExample("family-E", E=0.5))[0]))
    e_two = spectral_flow(rotation_loop(example_2x2(TwoByTwoExample("family-E", E=2.0))[0]))
    ok = (worst <= 1e-9 and sech_err <= 1e-10 and flow3 == 0
          and len(e_half.crossings) == 2 and len(e_two.crossings) == 0
          and e_half.total == 0 and e_two.total == 0)
    return ok, (f"closed-form dev {worst:.1e}, sech err {sech_err:.1e}, jordan flow {flow3}, "
                f"family-E crossings {len(e_half.crossings)}/{len(e_two.crossings)}")


def criterion_3():
    rng = np.random.default_rng(SEED + 3)
    worst_speed, mismatches, loops = 0.0, 0, 0
    for k in range(30):
        n = 2 + k % 3
        plus = tuple(rng.uniform(-np.pi, np.pi, n - 1))
        minus = tuple(rng.uniform(-np.pi, np.pi, n - 1))
        hyp = (rng.uniform(1.3, 2.5) * np.exp(1j * rng.uniform(-np.pi, np.pi)),)
        t = planted_junitary(n, rng, circle_plus=plus, circle_minus=minus, hyperbolic=hyp)
        direct = signature(t)
        via_flow, rep = signature_via_flow(t, report=True)
        mismatches += not (direct == via_flow == 0)
        w, v = np.linalg.eig(t.matrix)
        j = t.symmetry.matrix
        for c in rep.crossings:
            i = np.argmin(np.abs(w - np.exp(1j * c.t_star)))
            x = v[:, i] / np.linalg.norm(v[:, i])
            worst_speed = max(worst_speed, abs(c.speeds[0] + np.real(x.conj() @ j @ x)))
        loop = rotation_loop(t)
        loops += winding_trace_oracle(loop) != spectral_flow(loop, speeds=False).total
    ok = mismatches == 0 and worst_speed <= 1e-6 and loops == 0
    return ok, (f"signature mismatches {mismatches}, worst speed err {worst_speed:.1e}, "
                f"winding mismatches {loops}")


def criterion_4():
    lam, eta = 0.5 * np.exp(0.7j), 1.2
    # the literal diagonal does not satisfy T*JT = J once |lam| != 1
    try:
        validate(np.diag([lam, np.exp(1j * eta), 1 / np.conj(lam)]), diagonal_symmetry([1, 1, -1]))
        literal = "accepted"
    except NotJUnitaryError:
        literal = "rejected"
    t = unbalanced_example(lam, eta)
    spec = np.sort(np.abs(np.linalg.eigvals(t.matrix)))
    sigs = [signature(t, h) for h in (0.3, 1.5)]
    ok = sigs == [1, 1] and np.allclose(spec, [0.5, 1.0, 2.0])
    return ok, f"Sig at h=0.3, 1.5: {sigs}; literal diagonal {literal}, same-spectrum realization"


def criterion_5():
    start = time.perf_counter()
    totals = []
    for N in (32, 64):
        ev, _ = shift_loop(N, 0.5)
        totals.append(intersection_index(ev, 1.0, 0.0, 2 * np.pi, closed=True).total)
    elapsed = time.perf_counter() - start
    return totals == [2, 2] and elapsed < 10, f"IN = {totals} for N = 32, 64, {elapsed:.2f} s"


def criterion_6():
    results = []
    for p in (3, 5):
        for lo, hi in bulk_gaps(p, 1):
            problem = HarperEdgeProblem(p, 1, 0.5 * (lo + hi))
            count, _ = harper_edge_count(problem)
            oracle, _ = harper_flow_oracle(problem)
            results.append((p, round(problem.E, 4), count, oracle))
    ok = bool(results) and all(c == o for *_, c, o in results)
    return ok, "; ".join(f"p={p} E={e}: {c} vs {o}" for p, e, c, o in results)


def criterion_7():
    rng = np.random.default_rng(SEED + 7)
    sym = standard_j(3)
    j = sym.matrix
    worst = dict(adjoint=0.0, eigvec=0.0, re_v=0.0, q_fd=0.0)
    for _ in range(30):
        t = random_junitary(sym, rng, 0.8)
        v = v_of(t)
        worst["adjoint"] = max(worst["adjoint"], opnorm(dag(v) - v_of(t.inverse())),
                               opnorm(dag(v) - j @ v_of(t.adjoint()) @ j))
        worst["re_v"] = max(worst["re_v"], opnorm(re_v(t) - (v + dag(v)) / 2))
        z = np.exp(1j * rng.uniform(-np.pi, np.pi))
        worst["q_fd"] = max(worst["q_fd"], opnorm(q_form(t, z) - speed_form_fd(t, z)))
        p = planted_junitary(3, rng, circle_plus=tuple(rng.uniform(-3, 3, 2)),
                             circle_minus=tuple(rng.uniform(-3, 3, 2)),
                             hyperbolic=(rng.uniform(1.3, 2) * np.exp(1j * rng.uniform(-3, 3)),))
        vp = v_of(p)
        lam, vecs = np.linalg.eig(p.matrix)
        for k in range(6):
            x = vecs[:, k]
            lhs = vp @ np.r_[x[:3], lam[k] * x[3:]]
            worst["eigvec"] = max(worst["eigvec"],
                                  np.linalg.norm(lhs - np.r_[lam[k] * x[:3], x[3:]]))
    ok = (worst["adjoint"] <= 1e-9 and worst["eigvec"] <= 1e-9 and worst["re_v"] <= 1e-9
          and worst["q_fd"] <= 1e-6)
    return ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items())


def criterion_8():
    rng = np.random.default_rng(SEED + 8)
    sym = standard_j(2)
    worst, violations = 0.0, 0
    for _ in range(30):
        t = random_junitary(sym, rng, 0.8)
        g = gap(t)
        worst = max(worst, abs(gap(v_of(t)) - g), abs(gap(t.adjoint()) - g),
                    abs(gap(t.inverse()) - g))
    for _ in range(100):
        t = random_junitary(sym, rng, 0.8)
        k = random_generator(sym, rng, rng.uniform(0.01, 0.5))
        violations += gap(t.matrix @ matrix_exp(k)) < gap(t) - 6 * opnorm(t.matrix) * opnorm(k)
    return worst <= 1e-9 and violations == 0, (
        f"identity dev {worst:.1e}, bound violations {violations}/100")


def criterion_9():
    rng = np.random.default_rng(SEED + 9)
    sym = standard_j(2)
    defect = 0.0
    for _ in range(20):
        plus = rng.uniform(0.2, 1.4, 2)
        minus = rng.uniform(1.8, 3.0, 2)
        t = planted_junitary(2, rng, circle_plus=tuple(plus), circle_minus=tuple(minus))
        rep = stability_probe(t, random_generator(sym, rng, 0.1), np.linspace(0, 1, 21))
        defect = max(defect, rep.max_modulus_defect)
    probe = family_probe(family_e, np.linspace(0.5, 1.5, 11), standard_j(1))
    before = sorted(tuple(nu) for _, _, on, nu in probe.steps[4].groups if on)
    after_on = [on for _, _, on, _ in probe.steps[-1].groups]
    ok = defect <= 1e-8 and before == [(0, 1, 0), (1, 0, 0)] and not any(after_on)
    return ok, f"max modulus defect {defect:.1e}, inertia at E=0.9 {before}, off circle at E=1.5"


def criterion_10():
    rng = np.random.default_rng(SEED + 10)
    sym = standard_j(2)

    def herm(scale):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        return scale * (a + dag(a)) / 2

    h0, p0 = herm(1.0), herm(1.0)
    long = hamiltonian_flow(lambda t: h0 * np.cos(t), p0 @ p0, 0.7,
                            random_junitary(sym, rng, 0.5), (0, 5), 5e-3)
    residual = max(long.residuals)
    h1 = herm(0.3) + 2 * np.eye(4)
    p1 = herm(0.3)
    p1 = p1 @ p1 + 0.1 * np.eye(4)
    t0 = random_junitary(sym, rng, 0.5)
    path = hamiltonian_flow(lambda t: h1 + 0.3 * np.sin(t) * np.eye(4), p1, 0.5, t0, (0, 3),
                            3e-3)
    d = 1e-5
    min_t, min_e = np.inf, np.inf
    for t in np.linspace(0.2, 2.8, 8):
        dv = (v_of(path(t + d)) - v_of(path(t - d))) / (2 * d)
        m = dag(v_of(path(t))) @ dv / 1j
        min_t = min(min_t, np.linalg.eigvalsh((m + dag(m)) / 2).min())
    for t in (0.5, 1.5, 2.5):
        v = lambda E: v_of(hamiltonian_flow(h1, p1, E, t0, (0, t), t / 400)(t))
        dv = (v(0.5 + d) - v(0.5 - d)) / (2 * d)
        m = dag(v(0.5)) @ dv / 1j
        min_e = min(min_e, np.linalg.eigvalsh((m + dag(m)) / 2).min())
    ok = long.steps == 1000 and residual <= 1e-10 and min_t > 0 and min_e >= -1e-6
    return ok, (f"residual {residual:.1e} over {long.steps} steps, min t-form {min_t:.2e}, "
                f"min E-form {min_e:.2e}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def line(k, ok, detail):
    return f"criterion {k}: {'PASS' if ok else 'FAIL'} ({detail})"


@pytest.mark.parametrize("k", range(1, 11))
def test_criterion(k, capsys):
    ok, detail = CRITERIA[k - 1]()
    with capsys.disabled():
        print("\n" + line(k, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    for k, check in enumerate(CRITERIA, 1):
        print(line(k, *check()))

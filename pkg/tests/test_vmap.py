import numpy as np
import pytest

from kreinflow.errors import InputError
from kreinflow.junitary import (mobius_act, planted_junitary, random_generator, random_junitary,
                                validate)
from kreinflow.krein_core import diagonal_symmetry, standard_j
from kreinflow.models import TwoByTwoExample, example_2x2
from kreinflow.numerics import dag, matrix_exp, opnorm
from kreinflow.vmap import (circle_scan, mobius_derivative_form, path_derivative_form, q_form,
                            q_form_min_abs_eig, re_v, speed_form_fd, v_of, v_of_z)
from oracles import random_unitary

SYM = standard_j(3)


def kernel_dim(m, eps=1e-7):
    return int(np.sum(np.linalg.svd(m, compute_uv=False) <= eps))


def test_identity():
    one = validate(np.eye(4), standard_j(2))
    assert np.allclose(v_of(one), np.eye(4))
    assert np.allclose(re_v(one), np.eye(4))


def test_boost_display():
    phi, eta = 0.7, 0.9
    t, _ = example_2x2(TwoByTwoExample("boost", phi=phi, eta=eta))
    want = np.array([[np.exp(1j * phi) / np.cosh(eta), np.tanh(eta)],
                     [-np.tanh(eta), np.exp(-1j * phi) / np.cosh(eta)]])
    assert opnorm(v_of(t) - want) <= 1e-14


def test_adjoint_relations(rng):
    j = SYM.matrix
    for _ in range(30):
        t = random_junitary(SYM, rng, 0.8)
        v = v_of(t)
        assert opnorm(dag(v) - v_of(t.inverse())) <= 1e-9
        assert opnorm(dag(v) - j @ v_of(t.adjoint()) @ j) <= 1e-9


def test_unbalanced_is_refused():
    t = validate(np.eye(3), diagonal_symmetry([1, 1, -1]))
    with pytest.raises(InputError):
        v_of(t)


def test_v_of_z_consistency(rng):
    t = random_junitary(SYM, rng)
    assert opnorm(v_of_z(t, 1.0) - v_of(t)) == 0
    with pytest.raises(InputError):
        v_of_z(t, 1.1)


def test_rotation_display():
    phi, eta, s = 0.3, 0.7, 1.1
    t, _ = example_2x2(TwoByTwoExample("rotation", phi=phi, eta=eta))
    got = v_of_z(t, np.exp(1j * s))
    want = np.diag([np.exp(1j * (phi - eta - s)), np.exp(-1j * (eta - s + phi))])
    assert opnorm(got - want) <= 1e-14


def test_planted_circle_multiplicity(rng):
    z0 = np.exp(0.8j)
    t = planted_junitary(3, rng, circle_plus=(0.8, 0.8), circle_minus=(2.0, -2.5),
                         hyperbolic=(1.6,))
    assert kernel_dim(v_of_z(t, z0) - np.eye(6)) == 2
    assert kernel_dim(t.matrix - z0 * np.eye(6)) == 2


def test_geometric_multiplicity_of_jordan_block():
    phi = 0.4
    t, _ = example_2x2(TwoByTwoExample("jordan", phi=phi, a=0.5))
    assert kernel_dim(v_of_z(t, np.exp(1j * phi)) - np.eye(2)) == 1


def test_re_v_dual_route(rng):
    for _ in range(30):
        t = random_junitary(SYM, rng, 0.8)
        v = v_of(t)
        assert opnorm(re_v(t) - (v + dag(v)) / 2) <= 1e-9


def test_re_v_boost_maximum():
    eta = 1.0
    t, _ = example_2x2(TwoByTwoExample("boost", phi=0.2, eta=eta))
    best = max(np.linalg.eigvalsh(re_v(t.scaled(np.exp(-1j * s)))).max()
               for s in np.linspace(0, 2 * np.pi, 2001))
    assert abs(best - 1 / np.cosh(eta)) <= 1e-6


def test_q_form_block_diagonal():
    # J-unitary with b = c = 0 forces unitary diagonal blocks
    a, d = random_unitary(2, 21), random_unitary(2, 22)
    t = validate(np.block([[a, np.zeros((2, 2))], [np.zeros((2, 2)), d]]), standard_j(2))
    want = np.block([[-np.linalg.inv(dag(a) @ a), np.zeros((2, 2))],
                     [np.zeros((2, 2)), np.linalg.inv(d @ dag(d))]])
    assert opnorm(q_form(t, np.exp(0.3j)) - want) <= 1e-14


def test_q_form_finite_difference(rng):
    for _ in range(30):
        t = random_junitary(SYM, rng, 0.6)
        z = np.exp(1j * rng.uniform(-np.pi, np.pi))
        q = q_form(t, z)
        assert opnorm(q - dag(q)) <= 1e-10
        assert opnorm(q - speed_form_fd(t, z)) <= 1e-6
        assert q_form_min_abs_eig(t, z) > 0


def test_q_form_boost_entry():
    eta = 0.8
    t, _ = example_2x2(TwoByTwoExample("boost", phi=0.5, eta=eta))
    assert np.isclose(q_form(t, 1.0)[0, 0], -1 / np.cosh(eta) ** 2)


def test_eigenvector_transport(rng):
    t = planted_junitary(3, rng, circle_plus=(0.4, 1.9), circle_minus=(2.7, -0.6),
                         hyperbolic=(1.8 * np.exp(0.5j),))
    v = v_of(t)
    lam, vecs = np.linalg.eig(t.matrix)
    for k in range(6):
        w, u = vecs[:3, k], vecs[3:, k]
        lhs = v @ np.r_[w, lam[k] * u]
        assert np.linalg.norm(lhs - np.r_[lam[k] * w, u]) <= 1e-9
        if abs(abs(lam[k]) - 1) > 1e-3:
            assert np.isclose(np.linalg.norm(w), np.linalg.norm(u))


def test_path_derivative_identity(rng):
    h = 1e-5
    for _ in range(10):
        t0 = random_junitary(SYM, rng, 0.6)
        k = random_generator(SYM, rng, 0.8)
        path = lambda s: validate(t0.matrix @ matrix_exp(s * k), SYM)
        dv = (v_of(path(h)) - v_of(path(-h))) / (2 * h)
        lhs = dag(v_of(path(0))) @ dv
        rhs = path_derivative_form(t0, t0.matrix @ k)
        assert opnorm(lhs - rhs) <= 1e-6


def test_mobius_derivative_identity(rng):
    h = 1e-5
    u = random_unitary(3, 99)
    for _ in range(10):
        t0 = random_junitary(SYM, rng, 0.6)
        k = random_generator(SYM, rng, 0.8)
        path = lambda s: validate(t0.matrix @ matrix_exp(s * k), SYM)
        du = (mobius_act(path(h), u) - mobius_act(path(-h), u)) / (2 * h)
        lhs = dag(mobius_act(t0, u)) @ du
        rhs = mobius_derivative_form(t0, t0.matrix @ k, u)
        assert opnorm(lhs - rhs) <= 1e-6


def test_circle_scan_detects_circle_spectrum(rng):
    gapped = planted_junitary(2, rng, hyperbolic=(1.5, 2.0 * np.exp(1j)))
    assert circle_scan(gapped) == []
    with_circle = planted_junitary(2, rng, circle_plus=(1.0,), circle_minus=(-2.0,),
                                   hyperbolic=(1.5,))
    hits = circle_scan(with_circle)
    assert any(lo <= 1.0 <= hi for lo, hi in hits)
    assert any(lo <= 2 * np.pi - 2.0 <= hi for lo, hi in hits)

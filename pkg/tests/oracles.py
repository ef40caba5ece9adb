"""Independent reference computations used only by the tests."""

import numpy as np
from scipy.stats import unitary_group

from kreinflow.numerics import dag


def contour_projection(a, center, radius, nodes=256):
    """Riesz projection (1/2 pi i) ∮ (z - A)^{-1} dz on a circle, trapezoid rule."""
    n = a.shape[0]
    acc = np.zeros((n, n), dtype=complex)
    for k in range(nodes):
        w = np.exp(2j * np.pi * k / nodes)
        z = center + radius * w
        acc += np.linalg.solve(z * np.eye(n) - a, np.eye(n)) * radius * w
    return acc / nodes


def span_frame(p, rank):
    u, _, _ = np.linalg.svd(p)
    return u[:, :rank]


def random_unitary(n, seed):
    if n == 1:
        return np.array([[np.exp(2j * np.pi * np.random.default_rng(seed).random())]])
    return unitary_group.rvs(n, random_state=seed)


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + dag(a)) / 2


def random_complex(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def eigencount(h, lo, hi):
    w = np.linalg.eigvalsh(h)
    return int(np.sum((w > lo) & (w < hi)))


def principal_angles(x, y):
    qx, _ = np.linalg.qr(x)
    qy, _ = np.linalg.qr(y)
    s = np.linalg.svd(dag(qx) @ qy, compute_uv=False)
    return np.arccos(np.clip(s, 0, 1))

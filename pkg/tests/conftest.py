"""Shared finite-difference oracles and tolerance helpers."""

import numpy as np
import pytest

FD_STEP = 1e-4  # of the unit domain scale
JET_RTOL = 1e-5


def fd_jet(fn, x, y, step=FD_STEP):
    """Central-difference first/second derivatives of a scalar field.

    ``fn(x, y)`` must be vectorized.  Returns (dx, dy, dxx, dxy, dyy).
    """
    h = step

    def f(a, b):
        return np.asarray(fn(a, b), dtype=float)

    dx = (f(x + h, y) - f(x - h, y)) / (2 * h)
    dy = (f(x, y + h) - f(x, y - h)) / (2 * h)
    f0 = f(x, y)
    dxx = (f(x + h, y) - 2 * f0 + f(x - h, y)) / h ** 2
    dyy = (f(x, y + h) - 2 * f0 + f(x, y - h)) / h ** 2
    dxy = (f(x + h, y + h) - f(x + h, y - h)
           - f(x - h, y + h) + f(x - h, y - h)) / (4 * h ** 2)
    return dx, dy, dxx, dxy, dyy


def assert_jet_matches_fd(jet, fn, x, y, rtol=JET_RTOL, step=FD_STEP):
    """Relative comparison with a unit floor (FD noise on near-zero entries)."""
    ref = fd_jet(fn, x, y, step=step)
    got = (jet.dx, jet.dy, jet.dxx, jet.dxy, jet.dyy)
    for name, a, b in zip(("dx", "dy", "dxx", "dxy", "dyy"), got, ref):
        err = np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b)))
        assert err <= rtol, f"{name}: relative error {err:.3e} > {rtol}"


def fd_param_gradient(objective, theta, step=1e-5):
    """Central-difference gradient of ``objective(theta) -> float``."""
    theta = np.asarray(theta, dtype=float)
    g = np.zeros_like(theta)
    for i in range(theta.size):
        tp = theta.copy()
        tp[i] += step
        tm = theta.copy()
        tm[i] -= step
        g[i] = (objective(tp) - objective(tm)) / (2 * step)
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

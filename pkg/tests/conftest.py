import math

import numpy as np
import pytest

from greenray.potential import GreenSystem, critical_potential
from greenray.tree import build_quadratic_tree


def green_bruteforce(c: complex, z: complex, n_iter: int = 48) -> float:
    """Independent Green-value oracle: fixed-count escape iteration.

    No error bookkeeping, no early exit logic shared with the library path;
    just 2^-n log|f^n(z)| with an overflow stop.
    """
    w = complex(z)
    n = 0
    while n < n_iter and abs(w) < 1e120:
        w = w * w + c
        n += 1
    if abs(w) <= 1.0:
        return 0.0
    return math.log(abs(w)) / (2.0 ** n)


@pytest.fixture(scope="session")
def sys_0():
    return GreenSystem.from_c(0.0)


@pytest.fixture(scope="session")
def sys_m1():
    return GreenSystem.from_c(-1.0)


@pytest.fixture(scope="session")
def sys_m3():
    return GreenSystem.from_c(-3.0)


@pytest.fixture(scope="session")
def sys_m5():
    return GreenSystem.from_c(-5.0)


@pytest.fixture(scope="session")
def sys_m25():
    return GreenSystem.from_c(-2.5)


@pytest.fixture(scope="session")
def tree_m3_d4(sys_m3):
    return build_quadratic_tree(sys_m3, 4)


@pytest.fixture(scope="session")
def exterior_samples_m3(sys_m3):
    """Deterministic exterior sample cloud for c = -3 (off the skeleton)."""
    rng = np.random.default_rng(20240817)
    g0 = critical_potential(sys_m3)
    pts = []
    while len(pts) < 200:
        x = rng.uniform(-3.2, 3.2)
        y = rng.uniform(-2.5, 2.5)
        z = complex(x, y)
        from greenray.potential import escape_green
        g, _ = escape_green(sys_m3, z)
        if 0.05 * g0 < g < 6.0 and abs(y) > 1e-6:
            pts.append(z)
    return pts

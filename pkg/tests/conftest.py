import numpy as np
import pytest

from netctrl.sysmodel import make_system

PERIODS = (0.1, 0.5, 1.0)


def random_system(rng, N=None, n=None, h=None, p=None, zero_diag=True):
    """Random networked system with integer entries in [-2, 2]."""
    N = int(rng.choice((2, 3, 4))) if N is None else N
    n = int(rng.choice((1, 2, 3))) if n is None else n
    p = int(rng.integers(1, n + 1)) if p is None else p
    h = float(rng.choice(PERIODS)) if h is None else h
    A = rng.integers(-2, 3, (n, n)).astype(float)
    B = rng.integers(-2, 3, (n, p)).astype(float)
    C = rng.integers(-2, 3, (n, n)).astype(float)
    H = rng.integers(-2, 3, (n, n)).astype(float)
    W = rng.integers(-2, 3, (N, N)).astype(float)
    if zero_diag:
        np.fill_diagonal(W, 0.0)
    delta = rng.integers(0, 2, N)
    if not delta.any():
        delta[rng.integers(N)] = 1
    return make_system(A, B, W, h, C=C, H=H, delta=delta.tolist())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

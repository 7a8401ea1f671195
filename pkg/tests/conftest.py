import numpy as np
import pytest

from mra import Signal
from mra.rng import child_rng

SEED = 20260810


@pytest.fixture
def rng():
    return child_rng(SEED, "tests")


def random_real_signal(rng, L: int, scale: float = 1.0) -> Signal:
    return Signal.from_values(scale * rng.standard_normal(L))


def random_centered_pair(rng, L: int, sigma: float):
    """A centered pair satisfying the series-bracket regime
    (3*rho <= |theta| <= sigma)."""
    half = L // 2
    f = np.zeros(L, dtype=complex)
    for j in range(1, half + 1):
        f[half + j] = (0.2 + 0.3 * rng.random()) * np.exp(2j * np.pi * rng.random())
        f[half - j] = np.conj(f[half + j])
    theta = Signal.from_fourier(f)
    target = min(0.9, sigma) * (0.8 + 0.15 * rng.random())
    f *= target / theta.norm
    theta = Signal.from_fourier(f)

    g = f.copy()
    for j in range(1, half + 1):
        g[half + j] *= (1 + 0.1 * rng.standard_normal()) * np.exp(
            1j * 0.2 * rng.standard_normal()
        )
        g[half - j] = np.conj(g[half + j])
    phi = Signal.from_fourier(g)
    # pull phi toward theta until the regime holds
    from mra import orbit_distance

    for _ in range(40):
        if 3 * orbit_distance(theta, phi) <= theta.norm:
            break
        g = 0.5 * (g + f)
        phi = Signal.from_fourier(g)
    return theta, phi

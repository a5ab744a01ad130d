import numpy as np
import pytest

from magstrip.bands import sample_bands
from magstrip.schrodinger1d import make_operator


@pytest.fixture(scope="session")
def bands_b1_L1():
    """Bands 1..5 of the b=1, L=1 strip; shared by the Mourre, curvature,
    and inverse-band tests."""
    return sample_bands(1.0, 1.0, [1, 2, 3, 4, 5], n_k=241, n_grid=1024)


@pytest.fixture(scope="session")
def bands_b0_L1():
    return sample_bands(0.0, 1.0, [1, 2, 3], n_k=241, n_grid=512)


@pytest.fixture(scope="session")
def ref_tail_op():
    """Effective operator with the regularised power tail -(1+y^2)^(-3/4)."""
    w = lambda y: -(1.0 + np.asarray(y, dtype=float) ** 2) ** -0.75
    return make_operator(1.0, w, domain_radius=32.0)


def capped_power_tail(exponent, cap=1e6):
    def w(y):
        y = np.abs(np.asarray(y, dtype=float))
        with np.errstate(divide="ignore"):
            return -np.minimum(y ** -exponent, cap)

    return w


@pytest.fixture(scope="session")
def capped_tail_op():
    """Effective operator with the same -|y|^(-3/2) tail but a pure-power
    core (capped at 1e6): its counting staircase carries no O(1) core
    offset, so the threshold laws emerge at desk-scale energies."""
    return make_operator(1.0, capped_power_tail(1.5), domain_radius=32.0)

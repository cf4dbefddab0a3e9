import numpy as np
import pytest

from optomech_link.sideband import DeviceParams

OMEGA_M = 2 * np.pi * 1e9


@pytest.fixture
def device():
    """Reference device: kappa = 0.1 omega_m, g0*beta = 0.05 kappa, gamma = 1e-7 omega_m."""
    return DeviceParams.from_ratios(OMEGA_M, 0.1, 0.05, 1e-7)


@pytest.fixture
def lossless_device(device):
    return device.replace(gamma=0.0)


@pytest.fixture
def unit_device():
    """Same ratios with omega_m = 1, so kappa = 0.1 and G = 2.5e-4."""
    return DeviceParams.from_ratios(1.0, 0.1, 0.05, 1e-7)

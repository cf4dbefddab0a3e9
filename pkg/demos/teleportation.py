"""
Teleporting a coherent state into a mechanical resonator
========================================================

Two resonators share light-mechanics entanglement. A Bell measurement on the
light plus classical feed-forward moves an input coherent state onto the
receiving resonator. The fidelity is computed twice: from the closed form
and by composing the Gaussian channels step by step.
"""

import numpy as np

from optomech_link.gaussian import thermal_occupation
from optomech_link.sideband import DeviceParams
from optomech_link.teleportation import (
    CLASSICAL_FIDELITY,
    NO_CLONING_FIDELITY,
    TeleportConfig,
    optimize_r,
    pipeline_fidelity,
    teleport_fidelity,
)

omega_m = 2 * np.pi * 1e9
x_in = np.sqrt(50.0)
print(f"classical bound {CLASSICAL_FIDELITY}, no-cloning bound {NO_CLONING_FIDELITY:.4f}")

print("\nfidelity vs temperature (eta = 0.99, X_in = sqrt(50), r optimized)")
temperatures = [0.01, 0.05, 0.1, 0.5, 1.0, 2.0]
print("gamma/omega_m " + "".join(f"{T:>9.2f}K" for T in temperatures))
for damping in (1e-7, 1e-6, 1e-5):
    device = DeviceParams.from_ratios(omega_m, 0.1, 0.05, damping)
    row = []
    for T in temperatures:
        n_T = thermal_occupation(omega_m, T)
        r = optimize_r(n_T, device.gamma_over_G).r_opt
        row.append(teleport_fidelity(TeleportConfig(device, device, r, 0.99, n_T, x_in, 0.0)))
    print(f"{damping:12.0e} " + "".join(f"{f:10.4f}" for f in row))

device = DeviceParams.from_ratios(omega_m, 0.1, 0.05, 1e-6)
cfg = TeleportConfig(device, device, r=1.2, eta=0.95, n_T=3.0, x_in=2.0, p_in=-1.0)
closed, composed = teleport_fidelity(cfg), pipeline_fidelity(cfg)
print(f"\nclosed form {closed:.10f}, composed channels {composed:.10f}, gap {abs(closed - composed):.1e}")

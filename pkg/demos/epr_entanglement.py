"""
Entangling light with a mechanical resonator
============================================

A blue-detuned drive acts as a two-mode squeezer between the outgoing light
pulse and the mechanics. This script builds the channel, applies it to
vacuum light and a thermal resonator, and reads off the EPR variance.
Values below 2 certify entanglement.
"""

import numpy as np

from optomech_link.gaussian import apply_channel, epr_variance, thermal_occupation, thermal_state, vacuum_state
from optomech_link.sideband import DeviceParams, blue_channel, epr_variance_closed_form
from optomech_link.teleportation import optimize_r

omega_m = 2 * np.pi * 1e9
device = DeviceParams.from_ratios(omega_m, 0.1, 0.05, 1e-7)
n_T = thermal_occupation(omega_m, 2.0)
print(f"G = {device.G:.4g} rad/s, gamma/G = {device.gamma_over_G:.1e}, n_T(2 K) = {n_T:.2f}")

# squeezing r = G tau grows with the pulse length
print("\n   r   EPR (ideal)  EPR (damped)  EPR (state)")
for r in (0.0, 0.5, 1.0, 1.5, 2.0, 3.0):
    ideal = epr_variance_closed_form(r, n_T, 0.0)
    full = epr_variance_closed_form(r, n_T, device.gamma_over_G)
    if r > 0:
        ch = blue_channel(device, r / device.G, n_T, min_kappa_tau=0.0).channel
        state = apply_channel(vacuum_state(1).tensor(thermal_state(n_T)), ch)
        via_state = f"{epr_variance(state, 0, 1):12.5f}"
    else:
        via_state = "           -"
    print(f"{r:5.1f} {ideal:12.5f} {full:13.5f} {via_state}")

# damping makes long pulses heat the resonator, so there is a best r
print("\ngamma/omega_m   r_opt   EPR at r_opt   entangled")
for damping in (1e-7, 1e-6, 2.5e-6, 5e-6, 1e-5):
    dev = device.replace(gamma=damping * omega_m)
    opt = optimize_r(n_T, dev.gamma_over_G)
    print(f"{damping:12.1e} {opt.r_opt:7.4f} {opt.value:13.4f}   {opt.entangled}")

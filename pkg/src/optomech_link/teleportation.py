"""Mechanical-to-mechanical continuous-variable teleportation.

Protocol: the receiver's blue-sideband pulse entangles its resonator with a
travelling optical mode; the sender mixes that mode with its own resonator on
a 50/50 red-sideband swap; the optical X quadrature and the sender's
mechanical X quadrature are read out; the receiver rotates its resonator by
pi and displaces it by ``eta * sqrt(2)`` times the outcomes.

The closed-form output (coherent inputs) is::

    X_tel = eta X1 - R X2(0) - R' P_in + C_b X_B^b - eta sqrt(gamma_s/G_s) X_B^r
    P_tel = eta P1 - R P2(0) - R' X_in + C_b P_B^b

with ``R = e^r - eta sqrt(e^{2r}-1)`` and ``R' = sqrt(e^{2r}-1) - eta e^r``.
Note the asymmetry: only X picks up the sender's bath term, because only
the mechanical readout ``X_v`` carries the sender's bath noise.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .gaussian import (
    GaussianChannel,
    GaussianState,
    apply_channel,
    coherent_fidelity,
    coherent_state,
    homodyne_feedforward,
    thermal_state,
    vacuum_state,
)
from .sideband import DeviceParams, blue_channel, epr_variance_closed_form, red_channel

CLASSICAL_FIDELITY = 0.5
NO_CLONING_FIDELITY = 2.0 / 3.0

R_BOUNDS = (1e-4, 30.0)
R_TOL = 1e-4
GRID_POINTS = 100_000


@dataclass(frozen=True)
class TeleportConfig:
    sender: DeviceParams
    receiver: DeviceParams
    r: float
    eta: float = 1.0
    n_T: float = 0.0
    x_in: float = 0.0
    p_in: float = 0.0
    readout_r: float = np.inf

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if self.r < 0:
            raise ValueError(f"r must be non-negative, got {self.r}")
        if self.n_T < 0:
            raise ValueError(f"n_T must be non-negative, got {self.n_T}")
        if self.readout_r < 0:
            raise ValueError("readout_r must be non-negative")

    @property
    def alpha(self) -> complex:
        return complex(self.x_in, self.p_in) / np.sqrt(2.0)

    def with_(self, **changes) -> "TeleportConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class TeleportCoefficients:
    R: float
    R_prime: float
    C_b: float
    bath_x: float
    bath_p: float


def beam_splitter_time(G: float) -> float:
    """Red-pulse duration giving ``exp(-G tau) = 1/sqrt(2)``."""
    if G <= 0:
        raise ValueError(f"G must be positive, got {G}")
    return np.log(2.0) / (2.0 * G)


def _coefficients(r, eta):
    r = np.asarray(r, dtype=float)
    er = np.exp(r)
    s = er * np.sqrt(-np.expm1(-2.0 * r))
    gap = 1.0 / (er + s)  # e^r - s without cancellation
    R = gap + (1.0 - eta) * s
    R_prime = -gap + (1.0 - eta) * er
    return R, R_prime, s


def teleport_coefficients(
    r: float, eta: float, gamma_over_G: float = 0.0, sender_gamma_over_G: float | None = None
) -> TeleportCoefficients:
    """Coefficients of the teleported quadratures.

    ``bath_x`` and ``bath_p`` are the variance weights multiplying
    ``n_T + 1/2`` that the mechanical baths add to each quadrature.
    """
    if r < 0:
        raise ValueError(f"r must be non-negative, got {r}")
    if sender_gamma_over_G is None:
        sender_gamma_over_G = gamma_over_G
    R, R_prime, s = _coefficients(r, eta)
    C_b = s * np.sqrt(gamma_over_G)
    return TeleportCoefficients(
        float(R),
        float(R_prime),
        float(C_b),
        float(C_b**2 + eta**2 * sender_gamma_over_G),
        float(C_b**2),
    )


def _added_variances(r, eta, n_T, gq_receiver, gq_sender):
    R, R_prime, s = _coefficients(r, eta)
    thermal = n_T + 0.5
    common = R**2 * thermal + 0.5 * R_prime**2 + s**2 * gq_receiver * thermal
    return common + eta**2 * gq_sender * thermal, common


def teleported_state(config: TeleportConfig) -> GaussianState:
    """Closed-form output for a coherent input at ``(x_in, p_in)``."""
    c = config
    add_x, add_p = _added_variances(
        c.r, c.eta, c.n_T, c.receiver.gamma_over_G, c.sender.gamma_over_G
    )
    input_var = 0.5 * c.eta**2
    return GaussianState(
        [c.eta * c.x_in, c.eta * c.p_in],
        np.diag([input_var + add_x, input_var + add_p]),
    )


def q_variances(config: TeleportConfig) -> tuple[float, float]:
    """Q-function variances ``(sigma_X, sigma_P)`` of the teleported state."""
    c = config
    add_x, add_p = _added_variances(
        c.r, c.eta, c.n_T, c.receiver.gamma_over_G, c.sender.gamma_over_G
    )
    base = 0.5 * (1.0 + c.eta**2)
    return float(base + add_x), float(base + add_p)


def _fidelity(r, eta, n_T, gq_receiver, gq_sender, x_in, p_in):
    add_x, add_p = _added_variances(r, eta, n_T, gq_receiver, gq_sender)
    base = 0.5 * (1.0 + eta**2)
    sx, sp = base + add_x, base + add_p
    loss = (1.0 - eta) ** 2
    return np.exp(-loss * (x_in**2 / (2 * sx) + p_in**2 / (2 * sp))) / np.sqrt(sx * sp)


def teleport_fidelity(config: TeleportConfig) -> float:
    """Fidelity of the teleported state with the coherent input."""
    c = config
    return float(
        _fidelity(
            c.r, c.eta, c.n_T, c.receiver.gamma_over_G, c.sender.gamma_over_G, c.x_in, c.p_in
        )
    )


def mechanical_readout_channel(r_readout: float) -> GaussianChannel:
    """Second red pulse mapping the sender's resonator onto a readout field.

    ``X_meas = -e^{-r} X_vac + sqrt(1-e^{-2r}) P_v`` and
    ``P_meas = -e^{-r} P_vac - sqrt(1-e^{-2r}) X_v``; the optical vacuum is
    folded into the added noise.
    """
    if r_readout < 0:
        raise ValueError("readout squeezing parameter must be non-negative")
    leak = np.exp(-2.0 * r_readout)
    k = np.sqrt(-np.expm1(-2.0 * r_readout))
    return GaussianChannel(np.array([[0.0, k], [-k, 0.0]]), 0.5 * leak * np.eye(2))


def teleport_pipeline(config: TeleportConfig, input_state: GaussianState | None = None) -> GaussianState:
    """Run the protocol by composing Gaussian channels and a homodyne update.

    Modes: 0 travelling optical mode, 1 receiver resonator, 2 sender
    resonator (carrying ``input_state``, a coherent state by default).

    Intermediate covariances grow like ``e^{2r}`` and the output is their
    near-cancellation, so double precision limits this path to ``r`` of
    about 10; the closed forms have no such limit.
    """
    c = config
    if input_state is None:
        input_state = coherent_state(c.x_in, c.p_in)
    if input_state.n_modes != 1:
        raise ValueError("input state must be single-mode")
    state = vacuum_state(1).tensor(thermal_state(c.n_T)).tensor(input_state)

    if c.r > 0:
        blue = blue_channel(c.receiver, c.r / c.receiver.G, c.n_T, min_kappa_tau=0.0)
        state = apply_channel(state, blue.channel.embed(3, [0, 1]))
    red = red_channel(c.sender, beam_splitter_time(c.sender.G), c.n_T, min_kappa_tau=0.0)
    state = apply_channel(state, red.channel.embed(3, [0, 2]))

    gain = c.eta * np.sqrt(2.0)
    if np.isinf(c.readout_r):
        mech_probe, mech_gain = (2, "x"), gain
    else:
        # P_meas tends to -X_v, so the sign of the gain flips
        state = apply_channel(state, mechanical_readout_channel(c.readout_r).embed(3, [2]))
        mech_probe, mech_gain = (2, "p"), -gain

    # receiver's pi rotation, then displacement by the measured quadratures
    state = apply_channel(state, GaussianChannel(-np.eye(2), np.zeros((2, 2))).embed(3, [1]))
    return homodyne_feedforward(
        state,
        measured=[mech_probe, (0, "x")],
        target=1,
        gain=[[mech_gain, 0.0], [0.0, gain]],
    )


def pipeline_fidelity(config: TeleportConfig) -> float:
    return coherent_fidelity(teleport_pipeline(config), config.alpha)


# ---------------------------------------------------------------------------
# squeezing-parameter optimization


@dataclass(frozen=True)
class ROptimum:
    r_opt: float
    value: float
    grid_r_opt: float
    objective: str
    unbounded: bool
    entangled: bool
    n_evals: int


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float = R_TOL):
    """Minimize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x), n_evals)``."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    n = 2
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
        n += 1
    x = 0.5 * (a + b)
    return x, f(x), n + 1


def optimize_r(
    n_T: float,
    gamma_over_G: float,
    objective: str = "min_epr",
    config: TeleportConfig | None = None,
    bounds: tuple[float, float] = R_BOUNDS,
) -> ROptimum:
    """Optimal squeezing parameter for the EPR variance or the fidelity.

    For ``max_fidelity`` the efficiency and input displacement come from
    ``config``; ``n_T`` and ``gamma_over_G`` are applied to both devices.
    """
    if objective == "min_epr":
        def cost(r):
            return epr_variance_closed_form(r, n_T, gamma_over_G)

        r_grid = np.linspace(*bounds, GRID_POINTS)
        gap = np.exp(-r_grid) / (1.0 + np.sqrt(-np.expm1(-2.0 * r_grid)))
        grid_vals = 2 * (n_T + 1) * gap**2 + gamma_over_G * np.expm1(2 * r_grid) * (2 * n_T + 1)
    elif objective == "max_fidelity":
        if config is None:
            raise ValueError("max_fidelity needs a TeleportConfig for eta and the input")
        c = config

        def cost(r):
            return -float(_fidelity(r, c.eta, n_T, gamma_over_G, gamma_over_G, c.x_in, c.p_in))

        r_grid = np.linspace(*bounds, GRID_POINTS)
        grid_vals = -_fidelity(r_grid, c.eta, n_T, gamma_over_G, gamma_over_G, c.x_in, c.p_in)
    else:
        raise ValueError(f"unknown objective {objective!r}")

    r_opt, best, n_evals = golden_section(cost, *bounds)
    grid_r = float(r_grid[np.argmin(grid_vals)])
    unbounded = gamma_over_G == 0 or bounds[1] - r_opt < 10 * R_TOL
    value = best if objective == "min_epr" else -best
    entangled = epr_variance_closed_form(r_opt, n_T, gamma_over_G) < 2.0
    return ROptimum(float(r_opt), float(value), grid_r, objective, bool(unbounded), bool(entangled), n_evals)

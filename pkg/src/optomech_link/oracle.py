"""Brute-force linear Langevin dynamics of cavity + mechanics, no elimination.

The input field is cut into time bins of length ``dt``, each an independent
bosonic mode (vacuum for the optical line, thermal for the mechanical bath).
One step is a collision-model update split symmetrically::

    H(dt/2) -> cavity/bin and mechanics/bath beam splitters -> H(dt/2)

The beam splitters have ``cos = exp(-kappa dt)`` and ``cos = exp(-gamma dt)``,
so the damping of each mode over one step is exact and the whole update is
unitary on the enlarged mode set. The coherent part is the matrix
exponential of the rotating-frame sideband drift. Means, covariances and
commutators are propagated deterministically, so there is no sampling noise.

Quadrature ordering inside a device is ``(x_a, p_a, x_m, p_m)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .gaussian import GaussianChannel, GaussianState, symplectic_form
from .sideband import (
    DECAY_P,
    GROW_Q,
    DeviceParams,
    TemporalEnvelope,
    blue_channel,
    envelope,
    red_channel,
)
from .transfer import SENDER, RECEIVER, PulseShape, TransferWeights

MAX_KAPPA_DT = 0.05
MIN_ACCEPTANCE_STEPS = 1000
MAX_RECORDS = 2000

# drift per unit coupling, d/dt (x_a, p_a, x_m, p_m)
RED_DRIFT = np.array(
    [
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
    ]
)
BLUE_DRIFT = np.array(
    [
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, -1.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
    ]
)
_DRIFTS = {"red": RED_DRIFT, "blue": BLUE_DRIFT}
_ENVELOPES = {"red": (GROW_Q, DECAY_P), "blue": (DECAY_P, GROW_Q)}


@dataclass(frozen=True)
class OracleConfig:
    """One driven device over ``[0, tau]``.

    ``drive`` multiplies the coupling ``g0 * beta`` and defaults to a
    constant one. When the envelopes are omitted the temporal modes of the
    eliminated model for ``sideband`` are used.
    """

    params: DeviceParams
    sideband: str
    tau: float
    n_steps: int
    envelope_in: TemporalEnvelope | None = None
    envelope_out: TemporalEnvelope | None = None
    n_T: float = 0.0
    drive: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.sideband not in _DRIFTS:
            raise ValueError(f"sideband must be 'red' or 'blue', got {self.sideband!r}")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be positive")
        if self.n_T < 0:
            raise ValueError("n_T must be non-negative")
        check_step(self.params.kappa, self.dt)
        if self.envelope_in is None or self.envelope_out is None:
            kind_in, kind_out = _ENVELOPES[self.sideband]
            G = self.params.G
            if G <= 0:
                custom = flat_envelope(self.tau)
                defaults = (custom, custom)
            else:
                defaults = (envelope(kind_in, G, self.tau), envelope(kind_out, G, self.tau))
            if self.envelope_in is None:
                object.__setattr__(self, "envelope_in", defaults[0])
            if self.envelope_out is None:
                object.__setattr__(self, "envelope_out", defaults[1])

    @property
    def dt(self) -> float:
        return self.tau / self.n_steps

    def refined(self, factor: int = 2) -> "OracleConfig":
        return OracleConfig(
            self.params, self.sideband, self.tau, self.n_steps * factor,
            self.envelope_in, self.envelope_out, self.n_T, self.drive,
        )


def check_step(kappa: float, dt: float) -> None:
    if kappa * dt >= MAX_KAPPA_DT:
        raise ValueError(
            f"kappa*dt = {kappa * dt:.3g} must stay below {MAX_KAPPA_DT}; increase n_steps"
        )


def flat_envelope(tau: float) -> TemporalEnvelope:
    return TemporalEnvelope("Custom", tau, times=[0.0, tau], values=[1.0, 1.0])


def bin_weights(env: TemporalEnvelope, tau: float, n_steps: int) -> np.ndarray:
    """Envelope sampled at bin midpoints, renormalized to unit discrete norm."""
    dt = tau / n_steps
    w = env((np.arange(n_steps) + 0.5) * dt) * np.sqrt(dt)
    return w / np.linalg.norm(w)


@dataclass
class MomentTrajectory:
    """Recorded moments of ``(cavity, mechanics, filtered output)``.

    ``emitted`` holds, for each probe column (input x, input p, mechanics x,
    mechanics p), the summed squared amplitude carried away by all output
    bins, filtered or not. ``final_response`` is the final (cavity,
    mechanics) amplitude for each probe column.
    """

    times: np.ndarray
    covariances: np.ndarray
    commutator: np.ndarray
    emitted: np.ndarray = field(default_factory=lambda: np.zeros(4))
    final_response: np.ndarray = field(default_factory=lambda: np.zeros((4, 4)))


@dataclass(frozen=True)
class OracleChannel:
    channel: GaussianChannel
    trajectory: MomentTrajectory
    symplectic_defect: float

    @property
    def K(self) -> np.ndarray:
        return self.channel.K

    @property
    def N(self) -> np.ndarray:
        return self.channel.N


def _half_step_propagators(drift, coupling, dt):
    """``expm(g(t) A dt/2)`` for each step; ``coupling`` is per step."""
    coupling = np.atleast_1d(coupling)
    if np.all(coupling == coupling[0]):
        return np.broadcast_to(expm(coupling[0] * drift * dt / 2), (coupling.size, 4, 4))
    return expm(coupling[:, None, None] * drift * dt / 2)


def _step_coupling(config: OracleConfig) -> np.ndarray:
    t_mid = (np.arange(config.n_steps) + 0.5) * config.dt
    g = config.params.coupling
    if config.drive is None:
        return np.full(config.n_steps, g)
    return g * np.asarray(config.drive(t_mid), dtype=float)


def simulate_channel(config: OracleConfig) -> OracleChannel:
    """Effective channel from (filtered input, initial mechanics) to
    (filtered output, final mechanics), both ordered (optical, mechanics).
    """
    p = config.params
    n, dt = config.n_steps, config.dt
    c_a, c_m = np.exp(-p.kappa * dt), np.exp(-p.gamma * dt)
    s_a, s_m = np.sqrt(-np.expm1(-2 * p.kappa * dt)), np.sqrt(-np.expm1(-2 * p.gamma * dt))
    f_in = bin_weights(config.envelope_in, config.tau, n)
    f_out = bin_weights(config.envelope_out, config.tau, n)
    halves = _half_step_propagators(_DRIFTS[config.sideband], _step_coupling(config), dt)

    D_sys = np.diag([c_a, c_a, c_m, c_m])
    D_w = np.zeros((4, 4))
    D_w[0, 0] = D_w[1, 1] = -s_a
    D_w[2, 2] = D_w[3, 3] = -s_m
    thermal = config.n_T + 0.5
    w_cov = np.diag([0.5, 0.5, thermal, thermal])
    w_om = symplectic_form(2)

    # z = (x_a, p_a, x_m, p_m, F_x, F_p)
    Z = np.zeros((6, 4))  # mean response to the four probes
    Z[2, 2] = Z[3, 3] = 1.0
    V = np.diag([0.5, 0.5, thermal, thermal, 0.0, 0.0])
    X = np.zeros((6, 6))
    X[:4, :4] = symplectic_form(2)
    emitted = np.zeros(4)

    stride = max(1, n // MAX_RECORDS)
    rec_t, rec_v, rec_x = [0.0], [V.copy()], [X.copy()]
    L_z = np.eye(6)
    L_w = np.zeros((6, 4))
    W_probe = np.zeros((4, 4))
    for k in range(n):
        H = halves[k]
        L_z[:4, :4] = H @ D_sys @ H
        L_w[:4] = H @ D_w
        # output bin (s_a a + c_a b) taken between the two half steps
        out_sys = s_a * H[:2]
        L_z[4:, :4] = f_out[k] * out_sys
        L_w[4:] = 0.0
        L_w[4, 0] = L_w[5, 1] = f_out[k] * c_a

        W_probe[0, 0] = W_probe[1, 1] = f_in[k]
        bin_amp = out_sys @ Z[:4] + c_a * W_probe[:2]
        emitted += np.sum(bin_amp**2, axis=0)

        Z = L_z @ Z + L_w @ W_probe
        V = L_z @ V @ L_z.T + L_w @ w_cov @ L_w.T
        X = L_z @ X @ L_z.T + L_w @ w_om @ L_w.T
        if (k + 1) % stride == 0 or k == n - 1:
            rec_t.append((k + 1) * dt)
            rec_v.append(0.5 * (V + V.T))
            rec_x.append(X.copy())

    order = [4, 5, 2, 3]
    K = Z[order]
    v_in = np.diag([0.5, 0.5, thermal, thermal])
    V_out = V[np.ix_(order, order)]
    N = V_out - K @ v_in @ K.T
    N = 0.5 * (N + N.T)
    defect = float(np.max(np.abs(X - symplectic_form(3))))
    traj = MomentTrajectory(np.array(rec_t), np.array(rec_v), X, emitted, Z[:4].copy())
    return OracleChannel(GaussianChannel(K, N), traj, defect)


def richardson(coarse, fine, order: int = 2):
    """Extrapolate ``fine`` (half step) against ``coarse`` for an O(dt^order) error."""
    factor = 2.0**order
    return (factor * np.asarray(fine) - np.asarray(coarse)) / (factor - 1.0)


def extrapolated_channel(config: OracleConfig, order: int = 2) -> tuple[np.ndarray, np.ndarray, float]:
    """Richardson-extrapolated ``(K, N)`` from ``n_steps`` and ``2 n_steps``,
    plus the max-abs change between the two resolutions."""
    coarse = simulate_channel(config)
    fine = simulate_channel(config.refined(2))
    K = richardson(coarse.K, fine.K, order)
    N = richardson(coarse.N, fine.N, order)
    change = float(max(np.max(np.abs(fine.K - coarse.K)), np.max(np.abs(fine.N - coarse.N))))
    return K, N, change


def closed_form_channel(params: DeviceParams, sideband: str, tau: float, n_T: float = 0.0):
    build = red_channel if sideband == "red" else blue_channel
    return build(params, tau, n_T, min_kappa_tau=0.0)


def decoupled_channel(params: DeviceParams, tau: float, n_T: float = 0.0) -> GaussianChannel:
    """Exact channel of an undriven device for flat input/output envelopes.

    The filtered reflection is ``-1 + 2 (1 - exp(-kappa tau)) / (kappa tau)``,
    which tends to ``-1`` once the pulse is long against the cavity decay.
    """
    x = params.kappa * tau
    refl = -1.0 + 2.0 * (-np.expm1(-x)) / x
    decay = np.exp(-params.gamma * tau)
    K = np.diag([refl, refl, decay, decay])
    N = np.diag([0.5 * (1 - refl**2)] * 2 + [(1 - decay**2) * (n_T + 0.5)] * 2)
    return GaussianChannel(K, N)


@dataclass(frozen=True)
class ResidualRow:
    tau: float
    coupling_over_kappa: float
    K_residual: float
    N_residual: float
    symplectic_defect: float


def steps_for(params: DeviceParams, tau: float, kappa_dt: float = 0.02) -> int:
    return max(MIN_ACCEPTANCE_STEPS, int(np.ceil(params.kappa * tau / kappa_dt)))


def verify_adiabatic(
    params: DeviceParams,
    sideband: str,
    tau_grid,
    n_T: float = 0.0,
    kappa_dt: float = 0.02,
    extrapolate: bool = True,
) -> list[ResidualRow]:
    """Compare oracle and eliminated channels at each pulse duration.

    Residuals are max-abs entrywise differences of ``K`` and ``N``.
    """
    rows = []
    for tau in np.atleast_1d(np.asarray(tau_grid, dtype=float)):
        cfg = OracleConfig(params, sideband, tau, steps_for(params, tau, kappa_dt), n_T=n_T)
        if extrapolate:
            K, N, _ = extrapolated_channel(cfg)
            defect = simulate_channel(cfg).symplectic_defect
        else:
            sim = simulate_channel(cfg)
            K, N, defect = sim.K, sim.N, sim.symplectic_defect
        ref = closed_form_channel(params, sideband, tau, n_T)
        rows.append(
            ResidualRow(
                float(tau),
                params.coupling / params.kappa,
                float(np.max(np.abs(K - ref.K))),
                float(np.max(np.abs(N - ref.N))),
                defect,
            )
        )
    return rows


def elimination_scaling(
    params: DeviceParams,
    sideband: str,
    G_tau: float = 1.0,
    ratios=(0.05, 0.025, 0.0125),
    kappa_dt: float = 0.02,
) -> list[ResidualRow]:
    """K residual at fixed ``G tau`` while ``g0 beta / kappa`` is reduced."""
    rows = []
    for ratio in ratios:
        dev = params.replace(g0=ratio * params.kappa / params.beta)
        rows.extend(verify_adiabatic(dev, sideband, [G_tau / dev.G], kappa_dt=kappa_dt))
    return rows


# ---------------------------------------------------------------------------
# cascaded transfer


@dataclass(frozen=True)
class CascadeResult:
    weights: TransferWeights
    receiver_state: GaussianState
    symplectic_defect: float


def simulate_transfer(
    sender: DeviceParams,
    receiver: DeviceParams,
    sender_pulse: PulseShape,
    receiver_pulse: PulseShape,
    n_steps: int,
    n_T: float = 0.0,
) -> CascadeResult:
    """Cascade two red-driven devices bin by bin with zero delay.

    Each sender output bin is the receiver input bin of the same step. The
    weights are coefficients of the sender's initial mechanical state:
    ``W_TM`` in the receiver's final mechanics, ``W_D`` from the sender's
    final mechanics as ``sqrt(1 - |m_1(tau)|^2)``, and ``W_TA`` from the
    emitted bins plus the sender cavity's leftover amplitude at ``tau``.
    """
    if sender_pulse.role != SENDER or receiver_pulse.role != RECEIVER:
        raise ValueError("pulse roles must be (sender, receiver)")
    if not np.isclose(sender_pulse.tau, receiver_pulse.tau, rtol=1e-12, atol=0.0):
        raise ValueError("sender and receiver pulses must share one bin grid")
    tau = sender_pulse.tau
    dt = tau / n_steps
    check_step(sender.kappa, dt)
    check_step(receiver.kappa, dt)
    t_mid = (np.arange(n_steps) + 0.5) * dt
    H1 = _half_step_propagators(RED_DRIFT, sender.coupling * sender_pulse.value(t_mid), dt)
    H2 = _half_step_propagators(RED_DRIFT, receiver.coupling * receiver_pulse.value(t_mid), dt)

    def beam(rate):
        return np.exp(-rate * dt), np.sqrt(-np.expm1(-2 * rate * dt))

    c1, s1 = beam(sender.kappa)
    c2, s2 = beam(receiver.kappa)
    cm1, sm1 = beam(sender.gamma)
    cm2, sm2 = beam(receiver.gamma)
    I2 = np.eye(2)

    # one dissipative step on (a1, m1, a2, m2) driven by (bin, bath1, bath2)
    D_sys = np.zeros((8, 8))
    D_sys[0:2, 0:2] = c1 * I2
    D_sys[2:4, 2:4] = cm1 * I2
    D_sys[4:6, 0:2] = -s2 * s1 * I2  # sender output enters receiver cavity
    D_sys[4:6, 4:6] = c2 * I2
    D_sys[6:8, 6:8] = cm2 * I2
    D_w = np.zeros((8, 6))
    D_w[0:2, 0:2] = -s1 * I2
    D_w[2:4, 2:4] = -sm1 * I2
    D_w[4:6, 0:2] = -s2 * c1 * I2
    D_w[6:8, 4:6] = -sm2 * I2
    thermal = n_T + 0.5
    w_cov = np.diag([0.5, 0.5, thermal, thermal, thermal, thermal])
    w_om = symplectic_form(3)

    Z = np.zeros((8, 2))
    Z[2:4] = I2
    V = np.diag([0.5, 0.5, thermal, thermal, 0.5, 0.5, thermal, thermal])
    X = symplectic_form(4)
    emitted = 0.0
    H = np.zeros((8, 8))
    for k in range(n_steps):
        H[:4, :4] = H1[k]
        H[4:, 4:] = H2[k]
        Zh = H @ Z
        # sender output bin amplitude of the initial sender mechanics
        emitted += float(np.sum((s1 * Zh[0:2]) ** 2))
        L_z = H @ D_sys @ H
        L_w = H @ D_w
        Z = L_z @ Z
        V = L_z @ V @ L_z.T + L_w @ w_cov @ L_w.T
        X = L_z @ X @ L_z.T + L_w @ w_om @ L_w.T

    w_tm = np.sqrt(0.5 * np.sum(Z[6:8] ** 2))
    remaining = 0.5 * np.sum(Z[2:4] ** 2)
    w_ta_sq = emitted / 2 + 0.5 * np.sum(Z[0:2] ** 2)
    weights = TransferWeights(float(np.sqrt(w_ta_sq)), float(np.sqrt(max(0.0, 1 - remaining))), float(w_tm))
    cov = V[6:8, 6:8]
    defect = float(np.max(np.abs(X - symplectic_form(4))))
    return CascadeResult(weights, GaussianState(np.zeros(2), 0.5 * (cov + cov.T)), defect)

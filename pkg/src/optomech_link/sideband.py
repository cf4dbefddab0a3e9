"""Red/blue sideband input-output channels after adiabatic elimination.

Optical temporal modes are defined by exponential envelopes over ``[0, tau]``:
a decaying one (weight ``exp(-G t)``) and a growing one (``exp(G t)``). The
red sideband reads its optical input on the growing envelope and emits on
the decaying one; the blue sideband does the opposite.

The mechanical bath enters through a single effective temporal mode with
covariance ``(n_T + 1/2) I``. The approximation ``G -/+ gamma ~ G`` is used
throughout; the exact-gamma dynamics are left to :mod:`optomech_link.oracle`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .gaussian import (
    GaussianChannel,
    apply_channel,
    epr_variance,
    symplectic_form,
    thermal_state,
    vacuum_state,
)

# Precondition thresholds. Kept loose enough for the oracle comparisons at
# g0*beta = 0.05 kappa; callers may override per call.
MAX_COUPLING_RATIO = 1.0
MIN_KAPPA_TAU = 10.0
RESOLVED_SIDEBAND_WARN = 0.5


class ValidityWarning(UserWarning):
    """A regime assumption (resolved sideband, kappa*tau >> 1) is marginal."""


@dataclass(frozen=True)
class DeviceParams:
    """Rates and frequencies of one optomechanical device, all in rad/s.

    ``beta`` is the dimensionless intracavity drive amplitude; only the
    product ``g0 * beta`` enters the dynamics.
    """

    g0: float
    beta: float
    kappa: float
    gamma: float
    omega_m: float
    omega_c: float = np.inf
    max_coupling_ratio: float = field(default=MAX_COUPLING_RATIO, repr=False)

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.gamma < 0 or self.g0 < 0 or self.beta < 0:
            raise ValueError("g0, beta and gamma must be non-negative")
        if self.omega_m <= 0:
            raise ValueError(f"omega_m must be positive, got {self.omega_m}")
        if self.coupling >= self.max_coupling_ratio * self.kappa:
            raise ValueError(
                f"g0*beta = {self.coupling:.4g} is not below {self.max_coupling_ratio:g}*kappa; "
                "adiabatic elimination of the cavity is invalid"
            )
        if self.kappa >= self.omega_m:
            raise ValueError("resolved-sideband regime requires kappa < omega_m")
        if self.kappa > RESOLVED_SIDEBAND_WARN * self.omega_m:
            warnings.warn(
                f"kappa/omega_m = {self.kappa / self.omega_m:.3g} is marginal for sideband selection",
                ValidityWarning,
                stacklevel=2,
            )

    @classmethod
    def from_ratios(
        cls,
        omega_m: float,
        kappa_over_omega_m: float = 0.1,
        coupling_over_kappa: float = 0.05,
        gamma_over_omega_m: float = 1e-7,
        omega_c: float = np.inf,
    ) -> "DeviceParams":
        """Build from dimensionless ratios to omega_m and kappa.

        ``omega_m`` and ``omega_c`` are angular frequencies. The coupling is
        stored with ``beta = 1``.
        """
        kappa = kappa_over_omega_m * omega_m
        return cls(
            g0=coupling_over_kappa * kappa,
            beta=1.0,
            kappa=kappa,
            gamma=gamma_over_omega_m * omega_m,
            omega_m=omega_m,
            omega_c=omega_c,
        )

    @property
    def coupling(self) -> float:
        """Linearized coupling ``g0 * beta``."""
        return self.g0 * self.beta

    @property
    def G(self) -> float:
        return cooperativity_rate(self)

    @property
    def gamma_over_G(self) -> float:
        G = self.G
        if G == 0:
            return np.inf if self.gamma > 0 else 0.0
        return self.gamma / G

    def replace(self, **changes) -> "DeviceParams":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update(changes)
        return DeviceParams(**values)


def cooperativity_rate(params: DeviceParams) -> float:
    """Effective mechanics-field rate ``G = (g0 beta)^2 / kappa``."""
    if params.kappa <= 0:
        raise ValueError("kappa must be positive")
    return params.coupling**2 / params.kappa


# ---------------------------------------------------------------------------
# temporal envelopes


DECAY_P = "DecayP"
GROW_Q = "GrowQ"
CUSTOM = "Custom"


def _log_norm(G: float, tau: float) -> float:
    """``log sqrt(2G / (1 - exp(-2 G tau)))`` without overflow or cancellation."""
    return 0.5 * (np.log(2.0 * G) - np.log(-np.expm1(-2.0 * G * tau)))


@dataclass(frozen=True)
class TemporalEnvelope:
    """Square-normalized weight function on ``[0, tau]``.

    For ``Custom`` envelopes ``times``/``values`` tabulate the shape; it is
    interpolated linearly and rescaled so the integral of its square (exact
    for the piecewise-linear interpolant) equals one.
    """

    kind: str
    tau: float
    G: float = 0.0
    times: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.kind in (DECAY_P, GROW_Q):
            if self.G <= 0:
                raise ValueError(f"G must be positive, got {self.G}")
        elif self.kind == CUSTOM:
            t = np.asarray(self.times, dtype=float)
            f = np.asarray(self.values, dtype=float)
            if t.ndim != 1 or t.shape != f.shape or t.size < 2:
                raise ValueError("custom envelope needs matching 1-d times and values")
            if np.any(np.diff(t) <= 0) or t[0] != 0.0 or not np.isclose(t[-1], self.tau):
                raise ValueError("custom envelope times must increase from 0 to tau")
            f = f / np.sqrt(_piecewise_linear_sq_integral(t, f))
            t.setflags(write=False)
            f.setflags(write=False)
            object.__setattr__(self, "times", t)
            object.__setattr__(self, "values", f)
        else:
            raise ValueError(f"unknown envelope kind {self.kind!r}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == DECAY_P:
            return np.exp(_log_norm(self.G, self.tau) - self.G * t)
        if self.kind == GROW_Q:
            return np.exp(_log_norm(self.G, self.tau) - self.G * (self.tau - t))
        return np.interp(t, self.times, self.values)

    def norm_sq(self) -> float:
        """Integral of the squared envelope over ``[0, tau]``."""
        if self.kind == CUSTOM:
            return _piecewise_linear_sq_integral(self.times, self.values)
        x = 2.0 * self.G * self.tau
        # closed form of the exponential weight integral, evaluated independently
        return float(np.exp(2 * _log_norm(self.G, self.tau)) * (-np.expm1(-x)) / (2 * self.G))


def _piecewise_linear_sq_integral(t: np.ndarray, f: np.ndarray) -> float:
    a, b = f[:-1], f[1:]
    return float(np.sum(np.diff(t) * (a * a + a * b + b * b) / 3.0))


def envelope(kind: str, G: float, tau: float) -> TemporalEnvelope:
    return TemporalEnvelope(kind, tau, G)


# ---------------------------------------------------------------------------
# closed-form channels


def swap_coefficients(r: float) -> tuple[float, float]:
    """``(exp(-r), sqrt(1 - exp(-2r)))`` for the red-sideband swap."""
    return float(np.exp(-r)), float(np.sqrt(-np.expm1(-2.0 * r)))


def squeeze_coefficients(r: float) -> tuple[float, float]:
    """``(exp(r), sqrt(exp(2r) - 1))`` for the blue-sideband amplifier."""
    return float(np.exp(r)), float(np.exp(r) * np.sqrt(-np.expm1(-2.0 * r)))


def _red_matrix(c: float, t: float) -> np.ndarray:
    # rows: X_A', P_A', X_M', P_M'; columns: X_A, P_A, X_M, P_M
    return np.array(
        [
            [-c, 0.0, 0.0, t],
            [0.0, -c, -t, 0.0],
            [0.0, -t, c, 0.0],
            [t, 0.0, 0.0, c],
        ]
    )


def _blue_matrix(s: float, q: float) -> np.ndarray:
    return np.array(
        [
            [-s, 0.0, 0.0, -q],
            [0.0, -s, -q, 0.0],
            [0.0, q, s, 0.0],
            [q, 0.0, 0.0, s],
        ]
    )


@dataclass(frozen=True)
class SidebandChannel:
    """Two-mode channel over (optical temporal mode, mechanics).

    ``channel`` folds the mechanical bath into its added noise. ``full_K``
    keeps the bath as an explicit third input mode (with no added noise), so
    commutator bookkeeping can be done on it.
    """

    side: str
    r: float
    bath_coefficient: float
    n_T: float
    channel: GaussianChannel
    full_K: np.ndarray
    input_envelope: str
    output_envelope: str

    @property
    def K(self) -> np.ndarray:
        return self.channel.K

    @property
    def N(self) -> np.ndarray:
        return self.channel.N

    def bath_symplectic_defect(self) -> float:
        """Commutator defect of the map including the explicit bath mode."""
        om_in = symplectic_form(3)
        om_out = symplectic_form(2)
        return float(np.max(np.abs(self.full_K @ om_in @ self.full_K.T - om_out)))


def check_sideband_preconditions(params: DeviceParams, tau: float, min_kappa_tau: float = MIN_KAPPA_TAU):
    if tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    if 0 < params.kappa * tau < min_kappa_tau:
        warnings.warn(
            f"kappa*tau = {params.kappa * tau:.3g} is short for adiabatic elimination",
            ValidityWarning,
            stacklevel=3,
        )


def _build(side, r, gamma_over_G, n_T, core, bath_coef, env_in, env_out):
    full = np.zeros((4, 6))
    full[:, :4] = core
    full[2, 4] = full[3, 5] = -bath_coef
    noise = np.zeros((4, 4))
    noise[2:, 2:] = bath_coef**2 * (n_T + 0.5) * np.eye(2)
    return SidebandChannel(
        side, r, bath_coef, n_T, GaussianChannel(core, noise), full, env_in, env_out
    )


def red_channel(params: DeviceParams, tau: float, n_T: float = 0.0, **kw) -> SidebandChannel:
    """State-swap between the mechanics and the optical temporal modes."""
    check_sideband_preconditions(params, tau, **kw)
    if n_T < 0:
        raise ValueError("n_T must be non-negative")
    G = params.G
    r = G * tau
    c, t = swap_coefficients(r)
    bath = np.sqrt(params.gamma_over_G * -np.expm1(-2.0 * r)) if r > 0 else 0.0
    return _build("red", r, params.gamma_over_G, n_T, _red_matrix(c, t), bath, GROW_Q, DECAY_P)


def blue_channel(params: DeviceParams, tau: float, n_T: float = 0.0, **kw) -> SidebandChannel:
    """Two-mode squeezing between the mechanics and a travelling optical mode."""
    check_sideband_preconditions(params, tau, **kw)
    if n_T < 0:
        raise ValueError("n_T must be non-negative")
    G = params.G
    r = G * tau
    s, q = squeeze_coefficients(r)
    bath = q * np.sqrt(params.gamma_over_G) if r > 0 else 0.0
    return _build("blue", r, params.gamma_over_G, n_T, _blue_matrix(s, q), bath, DECAY_P, GROW_Q)


def epr_variance_closed_form(r: float, n_T: float, gamma_over_G: float) -> float:
    """EPR variance of the blue-sideband output for thermal mechanics."""
    if r < 0 or n_T < 0 or gamma_over_G < 0:
        raise ValueError("r, n_T and gamma_over_G must be non-negative")
    # e^r - sqrt(e^{2r} - 1) = 1 / (e^r + sqrt(e^{2r} - 1)) = e^{-r} / (1 + sqrt(1 - e^{-2r}))
    gap = np.exp(-r) / (1.0 + np.sqrt(-np.expm1(-2.0 * r)))
    return float(2.0 * (n_T + 1.0) * gap**2 + gamma_over_G * np.expm1(2.0 * r) * (2.0 * n_T + 1.0))


def channel_vs_state_consistency(params: DeviceParams, tau: float, side: str, n_T: float) -> float:
    """Max absolute residual between channel action and the closed forms."""
    build = {"red": red_channel, "blue": blue_channel}[side]
    sc = build(params, tau, n_T)
    out = apply_channel(vacuum_state(1).tensor(thermal_state(n_T)), sc.channel)
    r = sc.r
    if side == "blue":
        return abs(epr_variance(out, 0, 1) - epr_variance_closed_form(r, n_T, params.gamma_over_G))
    c, t = swap_coefficients(r)
    residuals = [
        abs(abs(sc.K[0, 0]) - c),
        abs(abs(sc.K[0, 3]) - t),
        abs(abs(sc.K[3, 0]) - t),
        abs(out.cov[2, 2] - (c**2 * (n_T + 0.5) + 0.5 * t**2 + sc.bath_coefficient**2 * (n_T + 0.5))),
        abs(out.cov[0, 0] - (0.5 * c**2 + t**2 * (n_T + 0.5))),
    ]
    return float(max(residuals))

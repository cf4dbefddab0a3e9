"""Gaussian states and channels in the xpxp quadrature ordering.

Quadratures follow ``X = (m + m^dag)/sqrt(2)``, ``P = i(m^dag - m)/sqrt(2)``,
so the vacuum covariance is ``I/2`` and ``[X, P] = i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# CODATA 2018
HBAR = 1.054571817e-34
K_B = 1.380649e-23

SYMMETRY_RTOL = 1e-12
PSD_ATOL = 1e-10


def symplectic_form(n_modes: int) -> np.ndarray:
    """Standard symplectic form for ``n_modes`` in xpxp ordering."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_psd(mat: np.ndarray, what: str) -> None:
    scale = max(1.0, float(np.max(np.abs(mat))))
    if not np.allclose(mat, mat.T, rtol=SYMMETRY_RTOL, atol=SYMMETRY_RTOL * scale):
        raise ValueError(f"{what} is not symmetric")
    lowest = np.linalg.eigvalsh(0.5 * (mat + mat.T))[0] if mat.size else 0.0
    if lowest < -PSD_ATOL * scale:
        raise ValueError(f"{what} is not positive semidefinite (min eigenvalue {lowest:.3e})")


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and covariance matrix over ``n`` modes (xpxp ordering)."""

    means: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        means = _frozen(self.means).reshape(-1)
        cov = _frozen(self.cov)
        if means.size == 0 or means.size % 2:
            raise ValueError(f"means must have even, nonzero length, got {means.size}")
        if cov.shape != (means.size, means.size):
            raise ValueError(f"cov shape {cov.shape} does not match means length {means.size}")
        _check_psd(cov, "covariance")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.means.size // 2

    def reduced(self, modes: Sequence[int] | int) -> "GaussianState":
        """Marginal state on the given modes."""
        idx = _quadrature_indices(modes, self.n_modes)
        return GaussianState(self.means[idx], self.cov[np.ix_(idx, idx)])

    def tensor(self, other: "GaussianState") -> "GaussianState":
        """Product state ``self (x) other``."""
        n = self.means.size
        cov = np.zeros((n + other.means.size,) * 2)
        cov[:n, :n] = self.cov
        cov[n:, n:] = other.cov
        return GaussianState(np.concatenate([self.means, other.means]), cov)

    def displaced(self, shift) -> "GaussianState":
        return GaussianState(self.means + np.asarray(shift, dtype=float), self.cov)


@dataclass(frozen=True)
class GaussianChannel:
    """Affine Gaussian map ``means -> K means``, ``cov -> K cov K^T + N``."""

    K: np.ndarray
    N: np.ndarray

    def __post_init__(self):
        K = _frozen(np.atleast_2d(self.K))
        N = _frozen(np.atleast_2d(self.N))
        if K.shape[0] % 2 or K.shape[1] % 2:
            raise ValueError(f"K must have even dimensions, got {K.shape}")
        if N.shape != (K.shape[0], K.shape[0]):
            raise ValueError(f"N shape {N.shape} incompatible with K shape {K.shape}")
        _check_psd(N, "added-noise matrix")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "N", N)

    @classmethod
    def identity(cls, n_modes: int) -> "GaussianChannel":
        return cls(np.eye(2 * n_modes), np.zeros((2 * n_modes, 2 * n_modes)))

    @property
    def n_in(self) -> int:
        return self.K.shape[1] // 2

    @property
    def n_out(self) -> int:
        return self.K.shape[0] // 2

    def then(self, after: "GaussianChannel") -> "GaussianChannel":
        """Channel equal to applying ``self`` first and ``after`` second."""
        if after.K.shape[1] != self.K.shape[0]:
            raise ValueError("channel dimensions do not chain")
        K = after.K @ self.K
        N = after.K @ self.N @ after.K.T + after.N
        return GaussianChannel(K, 0.5 * (N + N.T))

    def embed(self, n_modes: int, modes: Sequence[int]) -> "GaussianChannel":
        """Extend a square channel to act on ``modes`` of an ``n_modes`` system."""
        if self.n_in != self.n_out or len(modes) != self.n_in:
            raise ValueError("only square channels with matching mode list can be embedded")
        idx = _quadrature_indices(modes, n_modes)
        K = np.eye(2 * n_modes)
        N = np.zeros((2 * n_modes, 2 * n_modes))
        K[np.ix_(idx, idx)] = self.K
        N[np.ix_(idx, idx)] = self.N
        return GaussianChannel(K, N)

    def symplectic_defect(self) -> float:
        """Max-abs deviation of ``K Omega K^T`` from ``Omega`` (square channels)."""
        if self.n_in != self.n_out:
            raise ValueError("symplectic defect needs a square channel")
        om = symplectic_form(self.n_in)
        return float(np.max(np.abs(self.K @ om @ self.K.T - om)))


def _quadrature_indices(modes, n_modes: int) -> np.ndarray:
    modes = np.atleast_1d(np.asarray(modes, dtype=int))
    if np.any(modes < 0) or np.any(modes >= n_modes):
        raise IndexError(f"mode index out of range for {n_modes} modes: {modes.tolist()}")
    return np.ravel(np.column_stack([2 * modes, 2 * modes + 1]))


def vacuum_state(n_modes: int) -> GaussianState:
    if n_modes < 1:
        raise ValueError("n_modes must be at least 1")
    return GaussianState(np.zeros(2 * n_modes), 0.5 * np.eye(2 * n_modes))


def thermal_state(n_T: float) -> GaussianState:
    if n_T < 0:
        raise ValueError(f"thermal occupation must be non-negative, got {n_T}")
    return GaussianState(np.zeros(2), (n_T + 0.5) * np.eye(2))


def coherent_state(x: float = 0.0, p: float = 0.0) -> GaussianState:
    """Coherent state with quadrature means ``(x, p)``; ``alpha = (x + ip)/sqrt(2)``."""
    return GaussianState([x, p], 0.5 * np.eye(2))


def thermal_occupation(omega: float, temperature: float) -> float:
    """Bose-Einstein occupation at angular frequency ``omega`` (rad/s)."""
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    if temperature < 0:
        raise ValueError(f"temperature must be non-negative, got {temperature}")
    x = HBAR * omega / (K_B * temperature) if temperature > 0 else np.inf
    if x > 700.0:  # exp overflows; the occupation underflows to zero
        return 0.0
    return float(1.0 / np.expm1(x))


@dataclass(frozen=True)
class ThermalEnvironment:
    """Mechanical bath described either by temperature or directly by ``n_T``."""

    n_T: float
    temperature: float | None = None
    mode: str = "occupation"

    @classmethod
    def from_temperature(cls, temperature: float, omega_m: float) -> "ThermalEnvironment":
        return cls(thermal_occupation(omega_m, temperature), temperature, "temperature")

    @classmethod
    def from_occupation(cls, n_T: float) -> "ThermalEnvironment":
        return cls(n_T)

    def __post_init__(self):
        if self.n_T < 0:
            raise ValueError(f"n_T must be non-negative, got {self.n_T}")
        if self.mode not in ("occupation", "temperature"):
            raise ValueError(f"unknown mode {self.mode!r}")


def apply_channel(state: GaussianState, channel: GaussianChannel) -> GaussianState:
    if channel.K.shape[1] != state.means.size:
        raise ValueError(
            f"channel expects {channel.n_in} input modes, state has {state.n_modes}"
        )
    cov = channel.K @ state.cov @ channel.K.T + channel.N
    return GaussianState(channel.K @ state.means, 0.5 * (cov + cov.T))


def epr_variance(state: GaussianState, mode_i: int, mode_j: int) -> float:
    """``Var(X_i + P_j) + Var(P_i + X_j)``; below 2 certifies entanglement."""
    n = state.n_modes
    if n < 2:
        raise ValueError("EPR variance needs at least two modes")
    if mode_i == mode_j:
        raise ValueError("EPR variance needs two distinct modes")
    for m in (mode_i, mode_j):
        if not 0 <= m < n:
            raise IndexError(f"mode {m} out of range for {n} modes")
    v = state.cov
    xi, pi, xj, pj = 2 * mode_i, 2 * mode_i + 1, 2 * mode_j, 2 * mode_j + 1
    first = v[xi, xi] + v[pj, pj] + 2 * v[xi, pj]
    second = v[pi, pi] + v[xj, xj] + 2 * v[pi, xj]
    return float(first + second)


def coherent_fidelity(out_state: GaussianState, alpha_target: complex) -> float:
    """Overlap of a single-mode Gaussian with the coherent state ``|alpha>``.

    Equal to ``pi * Q(alpha)``; the Q function of a Gaussian has covariance
    ``cov + I/2`` in quadrature space.
    """
    if out_state.n_modes != 1:
        raise ValueError("coherent fidelity needs a single-mode state")
    alpha = complex(alpha_target)
    target = np.sqrt(2.0) * np.array([alpha.real, alpha.imag])
    sigma = out_state.cov + 0.5 * np.eye(2)
    det = np.linalg.det(sigma)
    if det <= 0 or np.any(np.diag(sigma) <= 0):
        raise ValueError("Q-function covariance is not positive definite")
    d = out_state.means - target
    return float(np.exp(-0.5 * d @ np.linalg.solve(sigma, d)) / np.sqrt(det))


def homodyne_feedforward(
    state: GaussianState,
    measured: Sequence[tuple[int, str]],
    target: int,
    gain,
) -> GaussianState:
    """Measure quadratures, displace ``target`` by ``gain @ outcomes``, average.

    ``measured`` lists ``(mode, "x" | "p")`` pairs; every measured mode is
    traced out afterwards. The conditional Gaussian update is applied first
    and the displacement is then averaged over the outcome distribution, so
    the returned state is the unconditional output on the unmeasured modes
    (mode order preserved).
    """
    n = state.n_modes
    meas_idx = np.array([2 * m + (0 if q.lower() == "x" else 1) for m, q in measured])
    meas_modes = sorted({m for m, _ in measured})
    keep = [m for m in range(n) if m not in meas_modes]
    if target not in keep:
        raise ValueError("feed-forward target must be an unmeasured mode")
    keep_idx = _quadrature_indices(keep, n)
    gain = np.atleast_2d(np.asarray(gain, dtype=float))
    if gain.shape != (2, meas_idx.size):
        raise ValueError(f"gain must have shape (2, {meas_idx.size}), got {gain.shape}")

    v = state.cov
    v_kk = v[np.ix_(keep_idx, keep_idx)]
    v_km = v[np.ix_(keep_idx, meas_idx)]
    v_mm = v[np.ix_(meas_idx, meas_idx)]
    regression = np.linalg.solve(v_mm, v_km.T).T
    cond = v_kk - regression @ v_km.T

    # displacement acts on the target's two quadratures only
    disp = np.zeros((keep_idx.size, meas_idx.size))
    t = keep.index(target)
    disp[2 * t : 2 * t + 2] = gain

    spread = regression + disp
    cov = cond + spread @ v_mm @ spread.T
    means = state.means[keep_idx] + disp @ state.means[meas_idx]
    return GaussianState(means, 0.5 * (cov + cov.T))

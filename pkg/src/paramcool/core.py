"""Shared state containers and occupation formulas for parametric feedback cooling.

Everything in this package works in dimensionless oscillator units
(hbar = m = omega_0 = 1).  The mode operator is a = (x + i p) / sqrt(2), so the
vacuum has quadrature variances s_xx = s_pp = 1/2 and a coherent state of
amplitude xi carries |xi|^2 quanta on average.  The parametric drive modulates
the trap stiffness as omega^2(t) = 1 + 4 f(t) with f(t) = lam * cos(omega_p t
+ phi_p); resonant driving means omega_p = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def reduce_angle(phi: float) -> float:
    """Reduce an angle to the fundamental interval [0, 2*pi)."""
    phi = math.fmod(phi, TWO_PI)
    if phi < 0.0:
        phi += TWO_PI
    # fmod of a tiny negative number can land exactly on 2*pi after the shift
    if phi >= TWO_PI:
        phi -= TWO_PI
    return phi


@dataclass(frozen=True)
class DriveParams:
    """Parametric drive: trap-frequency modulation f(t) = lam*cos(omega_p*t + phi_p).

    ``lam`` is the (small) modulation amplitude, ``omega_p`` the drive
    frequency (2 on resonance), ``phi_p`` the drive phase offset.  lam = 0 is
    accepted and means free evolution; it is useful as the exact reference
    limit.
    """

    lam: float
    omega_p: float = 2.0
    phi_p: float = math.pi / 2

    def __post_init__(self) -> None:
        if not self.lam >= 0.0:
            raise ValueError(f"drive amplitude must be >= 0, got {self.lam}")
        if not self.omega_p > 0.0:
            raise ValueError(f"drive frequency must be > 0, got {self.omega_p}")
        object.__setattr__(self, "phi_p", reduce_angle(self.phi_p))

    def f(self, t):
        """Modulation waveform f(t); accepts scalars or arrays."""
        return self.lam * np.cos(self.omega_p * np.asarray(t) + self.phi_p)


def modulation_depth(drive: DriveParams) -> float:
    """Fractional trap-stiffness modulation G = 4*lam (omega_0 = 1)."""
    return 4.0 * drive.lam


@dataclass(frozen=True)
class BogoliubovPair:
    """Coefficients of the mode transformation a(t) = alpha*a + beta*a^dag."""

    alpha: complex
    beta: complex

    @property
    def defect(self) -> float:
        """Deviation |alpha|^2 - |beta|^2 - 1 from exact normalization."""
        return abs(self.alpha) ** 2 - abs(self.beta) ** 2 - 1.0

    def is_normalized(self, tol: float = 1e-9) -> bool:
        return abs(self.defect) <= tol


@dataclass(frozen=True)
class CoherentState:
    """Coherent-state label xi = r * exp(i*phi), r >= 0, phi in [0, 2*pi)."""

    r: float
    phi: float = 0.0

    def __post_init__(self) -> None:
        if not self.r >= 0.0:
            raise ValueError(f"coherent amplitude must be >= 0, got {self.r}")
        object.__setattr__(self, "phi", reduce_angle(self.phi))

    @property
    def xi(self) -> complex:
        return self.r * complex(math.cos(self.phi), math.sin(self.phi))

    @property
    def mean_quanta(self) -> float:
        return self.r * self.r


@dataclass(frozen=True)
class ThermalParams:
    """Thermal state of mean occupation nbar >= 0."""

    nbar: float

    def __post_init__(self) -> None:
        if not self.nbar >= 0.0:
            raise ValueError(f"thermal occupation must be >= 0, got {self.nbar}")


# Numerically propagated pure states sit on the Heisenberg boundary
# det(sigma) = 1/4; integration error of order 1e-11 must not be rejected.
HEISENBERG_SLACK = 1e-9


@dataclass(frozen=True)
class GaussianState:
    """First and second moments of a single-mode Gaussian state.

    Moments refer to the dimensionless quadratures x and p: means
    (mean_x, mean_p) and the symmetric covariance (s_xx, s_xp, s_pp).
    Vacuum is s_xx = s_pp = 1/2, s_xp = 0.
    """

    mean_x: float
    mean_p: float
    s_xx: float
    s_xp: float
    s_pp: float

    def __post_init__(self) -> None:
        if not (self.s_xx > 0.0 and self.s_pp > 0.0):
            raise ValueError("quadrature variances must be positive")
        det = self.s_xx * self.s_pp - self.s_xp * self.s_xp
        if det < 0.25 - HEISENBERG_SLACK:
            raise ValueError(
                f"covariance violates the Heisenberg bound: det = {det!r} < 1/4"
            )

    @classmethod
    def vacuum(cls) -> "GaussianState":
        return cls(0.0, 0.0, 0.5, 0.0, 0.5)

    @classmethod
    def from_coherent(cls, state: CoherentState) -> "GaussianState":
        xi = state.xi
        return cls(math.sqrt(2.0) * xi.real, math.sqrt(2.0) * xi.imag, 0.5, 0.0, 0.5)

    @classmethod
    def thermal(cls, params: ThermalParams) -> "GaussianState":
        v = params.nbar + 0.5
        return cls(0.0, 0.0, v, 0.0, v)

    @property
    def covariance_det(self) -> float:
        return self.s_xx * self.s_pp - self.s_xp * self.s_xp


def occupation_from_moments(g: GaussianState) -> float:
    """Mean occupation <a^dag a> = (s_xx + s_pp + mean_x^2 + mean_p^2 - 1)/2."""
    return 0.5 * (g.s_xx + g.s_pp + g.mean_x**2 + g.mean_p**2 - 1.0)


def occupation_general(bog: BogoliubovPair, n0: float, a2: complex) -> float:
    """Occupation after the mode transformation, for arbitrary initial moments.

    ``n0`` is the initial <a^dag a> and ``a2`` the initial <a^2>; the initial
    <a^dag^2> is its conjugate, which keeps the result real for any physical
    input.

    Returns |alpha|^2 n0 + |beta|^2 (n0 + 1) + 2 Re[alpha beta* a2].
    """
    a, b = bog.alpha, bog.beta
    return (
        abs(a) ** 2 * n0
        + abs(b) ** 2 * (n0 + 1.0)
        + 2.0 * (a * np.conj(b) * a2).real
    )


def occupation_coherent_exact(bog: BogoliubovPair, state: CoherentState) -> float:
    """Exact occupation of an evolved coherent state.

    (|alpha|^2 + |beta|^2) r^2 + |beta|^2 + 2 Re[alpha beta* xi^2]; valid for
    any drive strength, not just perturbatively.
    """
    xi = state.xi
    return occupation_general(bog, state.mean_quanta, xi * xi)


def occupation_coherent_firstorder(t, drive: DriveParams, phi: float):
    """First-order (in lam) occupation of a unit coherent state at phase phi.

    Multiply by r^2 for amplitude r.  On resonance the growing term is
    -2*lam*t*sin(2*phi + phi_p): the drive cools when 2*phi + phi_p = pi/2
    and heats when it is 3*pi/2.
    """
    t = np.asarray(t, dtype=float)
    lam, phi_p = drive.lam, drive.phi_p
    return 1.0 + lam * (
        np.cos(phi_p) - np.cos(2.0 * t + phi_p) - 2.0 * t * np.sin(2.0 * phi + phi_p)
    )


def occupation_thermal(bog: BogoliubovPair, params: ThermalParams) -> float:
    """Occupation of an evolved thermal state: nbar + (1 + 2*nbar)|beta|^2."""
    b2 = abs(bog.beta) ** 2
    return params.nbar + (1.0 + 2.0 * params.nbar) * b2


def cooling_phase(phi: float) -> float:
    """Drive phase phi_p that cools a coherent state at phase phi: pi/2 - 2*phi."""
    return reduce_angle(math.pi / 2 - 2.0 * phi)


def rotate_state(state, angle: float):
    """Apply the phase-space rotation exp(-i*angle*a^dag a) to a state.

    A coherent state's phase shifts by -angle; a Gaussian state's moments
    rotate by the corresponding 2x2 orthogonal map.  The occupation is
    invariant either way.
    """
    if isinstance(state, CoherentState):
        return CoherentState(state.r, state.phi - angle)
    if isinstance(state, GaussianState):
        c, s = math.cos(angle), math.sin(angle)
        # (x + i p) -> e^{-i angle} (x + i p)
        mx = c * state.mean_x + s * state.mean_p
        mp = -s * state.mean_x + c * state.mean_p
        xx = c * c * state.s_xx + 2.0 * c * s * state.s_xp + s * s * state.s_pp
        pp = s * s * state.s_xx - 2.0 * c * s * state.s_xp + c * c * state.s_pp
        xp = (c * c - s * s) * state.s_xp + c * s * (state.s_pp - state.s_xx)
        return GaussianState(mx, mp, xx, xp, pp)
    raise TypeError(f"cannot rotate object of type {type(state).__name__}")

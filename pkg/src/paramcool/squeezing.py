"""Lie-algebra factorization of the parametric propagator and the
optimal-control law.

The propagator of the driven oscillator factorizes (su(1,1) structure) as

    U(t) = e^{-i J0(t) (n + 1/2)} e^{...J+} e^{...J-}

with three real coefficients J0, J+, J- obeying a triangular ODE system.
Equivalently, up to a global phase, U(t) is a rotation followed by a squeeze,

    U = R(varphi) S(r_sq e^{i theta_sq}),   R(phi) = e^{-i phi n},
    S(z) = e^{(z a^dag^2 - z^* a^2)/2},

which gives the control handle: squeezing at the right phase removes quanta
from a coherent state.  The optimal squeeze magnitude for amplitude r is
r_sq* = ln(1+4r^2)/4, leaving (sqrt(1+4r^2)-1)/2 quanta — the single-cycle
floor the feedback protocol drives toward.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import BogoliubovPair, CoherentState, DriveParams, reduce_angle
from .dynamics import (
    DEFAULT_SETTINGS,
    IntegrationError,
    PQSolution,
    SolverSettings,
    _check_horizon,
    bogoliubov_from_pq,
)


@dataclass(frozen=True)
class JCoeffs:
    """The three factorization coefficients at a single time."""

    j0: float
    jp: float
    jm: float


@dataclass(frozen=True)
class SqueezeDecomp:
    """Rotation-then-squeeze decomposition U = R(varphi) S(r_sq e^{i theta_sq})."""

    r_sq: float
    theta_sq: float
    varphi: float

    def reconstruct(self) -> BogoliubovPair:
        """Bogoliubov pair of R(varphi) S(r_sq e^{i theta_sq})."""
        rot = np.exp(-1j * self.varphi)
        return BogoliubovPair(
            rot * math.cosh(self.r_sq),
            rot * np.exp(1j * self.theta_sq) * math.sinh(self.r_sq),
        )


class JTrajectory:
    """Dense-output solution of the factorization ODEs on [0, t_end]."""

    def __init__(self, drive: DriveParams, t_end: float, interpolant):
        self.drive = drive
        self.t_end = float(t_end)
        self._sol = interpolant

    def __call__(self, t: float) -> JCoeffs:
        if not -1e-12 <= t <= self.t_end * (1 + 1e-12) + 1e-12:
            raise ValueError(f"time outside the solved interval [0, {self.t_end}]")
        j0, jp, jm = self._sol(min(max(t, 0.0), self.t_end))
        return JCoeffs(float(j0), float(jp), float(jm))


def solve_j_odes(
    drive: DriveParams,
    t_end: float,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> JTrajectory:
    """Integrate the triangular system for (J0, J+, J-) from zero initial data.

        J0' = 1 + 2 f(t) [1 - sin(2 J0) tanh(4 J+)]
        J+' = f(t) cos(2 J0)
        J-' = f(t) sin(2 J0) / cosh(4 J+)

    J- feeds back into nothing, so a single joint solve preserves the
    triangular structure exactly.
    """
    _check_horizon(drive, t_end)

    def rhs(t, y):
        j0, jp, _ = y
        ft = drive.f(t)
        return (
            1.0 + 2.0 * ft * (1.0 - math.sin(2.0 * j0) * math.tanh(4.0 * jp)),
            ft * math.cos(2.0 * j0),
            ft * math.sin(2.0 * j0) / math.cosh(4.0 * jp),
        )

    if t_end == 0.0:
        return JTrajectory(drive, 0.0, lambda t: np.zeros(3))
    sol = solve_ivp(
        rhs,
        (0.0, t_end),
        (0.0, 0.0, 0.0),
        method="DOP853",
        dense_output=True,
        rtol=settings.rel_tol,
        atol=settings.abs_tol,
        max_step=settings.max_step,
    )
    if not sol.success:
        raise IntegrationError(sol.message, float(sol.t[-1]))
    return JTrajectory(drive, t_end, sol.sol)


def bogoliubov_from_j(j: JCoeffs) -> BogoliubovPair:
    """Bogoliubov pair in terms of the factorization coefficients.

    With Cpm = cosh(2 Jpm), Spm = sinh(2 Jpm):
        alpha = e^{-i J0} (C+ C- - i S+ S-),
        beta  = e^{-i J0} (C+ S- - i S+ C-).
    The normalization |alpha|^2 - |beta|^2 = (C+^2 - S+^2)(C-^2 - S-^2) = 1
    holds identically.
    """
    cp, sp = math.cosh(2.0 * j.jp), math.sinh(2.0 * j.jp)
    cm, sm = math.cosh(2.0 * j.jm), math.sinh(2.0 * j.jm)
    rot = np.exp(-1j * j.j0)
    return BogoliubovPair(rot * (cp * cm - 1j * sp * sm), rot * (cp * sm - 1j * sp * cm))


def j_from_pq(pq: PQSolution, t: float) -> JCoeffs:
    """Recover (J0, J+, J-) from the fundamental solutions at time t.

    The phase e^{-2i J0} equals arg[(P + i P')(Q' - i Q)]; it is unwrapped
    cumulatively from J0(0) = 0 on a grid fine enough (step <= 0.5) that the
    rotation never advances by more than pi between samples.  J+ and J- then
    follow algebraically from the rotated Bogoliubov pair.
    """
    n_grid = max(2, math.ceil(t / 0.5) + 1)
    ts = np.linspace(0.0, t, n_grid)
    p, dp, q, dq = pq(ts)
    phase = np.unwrap(np.angle((p + 1j * dp) * (dq - 1j * q)))
    j0 = -0.5 * (phase[-1] - phase[0])

    alpha = 0.5 * ((p[-1] + 1j * dp[-1]) + (dq[-1] - 1j * q[-1]))
    beta = 0.5 * ((p[-1] + 1j * dp[-1]) - (dq[-1] - 1j * q[-1]))
    w = np.exp(1j * j0) * alpha  # = C+ C- - i S+ S-
    v = np.exp(1j * j0) * beta  # = C+ S- - i S+ C-
    jp = -0.5 * math.atanh((w.imag + v.imag) / (w.real + v.real))
    jm = 0.25 * math.log((w.real + v.real) / (w.real - v.real))
    return JCoeffs(float(j0), jp, jm)


def decompose(obj, t: float | None = None) -> SqueezeDecomp:
    """Extract the rotation-then-squeeze parameters.

    Accepts a PQSolution (with a time), a JCoeffs, or a BogoliubovPair.
    With alpha = e^{-i varphi} cosh r_sq and beta = e^{-i varphi} e^{i theta_sq}
    sinh r_sq, the parameters invert to r_sq = arctanh(|beta|/|alpha|),
    theta_sq = arg(beta/alpha), varphi = -arg(alpha).
    """
    if isinstance(obj, PQSolution):
        if t is None:
            raise ValueError("a time is required to decompose a PQSolution")
        pair = bogoliubov_from_pq(obj, t)
    elif isinstance(obj, JCoeffs):
        pair = bogoliubov_from_j(obj)
    elif isinstance(obj, BogoliubovPair):
        pair = obj
    else:
        raise TypeError(f"cannot decompose {type(obj).__name__}")

    ratio = abs(pair.beta) / abs(pair.alpha)
    if ratio >= 1.0:
        if ratio <= 1.0 + 1e-12:
            warnings.warn("clamping arctanh argument marginally >= 1", stacklevel=2)
            ratio = np.nextafter(1.0, 0.0)
        else:
            raise ValueError(f"squeeze ratio |beta|/|alpha| = {ratio} >= 1")
    r_sq = math.atanh(ratio)
    theta_sq = reduce_angle(np.angle(pair.beta) - np.angle(pair.alpha)) if ratio > 0 else 0.0
    varphi = reduce_angle(-np.angle(pair.alpha))
    return SqueezeDecomp(r_sq, float(theta_sq), float(varphi))


def rsq_linear(t, drive: DriveParams):
    """Leading-order squeeze growth r_sq ~ lam * t."""
    return drive.lam * np.asarray(t, dtype=float)


def quanta_after_squeeze(xi: CoherentState, r_sq: float, theta_sq: float) -> float:
    """Occupation of S(r_sq, theta_sq) applied to the coherent state xi.

    n = r^2 cosh^2 r_sq - 2 r^2 cos(2 phi - theta_sq) cosh r_sq sinh r_sq
        + (r^2 + 1) sinh^2 r_sq.

    Minimized over the phase at theta_sq = 2 phi, where it reduces to
    r^2 e^{-2 r_sq} + sinh^2 r_sq.
    """
    r2 = xi.r**2
    ch, sh = math.cosh(r_sq), math.sinh(r_sq)
    return r2 * ch * ch - 2.0 * r2 * math.cos(2.0 * xi.phi - theta_sq) * ch * sh + (r2 + 1.0) * sh * sh


def optimal_rsq(r):
    """Squeeze magnitude minimizing the post-squeeze occupation: ln(1+4r^2)/4."""
    r = np.asarray(r, dtype=float)
    out = 0.25 * np.log1p(4.0 * r * r)
    return float(out) if out.ndim == 0 else out


def optimal_time(r: float, drive: DriveParams) -> float:
    """Drive duration that accumulates the optimal squeeze: optimal_rsq(r)/lam."""
    if drive.lam <= 0.0:
        raise ValueError("optimal_time requires lam > 0")
    return float(optimal_rsq(r)) / drive.lam


def min_quanta(r):
    """Single-cycle occupation floor (sqrt(1+4r^2) - 1)/2 at the optimal squeeze."""
    r = np.asarray(r, dtype=float)
    out = 0.5 * (np.sqrt(1.0 + 4.0 * r * r) - 1.0)
    return float(out) if out.ndim == 0 else out

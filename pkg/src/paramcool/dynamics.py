"""Closed-system parametric dynamics: Mathieu fundamental solutions and
Bogoliubov coefficients.

The Heisenberg equations for x(t) reduce to a Mathieu equation

    y'' + [1 + 4 f(t)] y = 0,      f(t) = lam * cos(omega_p t + phi_p),

equivalent to the standard form with characteristic exponent parameters
(a, eps) = (1, -2*lam) on resonance, which sits inside the first instability
tongue for any lam > 0.  Two fundamental solutions P (cosine-like: P(0)=1,
P'(0)=0) and Q (sine-like: Q(0)=0, Q'(0)=1) determine the full Gaussian
evolution.  The Bogoliubov coefficients follow algebraically:

    alpha = (P - iQ + iP' + Q')/2,     beta = (P + iQ + iP' - Q')/2,

and the Wronskian P Q' - Q P' = 1 is exactly the normalization
|alpha|^2 - |beta|^2 = 1.

Alongside the numeric solver this module carries the two closed-form
approximants used for error analysis: the two-timescale (slow envelope)
solution and the first-order interaction-picture expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import BogoliubovPair, DriveParams

# Refuse drives whose squeezing envelope exp(lam*t) leaves the regime the
# package is validated in; beyond t ~ 200/lam the Gaussian moments themselves
# overflow double precision long before the solver gives up.
HORIZON_FACTOR = 200.0


class IntegrationError(RuntimeError):
    """Numeric integration failed; carries the last successfully reached time."""

    def __init__(self, message: str, t_last: float):
        super().__init__(f"{message} (last good time t = {t_last:.6g})")
        self.t_last = t_last


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances for the adaptive integrator."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf

    def __post_init__(self) -> None:
        for name, tol in (("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)):
            if not 0.0 < tol <= 1e-2:
                raise ValueError(f"{name} must lie in (0, 1e-2], got {tol}")
        if not self.max_step > 0.0:
            raise ValueError("max_step must be positive")


DEFAULT_SETTINGS = SolverSettings()


class PQSolution:
    """Dense-output fundamental solutions of the Mathieu equation on [0, t_end].

    Calling the object at time(s) t returns the tuple (P, P', Q, Q').
    """

    def __init__(self, drive: DriveParams, t_end: float, interpolant, t_grid, y_grid):
        self.drive = drive
        self.t_end = float(t_end)
        self._sol = interpolant
        self.t_grid = t_grid
        self.y_grid = y_grid

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < -1e-12) or np.any(t > self.t_end * (1 + 1e-12) + 1e-12):
            raise ValueError(f"time outside the solved interval [0, {self.t_end}]")
        y = self._sol(np.clip(t, 0.0, self.t_end))
        return y[0], y[1], y[2], y[3]

    def wronskian(self, t):
        p, dp, q, dq = self(t)
        return p * dq - q * dp


def _check_horizon(drive: DriveParams, t_end: float) -> None:
    if t_end < 0.0:
        raise ValueError("t_end must be nonnegative")
    if drive.lam > 0.0 and t_end > HORIZON_FACTOR / drive.lam:
        raise ValueError(
            f"t_end = {t_end:.4g} exceeds the supported horizon "
            f"{HORIZON_FACTOR / drive.lam:.4g} = {HORIZON_FACTOR:g}/lam"
        )


def solve_pq(
    drive: DriveParams,
    t_end: float,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> PQSolution:
    """Integrate the fundamental solutions (P, P', Q, Q') up to t_end."""
    _check_horizon(drive, t_end)

    def rhs(t, y):
        w2 = 1.0 + 4.0 * drive.lam * math.cos(drive.omega_p * t + drive.phi_p)
        return (y[1], -w2 * y[0], y[3], -w2 * y[2])

    if t_end == 0.0:
        # degenerate but legal: identity evolution
        ident = lambda t: np.broadcast_to(  # noqa: E731
            np.array([1.0, 0.0, 0.0, 1.0])[:, None], (4,) + np.shape(np.atleast_1d(t))
        ).reshape((4,) + np.shape(t))
        return PQSolution(drive, 0.0, ident, np.array([0.0]), np.eye(4)[:, :1])

    sol = solve_ivp(
        rhs,
        (0.0, t_end),
        (1.0, 0.0, 0.0, 1.0),
        method="DOP853",
        dense_output=True,
        rtol=settings.rel_tol,
        atol=settings.abs_tol,
        max_step=settings.max_step,
    )
    if not sol.success:
        raise IntegrationError(sol.message, float(sol.t[-1]))
    return PQSolution(drive, t_end, sol.sol, sol.t, sol.y)


def solve_pq_batch(
    lams,
    phi_ps,
    t_eval,
    settings: SolverSettings = DEFAULT_SETTINGS,
    omega_p: float = 2.0,
):
    """Integrate many Mathieu systems with shared time steps.

    Parameters
    ----------
    lams, phi_ps : arrays of shape (B,)
        Per-member drive amplitude and phase.
    t_eval : increasing array of sample times starting at >= 0.

    Returns an array of shape (B, 4, len(t_eval)) holding (P, P', Q, Q').
    Batching keeps the adaptive step sequence common to the whole block, so
    results depend only on the block contents, never on how blocks are
    scheduled across workers.
    """
    lams = np.asarray(lams, dtype=float)
    phi_ps = np.asarray(phi_ps, dtype=float)
    t_eval = np.asarray(t_eval, dtype=float)
    b = lams.size
    t_end = float(t_eval[-1])
    if lams.max(initial=0.0) > 0.0 and t_end > HORIZON_FACTOR / lams.max():
        raise ValueError("t_end exceeds the supported horizon for this batch")

    def rhs(t, y):
        y = y.reshape(4, b)
        w2 = 1.0 + 4.0 * lams * np.cos(omega_p * t + phi_ps)
        out = np.empty_like(y)
        out[0] = y[1]
        out[1] = -w2 * y[0]
        out[2] = y[3]
        out[3] = -w2 * y[2]
        return out.reshape(-1)

    y0 = np.zeros((4, b))
    y0[0] = 1.0
    y0[3] = 1.0
    if t_end == 0.0:
        return np.repeat(y0[None, :, :], len(t_eval), axis=0).transpose(2, 1, 0)
    sol = solve_ivp(
        rhs,
        (0.0, t_end),
        y0.reshape(-1),
        method="DOP853",
        t_eval=t_eval,
        rtol=settings.rel_tol,
        atol=settings.abs_tol,
        max_step=settings.max_step,
    )
    if not sol.success:
        raise IntegrationError(sol.message, float(sol.t[-1]))
    return sol.y.reshape(4, b, len(t_eval)).transpose(1, 0, 2)


def pq_two_timescale(t, drive: DriveParams):
    """Closed-form two-timescale (slow squeezing envelope) fundamental solutions.

    Valid on resonance (omega_p = 2) for small lam; returns (P, P', Q, Q').
    The denominator lam*cos(phi_p) - 1 vanishes only at lam = 1/cos(phi_p),
    far outside the perturbative regime.
    """
    t = np.asarray(t, dtype=float)
    lam, phi = drive.lam, drive.phi_p
    den = lam * math.cos(phi) - 1.0
    if abs(den) < 1e-9:
        raise ValueError("two-timescale form is singular at lam*cos(phi_p) = 1")
    ch, sh = np.cosh(lam * t), np.sinh(lam * t)
    ct, st = np.cos(t), np.sin(t)
    ctp, stp = np.cos(t + phi), np.sin(t + phi)

    p = ((lam * ctp - ct) * ch + (stp - lam * st) * sh) / den
    q = (ctp * sh - st * ch) / den
    dp = (
        (-lam * stp + st) * ch
        + lam * (lam * ctp - ct) * sh
        + (ctp - lam * ct) * sh
        + lam * (stp - lam * st) * ch
    ) / den
    dq = (-stp * sh + lam * ctp * ch - ct * ch - lam * st * sh) / den
    return p, dp, q, dq


def bogoliubov_from_samples(p, dp, q, dq):
    """Bogoliubov pair from fundamental-solution samples at one time."""
    alpha = 0.5 * (p - 1j * q + 1j * dp + dq)
    beta = 0.5 * (p + 1j * q + 1j * dp - dq)
    if np.ndim(alpha) == 0:
        return BogoliubovPair(complex(alpha), complex(beta))
    return alpha, beta


def bogoliubov_from_pq(pq: PQSolution, t: float) -> BogoliubovPair:
    """Evaluate the numeric Bogoliubov pair of a solved system at time t."""
    return bogoliubov_from_samples(*pq(t))


def bogoliubov_two_timescale(t, drive: DriveParams):
    """Leading-order two-timescale Bogoliubov pair.

    alpha = e^{-it} - i lam e^{i phi_p} sin t,  beta = -i lam t e^{-i(t+phi_p)}.
    The growth |beta| = lam*t is the accumulating squeezing.
    """
    lam, phi = drive.lam, drive.phi_p
    t = np.asarray(t, dtype=float)
    alpha = np.exp(-1j * t) - 1j * lam * np.exp(1j * phi) * np.sin(t)
    beta = -1j * lam * t * np.exp(-1j * (t + phi))
    if np.ndim(t) == 0:
        return BogoliubovPair(complex(alpha), complex(beta))
    return alpha, beta


def bogoliubov_perturbative(t, drive: DriveParams):
    """First-order interaction-picture Bogoliubov pair (secular + oscillating)."""
    lam, phi = drive.lam, drive.phi_p
    t = np.asarray(t, dtype=float)
    alpha = np.exp(-1j * t) * (1.0 - 2j * lam * np.cos(t + phi) * np.sin(t))
    beta = (
        -0.5j
        * lam
        * np.exp(-1j * (t + phi))
        * (2.0 * t + np.exp(2j * (t + phi)) * np.sin(2.0 * t))
    )
    if np.ndim(t) == 0:
        return BogoliubovPair(complex(alpha), complex(beta))
    return alpha, beta


def defect_predicted_two_timescale(t, drive: DriveParams):
    """Predicted normalization defect of the two-timescale solution.

    (1 - lam*cos(2t + phi_p)) / (1 - lam*cos(phi_p)) - 1; it vanishes exactly
    at phi_p = pi/2, t = k*pi, the points where the envelope solution is exact.
    """
    lam, phi = drive.lam, drive.phi_p
    t = np.asarray(t, dtype=float)
    return (1.0 - lam * np.cos(2.0 * t + phi)) / (1.0 - lam * math.cos(phi)) - 1.0


def mathieu_params(drive: DriveParams) -> tuple[float, float]:
    """Standard-form Mathieu parameters (a, eps) = (1, -2*lam) on resonance."""
    return 1.0, -2.0 * drive.lam

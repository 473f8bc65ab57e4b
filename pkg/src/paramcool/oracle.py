"""Brute-force truncated-Fock-space simulation.

Everything else in the package works at the Gaussian level (first and second
moments).  This module re-derives the same physics by direct integration of
the Schrodinger equation in a truncated number basis

    H(t) = (n + 1/2) + f(t) (a + a^dag)^2,

which couples n <-> n +/- 2, and by explicit application of the squeeze
operator S(z) = exp[(z a^dag^2 - z^* a^2)/2].  It is deliberately primitive:
fixed-step integration, no renormalization (norm drift is the error signal),
and explicit tail monitoring.  Tests use it as an independent ground truth
for occupation numbers, overlaps, and the squeeze-phase sign convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CoherentState, DriveParams

DEFAULT_TRUNCATION = 200
TAIL_TOL = 1e-9


class TruncationError(RuntimeError):
    """State leaked out of the truncated basis; carries the violation time."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (at t = {t:.6g})")
        self.t = t


@dataclass(frozen=True)
class FockVector:
    """Complex amplitudes c_0..c_{N-1} in the number basis."""

    amplitudes: np.ndarray

    @property
    def truncation(self) -> int:
        return self.amplitudes.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def tail_mass(self) -> float:
        """Probability in the top two levels (both parities)."""
        return float(np.sum(np.abs(self.amplitudes[-2:]) ** 2))

    @property
    def occupation(self) -> float:
        n = np.arange(self.truncation)
        return float(np.sum(n * np.abs(self.amplitudes) ** 2))


def fock_overlap(u: FockVector, v: FockVector) -> complex:
    """Inner product <u|v>."""
    if u.truncation != v.truncation:
        raise ValueError("mismatched truncations")
    return complex(np.vdot(u.amplitudes, v.amplitudes))


def coherent_fock(xi: CoherentState, n_trunc: int = DEFAULT_TRUNCATION) -> FockVector:
    """Expand a coherent state: c_n = e^{-r^2/2} xi^n / sqrt(n!).

    The ratio recurrence c_n = c_{n-1} xi / sqrt(n) never overflows because
    every amplitude is bounded by 1.
    """
    z = xi.r * np.exp(1j * xi.phi)
    c = np.zeros(n_trunc, dtype=complex)
    c[0] = math.exp(-0.5 * xi.r**2)
    for n in range(1, n_trunc):
        c[n] = c[n - 1] * z / math.sqrt(n)
    v = FockVector(c)
    if v.tail_mass > TAIL_TOL or v.norm < 1.0 - TAIL_TOL:
        raise TruncationError(
            f"coherent state r={xi.r:.3g} does not fit in {n_trunc} levels", 0.0
        )
    return v


def _ladder_coeffs(n_trunc: int):
    n = np.arange(n_trunc, dtype=float)
    # <n|a^dag^2|n-2> = sqrt(n(n-1));  <n|a^2|n+2> = sqrt((n+1)(n+2))
    s_down = np.sqrt(n * (n - 1.0))
    s_up = np.sqrt((n + 1.0) * (n + 2.0))
    return n, s_down, s_up


def evolve_fock(
    v: FockVector,
    drive: DriveParams,
    t_end: float,
    max_step: float | None = None,
    tail_tol: float = TAIL_TOL,
) -> FockVector:
    """Integrate i dc/dt = H(t) c with fixed-step 4th-order Runge-Kutta.

    The step obeys h <= 2*pi/(40*N) so the fastest retained level is resolved
    by dozens of samples per period.  Norm is never renormalized: drift beyond
    1e-9 or tail mass beyond tail_tol aborts with the time of violation.
    """
    if t_end < 0.0:
        raise ValueError("t_end must be nonnegative")
    n_trunc = v.truncation
    n, s_down, s_up = _ladder_coeffs(n_trunc)
    diag0 = n + 0.5
    diag1 = 2.0 * n + 1.0

    def rhs(t, c):
        ft = drive.f(t)
        hc = (diag0 + ft * diag1) * c
        hc[2:] += ft * s_down[2:] * c[:-2]
        hc[:-2] += ft * s_up[:-2] * c[2:]
        return -1j * hc

    h_guard = 2.0 * math.pi / (40.0 * n_trunc)
    h_target = h_guard if max_step is None else min(h_guard, max_step)
    if t_end == 0.0:
        return FockVector(v.amplitudes.copy())
    n_steps = max(1, math.ceil(t_end / h_target))
    h = t_end / n_steps

    c = v.amplitudes.astype(complex).copy()
    t = 0.0
    for _ in range(n_steps):
        k1 = rhs(t, c)
        k2 = rhs(t + 0.5 * h, c + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, c + 0.5 * h * k2)
        k4 = rhs(t + h, c + h * k3)
        c += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
        if np.sum(np.abs(c[-2:]) ** 2) > tail_tol:
            raise TruncationError("tail mass exceeded tolerance during evolution", t)
    out = FockVector(c)
    if abs(out.norm - v.norm) > 1e-9:
        raise TruncationError("norm drifted beyond 1e-9 during evolution", t)
    return out


def squeeze_fock(
    v: FockVector,
    z: complex,
    n_trunc: int | None = None,
    tail_tol: float = TAIL_TOL,
) -> FockVector:
    """Apply S(z) = exp[(z a^dag^2 - z^* a^2)/2] by integrating the generator.

    dc/ds = G c over s in [0, 1] with
    (G c)_n = (1/2)[z sqrt(n(n-1)) c_{n-2} - z^* sqrt((n+1)(n+2)) c_{n+2}].
    ``n_trunc`` may enlarge the basis first (zero padding) to leave room for
    squeezing growth.
    """
    if n_trunc is not None and n_trunc > v.truncation:
        padded = np.zeros(n_trunc, dtype=complex)
        padded[: v.truncation] = v.amplitudes
        v = FockVector(padded)
    n_trunc = v.truncation
    _, s_down, s_up = _ladder_coeffs(n_trunc)
    z = complex(z)
    zc = z.conjugate()

    def gen(c):
        gc = np.zeros_like(c)
        gc[2:] += 0.5 * z * s_down[2:] * c[:-2]
        gc[:-2] -= 0.5 * zc * s_up[:-2] * c[2:]
        return gc

    if z == 0:
        return FockVector(v.amplitudes.copy())
    n_steps = max(64, math.ceil(40.0 * abs(z) * n_trunc))
    h = 1.0 / n_steps
    c = v.amplitudes.astype(complex).copy()
    for step in range(n_steps):
        k1 = gen(c)
        k2 = gen(c + 0.5 * h * k1)
        k3 = gen(c + 0.5 * h * k2)
        k4 = gen(c + h * k3)
        c += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if np.sum(np.abs(c[-2:]) ** 2) > tail_tol:
            raise TruncationError(
                "tail mass exceeded tolerance during squeezing", (step + 1) * h
            )
    out = FockVector(c)
    if abs(out.norm - v.norm) > 1e-9:
        raise TruncationError("norm drifted beyond 1e-9 during squeezing", 1.0)
    return out

"""The measurement-cycle fixed point: what the protocol cools to.

Every cycle maps the measured amplitude r_{j-1} to a new outcome xi_j drawn
from the squeezed-coherent kernel Q(xi_j; r_{j-1}, r_sq(r_{j-1})) with the
optimal squeeze applied.  The expected occupation right after cycle j is
E[min_quanta(|xi_j|)].  Two complementary characterizations of the steady
state live here:

* the scalar fixed point r* where one cycle reproduces its own floor,
  expected_next_n(r*) = min_quanta(r*)  (a Fredholm-type condition), and
* the invariant distribution of the full cycle map, reached by pushing the
  radial outcome distribution through the kernel repeatedly.

The iterated mean settles near 0.83-0.84; the scalar root sits slightly
higher (~0.85) because the invariant distribution is spread, not a point
mass.  Both are reported; they agree within 0.02.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .measurement import squeezed_coherent_prob
from .squeezing import min_quanta, optimal_rsq


class QuadratureError(RuntimeError):
    """The quadrature grid failed its normalization self-check."""


@dataclass(frozen=True)
class QuadratureGrid:
    """Polar quadrature policy: Gauss-Legendre radial x uniform angular."""

    n_radial: int = 200
    n_angular: int = 64
    r_extra: float = 6.0
    tol: float = 1e-6

    def __post_init__(self):
        if self.n_radial < 16 or self.n_angular < 8:
            raise ValueError("grid too coarse: need n_radial >= 16, n_angular >= 8")
        if self.r_extra <= 0.0 or self.tol <= 0.0:
            raise ValueError("r_extra and tol must be positive")

    def radial(self, r_max: float) -> tuple[np.ndarray, np.ndarray]:
        x, w = _leggauss01(self.n_radial)
        return r_max * x, r_max * w

    def angular(self) -> tuple[np.ndarray, np.ndarray]:
        th = 2.0 * math.pi * np.arange(self.n_angular) / self.n_angular
        return th, np.full(self.n_angular, 2.0 * math.pi / self.n_angular)


DEFAULT_GRID = QuadratureGrid()


@lru_cache(maxsize=16)
def _leggauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _radial_density(
    s: np.ndarray, theta: np.ndarray, w_theta: np.ndarray, source: float, r_sq: float
) -> np.ndarray:
    """Angle-marginalized outcome density rho(s) = s * int dtheta Q(s e^{i theta})."""
    xi1 = s[:, None] * np.exp(1j * theta)[None, :]
    q = squeezed_coherent_prob(xi1, source, r_sq)
    return s * (q @ w_theta)


def expected_next_n(r0: float, grid: QuadratureGrid = DEFAULT_GRID) -> float:
    """Expected occupation after one measure-and-optimally-drive cycle.

    E[n] = int d^2 xi1 Q(xi1; r0, optimal_rsq(r0)) min_quanta(|xi1|), evaluated
    in polar form with cutoff r_max = r0 e^{r_sq} + r_extra.  The same grid
    must integrate the bare kernel to 1 within grid.tol, or the quadrature is
    rejected.
    """
    if r0 < 0.0:
        raise ValueError("r0 must be nonnegative")
    r_sq = float(optimal_rsq(r0))
    r_max = r0 * math.exp(r_sq) + grid.r_extra
    s, ws = grid.radial(r_max)
    th, wth = grid.angular()
    rho = _radial_density(s, th, wth, r0, r_sq)
    norm = float(ws @ rho)
    if abs(norm - 1.0) > grid.tol:
        raise QuadratureError(
            f"kernel normalization off by {norm - 1.0:.2e} (tol {grid.tol:g})"
        )
    return float(ws @ (rho * min_quanta(s)))


def _kernel_matrix(
    s: np.ndarray, theta: np.ndarray, w_theta: np.ndarray
) -> np.ndarray:
    """K[i, j]: radial outcome density at s_i when the cycle starts from s_j."""
    n = s.size
    k = np.empty((n, n))
    r_sqs = optimal_rsq(s)
    for j in range(n):
        k[:, j] = _radial_density(s, theta, w_theta, float(s[j]), float(r_sqs[j]))
    return k


def iterate_cycles(
    r0: float, n_cycles: int, grid: QuadratureGrid = DEFAULT_GRID
) -> np.ndarray:
    """Expected occupation after cycles 1..n_cycles starting from amplitude r0.

    The full radial outcome distribution is pushed through the cycle kernel
    each iteration (the expectation of min_quanta does not commute with the
    map, so tracking only the mean would be wrong).
    """
    if r0 < 0.0:
        raise ValueError("r0 must be nonnegative")
    if n_cycles < 1:
        raise ValueError("n_cycles must be at least 1")
    r_sq0 = float(optimal_rsq(r0))
    s_max = r0 * math.exp(r_sq0) + grid.r_extra
    s, ws = grid.radial(s_max)
    th, wth = grid.angular()

    rho = _radial_density(s, th, wth, r0, r_sq0)
    kmat = _kernel_matrix(s, th, wth) if n_cycles > 1 else None
    floor = min_quanta(s)
    out = np.empty(n_cycles)
    for c in range(n_cycles):
        if c > 0:
            rho = kmat @ (ws * rho)
        mass = float(ws @ rho)
        if abs(mass - 1.0) > 1e-4:
            raise QuadratureError(
                f"distribution mass drifted to {mass:.6f} at cycle {c + 1}"
            )
        out[c] = float(ws @ (rho * floor))
    return out


def find_fixed_point(
    grid: QuadratureGrid = DEFAULT_GRID, r_hi: float = 10.0
) -> tuple[float, float]:
    """Solve expected_next_n(r) = min_quanta(r) on [0, r_hi].

    Returns (r_star, n_f with n_f = min_quanta(r_star)).  The mismatch
    function is positive at r = 0 (measurement noise floor) and negative for
    large r (one optimal cycle undershoots a big amplitude), so a unique
    bracketed root exists.
    """

    def mismatch(r: float) -> float:
        return expected_next_n(r, grid) - float(min_quanta(r))

    lo, hi = mismatch(0.0), mismatch(r_hi)
    if lo * hi >= 0.0:
        raise ValueError(
            f"no sign change on [0, {r_hi}]: mismatch({0}) = {lo:.4f}, "
            f"mismatch({r_hi}) = {hi:.4f}"
        )
    r_star = float(brentq(mismatch, 0.0, r_hi, xtol=1e-10, rtol=1e-12))
    return r_star, float(min_quanta(r_star))

"""Heterodyne (phase-preserving) measurement of Gaussian states, the
squeezed-coherent outcome distribution, and the homodyne comparison.

Heterodyne measurement of a Gaussian state draws a coherent-state label xi
from the state's Husimi Q function, which for Gaussian states is itself a
bivariate normal in (Re xi, Im xi); the post-measurement state is exactly
|xi>.  The outcome distribution after a cooling drive is the squeezed-coherent
kernel Q(xi1; xi0, r_sq) — the building block of the steady-state analysis.

The homodyne functions quantify why a quadrature measurement is a poor
substitute here: the conditional state is non-normalizable, its formal
Hermite series for <a^dag a> and <a^dag 2> diverge, and only regularized
partial sums (fixed n_max) carry meaning.  Signs and trends of those partial
sums are what the cooling-phase analysis consumes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import CoherentState, DriveParams, GaussianState

HUSIMI_FLOOR = 0.25  # smallest eigenvalue of a Husimi covariance (infinite squeezing)


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream: (seed, stream) fully determines the draws.

    Each Monte Carlo trajectory owns stream index = trajectory id, so
    ensembles are reproducible independent of scheduling or worker count.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def split(self, stream: int) -> "RngStream":
        return RngStream(self.seed, stream)


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError("rng must be an RngStream or numpy Generator")


@dataclass(frozen=True)
class HusimiParams:
    """Mean and covariance of the Gaussian Husimi function in (Re xi, Im xi)."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        if mu.shape != (2,) or sigma.shape != (2, 2):
            raise ValueError("mu must be a 2-vector and sigma a 2x2 matrix")
        if abs(sigma[0, 1] - sigma[1, 0]) > 1e-12:
            raise ValueError("sigma must be symmetric")
        eigs = np.linalg.eigvalsh(sigma)
        if eigs[0] < HUSIMI_FLOOR - 1e-12:
            raise ValueError(
                f"Husimi covariance eigenvalue {eigs[0]} below the floor 1/4"
            )

    def cholesky(self) -> tuple[float, float, float]:
        """Lower-triangular factor (l11, l21, l22) of the 2x2 covariance."""
        a, c, b = self.sigma[0, 0], self.sigma[0, 1], self.sigma[1, 1]
        return _cholesky2(a, c, b)


def _cholesky2(a: float, c: float, b: float) -> tuple[float, float, float]:
    l11 = math.sqrt(a)
    l21 = c / l11
    l22 = math.sqrt(b - l21 * l21)
    return l11, l21, l22


def husimi_params(g: GaussianState) -> HusimiParams:
    """Husimi mean/covariance of a Gaussian state.

    mu = (x/sqrt2, p/sqrt2);  Sigma = (1/2)[[s_xx+1/2, s_xp], [s_xp, s_pp+1/2]].
    The extra 1/2 on the diagonal is the coherent-projection (anti-normal
    ordering) quantum of noise.
    """
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    mu = np.array([g.mean_x * inv_sqrt2, g.mean_p * inv_sqrt2])
    sigma = 0.5 * np.array(
        [[g.s_xx + 0.5, g.s_xp], [g.s_xp, g.s_pp + 0.5]]
    )
    return HusimiParams(mu, sigma)


def sample_heterodyne(g: GaussianState, rng) -> CoherentState:
    """Draw one heterodyne outcome; the post-measurement state is exactly |xi>.

    Consumes exactly two standard normals from the stream (the contract the
    batched ensemble engines replicate).
    """
    gen = _as_generator(rng)
    hp = husimi_params(g)
    l11, l21, l22 = hp.cholesky()
    z1, z2 = gen.standard_normal(2)
    u = hp.mu[0] + l11 * z1
    v = hp.mu[1] + l21 * z1 + l22 * z2
    return CoherentState(math.hypot(u, v), math.atan2(v, u))


def squeezed_coherent_prob(xi1, xi0: float, r_sq: float):
    """Heterodyne outcome density Q(xi1) = |<xi1| S(-r_sq) |xi0>|^2 / pi.

    xi0 >= 0 sits on the real axis (the protocol rotates there first); the
    squeeze phase is the amplitude-damping one, so the mean contracts to
    xi0 e^{-r_sq} while the imaginary quadrature spreads.  With u = Re xi1,
    v = Im xi1 and th = tanh r_sq:

        Q = (1/(pi cosh r_sq)) exp[-(u^2+v^2) - xi0^2 - th (u^2 - v^2)
                                   + th xi0^2 + 2 u xi0 / cosh r_sq].

    Vectorized over xi1; validated against the truncated-Fock oracle.
    """
    if r_sq < 0.0:
        raise ValueError("r_sq must be nonnegative")
    if xi0 < 0.0:
        raise ValueError("xi0 must be nonnegative (rotate to the real axis first)")
    xi1 = np.asarray(xi1, dtype=complex)
    u, v = xi1.real, xi1.imag
    th = math.tanh(r_sq)
    ch = math.cosh(r_sq)
    expo = (
        -(u * u + v * v)
        - xi0 * xi0
        - th * (u * u - v * v)
        + th * xi0 * xi0
        + 2.0 * u * xi0 / ch
    )
    out = np.exp(expo) / (math.pi * ch)
    return float(out) if out.ndim == 0 else out


def hermite_functions(x: float, n_max: int) -> np.ndarray:
    """Normalized harmonic-oscillator eigenfunctions psi_0..psi_{n_max} at x.

    psi_n(x) = pi^{-1/4} (2^n n!)^{-1/2} e^{-x^2/2} H_n(x), computed with the
    normalized three-term recurrence

        g_0 = e^{-x^2/2},  g_1 = sqrt(2) x g_0,
        g_{n+1} = x sqrt(2/(n+1)) g_n - sqrt(n/(n+1)) g_{n-1},

    whose terms stay bounded for every n (no overflow, unlike raw H_n).
    """
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    g = np.empty(n_max + 1)
    g[0] = math.exp(-0.5 * x * x)
    if n_max >= 1:
        g[1] = math.sqrt(2.0) * x * g[0]
    for n in range(1, n_max):
        g[n + 1] = x * math.sqrt(2.0 / (n + 1)) * g[n] - math.sqrt(n / (n + 1.0)) * g[n - 1]
    return g * math.pi ** (-0.25)


def homodyne_fock_overlap(x: float, theta: float, n: int) -> complex:
    """Overlap <x_theta|n> = psi_n(x) e^{-i n theta} with the rotated quadrature."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    psi = hermite_functions(x, n)[n]
    return complex(psi * np.exp(-1j * n * theta))


def xbar_theta(x: float, n_max: int = 400, tol: float = 1e-6, warn: bool = True) -> float:
    """Regularized partial sum for <x_theta|a^dag 2|x_theta> = e^{-2i theta} xbar.

    xbar = sum_n psi_n(x) psi_{n+2}(x) sqrt((n+1)(n+2)), truncated at
    n + 2 <= n_max.  The full series diverges (|x_theta> is not
    normalizable), so the value depends on n_max by construction; a warning
    flags that the last retained term exceeds tol.  Small-x partial sums are
    negative; for larger x and moderate n_max they turn positive.
    """
    psi = hermite_functions(x, n_max)
    n = np.arange(n_max - 1)
    terms = psi[:-2] * psi[2:] * np.sqrt((n + 1.0) * (n + 2.0))
    if warn and terms.size and abs(terms[-1]) > tol:
        warnings.warn(
            f"xbar_theta partial sum not converged at n_max={n_max} "
            f"(last term {terms[-1]:.3g}); the formal series diverges",
            stacklevel=2,
        )
    return float(np.sum(terms))


def occupation_partial_sum(x: float, n_max: int = 400) -> float:
    """Regularized partial sum for <x_theta|a^dag a|x_theta> (same caveats)."""
    psi = hermite_functions(x, n_max)
    n = np.arange(n_max + 1)
    return float(np.sum(n * psi * psi))


def occupation_homodyne_firstorder(
    x: float, theta: float, t, drive: DriveParams, n_max: int = 400
):
    """First-order occupation after homodyne outcome x along quadrature theta.

    n(t) = n0 + lam { n0 [cos(phi_p) - cos(2t + phi_p)]
                      - 2 t xbar_theta sin(2 theta + phi_p) },

    with n0 and xbar_theta the regularized partial sums at n_max.  Cooling
    (decreasing n) requires the secular term to be negative, which selects
    the drive phase returned by homodyne_cooling_phase.
    """
    t = np.asarray(t, dtype=float)
    n0 = occupation_partial_sum(x, n_max)
    xb = xbar_theta(x, n_max)
    lam, phi_p = drive.lam, drive.phi_p
    out = n0 + lam * (
        n0 * (math.cos(phi_p) - np.cos(2.0 * t + phi_p))
        - 2.0 * t * xb * math.sin(2.0 * theta + phi_p)
    )
    return float(out) if out.ndim == 0 else out


def _sign_n_max(x: float) -> int:
    """Truncation used for sign decisions: smallest-term-scale cutoff.

    The partial sums behave like an asymptotic series; reading the sign near
    the crossover requires stopping while terms are still decreasing, which
    happens around n ~ x^2.
    """
    return max(8, math.ceil(x * x) + 4)


def homodyne_cooling_phase(x: float, theta: float) -> float:
    """Drive phase for which the secular term cools, in [0, 2*pi).

    3*pi/2 - 2*theta when xbar_theta < 0 (small outcomes), pi/2 - 2*theta
    when xbar_theta > 0 (large outcomes) — the sign of the feedback flips
    with the sign of the measured-quadrature squared-amplitude excess.
    """
    xb = xbar_theta(x, _sign_n_max(x), warn=False)
    base = 1.5 * math.pi if xb < 0.0 else 0.5 * math.pi
    return (base - 2.0 * theta) % (2.0 * math.pi)

"""The closed-system feedback cooling engine.

One cycle: heterodyne-measure the state (collapsing it to a coherent state
|xi>), rotate xi to the positive real axis, then drive parametrically at the
cooling phase phi_p = pi/2 for the optimal duration t_op = ln(1+4r^2)/(4 lam)
truncated to a whole number of half periods (multiples of pi), so the drive
switches off where its instantaneous term vanishes.  Repeating the cycle
walks the occupation down to a measurement-noise-limited steady state.

Monte Carlo ensembles are deterministic by construction: trajectory i draws
from the counter-based stream (seed, i), trajectories are processed in fixed
chunks of 256, and reductions run in chunk order — so results are
byte-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import (
    CoherentState,
    DriveParams,
    GaussianState,
    ThermalParams,
    occupation_from_moments,
)
from .dynamics import solve_pq, solve_pq_batch
from .measurement import RngStream, _as_generator, _cholesky2, sample_heterodyne
from .squeezing import optimal_rsq

CHUNK = 256
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class TrajectoryConfig:
    """Configuration of one feedback-cooling run."""

    drive: DriveParams
    n_cycles: int
    initial: CoherentState | ThermalParams
    phase_noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_cycles < 1:
            raise ValueError("n_cycles must be at least 1")
        if self.phase_noise_sigma < 0.0:
            raise ValueError("phase_noise_sigma must be nonnegative")
        if self.drive.lam <= 0.0:
            raise ValueError("the protocol needs a positive drive amplitude")
        if self.drive.omega_p != 2.0:
            raise ValueError(
                "the feedback protocol is defined on parametric resonance "
                "(omega_p = 2)"
            )
        if not isinstance(self.initial, (CoherentState, ThermalParams)):
            raise TypeError("initial must be a CoherentState or ThermalParams")

    def initial_state(self) -> GaussianState:
        if isinstance(self.initial, ThermalParams):
            return GaussianState.thermal(self.initial)
        return GaussianState.from_coherent(self.initial)


@dataclass(frozen=True)
class CycleRecord:
    """Everything one protocol cycle produced."""

    cycle_index: int
    outcome: CoherentState
    t_drive: float
    n_before: float
    n_after: float
    sample_times: np.ndarray | None = None
    sample_occupations: np.ndarray | None = None


@dataclass(frozen=True)
class EnsembleStats:
    """Per-bin (cycle index or time) Monte Carlo mean and standard error."""

    bins: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_samples: int


def sample_phase_error(phi_p: float, sigma: float, rng) -> float:
    """Gaussian drive-phase error; sigma = 0 returns phi_p without a draw."""
    if sigma < 0.0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0.0:
        return phi_p
    return float(_as_generator(rng).normal(phi_p, sigma))


def truncate_to_half_periods(t_op: float) -> int:
    """Number of half periods (multiples of pi) nearest t_op, ties down.

    Durations below pi/2 round to zero: driving a whole half period would
    over-squeeze, so the cycle skips the drive.
    """
    return max(0, math.ceil(t_op / math.pi - 0.5))


@lru_cache(maxsize=8)
def _cached_pq(lam: float, phi_p: float, chunk: int):
    """Shared dense Mathieu solution out to 64*pi*(chunk+1)."""
    t_end = 64.0 * math.pi * (chunk + 1)
    return solve_pq(DriveParams(lam, 2.0, phi_p), t_end)


@lru_cache(maxsize=8)
def _pq_table(lam: float, phi_p: float, chunk: int) -> np.ndarray:
    """(P, P', Q, Q') at every multiple of pi up to 64*(chunk+1)."""
    pq = _cached_pq(lam, phi_p, chunk)
    ts = math.pi * np.arange(64 * (chunk + 1) + 1)
    return np.stack(pq(ts))


def _chunk_for(k_max: int) -> int:
    return max(0, (int(k_max) - 1) // 64)


def _evolved_moments(rs, p, dp, q, dq):
    """Moments of |r> (real axis) pushed through the symplectic map.

    mean = (sqrt2 r P, sqrt2 r P'); covariance = (1/2) M M^T for
    M = [[P, Q], [P', Q']].
    """
    mx = _SQRT2 * rs * p
    mp = _SQRT2 * rs * dp
    sxx = 0.5 * (p * p + q * q)
    sxp = 0.5 * (p * dp + q * dq)
    spp = 0.5 * (dp * dp + dq * dq)
    return mx, mp, sxx, sxp, spp


def run_cycle(
    state: GaussianState,
    cfg: TrajectoryConfig,
    rng,
    cycle_index: int = 1,
) -> tuple[GaussianState, CycleRecord]:
    """One measure-rotate-drive cycle; reference single-state implementation."""
    gen = _as_generator(rng)
    n_before = occupation_from_moments(state)
    xi = sample_heterodyne(state, gen)
    phi_drive = (
        cfg.drive.phi_p
        if cfg.phase_noise_sigma == 0.0
        else sample_phase_error(cfg.drive.phi_p, cfg.phase_noise_sigma, gen)
    )
    t_op = optimal_rsq(xi.r) / cfg.drive.lam
    k = truncate_to_half_periods(t_op)
    if k == 0:
        p, dp, q, dq = 1.0, 0.0, 0.0, 1.0
    elif cfg.phase_noise_sigma == 0.0:
        p, dp, q, dq = _pq_table(cfg.drive.lam, cfg.drive.phi_p, _chunk_for(k))[:, k]
    else:
        pq = solve_pq(DriveParams(cfg.drive.lam, 2.0, phi_drive), k * math.pi)
        p, dp, q, dq = (float(z) for z in pq(k * math.pi))
    mx, mp, sxx, sxp, spp = _evolved_moments(xi.r, p, dp, q, dq)
    new_state = GaussianState(mx, mp, sxx, sxp, spp)
    record = CycleRecord(
        cycle_index, xi, k * math.pi, n_before, occupation_from_moments(new_state)
    )
    return new_state, record


def _run_chunk(
    cfg: TrajectoryConfig,
    indices,
    collect_records: bool = False,
    sample_interval: float | None = None,
):
    """Advance a block of trajectories through all cycles.

    Returns (n_after matrix of shape (B, n_cycles), records or None).  The
    per-trajectory draw order matches run_cycle exactly: two measurement
    normals, then one phase normal only when phase noise is on.
    """
    b = len(indices)
    if sample_interval is not None and b != 1:
        raise ValueError("intra-cycle sampling is a single-trajectory feature")
    gens = [RngStream(cfg.seed, int(i)).generator() for i in indices]
    lam = cfg.drive.lam
    phi_c = cfg.drive.phi_p
    sigma = cfg.phase_noise_sigma
    g0 = cfg.initial_state()
    mx = np.full(b, g0.mean_x)
    mp = np.full(b, g0.mean_p)
    sxx = np.full(b, g0.s_xx)
    sxp = np.full(b, g0.s_xp)
    spp = np.full(b, g0.s_pp)
    n_after = np.empty((b, cfg.n_cycles))
    records = [[] for _ in range(b)] if collect_records else None
    t_origin = np.zeros(b)

    for c in range(cfg.n_cycles):
        n_before = 0.5 * (sxx + spp + mx * mx + mp * mp - 1.0)
        us = np.empty(b)
        vs = np.empty(b)
        phis = np.full(b, phi_c)
        for j, gen in enumerate(gens):
            l11, l21, l22 = _cholesky2(
                0.5 * (sxx[j] + 0.5), 0.5 * sxp[j], 0.5 * (spp[j] + 0.5)
            )
            z1, z2 = gen.standard_normal(2)
            us[j] = mx[j] / _SQRT2 + l11 * z1
            vs[j] = mp[j] / _SQRT2 + l21 * z1 + l22 * z2
            if sigma > 0.0:
                phis[j] = gen.normal(phi_c, sigma)
        rs = np.hypot(us, vs)
        ks = np.maximum(
            0, np.ceil(optimal_rsq(rs) / (lam * math.pi) - 0.5).astype(int)
        )
        k_max = int(ks.max())

        sample_ts = None
        if sigma == 0.0:
            table = _pq_table(lam, phi_c, _chunk_for(k_max))
            p, dp, q, dq = table[:, ks]
        else:
            if sample_interval is None:
                t_eval = math.pi * np.arange(k_max + 1)
                cols = ks
            else:
                # the sample grid contains every multiple of pi when the
                # interval divides pi; build the union explicitly otherwise
                n_sub = max(1, round(math.pi / sample_interval))
                t_eval = (math.pi / n_sub) * np.arange(k_max * n_sub + 1)
                cols = ks * n_sub
                sample_ts = t_eval
            sols = solve_pq_batch(np.full(b, lam), phis, t_eval)
            p = sols[np.arange(b), 0, cols]
            dp = sols[np.arange(b), 1, cols]
            q = sols[np.arange(b), 2, cols]
            dq = sols[np.arange(b), 3, cols]

        mx, mp, sxx, sxp, spp = _evolved_moments(rs, p, dp, q, dq)
        n_after[:, c] = 0.5 * (sxx + spp + mx * mx + mp * mp - 1.0)

        if collect_records:
            for j in range(b):
                times = occs = None
                if sample_interval is not None:
                    if sigma == 0.0:
                        n_sub = max(1, round(math.pi / sample_interval))
                        ts_loc = (math.pi / n_sub) * np.arange(ks[j] * n_sub + 1)
                        pq = _cached_pq(lam, phi_c, _chunk_for(k_max))
                        ps, dps, qs, dqs = pq(ts_loc)
                    else:
                        ts_loc = sample_ts[: ks[j] * n_sub + 1]
                        ps, dps, qs, dqs = (sols[j, i, : ks[j] * n_sub + 1] for i in range(4))
                    a_t = ps * ps + dps * dps
                    b_t = 0.25 * ((ps - dqs) ** 2 + (dps + qs) ** 2)
                    times = t_origin[j] + ts_loc
                    occs = a_t * rs[j] ** 2 + b_t
                records[j].append(
                    CycleRecord(
                        c + 1,
                        CoherentState(float(rs[j]), math.atan2(vs[j], us[j])),
                        float(ks[j]) * math.pi,
                        float(n_before[j]),
                        float(n_after[j, c]),
                        times,
                        occs,
                    )
                )
        t_origin += ks * math.pi
    return n_after, records


def run_trajectory(
    cfg: TrajectoryConfig, sample_interval: float | None = None
) -> list[CycleRecord]:
    """Single realization (stream 0), optionally with intra-cycle occupation
    samples every sample_interval time units during each drive segment."""
    _, records = _run_chunk(cfg, [0], collect_records=True, sample_interval=sample_interval)
    return records[0]


def _stats_from_matrix(bins: np.ndarray, values: np.ndarray) -> EnsembleStats:
    n = values.shape[0]
    mean = values.mean(axis=0)
    if n > 1:
        stderr = values.std(axis=0, ddof=1) / math.sqrt(n)
    else:
        stderr = np.zeros_like(mean)
    return EnsembleStats(bins, mean, stderr, n)


def _map_chunks(worker, n_traj: int, workers: int):
    """Apply worker(start, stop) over fixed-size chunks; results in index order."""
    spans = [(s, min(s + CHUNK, n_traj)) for s in range(0, n_traj, CHUNK)]
    if workers <= 1:
        return [worker(*span) for span in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(worker, *span) for span in spans]
        return [f.result() for f in futures]


def run_ensemble(cfg: TrajectoryConfig, n_traj: int, workers: int = 1) -> EnsembleStats:
    """Monte Carlo over independent trajectories; per-cycle mean occupation.

    Trajectory i uses random stream i; chunking is fixed at 256 regardless of
    worker count, so the output is byte-deterministic.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    parts = _map_chunks(
        lambda s, e: _run_chunk(cfg, range(s, e))[0], n_traj, workers
    )
    values = np.vstack(parts)
    return _stats_from_matrix(np.arange(1, cfg.n_cycles + 1, dtype=float), values)


def run_fixed_drive_ensemble(
    cfg: TrajectoryConfig,
    duration: float,
    n_traj: int,
    sample_interval: float = math.pi / 8,
    workers: int = 1,
) -> EnsembleStats:
    """Single cycle of fixed drive duration, averaged over realizations.

    Each realization measures the initial state, rotates the outcome to the
    real axis, and drives at phi_p for exactly `duration` (no optimal
    stopping).  The occupation along the drive is affine in the outcome,
    n_i(t) = A(t) r_i^2 + B(t), so the time grid is exact per trajectory.
    """
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    n_pts = int(math.floor(duration / sample_interval + 1e-9)) + 1
    ts = sample_interval * np.arange(n_pts)
    if duration - ts[-1] > 1e-9 * max(1.0, duration):
        ts = np.append(ts, duration)
    lam, phi_c, sigma = cfg.drive.lam, cfg.drive.phi_p, cfg.phase_noise_sigma
    g0 = cfg.initial_state()
    hp_a, hp_c, hp_b = 0.5 * (g0.s_xx + 0.5), 0.5 * g0.s_xp, 0.5 * (g0.s_pp + 0.5)
    l11, l21, l22 = _cholesky2(hp_a, hp_c, hp_b)
    mu_u, mu_v = g0.mean_x / _SQRT2, g0.mean_p / _SQRT2

    shared = None
    if sigma == 0.0:
        if duration > 64.0 * math.pi:
            pq = solve_pq(DriveParams(lam, 2.0, phi_c), duration)
        else:
            pq = _cached_pq(lam, phi_c, 0)
        p, dp, q, dq = pq(ts)
        shared = (p * p + dp * dp, 0.25 * ((p - dq) ** 2 + (dp + q) ** 2))

    def worker(start, stop):
        b = stop - start
        r2 = np.empty(b)
        phis = np.full(b, phi_c)
        for j, i in enumerate(range(start, stop)):
            gen = RngStream(cfg.seed, i).generator()
            z1, z2 = gen.standard_normal(2)
            u = mu_u + l11 * z1
            v = mu_v + l21 * z1 + l22 * z2
            r2[j] = u * u + v * v
            if sigma > 0.0:
                phis[j] = gen.normal(phi_c, sigma)
        if sigma == 0.0:
            a_t, b_t = shared
            vals = np.outer(r2, a_t) + b_t
        else:
            sols = solve_pq_batch(np.full(b, lam), phis, ts)
            p, dp, q, dq = sols[:, 0], sols[:, 1], sols[:, 2], sols[:, 3]
            a_t = p * p + dp * dp
            b_t = 0.25 * ((p - dq) ** 2 + (dp + q) ** 2)
            vals = r2[:, None] * a_t + b_t
        return vals.sum(axis=0), (vals * vals).sum(axis=0)

    parts = _map_chunks(worker, n_traj, workers)
    total = np.zeros_like(ts)
    total_sq = np.zeros_like(ts)
    for s, s2 in parts:
        total += s
        total_sq += s2
    mean = total / n_traj
    if n_traj > 1:
        var = np.maximum(total_sq - n_traj * mean * mean, 0.0) / (n_traj - 1)
        stderr = np.sqrt(var / n_traj)
    else:
        stderr = np.zeros_like(mean)
    return EnsembleStats(ts, mean, stderr, n_traj)


def thermal_cycle_average_analytic(nbar: float, t, drive: DriveParams):
    """Ensemble-averaged occupation 1 + nbar (1 - 2 lam t) at early times.

    Measuring a thermal state costs one quantum on average (the heterodyne
    penalty); the optimally phased drive then removes quanta at initial rate
    2 lam nbar.
    """
    t = np.asarray(t, dtype=float)
    out = 1.0 + nbar * (1.0 - 2.0 * drive.lam * t)
    return float(out) if out.ndim == 0 else out

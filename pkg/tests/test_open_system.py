"""Moment dynamics with dissipation and the dissipative feedback protocol."""

import math

import numpy as np
import pytest

from paramcool.core import (
    CoherentState,
    DriveParams,
    GaussianState,
    ThermalParams,
    occupation_from_moments,
)
from paramcool.dynamics import solve_pq
from paramcool.open_system import (
    ENSEMBLE_SETTINGS,
    BathParams,
    bath_occupation,
    integrate_moments,
    moment_derivatives,
    moments_on_grid,
    omega_t,
    optimal_stop_search,
    run_dissipative_protocol,
)
from paramcool.protocol import TrajectoryConfig

COOLING = DriveParams(0.01, 2.0, math.pi / 2)
NO_BATH = BathParams(0.0, 0.0)


def test_bath_occupation():
    assert bath_occupation(0.5, 10.0) == pytest.approx(19.504166493065888, abs=1e-12)
    assert bath_occupation(1.0, 0.0) == 0.0
    # Bose factor grows with temperature and falls with mode frequency
    assert bath_occupation(0.5, 20.0) > bath_occupation(0.5, 10.0)
    assert bath_occupation(1.0, 10.0) < bath_occupation(0.5, 10.0)
    with pytest.raises(ValueError):
        bath_occupation(0.0, 10.0)
    with pytest.raises(ValueError):
        bath_occupation(0.5, -1.0)


def test_bath_params_validation():
    with pytest.raises(ValueError):
        BathParams(-1e-3, 1.0)
    with pytest.raises(ValueError):
        BathParams(1e-3, -1.0)


def test_omega_t():
    drive = DriveParams(0.02, 2.0, 0.0)
    ts = np.linspace(0.0, 10.0, 7)
    np.testing.assert_allclose(
        omega_t(ts, drive), np.sqrt(1.0 + 0.08 * np.cos(2.0 * ts)), atol=1e-14
    )
    assert omega_t(0.0, drive) == pytest.approx(math.sqrt(1.08), rel=1e-14)
    with pytest.raises(ValueError):
        omega_t(0.0, DriveParams(0.25, 2.0, 0.0))


def test_thermal_fixed_point_is_stationary():
    """An undriven thermal state matched to the bath has zero derivatives."""
    nbar = 3.7
    bath = BathParams(0.05, nbar)
    g = GaussianState.thermal(ThermalParams(nbar))
    rhs = moment_derivatives(g, 0.3, DriveParams(0.0, 2.0, 0.0), bath)
    np.testing.assert_allclose(rhs, 0.0, atol=1e-14)


def test_undriven_relaxation_to_bath_occupation():
    """Without a drive the vacuum relaxes as n(t) = nbar_B (1 - e^{-gamma t})."""
    gamma, nbar = 0.05, 6.0
    bath = BathParams(gamma, nbar)
    ts = np.linspace(0.0, 60.0, 31)
    ys = moments_on_grid(GaussianState.vacuum(), ts, DriveParams(0.0, 2.0, 0.0), bath)
    occ = 0.5 * (ys[2] + ys[4] + ys[0] ** 2 + ys[1] ** 2 - 1.0)
    np.testing.assert_allclose(occ, nbar * (1.0 - np.exp(-gamma * ts)), atol=1e-8)


def test_closed_system_limit_matches_fundamental_solutions():
    """gamma = 0 moment integration agrees with the Bogoliubov occupation."""
    t_end = 13.0 * math.pi
    g0 = GaussianState(math.sqrt(2.0), 0.0, 0.5, 0.0, 0.5)  # |r=1> on the real axis
    g1 = integrate_moments(g0, 0.0, t_end, COOLING, NO_BATH)
    p, dp, q, dq = (float(z) for z in solve_pq(COOLING, t_end)(t_end))
    a = p * p + dp * dp
    b = 0.25 * ((p - dq) ** 2 + (dp + q) ** 2)
    assert occupation_from_moments(g1) == pytest.approx(a + b, abs=1e-6)
    with pytest.raises(ValueError):
        integrate_moments(g0, 1.0, 1.0, COOLING, NO_BATH)
    with pytest.raises(ValueError):
        integrate_moments(g0, 0.0, 1.0, DriveParams(0.3, 2.0, 0.0), NO_BATH)


def test_uncertainty_preserved_along_dissipative_drive():
    """det(covariance) never dips below the pure-state quarter."""
    bath = BathParams(1e-3, 19.5)
    drive = DriveParams(0.02, 2.0, math.pi / 2)
    ts = np.linspace(0.0, 30.0, 121)
    ys = moments_on_grid(GaussianState.from_coherent(CoherentState(2.0, 0.0)), ts, drive, bath)
    det = ys[2] * ys[4] - ys[3] ** 2
    assert det.min() >= 0.25 - 1e-9
    # dissipation mixes the state: the determinant drifts upward
    assert det[-1] > det[0]


def test_moments_on_grid_degenerate_grid():
    g = GaussianState.thermal(ThermalParams(2.0))
    out = moments_on_grid(g, np.array([0.0]), COOLING, BathParams(1e-3, 5.0))
    np.testing.assert_array_equal(out, [[0.0], [0.0], [2.5], [0.0], [2.5]])


def test_optimal_stop_search():
    g = GaussianState(math.sqrt(2.0), 0.0, 0.5, 0.0, 0.5)
    # closed system: the grid minimum sits at 13 half periods, a touch above
    # the continuous-time floor
    t_stop, n_min = optimal_stop_search(g, COOLING, NO_BATH, 20.0 * math.pi)
    assert t_stop == pytest.approx(13.0 * math.pi, rel=1e-12)
    assert n_min == pytest.approx(0.61835434527195, abs=1e-9)
    assert n_min > (math.sqrt(5.0) - 1.0) / 2.0

    # strong dissipation in a hot bath: driving never pays, skip the drive
    t_stop, n_min = optimal_stop_search(g, COOLING, BathParams(5e-3, 19.5), 20.0 * math.pi)
    assert t_stop == 0.0
    assert n_min == pytest.approx(1.0, abs=1e-12)

    # weak dissipation stops earlier than the closed-system optimum
    t_stop, _ = optimal_stop_search(g, COOLING, BathParams(1e-3, 19.5), 20.0 * math.pi)
    assert 0.0 < t_stop < 13.0 * math.pi

    with pytest.raises(ValueError):
        optimal_stop_search(g, COOLING, NO_BATH, 0.5 * math.pi)


def test_dissipative_protocol_regression():
    cfg = TrajectoryConfig(
        drive=COOLING, n_cycles=8, initial=CoherentState(1.0, 0.0), seed=0
    )
    bath = BathParams(1e-4, 19.5)
    stats = run_dissipative_protocol(cfg, bath, n_traj=128, workers=1)
    assert stats.mean[-1] == pytest.approx(0.98083766907472902, abs=1e-12)
    assert stats.n_samples == 128

    again = run_dissipative_protocol(cfg, bath, n_traj=128, workers=4)
    np.testing.assert_array_equal(stats.mean, again.mean)
    np.testing.assert_array_equal(stats.stderr, again.stderr)

    with pytest.raises(ValueError):
        run_dissipative_protocol(cfg, bath, n_traj=0)


def test_ensemble_settings_are_loosened_defaults():
    assert ENSEMBLE_SETTINGS.rel_tol == 1e-8
    assert ENSEMBLE_SETTINGS.abs_tol == 1e-10

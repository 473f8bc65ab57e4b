"""Lie-algebra squeeze bookkeeping and the optimal-control formulas."""

import math

import numpy as np
import pytest

from paramcool.core import BogoliubovPair, CoherentState, DriveParams
from paramcool.dynamics import bogoliubov_from_pq, solve_pq
from paramcool.oracle import coherent_fock, squeeze_fock
from paramcool.squeezing import (
    JCoeffs,
    bogoliubov_from_j,
    decompose,
    j_from_pq,
    min_quanta,
    optimal_rsq,
    optimal_time,
    quanta_after_squeeze,
    rsq_linear,
    solve_j_odes,
)

GOLDEN_FLOOR = (math.sqrt(5.0) - 1.0) / 2.0


def test_free_evolution_j_coefficients():
    traj = solve_j_odes(DriveParams(lam=0.0), 10.0)
    for t in (0.0, 2.5, 10.0):
        j = traj(t)
        assert j.j0 == pytest.approx(t, abs=1e-10)
        assert j.jp == pytest.approx(0.0, abs=1e-12)
        assert j.jm == pytest.approx(0.0, abs=1e-12)


def test_j_reconstruction_matches_direct_solution():
    drive = DriveParams(lam=0.01, phi_p=math.pi / 2)
    t_end = 13.0 * math.pi
    traj = solve_j_odes(drive, t_end)
    sol = solve_pq(drive, t_end)
    for t in (5.0, 20.0, t_end):
        from_j = bogoliubov_from_j(traj(t))
        from_pq = bogoliubov_from_pq(sol, t)
        assert abs(from_j.alpha - from_pq.alpha) < 1e-7
        assert abs(from_j.beta - from_pq.beta) < 1e-7
        assert abs(from_j.defect) < 1e-12  # exact by construction


def test_j_inversion_from_fundamental_solutions():
    drive = DriveParams(lam=0.01, phi_p=math.pi / 2)
    t_end = 13.0 * math.pi
    traj = solve_j_odes(drive, t_end)
    sol = solve_pq(drive, t_end)
    for t in (7.0, 25.0, t_end):
        direct = traj(t)
        inverted = j_from_pq(sol, t)
        assert inverted.j0 == pytest.approx(direct.j0, abs=1e-7)
        assert inverted.jp == pytest.approx(direct.jp, abs=1e-7)
        assert inverted.jm == pytest.approx(direct.jm, abs=1e-7)


def test_decompose_pure_squeeze_and_roundtrip():
    s, theta = 0.45, 1.2
    pair = BogoliubovPair(math.cosh(s), math.sinh(s) * np.exp(1j * theta))
    dec = decompose(pair)
    assert dec.r_sq == pytest.approx(s, rel=1e-12)
    assert dec.theta_sq == pytest.approx(theta, abs=1e-12)
    assert dec.varphi == pytest.approx(0.0, abs=1e-12)

    rebuilt = dec.reconstruct()
    assert abs(rebuilt.alpha - pair.alpha) < 1e-12
    assert abs(rebuilt.beta - pair.beta) < 1e-12

    # identity has no squeeze and a well-defined zero angle
    ident = decompose(BogoliubovPair(1.0 + 0.0j, 0.0j))
    assert ident.r_sq == 0.0
    assert ident.theta_sq == 0.0


def test_decompose_driven_solution_roundtrip():
    drive = DriveParams(lam=0.01, phi_p=math.pi / 2)
    t_end = 13.0 * math.pi
    sol = solve_pq(drive, t_end)
    pair = bogoliubov_from_pq(sol, t_end)
    dec = decompose(sol, t_end)
    rebuilt = dec.reconstruct()
    assert abs(rebuilt.alpha - pair.alpha) < 1e-8
    assert abs(rebuilt.beta - pair.beta) < 1e-8
    # resonant half-period driving accumulates r_sq ~ lam * t
    assert dec.r_sq == pytest.approx(float(rsq_linear(t_end, drive)), abs=2e-3)

    with pytest.raises(ValueError):
        decompose(sol)  # PQSolution needs a time
    with pytest.raises(TypeError):
        decompose("garbage")
    with pytest.raises(ValueError):
        decompose(BogoliubovPair(0.5 + 0.0j, 1.0 + 0.0j))  # |beta| > |alpha|


def test_decompose_dispatches_j_coefficients():
    drive = DriveParams(lam=0.01, phi_p=math.pi / 2)
    traj = solve_j_odes(drive, 20.0)
    j = traj(20.0)
    assert isinstance(j, JCoeffs)
    dec = decompose(j)
    pair = bogoliubov_from_j(j)
    assert dec.r_sq == pytest.approx(math.atanh(abs(pair.beta) / abs(pair.alpha)), rel=1e-10)


def test_quanta_after_squeeze_matches_oracle_convention():
    """quanta_after_squeeze(xi, r, theta) must equal the occupation of
    S(r e^{i(theta+pi)}) |xi> — the amplitude-damping orientation."""
    xi = CoherentState(1.0, 0.0)
    r_sq = math.log(5.0) / 4.0
    n_analytic = quanta_after_squeeze(xi, r_sq, 0.0)
    assert n_analytic == pytest.approx(GOLDEN_FLOOR, abs=1e-12)

    v = squeeze_fock(coherent_fock(xi, 120), -r_sq)
    assert v.occupation == pytest.approx(n_analytic, abs=1e-9)

    # generic angle against the oracle
    r2, th2 = 0.3, 0.9
    n2 = quanta_after_squeeze(CoherentState(1.3, 0.0), r2, th2)
    z = r2 * np.exp(1j * (th2 + math.pi))
    v2 = squeeze_fock(coherent_fock(CoherentState(1.3, 0.0), 120), z)
    assert v2.occupation == pytest.approx(n2, abs=1e-9)


def test_optimal_squeeze_formulas():
    assert optimal_rsq(1.0) == pytest.approx(math.log(5.0) / 4.0, abs=1e-12)
    assert min_quanta(1.0) == pytest.approx(GOLDEN_FLOOR, abs=1e-12)
    assert optimal_rsq(0.0) == 0.0
    assert min_quanta(0.0) == 0.0

    t_opt = optimal_time(1.0, DriveParams(lam=0.01))
    assert 40.0 <= t_opt <= 41.0
    assert t_opt == pytest.approx(math.log(5.0) / 4.0 / 0.01, rel=1e-12)
    with pytest.raises(ValueError):
        optimal_time(1.0, DriveParams(lam=0.0))

    # array-friendly and consistent with the scalar map
    rs = np.array([0.0, 0.5, 1.0, 3.0])
    np.testing.assert_allclose(optimal_rsq(rs), 0.25 * np.log1p(4.0 * rs**2), rtol=1e-14)
    np.testing.assert_allclose(
        min_quanta(rs), 0.5 * (np.sqrt(1.0 + 4.0 * rs**2) - 1.0), rtol=1e-14
    )


def test_optimal_rsq_actually_minimizes():
    for r in (0.5, 1.0, 2.0):
        xi = CoherentState(r, 0.0)
        best = float(optimal_rsq(r))
        n_best = quanta_after_squeeze(xi, best, 0.0)
        assert n_best == pytest.approx(float(min_quanta(r)), rel=1e-12)
        for delta in (-0.05, 0.05):
            assert quanta_after_squeeze(xi, best + delta, 0.0) > n_best
        # squeezing at the wrong angle is worse too
        assert quanta_after_squeeze(xi, best, 0.5) > n_best

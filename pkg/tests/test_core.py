"""State containers, angle conventions, and closed-form occupation formulas."""

import math

import numpy as np
import pytest

from paramcool.core import (
    BogoliubovPair,
    CoherentState,
    DriveParams,
    GaussianState,
    ThermalParams,
    cooling_phase,
    modulation_depth,
    occupation_coherent_exact,
    occupation_coherent_firstorder,
    occupation_from_moments,
    occupation_general,
    occupation_thermal,
    reduce_angle,
    rotate_state,
)


def test_reduce_angle_fundamental_interval():
    assert reduce_angle(0.0) == 0.0
    assert reduce_angle(2.0 * math.pi) == 0.0
    assert reduce_angle(math.pi / 2 + 6.0 * math.pi) == pytest.approx(math.pi / 2, abs=1e-12)
    assert reduce_angle(-math.pi / 2) == pytest.approx(3.0 * math.pi / 2, abs=1e-12)
    for phi in np.linspace(-20.0, 20.0, 101):
        red = reduce_angle(phi)
        assert 0.0 <= red < 2.0 * math.pi
        assert math.isclose(math.cos(red), math.cos(phi), abs_tol=1e-12)
        assert math.isclose(math.sin(red), math.sin(phi), abs_tol=1e-12)


def test_drive_params_waveform_and_validation():
    d = DriveParams(lam=0.01, phi_p=math.pi / 2)
    assert d.omega_p == 2.0
    assert d.f(0.0) == pytest.approx(0.01 * math.cos(math.pi / 2), abs=1e-18)
    ts = np.linspace(0.0, 3.0, 7)
    np.testing.assert_allclose(d.f(ts), 0.01 * np.cos(2.0 * ts + math.pi / 2), atol=1e-15)
    assert modulation_depth(d) == pytest.approx(0.04)

    free = DriveParams(lam=0.0)  # lam = 0 is the exact free-evolution reference
    assert free.f(1.23) == 0.0
    with pytest.raises(ValueError):
        DriveParams(lam=-0.01)
    with pytest.raises(ValueError):
        DriveParams(lam=0.01, omega_p=0.0)


def test_bogoliubov_pair_normalization():
    ident = BogoliubovPair(1.0 + 0.0j, 0.0j)
    assert ident.defect == 0.0
    assert ident.is_normalized()
    s = 0.37
    pair = BogoliubovPair(math.cosh(s), math.sinh(s) * np.exp(0.4j))
    assert pair.defect == pytest.approx(0.0, abs=1e-12)
    assert not BogoliubovPair(1.1, 0.0j).is_normalized()


def test_coherent_state_label():
    xi = CoherentState(2.0, math.pi / 3)
    assert xi.xi == pytest.approx(2.0 * np.exp(1j * math.pi / 3))
    assert xi.mean_quanta == 4.0
    assert CoherentState(1.0, -math.pi / 2).phi == pytest.approx(3.0 * math.pi / 2)
    with pytest.raises(ValueError):
        CoherentState(-1.0)
    with pytest.raises(ValueError):
        ThermalParams(-0.5)


def test_gaussian_state_constructors_and_bound():
    vac = GaussianState.vacuum()
    assert vac.covariance_det == pytest.approx(0.25)
    assert occupation_from_moments(vac) == pytest.approx(0.0, abs=1e-15)

    coh = GaussianState.from_coherent(CoherentState(1.5, 0.7))
    assert occupation_from_moments(coh) == pytest.approx(2.25, abs=1e-12)
    assert coh.mean_x == pytest.approx(math.sqrt(2.0) * 1.5 * math.cos(0.7))

    th = GaussianState.thermal(ThermalParams(4.0))
    assert occupation_from_moments(th) == pytest.approx(4.0, abs=1e-12)

    with pytest.raises(ValueError):
        GaussianState(0.0, 0.0, 0.3, 0.0, 0.3)  # det = 0.09 < 1/4
    with pytest.raises(ValueError):
        GaussianState(0.0, 0.0, -0.5, 0.0, -0.5)
    # a squeezed pure state on the Heisenberg boundary is legal
    GaussianState(0.0, 0.0, 0.05, 0.0, 1.25)


def test_occupation_formulas_agree():
    s = 0.3
    pair = BogoliubovPair(math.cosh(s), math.sinh(s) * np.exp(1.1j))
    state = CoherentState(1.2, 0.4)
    exact = occupation_coherent_exact(pair, state)
    general = occupation_general(pair, state.mean_quanta, state.xi**2)
    assert exact == pytest.approx(general, rel=1e-14)

    nbar = 3.0
    assert occupation_thermal(pair, ThermalParams(nbar)) == pytest.approx(
        nbar + (1.0 + 2.0 * nbar) * math.sinh(s) ** 2, rel=1e-12
    )
    # thermal = general with n0 = nbar and no coherences
    assert occupation_thermal(pair, ThermalParams(nbar)) == pytest.approx(
        occupation_general(pair, nbar, 0.0), rel=1e-12
    )


def test_firstorder_occupation_and_cooling_phase():
    drive = DriveParams(lam=0.01, phi_p=math.pi / 2)
    assert occupation_coherent_firstorder(0.0, drive, 0.0) == pytest.approx(1.0, abs=1e-15)

    # at the cooling phase the secular trend is -2*lam*t per unit r^2
    phi = cooling_phase(drive.phi_p)
    assert reduce_angle(2.0 * phi + drive.phi_p) == pytest.approx(math.pi / 2, abs=1e-12)
    t = 40.0
    n_cool = occupation_coherent_firstorder(t, drive, phi)
    assert n_cool == pytest.approx(1.0 - 2.0 * drive.lam * t, abs=3.0 * drive.lam)
    # the anti-phase heats at the same rate
    n_heat = occupation_coherent_firstorder(t, drive, phi + math.pi / 2)
    assert n_heat == pytest.approx(1.0 + 2.0 * drive.lam * t, abs=3.0 * drive.lam)


def test_rotate_state_invariants():
    g = GaussianState(1.0, -0.5, 0.7, 0.1, 0.6)
    for angle in (0.3, -1.2, math.pi):
        rot = rotate_state(g, angle)
        assert occupation_from_moments(rot) == pytest.approx(
            occupation_from_moments(g), rel=1e-12
        )
        assert rot.covariance_det == pytest.approx(g.covariance_det, rel=1e-12)

    xi = CoherentState(1.5, 0.8)
    rot = rotate_state(xi, 0.8)
    assert rot.phi == pytest.approx(0.0, abs=1e-12)
    # rotating the Gaussian embedding commutes with the coherent rotation
    g2 = rotate_state(GaussianState.from_coherent(xi), 0.8)
    np.testing.assert_allclose(
        (g2.mean_x, g2.mean_p),
        (math.sqrt(2.0) * rot.r, 0.0),
        atol=1e-12,
    )
    with pytest.raises(TypeError):
        rotate_state("not a state", 0.1)

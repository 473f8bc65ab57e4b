"""Truncated-Fock-space oracle: expansions, driven evolution, squeezing."""

import math

import numpy as np
import pytest

from paramcool.core import CoherentState, DriveParams
from paramcool.dynamics import bogoliubov_from_samples, solve_pq
from paramcool.oracle import (
    FockVector,
    TruncationError,
    coherent_fock,
    evolve_fock,
    fock_overlap,
    squeeze_fock,
)


def test_coherent_expansion_basics():
    vac = coherent_fock(CoherentState(0.0), 10)
    np.testing.assert_allclose(vac.amplitudes[0], 1.0, atol=1e-15)
    np.testing.assert_allclose(vac.amplitudes[1:], 0.0, atol=1e-15)

    one = coherent_fock(CoherentState(1.0), 40)
    assert one.occupation == pytest.approx(1.0, abs=1e-12)
    assert one.norm == pytest.approx(1.0, abs=1e-12)

    rot = coherent_fock(CoherentState(2.0, math.pi / 3), 60)
    assert rot.norm == pytest.approx(1.0, abs=1e-12)
    assert rot.occupation == pytest.approx(4.0, abs=1e-10)
    # amplitudes follow c_n = xi^n e^{-r^2/2} / sqrt(n!)
    xi = rot.amplitudes[1] / rot.amplitudes[0]
    assert xi == pytest.approx(2.0 * np.exp(1j * math.pi / 3), abs=1e-12)


def test_truncation_rejected_when_tail_leaks():
    with pytest.raises(TruncationError):
        coherent_fock(CoherentState(5.0), 30)  # r^2 = 25 needs far more room


def test_overlaps():
    a = coherent_fock(CoherentState(1.0), 60)
    b = coherent_fock(CoherentState(0.0), 60)
    assert fock_overlap(a, a) == pytest.approx(1.0, abs=1e-12)
    # |<0|xi>|^2 = e^{-|xi|^2}
    assert abs(fock_overlap(b, a)) ** 2 == pytest.approx(math.exp(-1.0), rel=1e-10)


def test_free_evolution_rotates_phases_only():
    v0 = coherent_fock(CoherentState(1.0), 40)
    t = 1.3
    v1 = evolve_fock(v0, DriveParams(lam=0.0), t)
    assert v1.occupation == pytest.approx(v0.occupation, abs=1e-10)
    n = np.arange(40)
    expected = v0.amplitudes * np.exp(-1j * (n + 0.5) * t)
    np.testing.assert_allclose(v1.amplitudes, expected, atol=1e-9)


def test_driven_evolution_matches_gaussian_pipeline():
    drive = DriveParams(lam=0.02, phi_p=math.pi / 2)
    t_end = 6.0 * math.pi
    state = CoherentState(1.0, 0.0)
    evolved = evolve_fock(coherent_fock(state, 200), drive, t_end)

    sol = solve_pq(drive, t_end)
    pair = bogoliubov_from_samples(*sol(t_end))
    # driving a real coherent state: n = A r^2 + B with A = |alpha+beta|^2
    a_coef = abs(pair.alpha + pair.beta) ** 2
    b_coef = abs(pair.beta) ** 2
    n_gauss = a_coef * state.mean_quanta + b_coef
    assert evolved.occupation == pytest.approx(n_gauss, abs=1e-3)
    assert evolved.norm == pytest.approx(1.0, abs=1e-9)


def test_vacuum_heating_equals_beta_squared():
    drive = DriveParams(lam=0.01, phi_p=math.pi / 2)
    t_end = 50.0
    evolved = evolve_fock(coherent_fock(CoherentState(0.0), 200), drive, t_end)
    pair = bogoliubov_from_samples(*solve_pq(drive, t_end)(t_end))
    assert evolved.occupation == pytest.approx(abs(pair.beta) ** 2, abs=1e-4)


def test_squeeze_operator():
    vac = coherent_fock(CoherentState(0.0), 80)
    same = squeeze_fock(vac, 0.0, 80)
    np.testing.assert_allclose(same.amplitudes, vac.amplitudes, atol=1e-12)

    r = 0.3
    squeezed = squeeze_fock(vac, r, 80)
    assert squeezed.occupation == pytest.approx(math.sinh(r) ** 2, abs=1e-9)
    # squeezing the vacuum populates even levels only
    assert np.max(np.abs(squeezed.amplitudes[1::2])) < 1e-12


def test_squeeze_sign_convention_locked():
    """The amplitude-damping squeeze has a definite sign: z = -ln(5)/4 takes a
    unit coherent state to the measurement-limited floor (sqrt(5)-1)/2, while
    the opposite sign amplifies instead."""
    v = coherent_fock(CoherentState(1.0, 0.0), 120)
    z_cool = -math.log(5.0) / 4.0
    floor = (math.sqrt(5.0) - 1.0) / 2.0
    assert squeeze_fock(v, z_cool, 120).occupation == pytest.approx(floor, abs=1e-9)
    wrong = squeeze_fock(v, -z_cool, 120).occupation
    assert wrong == pytest.approx(2.406888370749721, abs=1e-9)
    assert abs(wrong - floor) > 1.0


def test_truncation_error_reports_time_and_guards_inputs():
    vac = coherent_fock(CoherentState(0.0), 40)
    # sinh^2(2.5) ~ 37 quanta cannot fit in 40 levels
    with pytest.raises(TruncationError) as excinfo:
        squeeze_fock(vac, 2.5, 40)
    assert excinfo.value.t >= 0.0
    with pytest.raises(ValueError):
        evolve_fock(vac, DriveParams(lam=0.01), -1.0)


def test_fock_vector_properties():
    v = coherent_fock(CoherentState(1.0), 40)
    assert v.truncation == 40
    assert v.tail_mass < 1e-9
    assert v.norm == pytest.approx(1.0, abs=1e-12)

"""Surface model tests.

Expected values marked "oracle:" are frozen from independent hand evaluation
of the closed forms (complex arithmetic done separately from the module code).
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frisim import em
from frisim.errors import ConfigError, DegenerateGeometry, DomainError, SingularSurface

ETA0 = 377.0


# ---------------------------------------------------------------- sheet R/T

def test_transparent_sheet():
    r, t = em.rt_from_surface_params(em.SurfaceParams(0j, 0j))
    assert r == 0
    assert t == 1


def test_matched_absorber():
    # oracle: Y_e = 2/eta0, Z_m = 2 eta0 makes both numerators cancel
    r, t = em.rt_from_surface_params(em.SurfaceParams(2.0 / ETA0, 2.0 * ETA0))
    assert abs(r) < 1e-15
    assert abs(t) < 1e-15


def test_reactive_sheet_splits_power():
    # oracle: Y_e = j2/eta0, Z_m = 0 gives R = -(1+j)/2, T = (1-j)/2
    r, t = em.rt_from_surface_params(em.SurfaceParams(2j / ETA0, 0j))
    assert abs(r - (-(1 + 1j) / 2)) < 1e-14
    assert abs(t - (1 - 1j) / 2) < 1e-14
    assert abs(abs(r) ** 2 + abs(t) ** 2 - 1.0) < 1e-14


def test_singular_sheet_raises():
    with pytest.raises(SingularSurface):
        em.rt_from_surface_params(em.SurfaceParams(-2.0 / ETA0, 0j))
    with pytest.raises(SingularSurface):
        em.rt_from_surface_params(em.SurfaceParams(0j, -2.0 * ETA0))


def test_lossless_sheet_conserves_power():
    rng = np.random.default_rng(7)
    scale_y = 10.0 ** rng.uniform(-2, 2, 10_000)
    scale_z = 10.0 ** rng.uniform(-2, 2, 10_000)
    sign_y = rng.choice([-1.0, 1.0], 10_000)
    sign_z = rng.choice([-1.0, 1.0], 10_000)
    worst = 0.0
    for sy, sz, gy, gz in zip(scale_y, scale_z, sign_y, sign_z):
        sp = em.SurfaceParams(1j * gy * sy / ETA0, 1j * gz * sz * ETA0)
        r, t = em.rt_from_surface_params(sp)
        worst = max(worst, abs(abs(r) ** 2 + abs(t) ** 2 - 1.0))
    assert worst < 1e-12


# ------------------------------------------------------------- TM synthesis

def test_normal_incidence_quarter_rotation():
    # oracle: (1-j)/(1+j) = -j, so Y_e = -j 2/eta0 and Z_m = j 2 eta0
    sp = em.tm_surface_synthesis(0.0, 0.0, 1j, 0.0, 1e9)
    assert abs(sp.y_e - (-2j / ETA0)) < 1e-15
    assert abs(sp.z_m - 2j * ETA0) < 1e-12
    assert sp.is_purely_imaginary()


def test_specular_unity_reflection_is_singular():
    with pytest.raises(SingularSurface):
        em.tm_surface_synthesis(0.0, 0.0, 1.0 + 0j, 0.0, 1e9)


def test_reflected_amplitude_norm_values():
    assert em.reflected_amplitude_norm(0.0, 0.0) == 1.0
    assert abs(em.reflected_amplitude_norm(0.0, 60.0) - 1.41421) < 1e-5
    assert em.reflected_amplitude_norm(45.0, 45.0) == 1.0
    with pytest.raises(DomainError):
        em.reflected_amplitude_norm(0.0, 90.0)


def test_boundary_conditions_hold_for_synthesized_sheet():
    # Independent oracle: rebuild the tangential TM fields at z=0 and push them
    # through the two-sided sheet conditions. With nothing transmitted,
    #   H_t = Y_e E_t / 2  and  E_t = Z_m H_t / 2
    # must hold point-wise for the synthesized parameters.
    rng = np.random.default_rng(21)
    freq = 0.839e9
    k0 = 2 * math.pi * freq / em.C_LIGHT
    for _ in range(100):
        ii = rng.uniform(-80, 80)
        ir = rng.uniform(-80, 80)
        x = rng.uniform(-5, 5)
        a_r = em.reflected_amplitude_norm(ii, ir) * np.exp(1j * rng.uniform(0, 2 * math.pi))
        try:
            sp = em.tm_surface_synthesis(ii, ir, a_r, x, freq)
        except SingularSurface:
            continue
        e_i = np.exp(-1j * k0 * math.sin(math.radians(ii)) * x)
        e_r = np.exp(-1j * k0 * math.sin(math.radians(ir)) * x)
        e_t = math.cos(math.radians(ii)) * e_i + a_r * math.cos(math.radians(ir)) * e_r
        h_t = (e_i - a_r * e_r) / ETA0
        res_e = abs(h_t - 0.5 * sp.y_e * e_t) / max(abs(h_t), abs(e_t) / ETA0)
        res_m = abs(e_t - 0.5 * sp.z_m * h_t) / max(abs(e_t), ETA0 * abs(h_t))
        assert res_e < 1e-10
        assert res_m < 1e-10


# ----------------------------------------------------------- circuit model

def test_short_line_zero_height():
    assert em.short_line_impedance(1e9, 2.5, 0.0) == 0


def test_short_line_quarter_argument():
    # oracle: argument = pi/4 exactly for these values, tan = 1, j eta0/2
    z = em.short_line_impedance(1.5e9, 4.0, 0.0125)
    assert abs(z - 188.5j) < 0.1
    assert z.real == 0


def test_short_line_pole():
    # argument pi/2 at twice the quarter-wave frequency
    with pytest.raises(DomainError):
        em.short_line_impedance(3.0e9, 4.0, 0.0125)


def test_unit_cell_resonance_matches_component_values():
    cp = em.CircuitParams()
    f0 = em.series_resonance_freq(cp, 1.0e-12)
    # oracle: 1/(2 pi sqrt(L_top * (C_top series 1pF))) = 0.8394 GHz
    assert abs(f0 - 0.839e9) < 1.5e6
    gamma = em.unit_cell_gamma(0.0, 1.0e-12, em.CircuitParams(freq=f0))
    assert abs(abs(gamma) - 0.988) < 0.005
    assert abs(math.degrees(math.pi - abs(np.angle(gamma)))) < 2.0


def test_unit_cell_lossless_is_unimodular():
    cp = em.CircuitParams(r_top=0.0)
    for c in (0.63e-12, 1.0e-12, 2.67e-12):
        assert abs(abs(em.unit_cell_gamma(0.0, c, cp)) - 1.0) < 1e-12


def test_unit_cell_passivity_fuzz():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(10_000):
        cp = em.CircuitParams(r_top=float(rng.uniform(0, 50)),
                              freq=float(rng.uniform(0.3e9, 3e9)))
        c = float(rng.uniform(cp.c_var_min, cp.c_var_max))
        iota = float(rng.uniform(0, 89.9))
        worst = max(worst, abs(em.unit_cell_gamma(iota, c, cp)))
    assert worst <= 1.0 + 1e-12


def test_unit_cell_rejects_out_of_range_varactor():
    with pytest.raises(DomainError):
        em.unit_cell_gamma(0.0, 5e-12, em.CircuitParams())
    with pytest.raises(DomainError):
        em.unit_cell_gamma(95.0, 1e-12, em.CircuitParams())


# ----------------------------------------------------------- fitted model

def test_fitted_amplitude_spot_values():
    # oracle: plug the published weights into the fit by hand
    assert abs(em.fitted_amplitude(0.0, 0.0)[0] - 0.9826) < 1e-4
    assert abs(em.fitted_amplitude(math.pi / 2, 0.0)[0] - 0.9289) < 1e-4
    assert abs(em.fitted_amplitude(math.pi, 30.0)[0] - 0.7659) < 1e-3


def test_fitted_amplitude_domain():
    with pytest.raises(DomainError):
        em.fitted_amplitude(0.0, 46.0)
    with pytest.raises(DomainError):
        em.fitted_amplitude(0.0, -1.0)


def test_fitted_amplitude_full_grid_open_interval():
    thetas = np.deg2rad(np.arange(360.0))
    iotas = np.arange(46.0)
    vals, clamped = em.fitted_amplitudes(
        np.repeat(thetas, iotas.size), np.tile(iotas, thetas.size))
    assert vals.min() > 0.0
    assert vals.max() < 1.0
    assert not clamped.any()


def test_fit_coefficients_grid_checked_at_construction():
    with pytest.raises(ConfigError):
        em.FitCoefficients(2.0, 0, 0, 0, 0, 0, 0)
    with pytest.raises(ConfigError):
        em.FitCoefficients(0.0, 0, 0, 0, 0, 0, 0)


# ------------------------------------------------------------ quantization

def test_quantize_examples():
    assert em.quantize_phase(0.0, 2) == 0.0
    assert em.quantize_phase(0.8, 2) == math.pi / 2
    assert em.quantize_phase(2 * math.pi - 0.01, 2) == 0.0


def test_quantize_tie_breaks_small():
    # pi/4 is equidistant from 0 and pi/2
    assert em.quantize_phase(math.pi / 4, 2) == 0.0


@settings(max_examples=300)
@given(theta=st.floats(-10.0, 10.0), bits=st.sampled_from([1, 2, 3]))
def test_quantization_error_bound(theta, bits):
    q = em.quantize_phase(theta, bits)
    err = abs(math.remainder(theta - q, 2 * math.pi))
    assert err <= math.pi / 2 ** bits + 1e-12


def test_codebook_sizes():
    assert len(em.phase_codebook(3)) == 8
    with pytest.raises(DomainError):
        em.phase_codebook(4)


# --------------------------------------------------------------- geometry

def test_incident_angle_flat_on_axis():
    deg, flagged = em.effective_incident_angle(
        0, 0.0, 0.0, (0, 0, 0), (0, 0, 10))
    assert abs(deg) < 1e-12
    assert not flagged


def test_incident_angle_follows_bend():
    deg, flagged = em.effective_incident_angle(
        0, 30.0, 0.0, (0, 0, 0), (0, 0, 10))
    assert abs(deg - 30.0) < 1e-9
    assert not flagged


def test_incident_angle_projects_beyond_model():
    src = (10 * math.sin(math.radians(60)), 0, 10 * math.cos(math.radians(60)))
    deg, flagged = em.effective_incident_angle(0, 0.0, 0.0, (0, 0, 0), src)
    assert deg == 45.0
    assert flagged


def test_incident_angle_degenerate():
    with pytest.raises(DegenerateGeometry):
        em.effective_incident_angle(0, 0.0, 0.0, (1, 2, 3), (1, 2, 3))


def test_incident_angle_vector_matches_scalar():
    rng = np.random.default_rng(11)
    pos = em.element_positions(8, (100, 0, 20), (1, 0, 0), 0.18)
    bh = rng.uniform(-90, 90, 8)
    bv = rng.uniform(-90, 90, 8)
    src = np.array([60.0, -30.0, 45.0])
    vec_deg, vec_flag = em.effective_incident_angles(bh, bv, pos, src,
                                                     (1, 0, 0), (0, 0, 1))
    for m in range(8):
        deg, flag = em.effective_incident_angle(m, bh[m], bv[m], pos[m], src)
        assert abs(deg - vec_deg[m]) < 1e-12
        assert flag == vec_flag[m]


def test_element_positions_centered():
    pos = em.element_positions(4, (0, 0, 0), (2, 0, 0), 0.5)
    assert np.allclose(pos[:, 0], [-0.75, -0.25, 0.25, 0.75])
    assert np.allclose(pos[:, 1:], 0)


# ------------------------------------------------------ reflection matrix

def test_reflection_matrix_reference_phases():
    cfg, flags = em.assemble_configuration(
        np.zeros(4), np.zeros(4), np.zeros(4), np.zeros(4))
    diag = em.reflection_matrix(cfg)
    assert np.all(np.abs(diag - 0.9826) < 1e-4)
    assert not flags["bend_clamped"] and not flags["amplitude_clamped"]

    cfg1, _ = em.assemble_configuration(
        [math.pi / 2], [0.0], [0.0], [0.0])
    assert abs(em.reflection_matrix(cfg1)[0] - 0.9289j) < 1e-4


def test_reflection_matrix_amplitudes_bounded_and_deterministic():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        m = int(rng.integers(1, 9))
        cfg, _ = em.assemble_configuration(
            rng.uniform(0, 2 * math.pi, m),
            rng.uniform(-120, 120, m),
            rng.uniform(-120, 120, m),
            rng.uniform(0, 45, m))
        cfg.validate()
        diag = em.reflection_matrix(cfg)
        assert np.abs(diag).max() <= 1.0
    cfg, _ = em.assemble_configuration([1.0, 2.0], [3.0, -4.0], [5.0, 6.0], [10.0, 20.0])
    again = em.reflection_matrix(cfg)
    assert np.array_equal(em.reflection_matrix(cfg), again)


def test_amplitude_sweep_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    em.export_amplitude_sweep(out, bits=2)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "theta_deg,iota_deg,delta,phase_deg"
    assert len(lines) > 1
    first = lines[1].split(",")
    assert float(first[2]) == pytest.approx(0.9826, abs=1e-3)

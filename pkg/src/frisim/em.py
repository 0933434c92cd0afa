"""Electromagnetic model of the flexible reflecting surface.

Covers the macroscopic sheet description (electric admittance Y_e, magnetic
impedance Z_m, and the reflection/transmission coefficients they imply), the
synthesis of those sheet parameters for an oblique TM reflection, the varactor
unit-cell equivalent circuit, the angle-dependent fitted reflection amplitude,
discrete phase codebooks, and the per-element geometry of a bent array.

Conventions: eta0 = 377 ohm, c = 3.0e8 m/s, time dependence exp(+j*omega*t),
plane waves exp(-j*k.r). Bend and incidence angles are in degrees; phase
shifts are in radians.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateGeometry, DomainError, SingularSurface

ETA0 = 377.0
C_LIGHT = 3.0e8

# Curve-fit weights for the reflection amplitude delta(theta, iota_deg).
DEFAULT_FIT_WEIGHTS = (0.8816, 0.0473, -0.1010, 0.0004, -0.000019, 0.000055, 0.000321)

_REL_SINGULAR = 1e-15


def _guard_denominator(value: complex, scale: float, what: str) -> None:
    if abs(value) <= _REL_SINGULAR * scale:
        raise SingularSurface(f"{what} denominator vanishes (|{value:.3e}|)")


@dataclass(frozen=True)
class SurfaceParams:
    """Macroscopic sheet parameters: Y_e in siemens, Z_m in ohms."""

    y_e: complex
    z_m: complex

    def is_purely_imaginary(self, rel_tol: float = 1e-12) -> bool:
        """True when both parameters have negligible real part (lossless sheet)."""
        ok_y = abs(self.y_e.real) <= rel_tol * max(abs(self.y_e), 1.0e-300)
        ok_z = abs(self.z_m.real) <= rel_tol * max(abs(self.z_m), 1.0e-300)
        return ok_y and ok_z


@dataclass(frozen=True)
class CircuitParams:
    """Unit-cell equivalent circuit.

    A bottom-layer inductance in parallel with a series branch
    (top resistance, top inductance, fixed top capacitance, varactor).
    Substrate permittivity and thickness feed the shorted-line model.
    """

    l_bottom: float = 15.83e-9
    l_top: float = 38.26e-9
    r_top: float = 2.2
    c_top: float = 15.6e-12
    c_var_min: float = 0.63e-12
    c_var_max: float = 2.67e-12
    freq: float = 0.839e9
    eps_r: float = 4.0
    substrate_height: float = 0.0125

    def __post_init__(self) -> None:
        for name in ("l_bottom", "l_top", "c_top", "c_var_min", "c_var_max", "freq"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"circuit.{name}", "must be positive")
        if self.r_top < 0:
            raise ConfigError("circuit.r_top", "must be non-negative")
        if self.c_var_min > self.c_var_max:
            raise ConfigError("circuit.c_var_min", "varactor range inverted")
        if self.eps_r < 1:
            raise ConfigError("circuit.eps_r", "relative permittivity below 1")
        if self.substrate_height < 0:
            raise ConfigError("circuit.substrate_height", "must be non-negative")


def _amplitude_raw(theta, iota_deg, p):
    s, c = np.sin(theta), np.cos(theta)
    return (p[0] + p[1] * s - p[2] * c + p[3] * iota_deg + p[4] * iota_deg ** 2
            + p[5] * s * iota_deg + p[6] * c * iota_deg)


class FitCoefficients:
    """Seven curve-fit weights for the reflection amplitude.

    p1..p3 weigh the phase dependence, p4..p7 the incidence-angle dependence
    with the angle expressed in degrees. Construction grid-checks that the
    resulting amplitude stays in (0, 1] over theta in [0, 2pi) x iota in
    [0, 45] degrees.
    """

    __slots__ = ("p",)

    def __init__(self, p1, p2, p3, p4, p5, p6, p7):
        self.p = (float(p1), float(p2), float(p3), float(p4),
                  float(p5), float(p6), float(p7))
        thetas = np.deg2rad(np.arange(0.0, 360.0))
        iotas = np.arange(0.0, 46.0)
        grid = _amplitude_raw(thetas[:, None], iotas[None, :], self.p)
        if grid.min() <= 0.0 or grid.max() > 1.0:
            raise ConfigError(
                "fit", f"amplitude grid leaves (0,1]: [{grid.min():.4f}, {grid.max():.4f}]"
            )

    def __iter__(self):
        return iter(self.p)

    def __eq__(self, other) -> bool:
        return isinstance(other, FitCoefficients) and self.p == other.p

    def __repr__(self) -> str:
        return f"FitCoefficients{self.p}"


DEFAULT_FIT = FitCoefficients(*DEFAULT_FIT_WEIGHTS)


def rt_from_surface_params(sp: SurfaceParams) -> tuple[complex, complex]:
    """Reflection and transmission coefficients of a sheet with (Y_e, Z_m).

    R = -2 (eta0^2 Y_e - Z_m) / ((2 + eta0 Y_e)(2 eta0 + Z_m))
    T = -(-2 + eta0 Y_e)/(2 + eta0 Y_e) + 2 (eta0^2 Y_e - Z_m) / ((2 + eta0 Y_e)(2 eta0 + Z_m))

    Raises SingularSurface when either denominator factor vanishes.
    """
    den_e = 2.0 + ETA0 * sp.y_e
    den_m = 2.0 * ETA0 + sp.z_m
    _guard_denominator(den_e, 2.0 + ETA0 * abs(sp.y_e), "R/T electric")
    _guard_denominator(den_m, 2.0 * ETA0 + abs(sp.z_m), "R/T magnetic")
    shared = 2.0 * (ETA0 * ETA0 * sp.y_e - sp.z_m) / (den_e * den_m)
    r = -shared
    t = -(-2.0 + ETA0 * sp.y_e) / den_e + shared
    return r, t


def reflected_amplitude_norm(iota_i_deg: float, iota_r_deg: float) -> float:
    """Power-conserving magnitude sqrt(cos iota_i / cos iota_r) for |A_r|."""
    ci = math.cos(math.radians(iota_i_deg))
    cr = math.cos(math.radians(iota_r_deg))
    if cr <= 1e-12:
        raise DomainError(f"reflection angle {iota_r_deg} deg too close to grazing")
    if ci < 0:
        raise DomainError(f"incidence angle {iota_i_deg} deg beyond 90 deg")
    return math.sqrt(ci / cr)


def tm_surface_synthesis(iota_i_deg: float, iota_r_deg: float, a_r: complex,
                         x: float, freq: float) -> SurfaceParams:
    """Sheet parameters producing reflection A_r from incidence iota_i.

    Evaluates the TM synthesis formulas at position x along the surface:

      Y_e(x) = (2/eta0) (E_i - A_r E_r) / (cos(iota_i) E_i + A_r cos(iota_r) E_r)
      Z_m(x) = 2 eta0 (cos(iota_i) E_i + A_r cos(iota_r) E_r) / (E_i - A_r E_r)

    with E_i = exp(-j k0 sin(iota_i) x), E_r = exp(-j k0 sin(iota_r) x) and
    k0 = 2 pi f / c. Angles in degrees.

    Raises SingularSurface when either denominator vanishes, e.g. specular
    iota_i = iota_r with A_r = +/-1 at some x.
    """
    if abs(iota_i_deg) >= 90.0 or abs(iota_r_deg) >= 90.0:
        raise DomainError("synthesis requires |angles| < 90 deg")
    k0 = 2.0 * math.pi * freq / C_LIGHT
    ii = math.radians(iota_i_deg)
    ir = math.radians(iota_r_deg)
    e_i = complex(math.cos(-k0 * math.sin(ii) * x), math.sin(-k0 * math.sin(ii) * x))
    e_r = complex(math.cos(-k0 * math.sin(ir) * x), math.sin(-k0 * math.sin(ir) * x))
    num = e_i - a_r * e_r
    den = math.cos(ii) * e_i + a_r * math.cos(ir) * e_r
    scale = 1.0 + abs(a_r)
    _guard_denominator(den, scale, "Y_e")
    _guard_denominator(num, scale, "Z_m")
    return SurfaceParams(y_e=(2.0 / ETA0) * num / den, z_m=2.0 * ETA0 * den / num)


def short_line_impedance(freq: float, eps_r: float, substrate_height: float) -> complex:
    """Input impedance of the grounded substrate as a shorted line stub.

    Z = j (eta0 / sqrt(eps_r)) tan(2 pi f sqrt(eps_r) H / c). Raises
    DomainError at the tangent poles.
    """
    if freq <= 0 or eps_r < 1 or substrate_height < 0:
        raise DomainError("need freq > 0, eps_r >= 1, substrate_height >= 0")
    arg = 2.0 * math.pi * freq * math.sqrt(eps_r) * substrate_height / C_LIGHT
    # distance to the nearest pole of tan
    if abs(math.remainder(arg - math.pi / 2.0, math.pi)) < 1e-9:
        raise DomainError(f"tangent argument {arg:.6f} rad at a pole")
    return 1j * (ETA0 / math.sqrt(eps_r)) * math.tan(arg)


def series_resonance_freq(cp: CircuitParams, c_var: float) -> float:
    """Frequency where the series branch reactance cancels (c_top in series with c_var)."""
    c_series = 1.0 / (1.0 / cp.c_top + 1.0 / c_var)
    return 1.0 / (2.0 * math.pi * math.sqrt(cp.l_top * c_series))


def unit_cell_gamma(iota_i_deg: float, c_var: float, cp: CircuitParams,
                    angle_lookup=None) -> complex:
    """Reflection coefficient of one varactor-loaded unit cell.

    Z = jwL_bottom || (R_top + jwL_top + 1/(jwC_top) + 1/(jwC_var)),
    Gamma = (Z - eta0) / (Z + eta0).

    The circuit constants are treated as angle-independent (values are fitted
    at normal incidence); pass angle_lookup(iota_deg) -> CircuitParams to
    substitute a per-angle table.
    """
    if not 0.0 <= iota_i_deg < 90.0:
        raise DomainError(f"incidence angle {iota_i_deg} deg outside [0, 90)")
    if angle_lookup is not None:
        cp = angle_lookup(iota_i_deg)
    if not cp.c_var_min <= c_var <= cp.c_var_max:
        raise DomainError(
            f"varactor capacitance {c_var:.3e} F outside "
            f"[{cp.c_var_min:.3e}, {cp.c_var_max:.3e}]"
        )
    w = 2.0 * math.pi * cp.freq
    z_shunt = 1j * w * cp.l_bottom
    z_series = cp.r_top + 1j * w * cp.l_top + 1.0 / (1j * w * cp.c_top) + 1.0 / (1j * w * c_var)
    z = z_shunt * z_series / (z_shunt + z_series)
    return (z - ETA0) / (z + ETA0)


def fitted_amplitude(theta: float, iota_deg: float,
                     p: FitCoefficients = DEFAULT_FIT) -> tuple[float, bool]:
    """Reflection amplitude delta(theta, iota) from the curve fit.

    theta is the applied phase shift in radians, iota the effective incidence
    angle in degrees (valid for [0, 45]; callers project first). Returns the
    value clamped to [0, 1] plus a flag saying whether clamping fired.
    """
    if not 0.0 <= iota_deg <= 45.0:
        raise DomainError(f"incidence angle {iota_deg} deg outside fitted range [0, 45]")
    raw = float(_amplitude_raw(theta, iota_deg, tuple(p)))
    clamped = min(max(raw, 0.0), 1.0)
    return clamped, clamped != raw


def fitted_amplitudes(thetas: np.ndarray, iotas_deg: np.ndarray,
                      p: FitCoefficients = DEFAULT_FIT) -> tuple[np.ndarray, np.ndarray]:
    """Vector form of fitted_amplitude over matching arrays."""
    iotas_deg = np.asarray(iotas_deg, dtype=float)
    if iotas_deg.size and (iotas_deg.min() < 0.0 or iotas_deg.max() > 45.0):
        raise DomainError("incidence angles outside fitted range [0, 45] deg")
    raw = _amplitude_raw(np.asarray(thetas, dtype=float), iotas_deg, tuple(p))
    clamped = np.clip(raw, 0.0, 1.0)
    return clamped, clamped != raw


def phase_codebook(bits: int) -> np.ndarray:
    if bits not in (1, 2, 3):
        raise DomainError(f"codebook bits must be 1, 2 or 3, got {bits}")
    n = 1 << bits
    return np.arange(n) * (2.0 * math.pi / n)


def quantize_phase(theta: float, bits: int) -> float:
    """Nearest codeword of the 2^bits uniform codebook under circular distance.

    Ties break toward the smaller codeword.
    """
    idx = quantize_phase_index(theta, bits)
    return float(phase_codebook(bits)[idx])


def quantize_phase_index(theta, bits: int):
    """Codeword index form of quantize_phase; accepts scalars or arrays."""
    n = 1 << bits
    if bits not in (1, 2, 3):
        raise DomainError(f"codebook bits must be 1, 2 or 3, got {bits}")
    step = 2.0 * math.pi / n
    theta = np.asarray(theta, dtype=float)
    dist = np.abs(_wrap_pi(theta[..., None] - np.arange(n) * step))
    # argmin picks the first minimum, i.e. the smaller codeword on ties
    idx = np.argmin(dist, axis=-1)
    return idx if idx.ndim else int(idx)


def _wrap_pi(x):
    return (x + math.pi) % (2.0 * math.pi) - math.pi


def element_positions(m_count: int, center, axis, spacing: float) -> np.ndarray:
    """Element centers of a uniform linear array, (M, 3) in meters."""
    if m_count < 1:
        raise DomainError("element count must be >= 1")
    axis = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(axis)
    if norm < 1e-12:
        raise DegenerateGeometry("array axis has zero length")
    offsets = (np.arange(m_count) - (m_count - 1) / 2.0) * spacing
    return np.asarray(center, dtype=float)[None, :] + offsets[:, None] * (axis / norm)[None, :]


def surface_frame(axis, normal):
    """Orthonormal (u, v, n0): array axis, in-plane vertical, surface normal."""
    u = np.asarray(axis, dtype=float)
    n0 = np.asarray(normal, dtype=float)
    u = u / np.linalg.norm(u)
    n0 = n0 - np.dot(n0, u) * u
    nn = np.linalg.norm(n0)
    if nn < 1e-12:
        raise DegenerateGeometry("surface normal parallel to array axis")
    n0 = n0 / nn
    v = np.cross(n0, u)
    return u, v, n0


_surface_frame = surface_frame


def bent_normals(bend_h_deg, bend_v_deg, axis, normal, frame=None) -> np.ndarray:
    """Element normals after rotating the nominal normal about the array frame.

    bend_h rotates about the horizontal (array) axis, bend_v about the
    in-plane vertical axis; applied in that order. Closed form for
    orthonormal frame (u, v, n0):

      n = cos(bh) sin(bv) u - sin(bh) v + cos(bh) cos(bv) n0

    frame, when given, is a precomputed (u, v, n0) triple.
    """
    u, v, n0 = _surface_frame(axis, normal) if frame is None else frame
    bh = np.deg2rad(np.asarray(bend_h_deg, dtype=float))
    bv = np.deg2rad(np.asarray(bend_v_deg, dtype=float))
    return (np.cos(bh) * np.sin(bv))[..., None] * u \
        + (-np.sin(bh))[..., None] * v \
        + (np.cos(bh) * np.cos(bv))[..., None] * n0


def effective_incident_angle(element_index: int, bend_h_deg: float, bend_v_deg: float,
                             element_pos, source_pos,
                             axis=(1.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0)
                             ) -> tuple[float, bool]:
    """Effective incidence angle at one element of a bent array.

    Angle between the ray from the element toward the source and the element
    normal rotated by (bend_h, bend_v) from the nominal surface normal.
    Projected to [0, 45] degrees; the flag reports a raw angle beyond the
    fitted model's range.
    """
    ray = np.asarray(source_pos, dtype=float) - np.asarray(element_pos, dtype=float)
    dist = np.linalg.norm(ray)
    if dist < 1e-6:
        raise DegenerateGeometry(f"source coincides with element {element_index}")
    n = bent_normals(bend_h_deg, bend_v_deg, axis, normal)
    cosang = float(np.clip(np.dot(ray / dist, n), -1.0, 1.0))
    raw = math.degrees(math.acos(cosang))
    return (raw, False) if raw <= 45.0 else (45.0, True)


def effective_incident_angles(bend_h_deg, bend_v_deg, element_pos, source_pos,
                              axis, normal, frame=None
                              ) -> tuple[np.ndarray, np.ndarray]:
    """Vector form of effective_incident_angle over an (M, 3) element array."""
    pos = np.asarray(element_pos, dtype=float)
    rays = np.asarray(source_pos, dtype=float)[None, :] - pos
    dists = np.sqrt(np.einsum("mk,mk->m", rays, rays))
    if dists.min() < 1e-6:
        raise DegenerateGeometry("source coincides with an element")
    n = bent_normals(bend_h_deg, bend_v_deg, axis, normal, frame)
    cosang = np.clip(np.einsum("mk,mk->m", rays / dists[:, None], n), -1.0, 1.0)
    raw = np.degrees(np.arccos(cosang))
    flagged = raw > 45.0
    return np.where(flagged, 45.0, raw), flagged


@dataclass
class RisConfiguration:
    """One concrete setting of the surface: phases, bends, derived angles/amplitudes."""

    phases: np.ndarray        # radians, members of the active codebook
    bend_h_deg: np.ndarray
    bend_v_deg: np.ndarray
    incident_deg: np.ndarray  # effective per-element angle after projection
    amplitudes: np.ndarray    # fitted_amplitude(theta_m, iota_m)
    bits: int = 2

    @property
    def m_count(self) -> int:
        return len(self.phases)

    def validate(self, p: FitCoefficients = DEFAULT_FIT) -> None:
        book = phase_codebook(self.bits)
        if not np.all(np.isin(self.phases, book)):
            raise DomainError("phases stray from the active codebook")
        if np.any(np.abs(self.bend_h_deg) > 90.0) or np.any(np.abs(self.bend_v_deg) > 90.0):
            raise DomainError("bend magnitude beyond 90 deg")
        if self.incident_deg.min() < 0.0 or self.incident_deg.max() > 45.0:
            raise DomainError("incident angles outside [0, 45] deg")
        expect, _ = fitted_amplitudes(self.phases, self.incident_deg, p)
        if not np.array_equal(expect, self.amplitudes):
            raise DomainError("amplitudes inconsistent with the fitted model")


def assemble_configuration(phases_raw, bend_h_deg, bend_v_deg, incident_deg,
                           p: FitCoefficients = DEFAULT_FIT, bits: int = 2
                           ) -> tuple[RisConfiguration, dict]:
    """Quantize raw phases, bound bends, and derive amplitudes.

    Returns the configuration plus projection flags: bend_clamped when any
    |bend| exceeded 90 deg, amplitude_clamped when the fit left [0, 1].
    """
    book = phase_codebook(bits)
    idx = quantize_phase_index(np.asarray(phases_raw, dtype=float), bits)
    phases = book[idx]
    bh = np.clip(np.asarray(bend_h_deg, dtype=float), -90.0, 90.0)
    bv = np.clip(np.asarray(bend_v_deg, dtype=float), -90.0, 90.0)
    bend_clamped = bool(np.any(bh != np.asarray(bend_h_deg, dtype=float))
                        or np.any(bv != np.asarray(bend_v_deg, dtype=float)))
    amps, amp_clamped = fitted_amplitudes(phases, incident_deg, p)
    cfg = RisConfiguration(phases=phases, bend_h_deg=bh, bend_v_deg=bv,
                           incident_deg=np.asarray(incident_deg, dtype=float),
                           amplitudes=amps, bits=bits)
    return cfg, {"bend_clamped": bend_clamped,
                 "amplitude_clamped": bool(np.any(amp_clamped))}


def reflection_matrix(cfg: RisConfiguration, p: FitCoefficients = DEFAULT_FIT) -> np.ndarray:
    """Diagonal of the reflection matrix: delta_m * exp(j theta_m), (M,) complex."""
    amps, _ = fitted_amplitudes(cfg.phases, cfg.incident_deg, p)
    return amps * np.exp(1j * cfg.phases)


def export_amplitude_sweep(path, p: FitCoefficients = DEFAULT_FIT,
                           theta_deg_values=None, iota_deg_values=None,
                           bits: int | None = None) -> None:
    """Write the fitted-amplitude table as CSV (theta_deg,iota_deg,delta,phase_deg).

    phase_deg is the phase actually applied: the codebook quantization of
    theta when bits is given, theta itself otherwise.
    """
    thetas = np.arange(0.0, 360.0, 5.0) if theta_deg_values is None \
        else np.asarray(theta_deg_values, dtype=float)
    iotas = np.arange(0.0, 46.0, 5.0) if iota_deg_values is None \
        else np.asarray(iota_deg_values, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta_deg", "iota_deg", "delta", "phase_deg"])
        for th in thetas:
            applied = math.degrees(quantize_phase(math.radians(th), bits)) \
                if bits is not None else float(th)
            for io in iotas:
                delta, _ = fitted_amplitude(math.radians(applied), float(io), p)
                writer.writerow([format(float(th), ".10g"), format(float(io), ".10g"),
                                 format(delta, ".10g"), format(applied, ".10g")])

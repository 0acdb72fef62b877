"""Pump-beam synthesis, spiral phase masks and azimuthal (OAM) spectra."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import fft as sfft
from scipy.ndimage import map_coordinates

from .errors import GridTooSmall
from .fields import ComplexField2D, GridSpec, total_power

GAUSSIAN = "gaussian"
LG1 = "lg1"


@dataclass(frozen=True)
class BeamSpec:
    """Declarative pump description.

    ``model`` selects the transverse profile: a fundamental Gaussian,
    I(r) = I0 exp(-2 r^2 / w^2), or the first-order ring mode,
    I(r) = I0 (2 r^2 / w^2) exp(-2 r^2 / w^2) with azimuthal phase exp(i phi).
    In both cases the total power is P = pi w^2 I0 / 2.
    """

    model: str
    waist: float
    power: float
    center: tuple[float, float] = (0.0, 0.0)
    curvature: float = 0.0  # 1/m wavefront curvature, 0 = collimated

    def __post_init__(self):
        if self.model not in (GAUSSIAN, LG1):
            raise ValueError(f"unknown beam model {self.model!r}")
        if self.waist <= 0:
            raise ValueError("waist must be positive")
        if self.power < 0:
            raise ValueError("power must be non-negative")

    @property
    def peak_intensity(self) -> float:
        """I0 of the defining equation, in W/m^2."""
        return 2.0 * self.power / (np.pi * self.waist**2)


@dataclass(frozen=True)
class PhaseMaskSpec:
    """Spiral phase mask with total charge ``charge``.

    ``sectors`` = None models an ideally smooth spiral; an integer N >= 2
    models a molded mask whose thickness changes step-like through N sectors.
    """

    charge: int
    sectors: Optional[int] = None
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.charge == 0:
            raise ValueError("a vortex mask needs a nonzero charge")
        if self.sectors is not None and self.sectors < 2:
            raise ValueError("a stepped mask needs at least 2 sectors")


def make_beam(spec: BeamSpec, grid: GridSpec) -> ComplexField2D:
    """Synthesize the pump field at z = 0 on the given grid."""
    window = min(grid.nx * grid.dx, grid.ny * grid.dy)
    if window < 8.0 * spec.waist:
        raise GridTooSmall(
            f"window {window:.3e} m < 8 x waist {spec.waist:.3e} m"
        )
    x = (np.arange(grid.nx) - grid.nx // 2) * grid.dx - spec.center[0]
    y = (np.arange(grid.ny) - grid.ny // 2) * grid.dy - spec.center[1]
    xx, yy = np.meshgrid(x, y)
    r_sq = xx * xx + yy * yy
    w = spec.waist
    a0 = np.sqrt(spec.peak_intensity)
    envelope = np.exp(-r_sq / w**2)
    if spec.model == GAUSSIAN:
        amp = a0 * envelope.astype(np.complex128)
    else:
        phi = np.arctan2(yy, xx)
        amp = a0 * (np.sqrt(2.0 * r_sq) / w) * envelope * np.exp(1j * phi)
    if spec.curvature != 0.0:
        amp = amp * np.exp(1j * np.pi * r_sq * spec.curvature / grid.wavelength)
    return ComplexField2D(amp, grid.dx, grid.dy, grid.wavelength, 0.0)


def mask_phase(mask: PhaseMaskSpec, xx: np.ndarray, yy: np.ndarray) -> np.ndarray:
    """Phase profile of the mask on a coordinate mesh (radians)."""
    phi = np.mod(np.arctan2(yy - mask.center[1], xx - mask.center[0]), 2.0 * np.pi)
    if mask.sectors is None:
        return mask.charge * phi
    n = mask.sectors
    sector = np.minimum(np.floor(n * phi / (2.0 * np.pi)), n - 1)
    return (2.0 * np.pi * mask.charge / n) * sector


def apply_phase_mask(f: ComplexField2D, mask: PhaseMaskSpec) -> ComplexField2D:
    """Multiply the field by the mask's pure phase; power conserved exactly."""
    half_x = f.nx // 2 * f.dx
    half_y = f.ny // 2 * f.dy
    if abs(mask.center[0]) >= half_x or abs(mask.center[1]) >= half_y:
        raise ValueError("mask center lies outside the grid window")
    xx, yy = f.xy_mesh()
    out = f.amplitude * np.exp(1j * mask_phase(mask, xx, yy))
    return ComplexField2D(out, f.dx, f.dy, f.wavelength, f.z)


def intensity_centroid(f: ComplexField2D) -> tuple[float, float]:
    """Intensity-weighted first moments (meters)."""
    inten = f.intensity()
    tot = inten.sum()
    if tot == 0:
        return (0.0, 0.0)
    xx, yy = f.xy_mesh()
    return (float((inten * xx).sum() / tot), float((inten * yy).sum() / tot))


def recenter(f: ComplexField2D) -> ComplexField2D:
    """Shift the field so its intensity centroid sits on the grid origin.

    The (sub-pixel) shift is applied spectrally, which is exact for
    band-limited fields.
    """
    cx, cy = intensity_centroid(f)
    if cx == 0.0 and cy == 0.0:
        return f
    kx = 2.0 * np.pi * sfft.fftfreq(f.nx, f.dx)
    ky = 2.0 * np.pi * sfft.fftfreq(f.ny, f.dy)
    kxx, kyy = np.meshgrid(kx, ky)
    A = sfft.fft2(f.amplitude)
    out = sfft.ifft2(A * np.exp(1j * (kxx * cx + kyy * cy)))
    return ComplexField2D(out, f.dx, f.dy, f.wavelength, f.z)


@dataclass(frozen=True)
class OamSpectrum:
    """Azimuthal-harmonic power fractions of a field.

    ``fractions[m]`` is the power fraction in exp(i m phi) for |m| <= m_max;
    ``mean`` is the power-weighted mean harmonic index over the full internal
    band (not just the reported one); ``out_of_band`` is the fraction outside
    the reported window.
    """

    fractions: dict[int, float]
    mean: float
    out_of_band: float

    def fraction(self, m: int) -> float:
        return self.fractions.get(m, 0.0)


def oam_spectrum(
    f: ComplexField2D,
    m_max: int = 16,
    n_phi: int = 1024,
    dr: Optional[float] = None,
) -> OamSpectrum:
    """Decompose a field into azimuthal harmonics about the grid origin.

    The field is resampled on concentric rings (cubic interpolation) and
    Fourier-transformed in the angle; the caller recenters the field first
    (see :func:`recenter`).  Fractions are normalized to the captured polar
    power, so they sum to one over the full internal band.
    """
    if dr is None:
        dr = max(f.dx, f.dy)
    r_max = 0.5 * min(f.nx * f.dx, f.ny * f.dy) - 2.0 * dr
    radii = np.arange(0.5 * dr, r_max, dr)
    angles = 2.0 * np.pi * np.arange(n_phi) / n_phi
    rr, aa = np.meshgrid(radii, angles, indexing="ij")
    col = rr * np.cos(aa) / f.dx + f.nx // 2
    row = rr * np.sin(aa) / f.dy + f.ny // 2
    coords = np.stack([row.ravel(), col.ravel()])
    re = map_coordinates(f.amplitude.real, coords, order=3, mode="constant", cval=0.0)
    im = map_coordinates(f.amplitude.imag, coords, order=3, mode="constant", cval=0.0)
    polar = (re + 1j * im).reshape(rr.shape)

    coeffs = sfft.fft(polar, axis=1) / n_phi  # c_m(r) for m in fftfreq order
    ring_weight = (2.0 * np.pi * radii * dr)[:, None]
    p_m = np.sum(np.abs(coeffs) ** 2 * ring_weight, axis=0)
    captured = p_m.sum()
    if captured == 0.0:
        return OamSpectrum({m: 0.0 for m in range(-m_max, m_max + 1)}, 0.0, 0.0)

    m_values = sfft.fftfreq(n_phi, 1.0 / n_phi).astype(int)
    frac = p_m / captured
    mean = float(np.sum(m_values * frac))
    in_band = {}
    for m in range(-m_max, m_max + 1):
        idx = np.where(m_values == m)[0]
        in_band[m] = float(frac[idx[0]]) if idx.size else 0.0
    out_of_band = float(1.0 - sum(in_band.values()))
    return OamSpectrum(in_band, mean, out_of_band)


def stepped_mask_harmonic_fractions(charge: int, sectors: int, m_values) -> dict[int, float]:
    """Closed-form harmonic powers of a stepped spiral phase.

    For an N-sector mask of charge l the transmitted phase exp(i Phi(phi))
    decomposes with |c_m|^2 = sinc^2(pi m / N) on m = l mod N (and zero
    elsewhere).  Used as an independent oracle by the tests.
    """
    out = {}
    for m in m_values:
        if (m - charge) % sectors != 0:
            out[m] = 0.0
        else:
            out[m] = float(np.sinc(m / sectors) ** 2)  # np.sinc(x) = sin(pi x)/(pi x)
    return out

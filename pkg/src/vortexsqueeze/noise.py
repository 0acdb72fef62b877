"""Phenomenological squeezing gain, excess noise, and homodyne readout.

The vapor cell squeezes the vacuum port copropagating with the pump.  The
squeeze parameter grows with the resonant optical depth weighted by a
saturating gain density s/(1+s)^2, excess noise grows as s^2, and the
detected quadrature variance follows the standard lossy squeezed-state
formula V = eta (e^{-2r} + eps) + (1 - eta), normalized so that vacuum input
(or a fully blocked squeezed port) reads exactly 0 dB.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyEvolution, GridMismatch
from .fields import ComplexField2D
from .medium import MediumEvolution, MediumSpec, local_saturation_profile


@dataclass(frozen=True)
class NoiseModelParams:
    """Calibrated gain/excess coefficients and detection efficiency."""

    gain: float
    excess: float
    detection_efficiency: float = 0.95
    analysis_frequency: float = 1.0e6  # Hz, metadata only

    def __post_init__(self):
        if self.gain < 0 or self.excess < 0:
            raise ValueError("gain and excess coefficients must be non-negative")
        if not 0.0 <= self.detection_efficiency <= 1.0:
            raise ValueError("detection_efficiency must be in [0, 1]")


@dataclass(frozen=True)
class NoiseResult:
    """Measured-quadrature outcome relative to shot noise."""

    min_quadrature_db: float
    squeeze_parameter: float
    mode_overlap: float
    transmission: float

    def __post_init__(self):
        if self.squeeze_parameter < 0:
            raise ValueError("squeeze parameter must be non-negative")
        if not 0.0 <= self.mode_overlap <= 1.0 or not 0.0 <= self.transmission <= 1.0:
            raise ValueError("mode_overlap and transmission must be in [0, 1]")


def shot_noise_reference() -> float:
    """The 0 dB baseline all noise results are reported against."""
    return 0.0


def mode_overlap(lo: ComplexField2D, sq: ComplexField2D) -> float:
    """Homodyne spatial efficiency |<lo|sq>|^2 / (<lo|lo><sq|sq>)."""
    if not lo.same_geometry(sq):
        raise GridMismatch("local oscillator and squeezed mode use different grids")
    a = lo.amplitude
    b = sq.amplitude
    num = np.abs(np.vdot(a, b)) ** 2
    den = np.vdot(a, a).real * np.vdot(b, b).real
    if den == 0.0:
        return 0.0
    return float(min(num / den, 1.0))


def matched_model_overlap(w_a: float, w_b: float, model: str) -> float:
    """Closed-form homodyne overlap of two co-centered modes of one family.

    For Gaussian modes with waists w_a, w_b the normalized inner product is
    2 w_a w_b / (w_a^2 + w_b^2), giving a power overlap of its square; for
    first-order ring (lg1) modes the same bracket enters to the fourth
    power, so a ring pump pays twice the (log) mismatch penalty of a
    Gaussian pump for the same fractional waist difference.
    """
    if w_a <= 0.0 or w_b <= 0.0:
        raise ValueError("waists must be positive")
    if model not in ("gaussian", "lg1"):
        raise ValueError("model must be 'gaussian' or 'lg1'")
    bracket = 2.0 * w_a * w_b / (w_a * w_a + w_b * w_b)
    return float(bracket ** (2 if model == "gaussian" else 4))


def gain_integrals(evolution: MediumEvolution) -> tuple[float, float, float]:
    """Raw (gain, excess, transmission) integrals of a recorded evolution.

    gain integral G = sum_steps d_step <s/(1+s)^2>, excess integral
    E = sum_steps d_step <s^2>, with <.> the pump-intensity-weighted
    transverse average and d_step the per-step resonant optical depth.
    The squeeze parameter is gain * G and the excess noise excess * E.
    """
    if not evolution.screens:
        raise EmptyEvolution("evolution holds no recorded screens")
    medium = evolution.medium
    d_step = (
        medium.density_m3
        * medium.cross_section
        * evolution.dz
        / medium.lorentz_denominator
    )
    g_total = 0.0
    e_total = 0.0
    for screen in evolution.screens:
        inten = screen.intensity()
        weight = inten.sum()
        if weight == 0.0:
            continue
        s = local_saturation_profile(screen, medium)
        g_total += d_step * float(np.sum(inten * s / (1.0 + s) ** 2) / weight)
        e_total += d_step * float(np.sum(inten * s * s) / weight)
    return g_total, e_total, min(evolution.transmission, 1.0)


class GainAccumulator:
    """Streaming form of :func:`gain_integrals`.

    Feed it one entrance-intensity map per screen (it is a valid
    ``screen_hook`` for the medium propagator); ``integrals()`` then returns
    the same (G, E) sums without any screen being stored.
    """

    def __init__(self, medium: MediumSpec, dz: float):
        self.medium = medium
        self.d_step = (
            medium.density_m3 * medium.cross_section * dz / medium.lorentz_denominator
        )
        self.gain_integral = 0.0
        self.excess_integral = 0.0
        self.screens = 0

    def __call__(self, inten: np.ndarray) -> None:
        self.screens += 1
        weight = float(inten.sum(dtype=np.float64))
        if weight == 0.0:
            return
        denom = inten.dtype.type(
            self.medium.saturation_intensity * self.medium.lorentz_denominator
        )
        s = inten / denom
        one = inten.dtype.type(1.0)
        self.gain_integral += self.d_step * float(
            np.sum(inten * s / (one + s) ** 2, dtype=np.float64) / weight
        )
        self.excess_integral += self.d_step * float(
            np.sum(inten * s * s, dtype=np.float64) / weight
        )

    def integrals(self) -> tuple[float, float]:
        if self.screens == 0:
            raise EmptyEvolution("no screens were accumulated")
        return self.gain_integral, self.excess_integral


def squeeze_gain(
    evolution: MediumEvolution, params: NoiseModelParams
) -> tuple[float, float, float]:
    """Squeeze parameter r, excess noise eps, and pump transmission T."""
    g, e, t = gain_integrals(evolution)
    return params.gain * g, params.excess * e, t


def measured_noise(
    r: float,
    excess: float,
    eta_mode: float,
    transmission: float,
    params: NoiseModelParams,
) -> NoiseResult:
    """Detected minimum-quadrature variance in dB relative to shot noise."""
    if r < 0 or excess < 0:
        raise ValueError("r and excess must be non-negative")
    if not 0.0 <= eta_mode <= 1.0 or not 0.0 <= transmission <= 1.0:
        raise ValueError("eta_mode and transmission must be in [0, 1]")
    eta = eta_mode * params.detection_efficiency * transmission
    variance = eta * (np.exp(-2.0 * r) + excess) + (1.0 - eta)
    db = 10.0 * np.log10(variance)
    return NoiseResult(float(db), r, eta_mode, transmission)

"""Desk-scale simulator of squeezed-vacuum generation with orbital angular
momentum in hot Rb vapor: vortex pump synthesis, saturable self-defocusing
cell propagation, homodyne noise model, profile fits, and sweep campaigns."""

__version__ = "0.1.0"

from .beams import BeamSpec, OamSpectrum, PhaseMaskSpec, apply_phase_mask, make_beam, oam_spectrum, recenter
from .fields import ComplexField2D, GridSpec, LensSpec, apply_lens, propagate_free, total_power
from .fitting import FitResult, IntensityImage, fit_profile, ingest_image, render_image, waist_ratio
from .medium import MediumEvolution, MediumSpec, local_saturation_profile, propagate_medium
from .noise import NoiseModelParams, NoiseResult, measured_noise, mode_overlap, shot_noise_reference, squeeze_gain
from .sweep import SweepConfig, SweepGrid, run_displacement_sweep, run_power_density_sweep

__all__ = [
    "BeamSpec",
    "ComplexField2D",
    "FitResult",
    "GridSpec",
    "IntensityImage",
    "LensSpec",
    "MediumEvolution",
    "MediumSpec",
    "NoiseModelParams",
    "NoiseResult",
    "OamSpectrum",
    "PhaseMaskSpec",
    "SweepConfig",
    "SweepGrid",
    "apply_lens",
    "apply_phase_mask",
    "fit_profile",
    "ingest_image",
    "local_saturation_profile",
    "make_beam",
    "measured_noise",
    "mode_overlap",
    "oam_spectrum",
    "propagate_free",
    "propagate_medium",
    "recenter",
    "render_image",
    "run_displacement_sweep",
    "run_power_density_sweep",
    "shot_noise_reference",
    "squeeze_gain",
    "total_power",
    "waist_ratio",
]

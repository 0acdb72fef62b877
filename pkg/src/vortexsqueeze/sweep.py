"""Sweep campaigns: (power x density) and (cell displacement x power) maps.

Each grid cell runs the full pipeline: pump synthesis, optional phase mask,
lens train, recorded nonlinear cell propagation, camera-plane rendering and
fit, squeezing-gain evaluation, and homodyne readout.  Cells are independent
pure computations; a worker pool evaluates them in any order and results are
always assembled row-major, so output is deterministic for a given config.
"""

from __future__ import annotations

import functools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .beams import BeamSpec, PhaseMaskSpec, apply_phase_mask, make_beam
from .config import (
    RunConfig,
    beam_spec,
    config_hash,
    grid_spec,
    mask_spec,
    medium_spec,
    noise_params,
)
from .errors import ConfigInvalid, StepTooCoarse
from .fields import (
    ComplexField2D,
    GridSpec,
    fourier_lens_relay,
    propagate_free,
    total_power,
)
from .fitting import FitResult, IntensityImage, fit_profile, image_from_field
from .medium import MediumSpec, propagate_medium, required_steps
from .noise import (
    GainAccumulator,
    NoiseModelParams,
    NoiseResult,
    matched_model_overlap,
    measured_noise,
)

_MAX_STEP_RETRIES = 4
_FIT_DOWNSAMPLE = 2  # camera images are oversampled; bin before fitting

CSV_HEADER = "power_mW,density_per_cm3,displacement_cm,min_dB,r,eta,T,waist_ratio"


@dataclass(frozen=True)
class TrainGeometry:
    """Axial layout of the optical train (all distances in meters)."""

    mask_to_lens1: float
    lens1_f: float
    lens2_f: float
    lens2_from_focus: float
    camera_from_lens2: float


@dataclass(frozen=True)
class SweepConfig:
    """Fully resolved sweep plan (hashable; safe to ship to workers)."""

    pump: BeamSpec  # power field is the single-run default; sweeps override it
    mask: Optional[PhaseMaskSpec]
    grid: GridSpec
    train: TrainGeometry
    medium_template: MediumSpec
    steps: int
    noise: NoiseModelParams
    powers: tuple[float, ...]  # W
    densities: tuple[float, ...]  # atoms/cm^3
    displacements: tuple[float, ...]  # m, cell-center offset from focus
    workers: int = 1
    seed: int = 0
    defocus_coupling: float = 0.0

    def __post_init__(self):
        if not (self.powers and self.densities and self.displacements):
            raise ConfigInvalid("sweep axes must be non-empty")
        if self.workers < 1:
            raise ConfigInvalid("workers must be >= 1")

    @property
    def fit_model(self) -> str:
        if self.pump.model == "lg1" or self.mask is not None:
            return "lg1"
        return "gaussian"


@dataclass(frozen=True)
class CellResult:
    power: float  # W
    density: float  # atoms/cm^3
    displacement: float  # m
    noise: Optional[NoiseResult]
    fit: Optional[FitResult]
    waist_ratio: float = math.nan
    error: Optional[str] = None


@dataclass(frozen=True)
class SweepGrid:
    """Rectangular result grid with row-major cells and provenance."""

    kind: str  # "power_density" or "displacement_power"
    row_values: tuple[float, ...]
    col_values: tuple[float, ...]
    cells: tuple[CellResult, ...]  # len == len(rows) * len(cols), row-major
    config_hash: str
    timestamp: float

    def cell(self, i: int, j: int) -> CellResult:
        return self.cells[i * len(self.col_values) + j]

    @property
    def failed(self) -> list[CellResult]:
        return [c for c in self.cells if c.error is not None]

    def noise_db(self) -> np.ndarray:
        """Matrix of min-quadrature dB (nan where failed)."""
        out = np.full((len(self.row_values), len(self.col_values)), np.nan)
        for i in range(len(self.row_values)):
            for j in range(len(self.col_values)):
                c = self.cell(i, j)
                if c.noise is not None:
                    out[i, j] = c.noise.min_quadrature_db
        return out

    def waist_ratios(self) -> np.ndarray:
        out = np.full((len(self.row_values), len(self.col_values)), np.nan)
        for i in range(len(self.row_values)):
            for j in range(len(self.col_values)):
                out[i, j] = self.cell(i, j).waist_ratio
        return out

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for c in self.cells:
            if c.noise is not None:
                vals = (
                    c.noise.min_quadrature_db,
                    c.noise.squeeze_parameter,
                    c.noise.mode_overlap,
                    c.noise.transmission,
                )
            else:
                vals = (math.nan,) * 4
            lines.append(
                ",".join(
                    [repr(c.power * 1e3), repr(c.density), repr(c.displacement * 1e2)]
                    + [repr(float(v)) for v in vals]
                    + [repr(float(c.waist_ratio))]
                )
            )
        return "\n".join(lines) + "\n"

    def provenance(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "config_hash": self.config_hash,
                "timestamp": self.timestamp,
                "rows": len(self.row_values),
                "cols": len(self.col_values),
                "failed_cells": len(self.failed),
            },
            indent=2,
        )


def plan_from_config(cfg: RunConfig) -> SweepConfig:
    t = cfg.train
    return SweepConfig(
        pump=beam_spec(cfg),
        mask=mask_spec(cfg),
        grid=grid_spec(cfg),
        train=TrainGeometry(
            mask_to_lens1=t.mask_to_lens1_cm * 1e-2,
            lens1_f=t.lens1_f_cm * 1e-2,
            lens2_f=t.lens2_f_cm * 1e-2,
            lens2_from_focus=t.lens2_from_focus_cm * 1e-2,
            camera_from_lens2=t.camera_from_lens2_cm * 1e-2,
        ),
        medium_template=medium_spec(cfg),
        steps=cfg.medium.steps,
        noise=noise_params(cfg),
        powers=tuple(p * 1e-3 for p in cfg.sweep.powers_mw),
        densities=tuple(cfg.sweep.densities_per_cm3),
        displacements=tuple(d * 1e-2 for d in cfg.sweep.displacements_cm),
        workers=cfg.sweep.workers,
        seed=cfg.sweep.seed,
        defocus_coupling=cfg.noise.defocus_coupling,
    )


def scale_power(f: ComplexField2D, factor: float) -> ComplexField2D:
    """Multiply the field power by ``factor`` (amplitude by its square root)."""
    return ComplexField2D(
        f.amplitude * math.sqrt(factor), f.dx, f.dy, f.wavelength, f.z
    )


_FWHM_FACTOR = math.sqrt(2.0 * math.log(2.0))  # FWHM = waist * sqrt(2 ln 2)
_WINDOW_FWHM = 16.0  # grid window in units of the local beam FWHM


def focal_waist(plan: SweepConfig) -> float:
    """Waist of the pump focused by the first lens (thin-lens Fourier scaling)."""
    return plan.grid.wavelength * plan.train.lens1_f / (math.pi * plan.pump.waist)


def _fine_pitch(plan: SweepConfig) -> float:
    """Pixel pitch of the focal-region grid the cell propagation runs on."""
    return _WINDOW_FWHM * _FWHM_FACTOR * focal_waist(plan) / plan.grid.nx


def _camera_pitch(plan: SweepConfig) -> float:
    """Pixel pitch of the camera-plane grid behind the second lens."""
    w_cam = plan.grid.wavelength * plan.train.lens2_f / (math.pi * focal_waist(plan))
    return _WINDOW_FWHM * _FWHM_FACTOR * w_cam / plan.grid.nx


@functools.lru_cache(maxsize=8)
def _unit_entrance(plan: SweepConfig, displacement: float, waist_scale: float = 1.0):
    """Unit-power field at the cell entrance for the given displacement.

    The pump (and optional mask) live on a wide grid matched to the
    collimated beam; the first lens is applied as an exact scaled-Fourier
    relay onto a fine grid matched to the focus, where the nonlinear cell
    propagation is well resolved.
    """
    pump = replace(plan.pump, power=1.0, waist=plan.pump.waist * waist_scale)
    f = make_beam(pump, plan.grid)
    if plan.mask is not None:
        f = apply_phase_mask(f, plan.mask)
    f = fourier_lens_relay(
        f,
        plan.train.lens1_f,
        plan.train.mask_to_lens1,
        _fine_pitch(plan),
        plan.grid.nx,
    )
    half_cell = plan.medium_template.cell_length / 2.0
    return propagate_free(f, displacement - half_cell)


def _to_camera(plan: SweepConfig, cell_exit: ComplexField2D, displacement: float):
    """Relay the cell-exit field to the camera plane on a wide grid.

    The exit field is referred back to the focal plane (exact inverse
    diffraction on the fine grid), relayed through the second lens with the
    scaled Fourier transform, and then diffracted by any camera offset from
    the back focal plane.
    """
    half_cell = plan.medium_template.cell_length / 2.0
    f = propagate_free(cell_exit, -(displacement + half_cell))
    f = fourier_lens_relay(
        f,
        plan.train.lens2_f,
        plan.train.lens2_from_focus,
        _camera_pitch(plan),
        plan.grid.nx,
    )
    return propagate_free(f, plan.train.camera_from_lens2 - plan.train.lens2_f)


def _binned(image: IntensityImage, factor: int = _FIT_DOWNSAMPLE) -> IntensityImage:
    """Average ``factor x factor`` pixel blocks (keeps fit cost down).

    Small rasters are left untouched: they are cheap to fit and binning
    them can starve the fitter of signal pixels.
    """
    if factor <= 1 or min(image.nx, image.ny) < 128 * factor:
        return image
    ny = image.ny - image.ny % factor
    nx = image.nx - image.nx % factor
    v = image.values[:ny, :nx].reshape(
        ny // factor, factor, nx // factor, factor
    ).mean(axis=(1, 3))
    return IntensityImage(v, image.pitch * factor, image.background)


def _cell_propagation(
    plan: SweepConfig, entrance: ComplexField2D, medium: MediumSpec
) -> tuple[ComplexField2D, float, float, float, int]:
    """Adaptive-step cell pass with streaming gain accumulation.

    Returns (exit field, G integral, E integral, transmission, steps used).
    The step count starts from the phase-budget estimate and doubles on a
    StepTooCoarse rejection.
    """
    steps = required_steps(medium, minimum=plan.steps)
    last_exc: Exception | None = None
    for _ in range(_MAX_STEP_RETRIES):
        acc = GainAccumulator(medium, medium.cell_length / steps)
        try:
            out = propagate_medium(entrance, medium, steps, screen_hook=acc)
        except StepTooCoarse as exc:
            last_exc = exc
            steps *= 2
            continue
        p_in = total_power(entrance)
        transmission = min(total_power(out) / p_in, 1.0) if p_in > 0 else 1.0
        g, e = acc.integrals()
        return out, g, e, transmission, steps
    raise StepTooCoarse(
        f"phase budget still exceeded at {steps // 2} steps: {last_exc}"
    )


def run_cell(
    plan: SweepConfig, power: float, density: float, displacement: float
) -> CellResult:
    """Evaluate one grid cell; exceptions are captured as an error record."""
    try:
        g, e, transmission, eta_mode, fit = _cell_features(
            plan, power, density, displacement
        )
        r = plan.noise.gain * g
        eps = plan.noise.excess * e
        noise = measured_noise(r, eps, eta_mode, transmission, plan.noise)
        return CellResult(power, density, displacement, noise, fit)
    except Exception as exc:  # per-cell failures must not kill the campaign
        return CellResult(power, density, displacement, None, None, error=str(exc))


def _cell_features(
    plan: SweepConfig, power: float, density: float, displacement: float
) -> tuple[float, float, float, float, FitResult]:
    """One full pipeline pass: (G, E, T, eta_mode, camera fit)."""
    entrance = scale_power(_unit_entrance(plan, displacement), power)
    medium = replace(
        plan.medium_template, density=density, cell_center_z=displacement
    )
    out, g, e, transmission, _ = _cell_propagation(plan, entrance, medium)
    camera = _to_camera(plan, out, displacement)
    fit = fit_profile(_binned(image_from_field(camera)), plan.fit_model)
    eta_mode = 1.0
    if plan.defocus_coupling != 0.0 and fit.converged:
        eta_mode = _differential_overlap(plan, fit.w, displacement)
    return g, e, transmission, eta_mode, fit


def _differential_overlap(plan: SweepConfig, w_fit: float, displacement: float):
    """Hypothesis knob: the squeezed mode defocuses more than the pump.

    The squeezed-mode camera waist is modeled as the pump's fitted waist
    scaled by (1 + kappa * expansion), with expansion the fractional waist
    growth over the empty-cell baseline; eta_mode is the closed-form
    same-family overlap of the two waists, which falls off twice as steeply
    (in log) for a ring pump as for a Gaussian one.
    """
    baseline = _linear_camera_fit(plan, displacement)
    expansion = max(w_fit / baseline.w - 1.0, 0.0)
    perturbed = w_fit * (1.0 + plan.defocus_coupling * expansion)
    return matched_model_overlap(w_fit, perturbed, plan.fit_model)


@functools.lru_cache(maxsize=8)
def _linear_camera_fit(plan: SweepConfig, displacement: float) -> FitResult:
    entrance = _unit_entrance(plan, displacement)
    empty = replace(plan.medium_template, density=0.0)
    out = propagate_medium(entrance, empty, 1)
    camera = _to_camera(plan, out, displacement)
    return fit_profile(_binned(image_from_field(camera)), plan.fit_model)


def camera_snapshot(
    plan: SweepConfig, power: float, density: float, displacement: float
) -> tuple[ComplexField2D, CellResult]:
    """Run one pipeline pass and also return the camera-plane field."""
    entrance = scale_power(_unit_entrance(plan, displacement), power)
    medium = replace(plan.medium_template, density=density, cell_center_z=displacement)
    out, g, e, transmission, _ = _cell_propagation(plan, entrance, medium)
    r = plan.noise.gain * g
    eps = plan.noise.excess * e
    camera = _to_camera(plan, out, displacement)
    fit = fit_profile(_binned(image_from_field(camera)), plan.fit_model)
    eta_mode = 1.0
    if plan.defocus_coupling != 0.0 and fit.converged:
        eta_mode = _differential_overlap(plan, fit.w, displacement)
    noise = measured_noise(r, eps, eta_mode, transmission, plan.noise)
    return camera, CellResult(power, density, displacement, noise, fit)


def pipeline_gain_integrals(
    plan: SweepConfig, power: float, density: float, displacement: float
) -> tuple[float, float, float, float]:
    """Raw (G, E, T, eta_mode) features at one operating point.

    These are everything calibration needs: the detected noise at the point
    is a function of the features and the two free (gain, excess)
    coefficients only.
    """
    g, e, transmission, eta_mode, _ = _cell_features(
        plan, power, density, displacement
    )
    return g, e, transmission, eta_mode


def _cell_task(args):
    plan, power, density, displacement = args
    return run_cell(plan, power, density, displacement)


def _evaluate(plan: SweepConfig, tasks: list[tuple]) -> list[CellResult]:
    if plan.workers == 1:
        return [_cell_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=plan.workers) as pool:
        return list(pool.map(_cell_task, tasks, chunksize=1))


def _attach_waist_ratios(
    cells: list[CellResult], n_rows: int, n_cols: int, ref_col: int
) -> list[CellResult]:
    """Ratio of each row's fitted waist to the row's reference-column fit."""
    out = list(cells)
    for i in range(n_rows):
        ref = out[i * n_cols + ref_col]
        for j in range(n_cols):
            idx = i * n_cols + j
            c = out[idx]
            if (
                c.fit is not None
                and c.fit.converged
                and ref.fit is not None
                and ref.fit.converged
            ):
                out[idx] = replace(c, waist_ratio=c.fit.w / ref.fit.w)
    return out


def run_power_density_sweep(plan: SweepConfig) -> SweepGrid:
    """Map min-quadrature noise and beam expansion over (power x density).

    Rows are powers, columns densities; the waist-ratio reference is the
    lowest-density column of the same row ("where self-defocusing was
    negligible").  The cell sits at the first configured displacement.
    """
    displacement = plan.displacements[0] if len(plan.displacements) == 1 else 0.0
    tasks = [
        (plan, p, n, displacement) for p in plan.powers for n in plan.densities
    ]
    cells = _evaluate(plan, tasks)
    ref_col = int(np.argmin(plan.densities))
    cells = _attach_waist_ratios(cells, len(plan.powers), len(plan.densities), ref_col)
    return SweepGrid(
        "power_density",
        plan.powers,
        plan.densities,
        tuple(cells),
        _plan_hash(plan),
        time.time(),
    )


def run_displacement_sweep(plan: SweepConfig) -> SweepGrid:
    """Map min-quadrature noise over (cell displacement x power).

    Uses the plan's configured density; rows are displacements, columns
    powers; waist ratios reference the smallest-|displacement| row's fits
    column-wise.
    """
    tasks = [
        (plan, p, plan.medium_template.density, d)
        for d in plan.displacements
        for p in plan.powers
    ]
    cells = _evaluate(plan, tasks)
    # column-wise reference: transpose indexing via per-row attach on rebuilt order
    n_rows = len(plan.displacements)
    n_cols = len(plan.powers)
    ref_row = int(np.argmin(np.abs(plan.displacements)))
    out = list(cells)
    for j in range(n_cols):
        ref = out[ref_row * n_cols + j]
        for i in range(n_rows):
            idx = i * n_cols + j
            c = out[idx]
            if (
                c.fit is not None
                and c.fit.converged
                and ref.fit is not None
                and ref.fit.converged
            ):
                out[idx] = replace(c, waist_ratio=c.fit.w / ref.fit.w)
    return SweepGrid(
        "displacement_power",
        plan.displacements,
        plan.powers,
        tuple(out),
        _plan_hash(plan),
        time.time(),
    )


def _plan_hash(plan: SweepConfig) -> str:
    import hashlib

    return hashlib.sha256(repr(plan).encode("utf-8")).hexdigest()

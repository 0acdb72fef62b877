"""Two-parameter calibration of the squeezing gain and excess coefficients.

The physical pipeline fixes the raw gain/excess/transmission integrals
(G, E, T) at each operating point; only (gain, excess) remain free.  They are
chosen by least squares so that the detected noise at the anchor point equals
the target and every other (power, density) grid cell sits above it by a
small margin, making the anchor the interior optimum of the sweep map.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares

from .errors import CalibrationDiverged
from .noise import NoiseModelParams
from .sweep import SweepConfig, pipeline_gain_integrals

MARGIN_DB = 0.03
MARGIN_WEIGHT = 5.0
ANCHOR_WEIGHT = 3.0


@dataclass(frozen=True)
class CalibrationTarget:
    noise_db: float = -1.8
    power: float = 10.5e-3  # W
    density: float = 2.7e12  # atoms/cm^3
    tolerance_db: float = 0.2


def _noise_db(log_params, feats, eta_det):
    g0, e0 = np.exp(log_params)
    g, e, t, eta_mode = feats
    eta = eta_det * t * eta_mode
    v = eta * (np.exp(-2.0 * g0 * g) + e0 * e) + (1.0 - eta)
    return 10.0 * np.log10(v)


def calibrate(
    plan: SweepConfig, target: CalibrationTarget = CalibrationTarget()
) -> NoiseModelParams:
    """Fit (gain, excess) to the anchor; raises CalibrationDiverged on miss."""
    displacement = 0.0
    if target.power not in plan.powers or target.density not in plan.densities:
        raise CalibrationDiverged(
            f"anchor ({target.power}, {target.density}) is not on the sweep axes"
        )
    anchor = pipeline_gain_integrals(plan, target.power, target.density, displacement)
    others = [
        pipeline_gain_integrals(plan, p, n, displacement)
        for p in plan.powers
        for n in plan.densities
        if (p, n) != (target.power, target.density)
    ]
    eta_det = plan.noise.detection_efficiency

    def residuals(x):
        v_anchor = _noise_db(x, anchor, eta_det)
        res = [ANCHOR_WEIGHT * (v_anchor - target.noise_db)]
        for feats in others:
            gap = v_anchor - _noise_db(x, feats, eta_det) + MARGIN_DB
            res.append(MARGIN_WEIGHT * max(0.0, gap))
        return np.array(res)

    x0 = np.log([max(plan.noise.gain, 1e-6), max(plan.noise.excess, 1e-12)])
    sol = least_squares(residuals, x0, method="trf", xtol=1e-12)
    achieved = _noise_db(sol.x, anchor, eta_det)
    if abs(achieved - target.noise_db) > target.tolerance_db:
        raise CalibrationDiverged(
            f"anchor noise {achieved:.3f} dB misses target "
            f"{target.noise_db:.3f} dB by more than {target.tolerance_db} dB"
        )
    worst = min(
        _noise_db(sol.x, feats, eta_det) - achieved for feats in others
    )
    if worst < 0.0:
        raise CalibrationDiverged(
            f"anchor is not the sweep optimum (worst margin {worst:.3f} dB)"
        )
    g0, e0 = np.exp(sol.x)
    return replace(plan.noise, gain=float(g0), excess=float(e0))

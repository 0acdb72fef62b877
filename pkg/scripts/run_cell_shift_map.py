#!/usr/bin/env python3
"""Run the (cell displacement x pump power) squeezing map.

Moves the vapor cell along the beam axis around the pump focus and records
the detected minimum-quadrature noise at each (displacement, power) point.
The power that minimizes the noise grows as the cell moves away from the
focus, because the local intensity drops with distance from the waist.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from vortexsqueeze.config import RunConfig, apply_env_overrides, parse_config
from vortexsqueeze.sweep import plan_from_config, run_displacement_sweep


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", help="run-config file (INI sections)")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)

    cfg = parse_config(args.config) if args.config else RunConfig()
    cfg = apply_env_overrides(cfg)
    cfg.sweep.workers = args.workers
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    plan = plan_from_config(cfg)
    t0 = time.time()
    grid = run_displacement_sweep(plan)
    dt = time.time() - t0
    (out / "map_displacement.csv").write_text(grid.to_csv())
    (out / "map_displacement.provenance.json").write_text(grid.provenance())

    noise = grid.noise_db()
    print(f"displacement map done in {dt:.0f} s ({len(grid.failed)} failed cells)")
    for i, d in enumerate(plan.displacements):
        j = int(np.nanargmin(noise[i]))
        print(
            f"  d = {d * 1e2:+5.1f} cm: best {noise[i, j]:+.2f} dB "
            f"at {plan.powers[j] * 1e3:.1f} mW"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands: propagate, fit, oam, sweep, shift-sweep, calibrate.
Exit codes: 0 ok, 2 config error, 3 I/O error, 4 numeric failure,
5 calibration failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .beams import oam_spectrum, recenter
from .calibrate import CalibrationTarget, calibrate
from .config import (
    RunConfig,
    apply_env_overrides,
    config_hash,
    parse_config,
    serialize_config,
)
from .errors import (
    CalibrationDiverged,
    ConfigInvalid,
    CorruptFile,
    SimulationError,
    UnsupportedFormat,
)
from .fields import load_field, save_field
from .fitting import FitResult, fit_profile, ingest_image, render_image
from .sweep import (
    camera_snapshot,
    plan_from_config,
    run_displacement_sweep,
    run_power_density_sweep,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4
EXIT_CALIBRATION = 5

FIT_CSV_HEADER = "model,w_m,I0,x0_m,y0_m,residual,converged"


def _fit_csv(fit: FitResult) -> str:
    row = ",".join(
        [
            fit.model,
            repr(fit.w),
            repr(fit.i0),
            repr(fit.x0),
            repr(fit.y0),
            repr(fit.residual),
            "true" if fit.converged else "false",
        ]
    )
    return FIT_CSV_HEADER + "\n" + row + "\n"


def _load_config(args) -> RunConfig:
    cfg = parse_config(args.config) if args.config else RunConfig()
    cfg = apply_env_overrides(cfg)
    if getattr(args, "workers", None):
        cfg.sweep.workers = args.workers
    if getattr(args, "seed", None) is not None:
        cfg.sweep.seed = args.seed
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_propagate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    plan = plan_from_config(cfg)
    displacement = cfg.medium.cell_offset_cm * 1e-2
    camera, cell = camera_snapshot(
        plan, plan.pump.power, cfg.medium.density_per_cm3, displacement
    )
    save_field(camera, out / "camera.cf2d")
    render_image(camera, out / "camera.pgm")
    (out / "fit.csv").write_text(_fit_csv(cell.fit))
    print(
        f"camera waist {cell.fit.w * 1e3:.4f} mm, residual {cell.fit.residual:.2e}, "
        f"noise {cell.noise.min_quadrature_db:+.2f} dB"
    )
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    image = ingest_image(args.image, cfg.io.image_pitch_um * 1e-6)
    fit = fit_profile(image, args.model)
    (out / "fit.csv").write_text(_fit_csv(fit))
    print(f"{fit.model}: w = {fit.w * 1e3:.4f} mm, residual {fit.residual:.2e}")
    return EXIT_OK


def cmd_oam(args) -> int:
    out = _out_dir(args)
    f = recenter(load_field(args.field))
    spectrum = oam_spectrum(f, m_max=args.m_max)
    lines = ["m,fraction"]
    for m in sorted(spectrum.fractions):
        lines.append(f"{m},{spectrum.fractions[m]!r}")
    (out / "oam.csv").write_text("\n".join(lines) + "\n")
    print(f"<m> = {spectrum.mean:.4f}, out-of-band {spectrum.out_of_band:.3e}")
    return EXIT_OK


def _write_grid(grid, out: Path, stem: str) -> int:
    (out / f"{stem}.csv").write_text(grid.to_csv())
    (out / f"{stem}.provenance.json").write_text(grid.provenance())
    if grid.failed:
        lines = ["power_mW,density_per_cm3,displacement_cm,error"]
        for c in grid.failed:
            lines.append(
                f"{c.power * 1e3!r},{c.density!r},{c.displacement * 1e2!r},"
                f"\"{c.error}\""
            )
        (out / f"{stem}.errors.csv").write_text("\n".join(lines) + "\n")
        print(f"{len(grid.failed)} cells failed", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    plan = plan_from_config(cfg)
    grid = run_power_density_sweep(plan)
    return _write_grid(grid, out, "sweep_power_density")


def cmd_shift_sweep(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    plan = plan_from_config(cfg)
    grid = run_displacement_sweep(plan)
    return _write_grid(grid, out, "sweep_displacement")


def cmd_calibrate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    plan = plan_from_config(cfg)
    target = CalibrationTarget(
        noise_db=args.target_db,
        power=args.target_power_mw * 1e-3,
        density=args.target_density,
    )
    params = calibrate(plan, target)
    text = (
        "[noise]\n"
        f"gain = {params.gain!r}\n"
        f"excess = {params.excess!r}\n"
        f"detection_efficiency = {params.detection_efficiency!r}\n"
        f"analysis_frequency_mhz = {params.analysis_frequency / 1e6!r}\n"
        f"defocus_coupling = {cfg.noise.defocus_coupling!r}\n"
    )
    (out / "noise_calibrated.ini").write_text(text)
    print(f"gain = {params.gain:.6g}, excess = {params.excess:.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vortexsqueeze",
        description="Simulator of squeezed-vacuum generation with orbital "
        "angular momentum in hot Rb vapor.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="run-config file (INI sections)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--workers", type=int, help="worker-pool size override")
        p.add_argument("--seed", type=int, help="campaign seed override")

    p = sub.add_parser("propagate", help="run the optical train to the camera plane")
    common(p)
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("fit", help="fit a camera image to a profile model")
    common(p)
    p.add_argument("--image", required=True, help="PGM (P5) or CSV matrix image")
    p.add_argument(
        "--model", choices=["gaussian", "lg1"], default="gaussian", help="fit model"
    )
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("oam", help="azimuthal-harmonic spectrum of a stored field")
    common(p)
    p.add_argument("--field", required=True, help="CF2D field container path")
    p.add_argument("--m-max", type=int, default=16, help="reported harmonic band")
    p.set_defaults(func=cmd_oam)

    p = sub.add_parser("sweep", help="run the (power x density) campaign")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser(
        "shift-sweep", help="run the (cell displacement x power) campaign"
    )
    common(p)
    p.set_defaults(func=cmd_shift_sweep)

    p = sub.add_parser("calibrate", help="calibrate the noise-model coefficients")
    common(p)
    p.add_argument("--target-db", type=float, default=-1.8, help="anchor noise in dB")
    p.add_argument(
        "--target-power-mw", type=float, default=10.5, help="anchor pump power (mW)"
    )
    p.add_argument(
        "--target-density",
        type=float,
        default=2.7e12,
        help="anchor atomic density (cm^-3)",
    )
    p.set_defaults(func=cmd_calibrate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UnsupportedFormat, CorruptFile, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CalibrationDiverged as exc:
        print(f"calibration error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except SimulationError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

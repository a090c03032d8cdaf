"""Command-line front end.

    tripleslit profile --preset photon --method analytic --theta-deg -3:3:601
    tripleslit scan-d --preset photon --L-m 0.20 --d-range 0.02:1.0:40
    tripleslit compare --methods analytic,fraunhofer --L-m 5.56 --D-m 5.56
    tripleslit bound --preset electron --verify
    tripleslit presets

Exit codes: 0 success, 2 usage or validation error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .analytic import ThickSlitModel, effective_width, kappa_analytic, kappa_bound, thick_slit_profile
from .core import (
    PRESETS,
    THETA_MAX,
    DetectorGrid,
    Geometry,
    KappaProfile,
    QuadratureSpec,
    central_lobes_window,
    fresnel_number,
    preset,
    validate_geometry,
)
from .fraunhofer import kappa_numeric_profile
from .fresnel import ConvergenceError, RiemannGrid, kappa_central_vs_D, kappa_fresnel_profile
from .quadrature import QuadratureError

METHODS = ("analytic", "fraunhofer", "fresnel")
BOUND_GRID_POINTS = 2001

EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    argv: list
    geometry: dict
    methods: list
    settings: dict
    version: str = __version__
    wall_time_s: float = 0.0
    warnings: list = field(default_factory=list)


def parse_range(text: str, name: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"{name} must look like min:max:count, got {text!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"cannot parse {name} {text!r}") from None
    if count < 1:
        raise UsageError(f"{name} needs a positive count")
    if hi < lo or (hi == lo and count > 1):
        raise UsageError(f"{name} range must be increasing")
    return lo, hi, count


def read_config(path: str) -> list[str]:
    """Flat key=value file -> equivalent command-line tokens."""
    tokens = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "yes", "on"):
            tokens.append(flag)
        elif value.lower() in ("false", "no", "off"):
            continue
        else:
            tokens.extend([flag, value])
    return tokens


def _common(parser: argparse.ArgumentParser) -> None:
    geo = parser.add_argument_group("geometry (overrides the preset)")
    geo.add_argument("--preset", choices=PRESETS, default="photon")
    geo.add_argument("--w-um", type=float, help="slit width in micrometres")
    geo.add_argument("--d-um", type=float, help="centre-to-centre slit separation in micrometres")
    geo.add_argument("--lambda-nm", type=float, help="wavelength in nanometres")
    geo.add_argument("--L-m", "--L", dest="L_m", type=float, help="source-to-slit distance in metres")
    geo.add_argument("--D-m", "--D", dest="D_m", type=float, help="slit-to-screen distance in metres")
    geo.add_argument("--t-lambda", type=float, help="slit thickness in wavelengths")
    geo.add_argument("--height-um", type=float, help="slit height in micrometres")
    out = parser.add_argument_group("output and resolution")
    out.add_argument("--out", help="output path (CSV, or JSON with --format json)")
    out.add_argument("--format", choices=("csv", "json"), default="csv")
    out.add_argument("--quad-samples", type=int, help="quadrature nodes per oscillation")
    out.add_argument("--grid-ny", type=int, help="Riemann cells per slit across the width")
    out.add_argument("--grid-nz", type=int, help="Riemann cells per slit along the height")


def _theta_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--theta-deg", default="-3:3:601", help="detector angles min:max:count in degrees")
    parser.add_argument("--points", type=int, help="override the count of --theta-deg")
    parser.add_argument("--mode", choices=("full", "first_order"), default="full")
    parser.add_argument("--no-quadratic", action="store_true",
                        help="drop the y^2/2L, y^2/2D phases in the fraunhofer method")
    parser.add_argument("--thick", action="store_true", help="apply the lossy thick-slit correction")
    parser.add_argument("--n-imag", type=float, default=2.61)
    parser.add_argument("--n-real", type=float, default=2.29)
    parser.add_argument("--attenuation", type=float, default=0.30)
    parser.add_argument("--amplitude-factor", type=float, default=4.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tripleslit", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="flat key=value file mirroring the flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="kappa versus detector angle")
    _common(p)
    _theta_args(p)
    p.add_argument("--method", choices=METHODS, default="analytic")

    s = sub.add_parser("scan-d", help="|kappa| at the centre versus screen distance (fresnel)")
    _common(s)
    s.add_argument("--d-range", default="0.02:1.0:40", help="screen distances min:max:count in metres")

    c = sub.add_parser("compare", help="overlay several methods on one angle grid")
    _common(c)
    _theta_args(c)
    c.add_argument("--methods", default="analytic,fraunhofer", help="comma-separated method list")

    b = sub.add_parser("bound", help="closed-form magnitude bound")
    _common(b)
    b.add_argument("--verify", action="store_true",
                   help=f"check the bound against a {BOUND_GRID_POINTS}-point analytic sweep")

    sub.add_parser("presets", help="list the built-in parameter sets")
    return parser


def geometry_from(args) -> Geometry:
    g = preset(args.preset)
    lam = g.wavelength
    changes = {}
    if args.lambda_nm is not None:
        lam = args.lambda_nm * 1e-9
        changes["wavelength"] = lam
    if args.w_um is not None:
        changes["slit_width"] = args.w_um * 1e-6
    if args.d_um is not None:
        changes["slit_separation"] = args.d_um * 1e-6
    if args.L_m is not None:
        changes["source_distance"] = args.L_m
    if args.D_m is not None:
        changes["screen_distance"] = args.D_m
    if args.t_lambda is not None:
        changes["thickness"] = args.t_lambda * lam
    if args.height_um is not None:
        changes["slit_height"] = args.height_um * 1e-6
    g = replace(g, **changes)
    validate_geometry(g)
    return g


def _quadrature(args) -> QuadratureSpec:
    return QuadratureSpec(samples_per_oscillation=args.quad_samples) if args.quad_samples else QuadratureSpec()


def _riemann(args, g: Geometry) -> RiemannGrid:
    default = RiemannGrid.for_geometry(g)
    return RiemannGrid(args.grid_ny or default.n_y, args.grid_nz or default.n_z)


def _detector_grid(args) -> DetectorGrid:
    lo, hi, count = parse_range(args.theta_deg, "--theta-deg")
    if args.points is not None:
        count = args.points
    if count < 1:
        raise UsageError("the detector grid needs at least one point")
    if max(abs(lo), abs(hi)) > math.degrees(THETA_MAX):
        raise UsageError(f"|theta| is limited to {math.degrees(THETA_MAX):.4g} degrees")
    return DetectorGrid.from_degrees(lo, hi, count)


def _thick_model(args) -> ThickSlitModel:
    return ThickSlitModel(n_imag=args.n_imag, n_real=args.n_real,
                          attenuation_threshold=args.attenuation, amplitude_factor=args.amplitude_factor)


def run_method(method: str, g: Geometry, grid: DetectorGrid, args) -> KappaProfile:
    if method == "analytic":
        if args.thick:
            return thick_slit_profile(g, _thick_model(args), grid)
        return kappa_analytic(g, grid)
    if method == "fraunhofer":
        target = g
        factor = 1.0
        if args.thick:
            model = _thick_model(args)
            target = replace(g, slit_width=effective_width(g.slit_width, g.wavelength, model))
            factor = model.amplitude_factor
        prof = kappa_numeric_profile(target, grid, _quadrature(args), args.mode,
                                     keep_quadratic=not args.no_quadratic)
        if factor != 1.0:
            prof = replace(prof, kappa=factor * prof.values,
                           metadata={**prof.metadata, "effective_width": target.slit_width,
                                     "amplitude_factor": factor})
        return prof
    if method == "fresnel":
        if args.thick:
            raise UsageError("--thick is not available for the fresnel method")
        return kappa_fresnel_profile(g, grid, _riemann(args, g))
    raise UsageError(f"unknown method {method!r}")


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_csv(header: Sequence[str], columns: Sequence[Sequence[float]]) -> str:
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(format(float(v), ".17g") for v in row))
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "__dataclass_fields__"):
        return _jsonable(asdict(obj))
    return obj


def emit(args, manifest: RunManifest, header, columns, default_name: str, extra: Optional[dict] = None):
    out = Path(args.out or default_name)
    manifest.wall_time_s = time.perf_counter() - args.started
    manifest.warnings = list(dict.fromkeys(str(w.message) for w in args.caught))
    record = _jsonable(asdict(manifest))
    if extra:
        record["results"] = _jsonable(extra)
    if args.format == "json":
        payload = {"manifest": record, "columns": list(header),
                   "rows": [[float(v) for v in row] for row in zip(*columns)]}
        _atomic_write(out, json.dumps(payload, indent=2) + "\n")
        return [out]
    sidecar = out.with_suffix(".json") if out.suffix != ".json" else out.with_name(out.name + ".manifest.json")
    _atomic_write(out, format_csv(header, columns))
    _atomic_write(sidecar, json.dumps(record, indent=2) + "\n")
    return [out, sidecar]


def _manifest(args, argv, g, methods, settings) -> RunManifest:
    return RunManifest(command=args.command, argv=list(argv), geometry=g.to_dict(),
                       methods=list(methods), settings=settings)


def _angle_settings(args, grid: DetectorGrid) -> dict:
    return {"theta_deg": [float(np.degrees(grid.theta[0])), float(np.degrees(grid.theta[-1])), len(grid)],
            "mode": args.mode, "keep_quadratic": not args.no_quadratic, "thick": args.thick,
            "quadrature": asdict(_quadrature(args))}


def cmd_profile(args, argv) -> int:
    g = geometry_from(args)
    grid = _detector_grid(args)
    prof = run_method(args.method, g, grid, args)
    settings = _angle_settings(args, grid)
    if args.method == "fresnel":
        settings["riemann"] = asdict(prof.quadrature)
    manifest = _manifest(args, argv, g, [args.method], settings)
    manifest.settings["metadata"] = _jsonable(prof.metadata)
    files = emit(args, manifest, ("theta_deg", "kappa"), (prof.abscissa, prof.kappa),
                 f"profile_{args.method}.csv")
    print(f"wrote {', '.join(map(str, files))}")
    return 0


def cmd_scan_d(args, argv) -> int:
    g = geometry_from(args)
    lo, hi, count = parse_range(args.d_range, "--d-range")
    if lo <= 0:
        raise UsageError("screen distances must be positive")
    D_values = np.linspace(lo, hi, count)
    grid = _riemann(args, g)
    prof = kappa_central_vs_D(g, D_values, grid)
    manifest = _manifest(args, argv, g, ["fresnel"],
                         {"d_range": [lo, hi, count], "riemann": asdict(grid)})
    manifest.settings["metadata"] = _jsonable(prof.metadata)
    files = emit(args, manifest, ("D_m", "abs_kappa"), (prof.abscissa, prof.kappa), "scan_d.csv")
    print(f"wrote {', '.join(map(str, files))}")
    return 0


def compare_summary(theta: np.ndarray, profiles: dict, reference: str) -> dict:
    """Deviation of every method from ``reference``.

    The pointwise deviation is |kappa_m - kappa_ref| / max|kappa_ref| over
    the central three lobes of the reference curve.
    """
    ref = profiles[reference]
    window = central_lobes_window(theta, ref)
    inside = np.abs(theta) <= window + 1e-15
    peak = np.max(np.abs(ref[inside]))
    i0 = int(np.argmin(np.abs(theta)))
    summary = {"reference": reference, "central_theta_deg": float(np.degrees(theta[i0])),
               "central_window_deg": float(np.degrees(window)), "methods": {}}
    for name, values in profiles.items():
        if name == reference:
            continue
        summary["methods"][name] = {
            "central_deviation": float(abs(values[i0] - ref[i0]) / abs(ref[i0])),
            "max_deviation_central_lobes": float(np.max(np.abs(values[inside] - ref[inside])) / peak),
        }
    return summary


def cmd_compare(args, argv) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if len(methods) < 2:
        raise UsageError("compare needs at least two methods")
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}")
    if len(set(methods)) != len(methods):
        raise UsageError("methods must be distinct")
    g = geometry_from(args)
    grid = _detector_grid(args)
    profiles = {m: run_method(m, g, grid, args).values for m in methods}
    summary = compare_summary(grid.theta, profiles, methods[0])
    summary["fresnel_number"] = fresnel_number(g)
    manifest = _manifest(args, argv, g, methods, _angle_settings(args, grid))
    header = ["theta_deg"] + [f"kappa_{m}" for m in methods]
    columns = [grid.display()] + [profiles[m] for m in methods]
    files = emit(args, manifest, header, columns, "compare.csv", extra=summary)
    print(f"Fresnel number: {summary['fresnel_number']:.4g}")
    for name, stats in summary["methods"].items():
        print(f"{name} vs {methods[0]}: central deviation {100 * stats['central_deviation']:.2f}% "
              f"(theta = {summary['central_theta_deg']:.4g} deg), max deviation over central lobes "
              f"{100 * stats['max_deviation_central_lobes']:.2f}% of peak "
              f"(|theta| <= {summary['central_window_deg']:.4g} deg)")
    print(f"wrote {', '.join(map(str, files))}")
    return 0


def cmd_bound(args, argv) -> int:
    g = geometry_from(args)
    bound = kappa_bound(g)
    print(f"bound {bound:.6g}")
    if args.verify:
        grid = DetectorGrid.linspace(-THETA_MAX, THETA_MAX, BOUND_GRID_POINTS)
        peak = float(np.max(np.abs(kappa_analytic(g, grid).values)))
        verdict = "PASS" if peak <= bound else "FAIL"
        print(f"max |kappa| {peak:.6g} over {BOUND_GRID_POINTS} points, |theta| <= {THETA_MAX} rad")
        print(verdict)
    return 0


def cmd_presets(args, argv) -> int:
    listing = {name: preset(name).to_dict() for name in PRESETS}
    print(json.dumps(listing, indent=2))
    return 0


COMMANDS = {"profile": cmd_profile, "scan-d": cmd_scan_d, "compare": cmd_compare,
            "bound": cmd_bound, "presets": cmd_presets}


def _expand_config(argv: list[str]) -> list[str]:
    """Splice tokens from ``--config FILE`` in front of the subcommand's own
    flags so explicit flags win."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise UsageError("--config needs a path")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2:]
    tokens = read_config(path)
    for j, tok in enumerate(rest):
        if tok in COMMANDS:
            return rest[: j + 1] + tokens + rest[j + 1:]
    raise UsageError("no subcommand given")


RANGE_FLAGS = ("--theta-deg", "--d-range")


def _attach_ranges(argv: list[str]) -> list[str]:
    """Rewrite ``--theta-deg -3:3:601`` as ``--theta-deg=-3:3:601`` so a
    leading minus sign is not mistaken for an option."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] in RANGE_FLAGS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        expanded = _expand_config(argv)
    except (UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(_attach_ranges(expanded))
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        args.started, args.caught = start, caught
        try:
            code = COMMANDS[args.command](args, argv)
        except (QuadratureError, ConvergenceError) as exc:
            print(f"numeric error: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        except (UsageError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    for message in dict.fromkeys(str(w.message) for w in caught):
        print(f"warning: {message}", file=sys.stderr)
    print(f"done in {time.perf_counter() - start:.2f} s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())

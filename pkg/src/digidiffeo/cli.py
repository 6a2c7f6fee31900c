"""Command-line entry point.

Subcommands::

    digidiffeo check   FIELD [--mask M]                 exit 0 diffeomorphic, 2 not, 1 error
    digidiffeo analyze FIELD [--mask M] [-o REPORT] [--format json|csv] [--severity-map OUT]
    digidiffeo map     FIELD --variant {--,+-,...,central,star1,star2,severity} -o OUT
    digidiffeo synth   --kind KIND --dims 5,5 [kind options] -o OUT

``check`` and ``analyze`` print one line of space-separated ``key=value``
pairs on stdout.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import synth as synth_mod
from .errors import DiffeoError
from .grid import GridDims
from .jacobian import Variant, jacobian_map
from .metrics import DiffeoReport, analyze
from .volume_io import read_field, read_mask, write_field, write_map, write_report

DEFAULT_SEED = 0
EXIT_OK, EXIT_ERROR, EXIT_NOT_DIFFEO = 0, 1, 2


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def summary_line(report: DiffeoReport) -> str:
    m = report.measure_name
    fv = report.first_violation
    pairs = [
        ("measure", m),
        ("total_points", report.total_points),
        ("central_nonpositive", report.central_nonpositive_count),
        ("central_pct", report.central_nonpositive_pct),
        ("any_nonpositive", report.any_nonpositive_count),
        ("any_pct", report.any_nonpositive_pct),
        (m, report.nd_measure),
        (f"{m}_physical", report.nd_measure_physical),
        (f"{m}_pct", report.nd_measure_pct),
        ("digital_diffeomorphism", report.is_digital_diffeomorphism),
    ]
    if fv is not None:
        pairs += [("first_point", fv.point), ("first_variant", fv.variant.name), ("first_value", fv.value)]
    return " ".join(f"{k}={_fmt(v)}" for k, v in pairs)


def parse_summary(line: str) -> dict[str, str]:
    return dict(item.split("=", 1) for item in line.split())


def _load(args):
    field = read_field(args.input, layout=args.layout, units=args.units)
    mask = read_mask(args.mask, field.dims) if getattr(args, "mask", None) else None
    return field, mask


def cmd_check(args) -> int:
    field, mask = _load(args)
    report, _ = analyze(field, mask, threads=args.threads, source=str(args.input))
    fv = report.first_violation
    pairs = [("digital_diffeomorphism", report.is_digital_diffeomorphism)]
    if fv is not None:
        pairs += [("first_point", fv.point), ("first_variant", fv.variant.name), ("first_value", fv.value)]
    print(" ".join(f"{k}={_fmt(v)}" for k, v in pairs))
    return EXIT_OK if report.is_digital_diffeomorphism else EXIT_NOT_DIFFEO


def cmd_analyze(args) -> int:
    field, mask = _load(args)
    report, severity = analyze(field, mask, threads=args.threads, source=Path(args.input).name)
    if args.output:
        write_report(report, args.output, args.format)
    if args.severity_map:
        write_map(severity, args.severity_map)
    print(summary_line(report))
    return EXIT_OK


def cmd_map(args) -> int:
    field, _ = _load(args)
    if args.variant == "severity":
        _, smap = analyze(field, threads=args.threads)
    else:
        smap = jacobian_map(field, Variant.parse(args.variant), threads=args.threads)
    write_map(smap, args.output)
    return EXIT_OK


def cmd_synth(args) -> int:
    dims = GridDims(args.dims, args.spacing or ())
    kind = args.kind.replace("-", "_")
    matrix = None
    if args.matrix:
        vals = args.matrix
        r = dims.rank
        if len(vals) != r * r:
            raise ValueError(f"--matrix needs {r * r} comma-separated values (row-major)")
        matrix = tuple(tuple(vals[i * r : (i + 1) * r]) for i in range(r))
    spec = synth_mod.SynthSpec(
        kind=kind,
        dims=dims,
        scale=args.scale,
        matrix=matrix,
        axis=args.axis,
        point=args.point,
        disp=args.disp,
        seed=args.seed,
        amplitude=args.amplitude,
        radius=args.radius,
    )
    write_field(synth_mod.generate(spec), args.output)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1; 2 is reserved for "not a digital diffeomorphism"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="digidiffeo", description="Digital diffeomorphism analysis of displacement fields.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_input(p, with_mask=True):
        p.add_argument("input", help="displacement field (.nii, .nii.gz or .npy)")
        if with_mask:
            p.add_argument("--mask", help="mask volume restricting the statistics")
        p.add_argument("--units", choices=("voxel", "physical"), default="voxel",
                       help="unit of the stored displacements (physical values are divided by the spacing)")
        p.add_argument("--layout", choices=("auto", "dim5", "dim4"), default="auto",
                       help="NIfTI axis holding the vector components")
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("check", help="digital diffeomorphism verdict")
    add_input(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("analyze", help="counts, NDA/NDV and percentages")
    add_input(p)
    p.add_argument("-o", "--output", help="report file")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--severity-map", help="write the per-point NDA/NDV contribution map here")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("map", help="write a determinant or severity map")
    add_input(p, with_mask=False)
    p.add_argument("--variant", required=True,
                   help="sign pattern such as -+ or +-+, or central, star1, star2, severity")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("synth", help="generate a synthetic field")
    p.add_argument("--kind", required=True,
                   choices=[k.replace("_", "-") for k in synth_mod.KINDS] + list(synth_mod.KINDS))
    p.add_argument("--dims", type=_ints, required=True, help="grid extents, e.g. 5,5 or 4,4,4")
    p.add_argument("--spacing", type=_floats)
    p.add_argument("--scale", type=float, default=1.0, help="uniform-scale factor")
    p.add_argument("--matrix", type=_floats, help="linear map, row-major")
    p.add_argument("--axis", type=int, default=0, help="reflection axis")
    p.add_argument("--point", type=_ints, help="single-point location")
    p.add_argument("--disp", type=_floats, help="single-point displacement")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--amplitude", type=float, default=0.1)
    p.add_argument("--radius", type=int, default=0, help="box smoothing radius")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except (DiffeoError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Exit status: 0 success, 1 runtime or I/O failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import io
from .campaign import (
    CampaignManifest,
    ManifestError,
    analyze_aggregates,
    compare_aggregates,
    load_manifest,
    process_campaign,
    simulate_campaign,
)

log = logging.getLogger("bladepressure")

OUT_ENV = "BLADEPRESSURE_OUT"


def _out_dir(args, default_name: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get(OUT_ENV, ".")) / default_name


def cmd_simulate(args) -> int:
    if args.manifest:
        manifest = load_manifest(args.manifest)
    else:
        manifest = CampaignManifest()
    if args.seed is not None:
        manifest.seed = args.seed
    out = _out_dir(args, "simulated")
    index = simulate_campaign(manifest, out)
    print(index)
    return 0


def cmd_process(args) -> int:
    out = _out_dir(args, "processed")
    result = process_campaign(args.input, out, alpha=args.alpha)
    if result.calibration is not None:
        print(f"alpha={result.calibration.alpha:.6f} reference_aoa={result.calibration.reference_aoa:g}")
    if result.errors:
        for run_id, msg in sorted(result.errors.items()):
            print(f"run {run_id} failed: {msg}", file=sys.stderr)
        return 1
    return 0


def cmd_analyze(args) -> int:
    summary = analyze_aggregates(args.input, _out_dir(args, "analysis"),
                                 k=args.k, attached_max=args.attached_max)
    for note in summary["notes"]:
        print(note)
    return 0


def cmd_compare(args) -> int:
    if len(args.input) != 2:
        raise ManifestError("input", "compare takes exactly two aggregates files")
    report = compare_aggregates(args.input[0], args.input[1], args.out, args.max_distance)
    print(",".join(io.COMPARISON_HEADER))
    for r in report.rows:
        print(f"{r.station_xc:g},{r.mean_error_pct:.3f},{r.std_error_pct:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV}/<command> or ./<command>)")
    common.add_argument("--seed", type=int, help="override the manifest seed")
    common.add_argument("--alpha", type=float, help="use this calibration coefficient instead of fitting it")
    common.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = argparse.ArgumentParser(prog="bladepressure", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate a measurement campaign")
    p.add_argument("--manifest", help="campaign manifest (JSON); defaults apply when omitted")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("process", parents=[common], help="run the normalization pipeline")
    p.add_argument("--input", "--manifest", dest="input", required=True, help="run_index.json")
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("analyze", parents=[common], help="separation, comparison and impact reports")
    p.add_argument("--input", required=True, help="aggregates.csv")
    p.add_argument("--k", type=float, default=3.0, help="IQR multiplier of the onset threshold")
    p.add_argument("--attached-max", type=float, default=8.0, help="upper AoA of the attached window")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", parents=[common], help="MEMS-vs-scanner error report")
    p.add_argument("--input", action="append", required=True, help="aggregates.csv (give twice)")
    p.add_argument("--max-distance", type=float, default=0.05, help="pairing distance in chord fractions")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ManifestError, io.FormatError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: generate, place, check, eval, score, plot.

Exit codes for ``place``: 0 legal, 1 input/parse error, 2 legalization
infeasibility, 3 legal but rolled back from a divergence checkpoint.
Every ``place`` exit path writes a JSON run manifest next to the output.
All randomness flows from --seed; environment variables are never read.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time

from .bench_gen import PROFILES, generate_benchmark
from .fileio import (
    ParseError,
    parse_design,
    parse_layout,
    parse_metrics,
    parse_placement,
    write_design,
    write_layout,
    write_placement,
)
from .gplace import GpConfig, GpTrace, run_global_placement
from .legality import check_legality
from .legalize import InfeasibleLegalizationError, LegalizeReport, legalize
from .model import (
    Design,
    FpgaLayout,
    InfeasibleRegionError,
    Placement,
    ValidationError,
    merge_cascades,
)
from .scoring import HIDDEN_WEIGHT, score_table
from .svgplot import write_svg
from .wirelength import build_topology, hpwl


@dataclasses.dataclass
class RunManifest:
    inputs: dict
    seed: int
    config_overrides: dict
    t_mp_minutes: float
    outputs: dict
    exit_status: int
    rolled_back: bool = False

    def write(self, path: str) -> None:
        tmp = path + ".tmp"
        with open(tmp, "w") as f:
            json.dump(dataclasses.asdict(self), f, indent=1, sort_keys=True)
            f.write("\n")
        os.replace(tmp, path)


@dataclasses.dataclass
class PlaceResult:
    merged: Design
    trace: GpTrace
    placement: Placement
    lg_report: LegalizeReport
    gp_hpwl: float
    final_hpwl: float


def place_pipeline(layout: FpgaLayout, design: Design, config: GpConfig) -> PlaceResult:
    """merge -> global placement -> 3-phase legalization -> expansion."""
    merged = merge_cascades(design)
    state, trace = run_global_placement(layout, merged, config)
    top = build_topology(merged)
    gp_hpwl, _ = hpwl(merged, state, top)
    placement, lg_report = legalize(layout, merged, state.positions, top)
    final_hpwl, _ = hpwl(design, placement.positions)
    return PlaceResult(merged, trace, placement, lg_report, gp_hpwl, final_hpwl)


def _read(path: str) -> str:
    with open(path) as f:
        return f.read()


def _load_config(args) -> tuple[GpConfig, dict]:
    overrides = {}
    if getattr(args, "config", None):
        with open(args.config) as f:
            overrides = json.load(f)
    return GpConfig(seed=args.seed, **overrides), overrides


def cmd_place(args) -> int:
    t0 = time.perf_counter()
    manifest_path = args.out + ".manifest.json"
    inputs = {"layout": args.layout, "design": args.design}
    outputs = {"placement": args.out}
    overrides = {}
    rolled_back = False

    def finish(status: int) -> int:
        minutes = round((time.perf_counter() - t0) / 60.0, 3)
        RunManifest(
            inputs=inputs,
            seed=args.seed,
            config_overrides=overrides,
            t_mp_minutes=minutes,
            outputs=outputs,
            exit_status=status,
            rolled_back=rolled_back,
        ).write(manifest_path)
        return status

    try:
        layout = parse_layout(_read(args.layout))
        design = parse_design(_read(args.design), layout)
        config, overrides = _load_config(args)
    except (ParseError, ValidationError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return finish(1)

    try:
        result = place_pipeline(layout, design, config)
    except (InfeasibleLegalizationError, InfeasibleRegionError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return finish(2)

    rolled_back = result.trace.rolled_back
    with open(args.out, "w") as f:
        f.write(write_placement(result.placement))
    if args.trace:
        outputs["trace"] = args.trace
        with open(args.trace, "w") as f:
            f.write("\n".join(result.trace.csv_lines()) + "\n")
            f.write("# legalization\n")
            f.write("\n".join(result.lg_report.lines()) + "\n")
    if args.plot:
        outputs["plot"] = args.plot
        with open(args.plot, "w") as f:
            f.write(write_svg(layout, design, result.placement.positions))

    report = check_legality(layout, design, result.placement.positions)
    if not report.ok:
        for line in report.lines():
            print(line, file=sys.stderr)
        return finish(2)
    print(
        f"placed {len(result.placement.positions)} instances; "
        f"gp_hpwl={result.gp_hpwl:.6g} final_hpwl={result.final_hpwl:.6g}"
        + (" (rolled back)" if rolled_back else "")
    )
    return finish(3 if rolled_back else 0)


def cmd_check(args) -> int:
    try:
        layout = parse_layout(_read(args.layout))
        design = parse_design(_read(args.design), layout)
        placement = parse_placement(_read(args.placement), design)
    except (ParseError, ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = check_legality(layout, design, placement.positions)
    for line in report.lines():
        print(line)
    return 0 if report.ok else 1


def cmd_eval(args) -> int:
    try:
        layout = parse_layout(_read(args.layout))
        design = parse_design(_read(args.design), layout)
        placement = parse_placement(_read(args.placement), design)
        total, per_net = hpwl(design, placement.positions)
    except (ParseError, ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for net, value in zip(design.nets, per_net):
        print(f"NET {net.name} {float(value)!r}")
    print(f"TOTAL {total!r}")
    return 0


def cmd_score(args) -> int:
    try:
        records = []
        for path in args.metrics:
            records.extend(parse_metrics(_read(path)))
        table = score_table(records, hidden_weight=args.hidden_weight)
    except (ParseError, ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(table, end="")
    if args.out:
        with open(args.out, "w") as f:
            f.write(table)
    return 0


def cmd_generate(args) -> int:
    try:
        layout, design = generate_benchmark(args.seed, args.profile)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    with open(args.out_layout, "w") as f:
        f.write(write_layout(layout))
    with open(args.out_design, "w") as f:
        f.write(write_design(design))
    print(f"generated {design.name}: {len(design.instances)} instances, "
          f"{len(design.nets)} nets, {len(design.shapes)} shapes, {len(design.regions)} regions")
    return 0


def cmd_plot(args) -> int:
    try:
        layout = parse_layout(_read(args.layout))
        design = parse_design(_read(args.design), layout)
        placement = parse_placement(_read(args.placement), design)
    except (ParseError, ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    with open(args.out, "w") as f:
        f.write(write_svg(layout, design, placement.positions))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="macroplace", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("place", help="merge, globally place, legalize, write placement")
    p.add_argument("--layout", required=True)
    p.add_argument("--design", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="JSON file of placement config overrides")
    p.add_argument("--trace", help="write per-iteration trace CSV here")
    p.add_argument("--plot", help="write an SVG of the result here")
    p.set_defaults(func=cmd_place)

    p = sub.add_parser("check", help="verify legality of a placement file")
    p.add_argument("--layout", required=True)
    p.add_argument("--design", required=True)
    p.add_argument("--placement", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("eval", help="report HPWL of a placement file")
    p.add_argument("--layout", required=True)
    p.add_argument("--design", required=True)
    p.add_argument("--placement", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("score", help="contest scoring from metrics files")
    p.add_argument("--metrics", nargs="+", required=True)
    p.add_argument("--hidden-weight", type=float, default=HIDDEN_WEIGHT)
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("generate", help="write a synthetic benchmark")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--profile", choices=PROFILES, required=True)
    p.add_argument("--out-layout", required=True)
    p.add_argument("--out-design", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("plot", help="render layout + placement to SVG")
    p.add_argument("--layout", required=True)
    p.add_argument("--design", required=True)
    p.add_argument("--placement", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

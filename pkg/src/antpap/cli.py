"""Command-line front end: ``antpap run|sweep|verify|export-image``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from .export import export_image, summary, write_run_outputs
from .presets import (
    PRESETS,
    ConfigError,
    aggregate,
    build_graph,
    get_preset,
    load_run_config,
    run_cell,
)
from .scheduler import PRNG_ID, init_world, run


def _fail(errors: list[str]) -> int:
    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    return 2


def cmd_run(args: argparse.Namespace) -> int:
    try:
        spec = load_run_config(args.config)
        if args.full_resolution:
            spec.config.sample_interval = 1
        graph = build_graph(spec.graph, Path(args.config).parent)
        if spec.k > graph.vertex_count:
            raise ConfigError([f"k: {spec.k} agents exceed the {graph.vertex_count} vertices"])
        world = init_world(graph, spec.k, spec.config)
    except ConfigError as exc:
        return _fail(exc.errors)
    except (OSError, ValueError) as exc:
        return _fail([str(exc)])
    meta = {"preset": Path(args.config).stem, "seed": spec.config.seed, "graph": spec.graph}
    trace = run(world, post_convergence=args.post_convergence, metadata=meta)
    out = Path(args.out)
    stem = args.stem or Path(args.config).stem
    paths = write_run_outputs(trace, out, stem)
    result = summary(trace)
    result.pop("meta")
    result["files"] = {k: str(p) for k, p in paths.items()}
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def _write_table(path: Path, rows: list[dict], meta: dict) -> None:
    with path.open("w", newline="") as fh:
        for key in sorted(meta):
            fh.write(f"# {key}: {json.dumps(meta[key], sort_keys=True)}\n")
        if not rows:
            return
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        preset = get_preset(args.preset)
        if args.seeds is not None:
            preset.seeds = preset.seeds[: args.seeds]
        if not preset.cells():
            raise ConfigError(["preset: no cells to run (empty values or seeds)"])
        preset.cell_spec(*preset.cells()[0])
    except ConfigError as exc:
        return _fail(exc.errors)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cells = []
    for value, seed in preset.cells():
        cell, trace = run_cell(preset, value, seed)
        cells.append(cell)
        if not args.quiet:
            print(f"{preset.parameter}={value} seed={seed}: {cell.status} t_converged={cell.t_converged}",
                  file=sys.stderr)
    meta = {"tool": "antpap", "version": __version__, "prng": PRNG_ID, "preset": preset.to_dict()}
    rows = aggregate(cells)
    _write_table(out / f"{preset.name}_cells.csv", [c.to_row() for c in cells], meta)
    _write_table(out / f"{preset.name}_aggregate.csv", rows, meta)
    for r in rows:
        print(f"{preset.parameter}={r['value']}: converged {r['converged']}/{r['runs']}, "
              f"median {r['median_t_converged']}, mean {r['mean_t_converged']}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    from .verify import CHECKS, run_checks

    names = args.check or list(CHECKS)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        return _fail([f"unknown check {n!r} (known: {', '.join(CHECKS)})" for n in unknown])
    results = run_checks(names, variant=args.stagnation_variant, quick=args.quick, echo=print)
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed" +
          (f"; failed: {', '.join(failed)}" if failed else ""))
    if args.report:
        report = [{"name": r.name, "passed": r.passed, "measured": r.measured,
                   "tolerance": r.tolerance, "seconds": r.seconds} for r in results]
        Path(args.report).write_text(json.dumps(
            {"version": __version__, "prng": PRNG_ID, "quick": args.quick,
             "stagnation_variant": args.stagnation_variant, "checks": report}, indent=2) + "\n")
    return 1 if failed else 0


def cmd_export_image(args: argparse.Namespace) -> int:
    try:
        export_image(args.snapshot, args.out, args.cell)
    except (OSError, ValueError, KeyError) as exc:
        return _fail([str(exc)])
    print(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="antpap", description=__doc__)
    parser.add_argument("--version", action="version", version=f"antpap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one simulation from a JSON config")
    p.add_argument("--config", required=True, help="JSON file with graph, k and run parameters")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--stem", help="file name prefix (default: config file name)")
    p.add_argument("--post-convergence", type=int, default=0,
                   help="extra slots to run after convergence is detected")
    p.add_argument("--full-resolution", action="store_true", help="sample metrics every slot")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a preset over its parameter values and seeds")
    p.add_argument("--preset", required=True, help=f"preset name ({', '.join(PRESETS)}) or JSON file")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seeds", type=int, help="use only the first N seeds")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--check", action="append", help="run only this check (repeatable)")
    p.add_argument("--quick", action="store_true", help="reduced workloads; smoke test only")
    p.add_argument("--stagnation-variant", default="prose", choices=["prose", "pseudocode"])
    p.add_argument("--report", help="also write a JSON report here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export-image", help="render a snapshot as a PPM image")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cell", type=int, default=4, help="pixels per lattice cell")
    p.set_defaults(func=cmd_export_image)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

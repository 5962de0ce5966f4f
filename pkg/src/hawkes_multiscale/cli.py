"""Command-line front end.

Subcommands mirror the pipeline stages: ``simulate``, ``classify``, ``claw``,
``solve``, ``analyze``, and ``pipeline`` (all stages in one run).  For the
``pipeline`` subcommand a JSON config file can be passed with ``--config``;
fields present in the file override the corresponding flags.  Exit codes: 0 on
success, otherwise the failing error class's code (see ``errors``).
"""
from __future__ import annotations

import argparse
import sys

from ._io import read_json
from .errors import HawkesError


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hawkes-multiscale",
        description="Hawkes process simulation, kernel estimation and causality analytics",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate an event stream from a model file")
    sim.add_argument("--model", required=True)
    sim.add_argument("--horizon", type=float, required=True)
    sim.add_argument("--seed", type=int, default=1)
    sim.add_argument("--simulator", choices=["branching", "thinning"], default="branching")
    sim.add_argument("--warmup", type=float, default=None)
    sim.add_argument("--out", required=True)
    sim.add_argument("--binary", action="store_true", help="write the columnar binary format")

    cls = sub.add_parser("classify", help="classify book updates into the 8 event types")
    cls.add_argument("--book", required=True, help="TSV of level-one updates")
    cls.add_argument("--out", required=True)
    cls.add_argument("--horizon", type=float, default=None)

    clw = sub.add_parser("claw", help="estimate conditional laws from an event file")
    clw.add_argument("--events", required=True)
    clw.add_argument("--h-min", type=float, default=1e-3)
    clw.add_argument("--h-max", type=float, default=1000.0)
    clw.add_argument("--h-delta", type=float, default=0.05)
    clw.add_argument("--out", required=True)

    slv = sub.add_parser("solve", help="invert the conditional laws for the kernels")
    slv.add_argument("--claw", required=True)
    slv.add_argument("--scheme", choices=["adapted", "gauss-logcv"], default="adapted")
    slv.add_argument("--points", type=int, default=200)
    slv.add_argument("--t-min", type=float, default=1e-3)
    slv.add_argument("--t-max", type=float, default=2000.0)
    slv.add_argument("--out", required=True)

    ana = sub.add_parser("analyze", help="causality report from a kernel estimate")
    ana.add_argument("--estimate", required=True)
    ana.add_argument("--pairing", default=None, help="'book' or comma-separated indices")
    ana.add_argument("--out-dir", required=True)
    ana.add_argument("--emit-plots", action="store_true")

    pipe = sub.add_parser("pipeline", help="run all stages end to end")
    pipe.add_argument("--config", default=None, help="JSON config; overrides flags")
    pipe.add_argument("--model", default=None)
    pipe.add_argument("--events", default=None)
    pipe.add_argument("--out-dir", default="out")
    pipe.add_argument("--horizon", type=float, default=1.0e6)
    pipe.add_argument("--seed", type=int, default=1)
    pipe.add_argument("--simulator", choices=["branching", "thinning"], default="branching")
    pipe.add_argument("--h-min", type=float, default=1e-3)
    pipe.add_argument("--h-max", type=float, default=1000.0)
    pipe.add_argument("--h-delta", type=float, default=0.05)
    pipe.add_argument("--points", type=int, default=200)
    pipe.add_argument("--t-min", type=float, default=1e-3)
    pipe.add_argument("--t-max", type=float, default=2000.0)
    pipe.add_argument("--scheme", choices=["adapted", "gauss-logcv"], default="adapted")
    pipe.add_argument("--pairing", default=None)
    pipe.add_argument("--emit-plots", action="store_true")
    pipe.add_argument("--binary-events", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except HawkesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 7


def _dispatch(args) -> int:
    if args.command == "simulate":
        from .events import write_events, write_events_binary
        from .model import read_model
        from .simulate import simulate_branching, simulate_thinning

        model = read_model(args.model)
        if args.simulator == "thinning":
            stream = simulate_thinning(model, args.horizon, args.seed)
        else:
            stream = simulate_branching(model, args.horizon, args.seed, warmup=args.warmup)
        (write_events_binary if args.binary else write_events)(stream, args.out)
        print(f"wrote {stream.total} events to {args.out}")
        return 0

    if args.command == "classify":
        from .book import classify_book_events, read_book_updates
        from .events import write_events

        updates = read_book_updates(args.book)
        stream, stats = classify_book_events(updates, horizon=args.horizon)
        write_events(stream, args.out)
        print(
            f"classified {stats.total_emitted} events "
            f"({stats.total_dropped} dropped: {stats.dropped}) -> {args.out}"
        )
        return 0

    if args.command == "claw":
        from .pipeline import stage_claw

        claw = stage_claw(args.events, args.h_min, args.h_max, args.h_delta, args.out)
        print(f"estimated {claw.dimension}x{claw.dimension} conditional laws -> {args.out}")
        return 0

    if args.command == "solve":
        from .pipeline import stage_solve

        est = stage_solve(args.claw, args.scheme, args.points, args.t_min, args.t_max, args.out)
        print(
            f"solved kernels ({est.scheme}), condition estimate "
            f"{est.diagnostics.get('condition_estimate', float('nan')):.3g} -> {args.out}"
        )
        return 0

    if args.command == "analyze":
        from .analytics import build_report, write_report
        from .pipeline import resolve_pairing, write_plot_files
        from .solver import read_estimate

        est = read_estimate(args.estimate)
        report = build_report(est, pairing=resolve_pairing(args.pairing, est.dimension))
        paths = write_report(report, args.out_dir)
        if args.emit_plots:
            import os

            write_plot_files(est, None, os.path.join(args.out_dir, "plots"))
        print(f"report written to {paths['report']}")
        return 0

    if args.command == "pipeline":
        from .pipeline import PipelineConfig, run_pipeline

        doc = {
            "model_path": args.model,
            "events_path": args.events,
            "out_dir": args.out_dir,
            "horizon": args.horizon,
            "seed": args.seed,
            "simulator": args.simulator,
            "h_min": args.h_min,
            "h_max": args.h_max,
            "h_delta": args.h_delta,
            "solver_points": args.points,
            "t_min": args.t_min,
            "t_max": args.t_max,
            "scheme": args.scheme,
            "pairing": args.pairing,
            "emit_plots": args.emit_plots,
            "events_binary": args.binary_events,
        }
        if args.config:
            doc.update(read_json(args.config))
        config = PipelineConfig.from_dict(doc)
        result = run_pipeline(config)
        norms = result.estimate.norm_matrix
        print(f"pipeline complete; manifest at {result.manifest_path}")
        print(f"kernel norm matrix:\n{norms}")
        return 0

    raise HawkesError(f"unknown command {args.command!r}")


def entry_point():
    raise SystemExit(main())


if __name__ == "__main__":
    entry_point()

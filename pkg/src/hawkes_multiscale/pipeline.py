"""End-to-end pipeline: simulate/ingest -> conditional laws -> kernels -> report.

Every stage writes its artifact to the output directory together with a
manifest (parameters, content hashes, seed, wall clock), so stages can be
re-run separately from the serialized intermediates and a re-run with the
same configuration is byte-identical except for the wall-clock entry.
"""
from __future__ import annotations

import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ._io import sha256_file, write_json
from .analytics import BOOK_PAIRING, build_report, write_report
from .claw import (
    build_multiscale_grid,
    claw_to_dict,
    estimate_claw,
    read_claw,
    write_claw,
)
from .errors import ParameterError
from .events import read_events, read_events_binary, write_events, write_events_binary
from .model import RECTIFIED, read_model
from .simulate import simulate_branching, simulate_thinning
from .solver import (
    ADAPTED,
    GAUSS_LOGCV,
    build_quadrature_grid,
    kernel_plot_tables,
    solve_kernels,
    solve_kernels_gauss_logcv,
    write_estimate,
)

MANIFEST_SCHEMA = "hawkes-manifest/1"


@dataclass(frozen=True)
class PipelineConfig:
    """Parameters for one pipeline run.

    Defaults reproduce the synthetic power-law benchmark settings: claw grid
    1 ms to 1000 s at h_delta 0.05, adapted solver with 200 points on
    [1 ms, 2000 s].
    """

    model_path: str | None = None
    events_path: str | None = None
    out_dir: str = "out"
    horizon: float = 1.0e6
    seed: int = 1
    simulator: str = "branching"      # "branching" | "thinning"
    h_min: float = 1e-3
    h_max: float = 1000.0
    h_delta: float = 0.05
    solver_points: int = 200
    t_min: float = 1e-3
    t_max: float = 2000.0
    scheme: str = ADAPTED             # "adapted" | "gauss-logcv"
    pairing: str | None = None        # "book" or comma-separated indices
    emit_plots: bool = False
    events_binary: bool = False

    def __post_init__(self):
        if (self.model_path is None) == (self.events_path is None):
            raise ParameterError("exactly one of model_path / events_path is required")
        if self.scheme not in (ADAPTED, GAUSS_LOGCV):
            raise ParameterError(f"unknown scheme {self.scheme!r}")
        if self.simulator not in ("branching", "thinning"):
            raise ParameterError(f"unknown simulator {self.simulator!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(doc) - known
        if extra:
            raise ParameterError(f"unknown config fields: {sorted(extra)}")
        return cls(**doc)


def resolve_pairing(pairing, dimension):
    if pairing is None:
        return None
    if pairing == "book":
        if dimension != len(BOOK_PAIRING):
            raise ParameterError(
                f"'book' pairing needs {len(BOOK_PAIRING)} components, got {dimension}"
            )
        return BOOK_PAIRING
    try:
        sigma = tuple(int(s) for s in str(pairing).split(","))
    except ValueError as exc:
        raise ParameterError(f"bad pairing {pairing!r}") from exc
    return sigma


@dataclass
class PipelineResult:
    config: PipelineConfig
    paths: dict
    stream: object
    claw: object
    estimate: object
    report: object
    manifest_path: str


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    t_start = time.time()
    os.makedirs(config.out_dir, exist_ok=True)
    paths = {}

    if config.model_path is not None:
        model = read_model(config.model_path)
        if config.simulator == "thinning" or model.mode == RECTIFIED:
            stream = simulate_thinning(model, config.horizon, config.seed)
        else:
            stream = simulate_branching(model, config.horizon, config.seed)
    else:
        stream = _read_events_any(config.events_path)
    ev_path = os.path.join(
        config.out_dir, "events.bin" if config.events_binary else "events.tsv"
    )
    if config.events_binary:
        write_events_binary(stream, ev_path)
    else:
        write_events(stream, ev_path)
    paths["events"] = ev_path

    grid = build_multiscale_grid(config.h_min, config.h_max, config.h_delta)
    claw = estimate_claw(stream, grid)
    claw_path = os.path.join(config.out_dir, "claw.json")
    write_claw(claw, claw_path)
    paths["claw"] = claw_path

    estimate = solve_stage(claw, config)
    est_path = os.path.join(config.out_dir, "estimate.json")
    write_estimate(estimate, est_path)
    paths["estimate"] = est_path

    pairing = resolve_pairing(config.pairing, estimate.dimension)
    report = build_report(estimate, pairing=pairing)
    report_dir = os.path.join(config.out_dir, "report")
    paths.update(write_report(report, report_dir))

    if config.emit_plots:
        paths["plots"] = write_plot_files(estimate, claw, os.path.join(config.out_dir, "plots"))

    manifest = {
        "schema": MANIFEST_SCHEMA,
        "config": asdict(config),
        "hashes": {
            key: sha256_file(p)
            for key, p in sorted(paths.items())
            if isinstance(p, str) and os.path.isfile(p)
        },
        "seed": config.seed,
        "event_counts": stream.counts.tolist(),
        "wall_clock_seconds": time.time() - t_start,
    }
    manifest_path = os.path.join(config.out_dir, "manifest.json")
    write_json(manifest_path, manifest)
    return PipelineResult(
        config=config,
        paths=paths,
        stream=stream,
        claw=claw,
        estimate=estimate,
        report=report,
        manifest_path=manifest_path,
    )


def solve_stage(claw, config: PipelineConfig):
    if config.scheme == GAUSS_LOGCV:
        return solve_kernels_gauss_logcv(
            claw, config.solver_points, config.t_min, config.t_max
        )
    grid = build_quadrature_grid(config.t_min, config.t_max, config.solver_points)
    return solve_kernels(claw, grid)


def _read_events_any(path):
    with open(path, "rb") as fh:
        head = fh.read(6)
    if head == b"HWEV1\n":
        return read_events_binary(path)
    return read_events(path)


def write_plot_files(estimate, claw, outdir) -> str:
    """(x, y) tables for every figure-style output: log-log kernels,
    cumulated kernels, and (when a claw is given) conditional-law curves."""
    from ._io import atomic_write_text

    os.makedirs(outdir, exist_ok=True)
    tables = kernel_plot_tables(estimate)
    for key, tab in tables.items():
        safe = key.replace("<-", "_from_")
        lines = ["log10_t\tphi\tcumulative"]
        for k in range(tab["log10_t"].size):
            lines.append(
                f"{float(tab['log10_t'][k])!r}\t{float(tab['phi'][k])!r}"
                f"\t{float(tab['cumulative'][k])!r}"
            )
        atomic_write_text(os.path.join(outdir, f"kernel_{safe}.tsv"), "\n".join(lines) + "\n")
    if claw is None:
        return outdir
    mids = claw.grid.midpoints
    pos = mids > 0
    for i in range(claw.dimension):
        for j in range(claw.dimension):
            lines = ["log10_t\tghat"]
            for x, y in zip(np.log10(mids[pos]), claw.ghat[i, j][pos]):
                lines.append(f"{float(x)!r}\t{float(y)!r}")
            atomic_write_text(
                os.path.join(outdir, f"claw_{claw.labels[i]}_from_{claw.labels[j]}.tsv"),
                "\n".join(lines) + "\n",
            )
    return outdir


# --- staged entry points used by the CLI --------------------------------------

def stage_claw(events_path, h_min, h_max, h_delta, out_path):
    stream = _read_events_any(events_path)
    grid = build_multiscale_grid(h_min, h_max, h_delta)
    claw = estimate_claw(stream, grid)
    write_claw(claw, out_path)
    return claw


def stage_solve(claw_path, scheme, points, t_min, t_max, out_path):
    claw = read_claw(claw_path)
    if scheme == GAUSS_LOGCV:
        est = solve_kernels_gauss_logcv(claw, points, t_min, t_max)
    else:
        est = solve_kernels(claw, build_quadrature_grid(t_min, t_max, points))
    write_estimate(est, out_path)
    return est

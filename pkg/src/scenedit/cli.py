"""Command-line entry points: edit, ssr, bench.

Exit codes: 0 success, 1 usage/config/data errors, 2 iteration limit,
3 backend failure. Errors print as ``error[<id>]: message`` on stderr.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np

from . import canonical
from .bench import BenchmarkConfig, load_dataset, run_benchmark
from .errors import (BackendError, ConfigError, IterationLimit, SceneditError,
                     StepFailed)
from .executor import save_intermediates
from .gateway import ServiceClients, load_backend_config
from .imgio import load_image, save_png
from .pipeline import run_pipeline
from .reasoning import run_chain, trace_lines
from .ssr import build_ssr, export_masks, scene_summary_rows, ssr_serialize

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

_RUN_KEYS = {"backends", "iteration_cap", "tau", "dilation", "metric_region",
             "output_dir", "seed"}


@dataclass
class RunConfig:
    """Pipeline knobs loaded from the run config file."""

    backends: str | None = None  # path to the backend config file
    iteration_cap: int = 5
    tau: float = 0.5
    dilation: int = 0
    metric_region: str = "outside-mask"
    output_dir: str = "."
    seed: int = 0

    def __post_init__(self):
        if self.iteration_cap < 1:
            raise ConfigError("iteration_cap must be >= 1")
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError("tau must be in [0,1]")
        if self.dilation < 0:
            raise ConfigError("dilation must be >= 0")
        if self.metric_region not in ("outside-mask", "full"):
            raise ConfigError("metric_region must be outside-mask or full")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")


def load_run_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {path} not found")
    raw = p.read_bytes()
    if p.suffix == ".toml":
        doc = tomllib.loads(raw.decode("utf-8"))
    else:
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError:
            try:
                doc = tomllib.loads(raw.decode("utf-8"))
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: neither valid JSON nor TOML ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError("run config must be a table/object")
    unknown = set(doc) - _RUN_KEYS
    if unknown:
        raise ConfigError(f"unknown config key {sorted(unknown)[0]!r}")
    backends = doc.get("backends")
    if backends is not None and not Path(backends).is_absolute():
        backends = str(p.parent / backends)
    return RunConfig(
        backends=backends,
        iteration_cap=int(doc.get("iteration_cap", 5)),
        tau=float(doc.get("tau", 0.5)),
        dilation=int(doc.get("dilation", 0)),
        metric_region=doc.get("metric_region", "outside-mask"),
        output_dir=str(doc.get("output_dir", ".")),
        seed=int(doc.get("seed", 0)),
    )


def make_clients(run_config: RunConfig) -> ServiceClients:
    backend_config = load_backend_config(run_config.backends)
    clients = ServiceClients.from_config(backend_config)
    clients.seed = run_config.seed
    return clients


def _fail(error: SceneditError) -> int:
    click.echo(f"error[{error.error_id}]: {error}", err=True)
    if isinstance(error, IterationLimit):
        return 2
    if isinstance(error, BackendError):
        return 3
    if isinstance(error, StepFailed):
        return 3 if isinstance(error.cause, BackendError) else 1
    return 1


@click.group()
def main():
    """Reasoning-based image editing pipeline."""


@main.command("edit")
@click.option("--image", "image_path", required=True, type=click.Path())
@click.option("--query", required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--save-intermediates", "intermediates_dir", type=click.Path(), default=None)
@click.option("--dry-run", is_flag=True, help="Stop after planning; print the edit plan.")
def cmd_edit(image_path, query, out_path, config_path, intermediates_dir, dry_run):
    """Edit an image according to an implicit query."""
    try:
        config = load_run_config(config_path)
        clients = make_clients(config)
        image = _read_image(image_path)
        if dry_run:
            plan = run_chain(image, query, clients,
                             cap=config.iteration_cap, tau=config.tau)
            for step in plan.steps:
                click.echo(canonical.dumps({
                    "op": step.op_kind.value,
                    "target_ids": list(step.target_ids),
                    "instruction": step.explicit_instruction,
                    "mask_area": step.mask.area,
                }))
            _write_trace(out_path, plan.trace)
            return
        run = run_pipeline(image, query, clients, cap=config.iteration_cap,
                           tau=config.tau, dilation=config.dilation)
        save_png(out_path, run.result.final_image)
        _write_trace(out_path, run.plan.trace)
        if intermediates_dir:
            save_intermediates(run.result, intermediates_dir)
    except SceneditError as exc:
        sys.exit(_fail(exc))


def _read_image(path: str) -> np.ndarray:
    try:
        return load_image(path)
    except Exception as exc:
        raise ConfigError(f"cannot read image {path}: {exc}") from exc


def _write_trace(out_path: str, trace: list) -> None:
    trace_path = Path(out_path).with_suffix(".trace.jsonl")
    trace_path.write_text(trace_lines(trace))


@main.command("ssr")
@click.argument("action", type=click.Choice(["build", "show"]))
@click.option("--image", "image_path", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--export-masks", "masks_dir", type=click.Path(), default=None)
def cmd_ssr(action, image_path, config_path, out_path, masks_dir):
    """Build or display the structured scene representation of an image."""
    try:
        config = load_run_config(config_path)
        clients = make_clients(config)
        image = _read_image(image_path)
        scene = build_ssr(image, clients, clients, clients, tau=config.tau)
        if action == "build":
            text = ssr_serialize(scene)
            if out_path:
                Path(out_path).write_text(text + "\n")
            else:
                click.echo(text)
        else:
            rows = scene_summary_rows(scene)
            header = f"{'id':>4}  {'label':<20} {'depth':>8} {'area':>8}  bbox"
            click.echo(header)
            click.echo("-" * len(header))
            for row in rows:
                depth = "-" if row["depth"] is None else f"{row['depth']:.4f}"
                click.echo(f"{row['id']:>4}  {row['label']:<20} {depth:>8} "
                           f"{row['area']:>8}  {tuple(row['bbox'])}")
        if masks_dir:
            export_masks(scene, masks_dir)
    except SceneditError as exc:
        sys.exit(_fail(exc))


@main.command("bench")
@click.option("--dataset", "dataset_dir", required=True, type=click.Path())
@click.option("--metrics", "metric_list", default="psnr,ssim,l1,l2",
              help="Comma-separated metric names.")
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--workers", type=int, default=4)
@click.option("--metric-region", "region_override", default=None,
              type=click.Choice(["outside-mask", "full"]))
def cmd_bench(dataset_dir, metric_list, report_path, config_path, workers, region_override):
    """Run the editing pipeline over a benchmark set and write a metric report."""
    try:
        config = load_run_config(config_path)
        clients = make_clients(config)
        samples = load_dataset(dataset_dir)

        def pipeline(sample):
            run = run_pipeline(sample.image, sample.query, clients,
                               cap=config.iteration_cap, tau=config.tau,
                               dilation=config.dilation)
            return run.result.final_image

        bench_config = BenchmarkConfig(
            metrics=tuple(m.strip() for m in metric_list.split(",") if m.strip()),
            region_mode=region_override or config.metric_region,
            workers=workers,
            clients=clients,
        )
        report = run_benchmark(samples, pipeline, bench_config)
        Path(report_path).write_text(report.to_json() + "\n")
        click.echo(report.render_table())
    except SceneditError as exc:
        sys.exit(_fail(exc))


if __name__ == "__main__":
    main()

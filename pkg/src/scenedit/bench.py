"""Benchmark dataset loading, metric evaluation, and report generation.

Dataset layout: one directory per sample (``<id>/image.png``,
``<id>/query.txt``, ``<id>/mask.png``, optional ``<id>/reference.png``)
plus a top-level ``manifest.json`` listing the sample ids.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import canonical, metrics
from .errors import DatasetError, MetricUnavailable, SceneditError, ShapeError
from .imgio import load_image, load_mask_png
from .masks import BinaryMask
from .reasoning import templates

REPORT_VERSION = 1

NATIVE_METRICS = ("psnr", "ssim", "l1", "l2")
DELEGATED_METRICS = ("lpips", "clip", "clip_i", "dino")
ALL_METRICS = NATIVE_METRICS + DELEGATED_METRICS + ("idcs",)

# text table mirrors the headline column order, extras appended
TABLE_ORDER = ("psnr", "ssim", "lpips", "idcs", "clip", "clip_i", "dino", "l1", "l2")

REGION_MODES = ("outside-mask", "full")

# metrics that honor the preservation-region convention
REGION_AWARE = ("psnr", "ssim", "lpips")


@dataclass(frozen=True, eq=False)
class EditSample:
    """One benchmark triplet: image, implicit query, ground-truth edit mask."""

    id: str
    image: np.ndarray
    query: str
    gt_mask: BinaryMask
    reference: Optional[np.ndarray] = None

    def __post_init__(self):
        h, w = self.image.shape[:2]
        if (self.gt_mask.width, self.gt_mask.height) != (w, h):
            raise DatasetError(
                f"mask is {self.gt_mask.width}x{self.gt_mask.height}, image {w}x{h}",
                sample_id=self.id)


def load_dataset(root: str | Path) -> list[EditSample]:
    """Load samples in manifest order; missing pieces name the failing sample."""
    root = Path(root)
    manifest_path = root / "manifest.json"
    if not root.is_dir():
        raise DatasetError(f"dataset directory {root} not found")
    if not manifest_path.exists():
        raise DatasetError(f"{manifest_path} not found")
    try:
        manifest = json.loads(manifest_path.read_text())
        ids = list(manifest["samples"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DatasetError(f"manifest.json invalid: {exc}") from exc

    samples = []
    for sample_id in ids:
        sample_dir = root / str(sample_id)
        image_path = sample_dir / "image.png"
        query_path = sample_dir / "query.txt"
        mask_path = sample_dir / "mask.png"
        for required in (image_path, query_path, mask_path):
            if not required.exists():
                raise DatasetError(f"missing {required.name}", sample_id=str(sample_id))
        image = load_image(image_path)
        query = query_path.read_text().strip()
        if not query:
            raise DatasetError("empty query", sample_id=str(sample_id))
        mask = BinaryMask.from_array(load_mask_png(mask_path))
        reference_path = sample_dir / "reference.png"
        reference = load_image(reference_path) if reference_path.exists() else None
        samples.append(EditSample(id=str(sample_id), image=image, query=query,
                                  gt_mask=mask, reference=reference))
    return samples


@dataclass
class BenchmarkConfig:
    metrics: Sequence[str] = NATIVE_METRICS
    region_mode: str = "outside-mask"
    clip_variant: str = "image-text"  # or "image-image" (uses clip_i machinery)
    workers: int = 4
    clients: object = None  # ServiceClients for delegated metrics and the judge
    stamp: bool = False  # include a wall-clock timestamp (breaks byte determinism)
    extra_metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.region_mode not in REGION_MODES:
            raise ShapeError(f"region mode must be one of {REGION_MODES}")
        unknown = [m for m in self.metrics if m not in ALL_METRICS]
        if unknown:
            raise ShapeError(f"unknown metrics {unknown}")
        if self.workers < 1:
            raise ShapeError("workers must be >= 1")


@dataclass
class MetricReport:
    rows: dict  # sample id -> {metric: float | None}
    aggregates: dict  # metric -> float | None
    metadata: dict

    def to_json(self) -> str:
        return canonical.dumps({
            "report_version": REPORT_VERSION,
            "metadata": self.metadata,
            "samples": self.rows,
            "aggregates": self.aggregates,
        })

    def render_table(self) -> str:
        chosen = set(self.metadata.get("metrics", []))
        names = [m for m in TABLE_ORDER if m in chosen]
        header = ["sample"] + list(names)
        lines = [header]
        for sample_id in sorted(self.rows):
            row = self.rows[sample_id]
            lines.append([sample_id] + [_fmt(row.get(m)) for m in names])
        lines.append(["mean"] + [_fmt(self.aggregates.get(m)) for m in names])
        widths = [max(len(line[i]) for line in lines) for i in range(len(header))]
        rendered = []
        for i, line in enumerate(lines):
            rendered.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(line)))
            if i == 0:
                rendered.append("  ".join("-" * widths[j] for j in range(len(header))))
        return "\n".join(rendered) + "\n"


def _fmt(value) -> str:
    if value is None:
        return "-"
    return f"{value:.4f}"


def _composite_inside(base: np.ndarray, edited: np.ndarray, mask: BinaryMask) -> np.ndarray:
    """Erase in-mask differences so a whole-image backend metric sees only
    the preservation region."""
    out = np.array(edited, copy=True)
    out[mask.to_array()] = base[mask.to_array()]
    return out


def _evaluate_sample(sample: EditSample, edited: np.ndarray,
                     config: BenchmarkConfig) -> dict:
    region = sample.gt_mask.complement() if config.region_mode == "outside-mask" else None
    row: dict[str, Optional[float]] = {}
    for name in config.metrics:
        try:
            if name == "psnr":
                row[name] = metrics.psnr(sample.image, edited, region)
            elif name == "ssim":
                row[name] = metrics.ssim(sample.image, edited, region)
            elif name == "l1":
                row[name] = metrics.l1(sample.image, edited)
            elif name == "l2":
                row[name] = metrics.l2(sample.image, edited)
            elif name == "lpips":
                counterpart = edited
                if config.region_mode == "outside-mask":
                    counterpart = _composite_inside(sample.image, edited, sample.gt_mask)
                row[name] = metrics.delegated_metric(
                    sample.image, counterpart, "lpips", config.clients)
            elif name == "clip":
                if config.clip_variant == "image-text":
                    row[name] = metrics.delegated_metric(
                        edited, sample.query, "clip", config.clients)
                else:
                    target = sample.reference if sample.reference is not None else sample.image
                    row[name] = metrics.delegated_metric(
                        edited, target, "clip_i", config.clients)
            elif name in ("clip_i", "dino"):
                if sample.reference is None:
                    raise MetricUnavailable(f"{name} needs a reference edited image")
                row[name] = metrics.delegated_metric(
                    edited, sample.reference, name, config.clients)
            elif name == "idcs":
                if config.clients is None or config.clients.chat_backend is None:
                    raise MetricUnavailable("idcs needs a chat backend")
                score, _ = metrics.idcs(sample.image, edited, sample.query, config.clients)
                row[name] = float(score)
        except MetricUnavailable:
            row[name] = None
    return row


def run_benchmark(dataset: Sequence[EditSample],
                  pipeline: Callable[[EditSample], np.ndarray],
                  config: Optional[BenchmarkConfig] = None) -> MetricReport:
    """Edit every sample with ``pipeline`` and score it with the metric set.

    Samples are evaluated by a bounded worker pool; rows are keyed and
    ordered by sample id, so reports are deterministic. A delegated metric
    with no backend is recorded as absent rather than failing the run.
    """
    config = config or BenchmarkConfig()

    def job(sample: EditSample) -> tuple[str, dict]:
        edited = pipeline(sample)
        if np.asarray(edited).shape != sample.image.shape:
            raise ShapeError(f"pipeline changed image shape for sample {sample.id}")
        return sample.id, _evaluate_sample(sample, edited, config)

    rows: dict[str, dict] = {}
    if config.workers == 1:
        for sample in dataset:
            sample_id, row = job(sample)
            rows[sample_id] = row
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            for sample_id, row in pool.map(job, dataset):
                rows[sample_id] = row

    aggregates: dict[str, Optional[float]] = {}
    for name in config.metrics:
        values = [rows[s][name] for s in rows if rows[s].get(name) is not None]
        aggregates[name] = float(np.mean(values)) if values else None

    metadata = {
        "metrics": list(config.metrics),
        "region_mode": config.region_mode,
        "clip_variant": config.clip_variant,
        "prompt_version": templates.PROMPT_VERSION,
        "samples": len(rows),
        "config_hash": _config_hash(config),
    }
    metadata.update(config.extra_metadata)
    if config.stamp:
        metadata["generated_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return MetricReport(rows={k: rows[k] for k in sorted(rows)},
                        aggregates=aggregates, metadata=metadata)


def _config_hash(config: BenchmarkConfig) -> str:
    doc = canonical.dumps({
        "metrics": list(config.metrics),
        "region_mode": config.region_mode,
        "clip_variant": config.clip_variant,
        "prompt_version": templates.PROMPT_VERSION,
    })
    return hashlib.sha256(doc.encode("utf-8")).hexdigest()[:16]

"""Turning an edit plan into images: per-step inpainting and sequencing."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import canonical
from .errors import SceneditError, StepFailed
from .imgio import save_mask_png, save_png
from .masks import BinaryMask, dilate_mask
from .reasoning.types import EditPlan, EditStep, OpKind
from .reasoning import templates


@dataclass
class StepArtifact:
    """What one executed step consumed and produced."""

    index: int  # 1-based step number
    input_image: np.ndarray
    mask: BinaryMask  # the dilated mask actually sent to the inpainter
    output_image: np.ndarray


@dataclass
class EditResult:
    final_image: np.ndarray
    intermediates: list[StepArtifact] = field(default_factory=list)
    timings: list[float] = field(default_factory=list)


def inpaint_prompt(step: EditStep) -> str:
    """The prompt actually sent to the inpainting backend.

    Removals use a fixed background-completion template; replace/add send the
    step's content description as-is.
    """
    if step.op_kind is OpKind.REMOVE:
        return templates.load_template("inpaint_remove").strip()
    return step.explicit_instruction


def execute_step(image: np.ndarray, step: EditStep, clients,
                 dilation: int = 0) -> np.ndarray:
    """Inpaint one step's (dilated) region; the preservation contract applies."""
    mask = dilate_mask(step.mask, dilation)
    return clients.inpaint(image, mask, inpaint_prompt(step))


def execute_plan(image: np.ndarray, plan: EditPlan, clients,
                 dilation: int = 0) -> EditResult:
    """Apply the plan's steps sequentially, each consuming the previous output.

    The first failing step aborts with :class:`StepFailed`, carrying the
    1-based step index and the intermediates completed so far.
    """
    if not plan.steps:
        raise StepFailed(0, SceneditError("plan has no steps"))
    result = EditResult(final_image=np.array(image, copy=True))
    current = image
    for index, step in enumerate(plan.steps, start=1):
        mask = dilate_mask(step.mask, dilation)
        started = time.perf_counter()
        try:
            output = clients.inpaint(current, mask, inpaint_prompt(step))
        except SceneditError as exc:
            raise StepFailed(index, exc, intermediates=result.intermediates) from exc
        result.timings.append(time.perf_counter() - started)
        result.intermediates.append(StepArtifact(
            index=index, input_image=current, mask=mask, output_image=output))
        current = output
    result.final_image = current
    return result


def save_intermediates(result: EditResult, out_dir: str | Path) -> Path:
    """Write numbered step PNGs plus a manifest; returns the manifest path.

    The manifest holds only deterministic content (no timings), so repeated
    runs produce identical bytes.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for artifact in result.intermediates:
        image_name = f"step_{artifact.index:02d}.png"
        mask_name = f"step_{artifact.index:02d}_mask.png"
        save_png(out_dir / image_name, artifact.output_image)
        save_mask_png(out_dir / mask_name, artifact.mask.to_array())
        entries.append({"step": artifact.index, "image": image_name, "mask": mask_name})
    manifest = out_dir / "manifest.json"
    manifest.write_text(canonical.dumps({"steps": entries}) + "\n")
    return manifest

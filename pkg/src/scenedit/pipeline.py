"""End-to-end editing: interleaved reasoning and execution.

Multi-step queries are resolved subtask by subtask; each resolved step is
executed immediately and the scene is rebuilt from the edited image before
the next subtask, so later reasoning sees the effects of earlier edits.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .executor import EditResult, StepArtifact, inpaint_prompt
from .errors import PreconditionError, SceneditError, StepFailed
from .masks import dilate_mask
from .reasoning.chain import (DEFAULT_CAP, DEFAULT_TAU, _refine_until_sufficient,
                              decompose_query, resolve_edit)
from .reasoning.types import EditPlan
from .ssr import SceneRep, build_ssr


@dataclass
class PipelineRun:
    plan: EditPlan
    result: EditResult
    final_scene: Optional[SceneRep] = None


def run_pipeline(image: np.ndarray, query: str, clients, cap: int = DEFAULT_CAP,
                 tau: float = DEFAULT_TAU, dilation: int = 0,
                 rebuild_between_steps: bool = True) -> PipelineRun:
    """Reason and edit in one pass; returns both the plan and the images.

    With ``rebuild_between_steps`` (the default) the scene for subtask j>1 is
    rebuilt from the output of step j-1. Set it False to resolve every
    subtask against the original image's scene, as :func:`run_chain` does.
    """
    if cap < 1:
        raise PreconditionError("iteration cap must be >= 1")
    trace: list[dict] = []
    task_plan = decompose_query(query, clients, trace)
    plan = EditPlan(trace=trace)
    result = EditResult(final_image=np.array(image, copy=True))

    current = image
    scene = build_ssr(current, clients, clients, clients, tau=tau)
    trace.append({"event": "ssr_built", "objects": len(scene.objects),
                  "revision": scene.revision})
    for index, subtask in enumerate(task_plan.subtasks, start=1):
        if index > 1 and rebuild_between_steps:
            scene = build_ssr(current, clients, clients, clients, tau=tau)
            trace.append({"event": "ssr_rebuilt", "subtask": index,
                          "objects": len(scene.objects)})
        scene = _refine_until_sufficient(scene, current, subtask, clients,
                                         cap, tau, trace, index)
        step = resolve_edit(scene, subtask, clients, trace, index)
        plan.steps.append(step)
        mask = dilate_mask(step.mask, dilation)
        started = time.perf_counter()
        try:
            output = clients.inpaint(current, mask, inpaint_prompt(step))
        except SceneditError as exc:
            raise StepFailed(index, exc, intermediates=result.intermediates) from exc
        result.timings.append(time.perf_counter() - started)
        result.intermediates.append(StepArtifact(
            index=index, input_image=current, mask=mask, output_image=output))
        trace.append({"event": "execute_step", "subtask": index,
                      "op": step.op_kind.value, "mask_area": mask.area,
                      "dilation": dilation})
        current = output
    result.final_image = current
    return PipelineRun(plan=plan, result=result, final_scene=scene)

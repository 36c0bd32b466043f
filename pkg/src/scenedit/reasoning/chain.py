"""The chain of scene updates: decompose, assess, refine, resolve.

Each subtask loops sufficiency assessment against the scene description,
pulling in missing semantic detail (re-detection at descending segmentation
thresholds) or spatial detail (spatial-language programs) until the LLM can
name the target region and an explicit instruction.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from ..errors import (DslError, IterationLimit, MalformedLLMOutput,
                      PreconditionError, ResolutionError)
from ..masks import BinaryMask, BoundingBox, mask_union, region_iou
from ..ssr import (SceneRep, SceneObject, assign_labels, build_ssr, median_depth,
                   merge_same_label, ssr_serialize)
from . import templates
from .dsl import SpatialProgram, evaluate_expression
from .types import EditPlan, EditStep, InfoNeed, NeedKind, OpKind, TaskPlan
from ..gateway.protocol import ChatRequest, text_message

DEFAULT_CAP = 5
DEFAULT_TAU = 0.5

# descending segmentation confidence schedule, one step per semantic round
SEGMENT_THRESHOLDS = (0.86, 0.70, 0.50)


def _chat_payload(clients, schema: str, prompt: str, trace: Optional[list] = None,
                  subtask_index: Optional[int] = None) -> dict:
    request = ChatRequest(messages=(text_message("user", prompt),), schema_name=schema)
    if trace is not None:
        record = {"event": "llm_call", "schema": schema,
                  "prompt_version": templates.PROMPT_VERSION}
        if subtask_index is not None:
            record["subtask"] = subtask_index
        trace.append(record)
    return clients.chat(request).payload


def decompose_query(query: str, clients, trace: Optional[list] = None) -> TaskPlan:
    """Split the user query into an ordered list of single-edit subtasks."""
    if not query:
        raise PreconditionError("query must be nonempty")
    payload = _chat_payload(
        clients, "task_decomposition",
        templates.render("decompose", query=query), trace)
    subtasks = tuple(payload["subtasks"])
    if trace is not None:
        trace.append({"event": "decompose", "query": query, "subtasks": list(subtasks)})
    return TaskPlan(subtasks=subtasks, source_query=query)


def assess_sufficiency(scene: SceneRep, subtask: str, clients,
                       trace: Optional[list] = None,
                       subtask_index: Optional[int] = None) -> InfoNeed:
    """Ask whether the scene description suffices to pick the target region."""
    payload = _chat_payload(
        clients, "sufficiency",
        templates.render("assess", subtask=subtask, scene_json=ssr_serialize(scene)),
        trace, subtask_index)
    kind = NeedKind(payload["need"])
    need = InfoNeed(kind=kind, detail=payload.get("detail", "") if kind is not NeedKind.NONE else "")
    if trace is not None:
        trace.append({"event": "assess", "subtask": subtask_index,
                      "need": kind.value, "detail": need.detail})
    return need


def refine_semantic(scene: SceneRep, image: np.ndarray, need: InfoNeed, clients,
                    tau: float = DEFAULT_TAU, round_index: int = 0,
                    trace: Optional[list] = None,
                    subtask_index: Optional[int] = None) -> SceneRep:
    """Pull in missing semantic detail without touching existing objects.

    Re-detects with a vocabulary hint derived from the stated need and
    re-segments at the next threshold of the descending schedule. Existing
    unlabeled objects may gain a label; novel masks are appended with fresh
    ids; everything else is preserved. The revision advances by one even
    when nothing new was found (the no-op is recorded in the trace).
    """
    if need.kind is not NeedKind.SEMANTIC:
        raise PreconditionError(f"semantic refinement called with {need.kind.value} need")
    threshold = SEGMENT_THRESHOLDS[min(round_index, len(SEGMENT_THRESHOLDS) - 1)]
    detections = clients.detect(image, vocab_hint=[need.detail])
    masks = clients.segment(image, threshold=threshold)

    relabeled: list[int] = []
    updated: list[SceneObject] = []
    for obj in scene.objects:
        if obj.label is None and detections:
            candidates = assign_labels([obj.mask], detections, tau)
            if candidates[0].label is not None:
                updated.append(replace(obj, label=candidates[0].label))
                relabeled.append(obj.id)
                continue
        updated.append(obj)

    novel = [m for m in masks
             if all(region_iou(m, obj.mask) < tau for obj in scene.objects)
             and not m.is_empty()]
    added: list[int] = []
    appended: list[SceneObject] = []
    if novel:
        fresh = merge_same_label(assign_labels(novel, detections, tau))
        depth_map = clients.estimate_depth(image)
        next_id = scene.next_id()
        for offset, obj in enumerate(fresh):
            appended.append(replace(obj, id=next_id + offset,
                                    depth=median_depth(obj.mask, depth_map)))
            added.append(next_id + offset)

    refined = SceneRep(
        image_width=scene.image_width, image_height=scene.image_height,
        objects=tuple(updated) + tuple(appended),
        revision=scene.revision + 1, attrs=scene.attrs)
    if trace is not None:
        trace.append({"event": "refine_semantic", "subtask": subtask_index,
                      "threshold": threshold, "relabeled_ids": relabeled,
                      "added_ids": added, "noop": not (relabeled or added),
                      "revision": refined.revision})
    return refined


def interpret_spatial(scene: SceneRep, program: SpatialProgram) -> SceneRep:
    """Evaluate a spatial program, storing results as object or scene attrs.

    Pure: no client calls, same scene and program always give the same
    result. The revision advances by one.
    """
    object_attrs: dict[int, dict] = {obj.id: dict(obj.attrs) for obj in scene.objects}
    scene_attrs = dict(scene.attrs)
    for index, (attr, expr) in enumerate(program.statements):
        try:
            value, owner = evaluate_expression(scene, expr)
        except DslError as exc:
            if exc.statement_index is None:
                raise DslError(str(exc), statement_index=index) from exc
            raise
        if owner is not None:
            object_attrs[owner][attr] = value
        else:
            scene_attrs[attr] = value
    objects = tuple(replace(obj, attrs=object_attrs[obj.id]) for obj in scene.objects)
    return SceneRep(image_width=scene.image_width, image_height=scene.image_height,
                    objects=objects, revision=scene.revision + 1, attrs=scene_attrs)


def generate_spatial_program(scene: SceneRep, need: InfoNeed, clients,
                             trace: Optional[list] = None,
                             subtask_index: Optional[int] = None) -> SpatialProgram:
    """Ask the LLM for a spatial program that derives the missing facts."""
    if need.kind is not NeedKind.SPATIAL:
        raise PreconditionError(f"spatial program requested for {need.kind.value} need")
    payload = _chat_payload(
        clients, "spatial_program",
        templates.render("spatial_program", detail=need.detail,
                         scene_json=ssr_serialize(scene)),
        trace, subtask_index)
    return SpatialProgram.from_payload(payload)


def resolve_edit(scene: SceneRep, subtask: str, clients,
                 trace: Optional[list] = None,
                 subtask_index: Optional[int] = None) -> EditStep:
    """Resolve the subtask into target ids, a region mask, and an instruction."""
    payload = _chat_payload(
        clients, "edit_resolution",
        templates.render("resolve", subtask=subtask, scene_json=ssr_serialize(scene)),
        trace, subtask_index)
    op = OpKind(payload["op"])
    target_ids = tuple(int(i) for i in payload.get("target_ids", []))
    instruction = payload["instruction"]

    if op is OpKind.ADD:
        box_body = payload["placement_box"]
        try:
            box = BoundingBox(int(box_body["x_min"]), int(box_body["y_min"]),
                              int(box_body["x_max"]), int(box_body["y_max"]))
            mask = box.to_mask(scene.image_width, scene.image_height)
        except Exception as exc:
            raise ResolutionError(f"placement box invalid for the image: {exc}") from exc
        step = EditStep(target_ids=(), mask=mask, explicit_instruction=instruction, op_kind=op)
    else:
        missing = [i for i in target_ids if not scene.has(i)]
        if missing:
            raise ResolutionError(f"resolved ids {missing} do not exist in the scene")
        mask = mask_union([scene.get(i).mask for i in target_ids])
        step = EditStep(target_ids=target_ids, mask=mask,
                        explicit_instruction=instruction, op_kind=op)
    if trace is not None:
        trace.append({"event": "resolve", "subtask": subtask_index, "op": op.value,
                      "target_ids": list(target_ids), "instruction": instruction})
    return step


def _refine_until_sufficient(scene: SceneRep, image: np.ndarray, subtask: str,
                             clients, cap: int, tau: float, trace: list,
                             subtask_index: int) -> SceneRep:
    semantic_round = 0
    for _ in range(cap):
        need = assess_sufficiency(scene, subtask, clients, trace, subtask_index)
        if need.kind is NeedKind.NONE:
            return scene
        if need.kind is NeedKind.SEMANTIC:
            scene = refine_semantic(scene, image, need, clients, tau=tau,
                                    round_index=semantic_round, trace=trace,
                                    subtask_index=subtask_index)
            semantic_round += 1
        else:
            program = generate_spatial_program(scene, need, clients, trace, subtask_index)
            scene = interpret_spatial(scene, program)
            trace.append({"event": "interpret_spatial", "subtask": subtask_index,
                          "statements": len(program.statements),
                          "revision": scene.revision})
    trace.append({"event": "iteration_limit", "subtask": subtask_index, "cap": cap})
    raise IterationLimit(
        f"subtask {subtask_index} still insufficient after {cap} update rounds",
        trace=trace)


def run_chain(image: np.ndarray, query: str, clients, cap: int = DEFAULT_CAP,
              tau: float = DEFAULT_TAU) -> EditPlan:
    """Resolve the full query into an edit plan against the given image.

    The scene is built once from the image and refined progressively across
    subtasks; no editing happens here (see the executor and
    :func:`scenedit.pipeline.run_pipeline` for execution).
    """
    if cap < 1:
        raise PreconditionError("iteration cap must be >= 1")
    trace: list[dict] = []
    plan = decompose_query(query, clients, trace)
    scene = build_ssr(image, clients, clients, clients, tau=tau)
    trace.append({"event": "ssr_built", "objects": len(scene.objects),
                  "revision": scene.revision})
    out = EditPlan(trace=trace)
    for index, subtask in enumerate(plan.subtasks, start=1):
        scene = _refine_until_sufficient(scene, image, subtask, clients,
                                         cap, tau, trace, index)
        out.steps.append(resolve_edit(scene, subtask, clients, trace, index))
    return out

"""Structured scene representation: objects with masks, labels, and depths.

The scene is the intermediate layer the reasoning loop reads and refines:
a dictionary of object id -> (mask, semantic label, median depth, derived
attributes), plus image dimensions and a revision counter that increments
once per refinement.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import canonical
from .errors import EmptyRegion, MalformedMask, ParseError, ShapeError
from .masks import BinaryMask, BoundingBox, masks_touch, mask_union, region_iou

SSR_VERSION = 1

# Smaller depth value = nearer to the camera; recorded in the serialized
# header so spatial predicates are unambiguous.
DEPTH_CONVENTION = "lower-is-nearer"


@dataclass(frozen=True)
class Detection:
    """A labeled box from the open-vocabulary detector."""

    box: BoundingBox
    label: str
    score: float

    def __post_init__(self):
        if not self.label:
            raise ShapeError("detection label must be nonempty")
        if not 0.0 <= self.score <= 1.0:
            raise ShapeError(f"detection score {self.score} outside [0,1]")


@dataclass(frozen=True, eq=False)
class DepthMap:
    """Per-pixel relative depth in [0,1], dimensions matching the source image."""

    width: int
    height: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.height, self.width):
            raise ShapeError(
                f"depth values shape {values.shape} != ({self.height}, {self.width})")
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise ShapeError("depth values outside [0,1]")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class SceneObject:
    """One scene entry: unique id, inline RLE mask, optional label and depth."""

    id: int
    mask: BinaryMask
    label: Optional[str] = None
    depth: Optional[float] = None
    attrs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.id < 1:
            raise ShapeError(f"object id {self.id} must be >= 1")
        if self.mask.is_empty():
            raise MalformedMask(f"object {self.id} has an empty mask")
        if self.label is not None and not self.label:
            raise ShapeError("label must be nonempty or None")
        if self.depth is not None:
            if not 0.0 <= self.depth <= 1.0:
                raise ShapeError(f"depth {self.depth} outside [0,1]")
            object.__setattr__(self, "depth", canonical.quantize(float(self.depth)))
        object.__setattr__(self, "attrs", canonical.quantize(dict(self.attrs)))

    @property
    def area(self) -> int:
        return self.mask.area


@dataclass(frozen=True)
class SceneRep:
    """The full scene at one revision; immutable, safe to share."""

    image_width: int
    image_height: int
    objects: tuple[SceneObject, ...] = ()
    revision: int = 0
    attrs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.image_width <= 0 or self.image_height <= 0:
            raise ShapeError("scene dimensions must be positive")
        if self.revision < 0:
            raise ShapeError("revision must be non-negative")
        object.__setattr__(self, "objects", tuple(self.objects))
        seen = set()
        for obj in self.objects:
            if (obj.mask.width, obj.mask.height) != (self.image_width, self.image_height):
                raise ShapeError(
                    f"object {obj.id} mask is {obj.mask.width}x{obj.mask.height}, "
                    f"scene is {self.image_width}x{self.image_height}")
            if obj.id in seen:
                raise ShapeError(f"duplicate object id {obj.id}")
            seen.add(obj.id)
        object.__setattr__(self, "attrs", canonical.quantize(dict(self.attrs)))

    def get(self, object_id: int) -> SceneObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)

    def has(self, object_id: int) -> bool:
        return any(obj.id == object_id for obj in self.objects)

    def ids(self) -> list[int]:
        return [obj.id for obj in self.objects]

    def next_id(self) -> int:
        return max((obj.id for obj in self.objects), default=0) + 1


def median_depth(mask: BinaryMask, depth: DepthMap) -> float:
    """Median depth under the mask's foreground; even counts average the middle two."""
    if (mask.width, mask.height) != (depth.width, depth.height):
        raise ShapeError(
            f"mask {mask.width}x{mask.height} vs depth {depth.width}x{depth.height}")
    selected = depth.values[mask.to_array()]
    if selected.size == 0:
        raise EmptyRegion("median depth of an empty mask")
    return float(np.median(selected))


def assign_labels(masks: Sequence[BinaryMask], detections: Sequence[Detection],
                  tau: float) -> list[SceneObject]:
    """Label each mask with its best-IoU detection, or leave it unlabeled.

    The winning detection is the one with the highest mask-vs-box IoU; ties go
    to the higher detection score, then the lower detection index. A best IoU
    below ``tau`` leaves the object unlabeled.
    """
    if not 0.0 <= tau <= 1.0:
        raise ShapeError(f"tau {tau} outside [0,1]")
    objects = []
    for idx, mask in enumerate(masks):
        label = None
        if detections:
            scored = [
                (region_iou(mask, det.box), det.score, -det_idx)
                for det_idx, det in enumerate(detections)
            ]
            best_idx = max(range(len(detections)), key=lambda i: scored[i])
            if scored[best_idx][0] >= tau:
                label = detections[best_idx].label
        objects.append(SceneObject(id=idx + 1, mask=mask, label=label))
    return objects


def merge_same_label(objects: Sequence[SceneObject]) -> list[SceneObject]:
    """Consolidate equal-label masks that overlap or touch (8-connectivity).

    Unlabeled objects never merge. Ids are reassigned densely (1..n) in
    first-appearance order, so the operation is idempotent.
    """
    objects = list(objects)
    parent = list(range(len(objects)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    by_label: dict[str, list[int]] = {}
    for i, obj in enumerate(objects):
        if obj.label is not None:
            by_label.setdefault(obj.label, []).append(i)
    for indices in by_label.values():
        for a_pos, i in enumerate(indices):
            for j in indices[a_pos + 1:]:
                if find(i) != find(j) and masks_touch(objects[i].mask, objects[j].mask):
                    parent[find(j)] = find(i)

    groups: dict[int, list[int]] = {}
    order: list[int] = []
    for i in range(len(objects)):
        root = find(i)
        if root not in groups:
            groups[root] = []
            order.append(root)
        groups[root].append(i)

    merged = []
    for new_id, root in enumerate(order, start=1):
        members = groups[root]
        first = objects[members[0]]
        if len(members) == 1:
            merged.append(replace(first, id=new_id))
        else:
            union = mask_union([objects[i].mask for i in members])
            # depth/attrs of the parts are stale for the unified region
            merged.append(SceneObject(id=new_id, mask=union, label=first.label))
    return merged


def build_ssr(image: np.ndarray, segmenter, detector, depth_estimator,
              tau: float = 0.5) -> SceneRep:
    """Construct the initial scene: segment, label by IoU, merge, attach depth."""
    image = np.asarray(image)
    if image.size == 0:
        raise ShapeError("empty image")
    height, width = image.shape[:2]
    masks = segmenter.segment(image)
    detections = detector.detect(image)
    objects = assign_labels(masks, detections, tau)
    objects = merge_same_label(objects)
    if objects:
        depth_map = depth_estimator.estimate_depth(image)
        objects = [replace(obj, depth=median_depth(obj.mask, depth_map)) for obj in objects]
    return SceneRep(image_width=width, image_height=height,
                    objects=tuple(objects), revision=0)


def ssr_serialize(scene: SceneRep) -> str:
    """Canonical JSON for a scene; equal scenes produce identical bytes."""
    objects = {}
    for obj in scene.objects:
        objects[str(obj.id)] = {
            "mask": obj.mask.to_json_obj(),
            "label": obj.label,
            "depth": obj.depth,
            "attrs": obj.attrs,
        }
    doc = {
        "ssr_version": SSR_VERSION,
        "image_width": scene.image_width,
        "image_height": scene.image_height,
        "revision": scene.revision,
        "depth_convention": DEPTH_CONVENTION,
        "attrs": scene.attrs,
        "objects": objects,
    }
    return canonical.dumps(doc)


_SCENE_KEYS = {"ssr_version", "image_width", "image_height", "revision",
               "depth_convention", "attrs", "objects"}
_OBJECT_KEYS = {"mask", "label", "depth", "attrs"}
_MASK_KEYS = {"width", "height", "runs"}


def _reject_duplicate_keys(pairs):
    seen = set()
    for key, _ in pairs:
        if key in seen:
            raise ParseError("duplicate key", field=key)
        seen.add(key)
    return dict(pairs)


def _expect(doc: dict, key: str, types, where: str):
    if key not in doc:
        raise ParseError("missing field", field=f"{where}.{key}" if where else key)
    value = doc[key]
    if not isinstance(value, types) or isinstance(value, bool):
        raise ParseError(f"expected {types}", field=f"{where}.{key}" if where else key)
    return value


def ssr_parse(text: str) -> SceneRep:
    """Parse scene JSON, validating the schema field by field."""
    try:
        doc = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    unknown = set(doc) - _SCENE_KEYS
    if unknown:
        raise ParseError("unknown field", field=sorted(unknown)[0])
    version = _expect(doc, "ssr_version", int, "")
    if version != SSR_VERSION:
        raise ParseError(f"unsupported version {version}", field="ssr_version")
    width = _expect(doc, "image_width", int, "")
    height = _expect(doc, "image_height", int, "")
    revision = _expect(doc, "revision", int, "")
    convention = _expect(doc, "depth_convention", str, "")
    if convention != DEPTH_CONVENTION:
        raise ParseError(f"unknown depth convention {convention!r}", field="depth_convention")
    scene_attrs = _expect(doc, "attrs", dict, "")
    raw_objects = _expect(doc, "objects", dict, "")

    objects = []
    for key in raw_objects:
        where = f"objects.{key}"
        try:
            object_id = int(key)
        except ValueError:
            raise ParseError("object key must be an integer id", field=where) from None
        entry = raw_objects[key]
        if not isinstance(entry, dict):
            raise ParseError("object entry must be an object", field=where)
        unknown = set(entry) - _OBJECT_KEYS
        if unknown:
            raise ParseError("unknown field", field=f"{where}.{sorted(unknown)[0]}")
        raw_mask = _expect(entry, "mask", dict, where)
        unknown = set(raw_mask) - _MASK_KEYS
        if unknown:
            raise ParseError("unknown field", field=f"{where}.mask.{sorted(unknown)[0]}")
        mask_width = _expect(raw_mask, "width", int, f"{where}.mask")
        mask_height = _expect(raw_mask, "height", int, f"{where}.mask")
        runs = _expect(raw_mask, "runs", list, f"{where}.mask")
        if not all(isinstance(r, int) and not isinstance(r, bool) for r in runs):
            raise ParseError("runs must be integers", field=f"{where}.mask.runs")
        label = entry.get("label")
        if label is not None and not isinstance(label, str):
            raise ParseError("label must be a string or null", field=f"{where}.label")
        depth = entry.get("depth")
        if depth is not None and not isinstance(depth, (int, float)):
            raise ParseError("depth must be a number or null", field=f"{where}.depth")
        attrs = entry.get("attrs", {})
        if not isinstance(attrs, dict):
            raise ParseError("attrs must be an object", field=f"{where}.attrs")
        try:
            mask = BinaryMask(width=mask_width, height=mask_height, runs=tuple(runs))
            obj = SceneObject(id=object_id, mask=mask, label=label,
                              depth=None if depth is None else float(depth), attrs=attrs)
        except (MalformedMask, ShapeError) as exc:
            raise ParseError(str(exc), field=where) from exc
        objects.append(obj)
    objects.sort(key=lambda o: o.id)
    try:
        return SceneRep(image_width=width, image_height=height,
                        objects=tuple(objects), revision=revision, attrs=scene_attrs)
    except ShapeError as exc:
        raise ParseError(str(exc), field="objects") from exc


def export_masks(scene: SceneRep, out_dir: str | Path) -> list[Path]:
    """Write each object's mask as ``<id>.png`` (8-bit grayscale, 0/255)."""
    from .imgio import save_mask_png

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for obj in scene.objects:
        path = out_dir / f"{obj.id}.png"
        save_mask_png(path, obj.mask.to_array())
        written.append(path)
    return written


def scene_summary_rows(scene: SceneRep) -> list[dict]:
    """Tabular view of a scene: id, label, depth, area, bbox per object."""
    rows = []
    for obj in scene.objects:
        box = obj.mask.bbox()
        rows.append({
            "id": obj.id,
            "label": obj.label if obj.label is not None else "(unlabeled)",
            "depth": obj.depth,
            "area": obj.area,
            "bbox": [box.x_min, box.y_min, box.x_max, box.y_max],
        })
    return rows

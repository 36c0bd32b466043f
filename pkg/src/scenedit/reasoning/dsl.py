"""The spatial expression language used to augment scene descriptions.

A closed, sandboxed substitute for free-form code: the LLM emits small
programs of named statements over a fixed primitive set, which the engine
evaluates against the scene. Pure and deterministic.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass

import numpy as np

from ..errors import DslError
from ..ssr import SceneObject, SceneRep

MAX_STATEMENTS = 32

# name -> (argument spec, doc). "id" arguments accept integer literals or
# nested calls that evaluate to an object id.
_SIGNATURES = {
    "centroid": ("id",),
    "area": ("id",),
    "depth": ("id",),
    "left_of": ("id", "id"),
    "right_of": ("id", "id"),
    "above": ("id", "id"),
    "below": ("id", "id"),
    "distance": ("id", "id"),
    "nearest": (),
    "farthest": (),
    "largest": (),
    "smallest": (),
    "count": ("label",),
}

# primitives whose result naturally belongs to their (single) id argument;
# everything else lands in scene-level attrs
_OBJECT_SCOPED = ("centroid", "area", "depth")


def _parse(expr: str) -> ast.expr:
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise DslError(f"syntax error in {expr!r}: {exc.msg}") from exc
    return tree.body


def _validate_node(node: ast.expr, expr: str) -> None:
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name):
            raise DslError(f"only plain function calls are allowed in {expr!r}")
        name = node.func.id
        if name not in _SIGNATURES:
            raise DslError(f"unknown function {name!r}")
        spec = _SIGNATURES[name]
        if node.keywords:
            raise DslError(f"{name} takes no keyword arguments")
        if len(node.args) != len(spec):
            raise DslError(f"{name} takes {len(spec)} argument(s), got {len(node.args)}")
        for arg, kind in zip(node.args, spec):
            if kind == "id":
                if isinstance(arg, ast.Constant) and isinstance(arg.value, int) \
                        and not isinstance(arg.value, bool):
                    continue
                if isinstance(arg, ast.Call):
                    _validate_node(arg, expr)
                    continue
                raise DslError(f"{name} expects an object id, got {ast.dump(arg)}")
            else:  # label
                if not (isinstance(arg, ast.Constant) and isinstance(arg.value, str)):
                    raise DslError(f"{name} expects a string label")
        return
    raise DslError(f"expression must be a function call, got {expr!r}")


@dataclass(frozen=True)
class SpatialProgram:
    """Named statements in the spatial language; syntax-checked at construction."""

    statements: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if not self.statements:
            raise DslError("program has no statements")
        if len(self.statements) > MAX_STATEMENTS:
            raise DslError(f"program exceeds {MAX_STATEMENTS} statements")
        for index, (attr, expr) in enumerate(self.statements):
            if not attr:
                raise DslError("empty attribute name", statement_index=index)
            try:
                _validate_node(_parse(expr), expr)
            except DslError as exc:
                raise DslError(str(exc), statement_index=index) from exc

    @classmethod
    def from_payload(cls, payload: dict) -> "SpatialProgram":
        return cls(statements=tuple(
            (s["attr"], s["expr"]) for s in payload["statements"]))


class _Evaluator:
    def __init__(self, scene: SceneRep):
        self.scene = scene
        self._centroids: dict[int, tuple[float, float]] = {}

    def _object(self, object_id: int) -> SceneObject:
        try:
            return self.scene.get(object_id)
        except KeyError:
            raise DslError(f"unknown object id {object_id}") from None

    def centroid(self, object_id: int) -> tuple[float, float]:
        if object_id not in self._centroids:
            arr = self._object(object_id).mask.to_array()
            ys, xs = np.nonzero(arr)
            self._centroids[object_id] = (float(xs.mean()), float(ys.mean()))
        return self._centroids[object_id]

    def depth_of(self, object_id: int) -> float:
        obj = self._object(object_id)
        if obj.depth is None:
            raise DslError(f"object {object_id} has no depth")
        return obj.depth

    def _extreme(self, key, reverse: bool) -> int:
        candidates = [(key(obj), obj.id) for obj in self.scene.objects
                      if key(obj) is not None]
        if not candidates:
            raise DslError("no objects with the required attribute")
        # ties resolve to the lowest id
        best = min(candidates, key=lambda t: (-t[0] if reverse else t[0], t[1]))
        return best[1]

    def call(self, name: str, args: list):
        if name == "centroid":
            return list(self.centroid(args[0]))
        if name == "area":
            return self._object(args[0]).area
        if name == "depth":
            return self.depth_of(args[0])
        if name in ("left_of", "right_of", "above", "below"):
            ax, ay = self.centroid(args[0])
            bx, by = self.centroid(args[1])
            return {"left_of": ax < bx, "right_of": ax > bx,
                    "above": ay < by, "below": ay > by}[name]
        if name == "distance":
            ax, ay = self.centroid(args[0])
            bx, by = self.centroid(args[1])
            return math.hypot(ax - bx, ay - by)
        if name == "nearest":
            return self._extreme(lambda o: o.depth, reverse=False)
        if name == "farthest":
            return self._extreme(lambda o: o.depth, reverse=True)
        if name == "largest":
            return self._extreme(lambda o: float(o.area), reverse=True)
        if name == "smallest":
            return self._extreme(lambda o: float(o.area), reverse=False)
        if name == "count":
            return sum(1 for o in self.scene.objects if o.label == args[0])
        raise DslError(f"unknown function {name!r}")

    def eval_node(self, node: ast.expr):
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, ast.Call):
            name = node.func.id  # validated earlier
            args = []
            for arg, kind in zip(node.args, _SIGNATURES[name]):
                value = self.eval_node(arg)
                if kind == "id" and not isinstance(value, int):
                    raise DslError(f"{name} expects an object id, got {value!r}")
                args.append(value)
            return self.call(name, args)
        raise DslError(f"unsupported expression node {type(node).__name__}")


def evaluate_expression(scene: SceneRep, expr: str):
    """Evaluate one expression; returns (value, owning object id or None)."""
    node = _parse(expr)
    _validate_node(node, expr)
    evaluator = _Evaluator(scene)
    value = evaluator.eval_node(node)
    owner = None
    if isinstance(node, ast.Call) and node.func.id in _OBJECT_SCOPED:
        owner = evaluator.eval_node(node.args[0])
    return value, owner

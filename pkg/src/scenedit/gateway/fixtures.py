"""Build deterministic in-process backends from fixture description files.

Lets the CLI run hermetically: a backend config entry with kind="fixture"
points at a JSON file describing the canned responses.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import ConfigError
from ..masks import BinaryMask, BoundingBox
from ..ssr import DepthMap, Detection
from .config import ServiceConfig
from .mocks import (ConstantDepth, FillInpainter, FixtureDetector, FixtureDepth,
                    FixtureSegmenter, HashEmbedder, IdentityInpainter, ScriptedChat)

import numpy as np


def _load(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"fixture file {path} not found")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"fixture file {path}: invalid JSON ({exc})") from exc


def _mask(obj: dict) -> BinaryMask:
    return BinaryMask(width=int(obj["width"]), height=int(obj["height"]),
                      runs=tuple(int(r) for r in obj["runs"]))


def _detection(obj: dict) -> Detection:
    box = obj["box"]
    return Detection(
        box=BoundingBox(int(box["x_min"]), int(box["y_min"]),
                        int(box["x_max"]), int(box["y_max"])),
        label=str(obj["label"]),
        score=float(obj["score"]),
    )


def load_fixture_backend(service: str, config: ServiceConfig):
    doc = _load(config.path)
    try:
        if service == "segment":
            by_threshold = {float(k): [_mask(m) for m in v]
                            for k, v in doc.get("by_threshold", {}).items()}
            return FixtureSegmenter(masks=[_mask(m) for m in doc.get("masks", [])],
                                    by_threshold=by_threshold)
        if service == "detect":
            by_hint = {tuple(entry["hint"]): [_detection(d) for d in entry["detections"]]
                       for entry in doc.get("by_hint", [])}
            return FixtureDetector(
                detections=[_detection(d) for d in doc.get("detections", [])],
                by_hint=by_hint)
        if service == "depth":
            if "constant" in doc:
                return ConstantDepth(float(doc["constant"]))
            width, height = int(doc["width"]), int(doc["height"])
            values = np.asarray(doc["values"], dtype=np.float64).reshape(height, width)
            return FixtureDepth(DepthMap(width=width, height=height, values=values))
        if service == "inpaint":
            mode = doc.get("mode", "identity")
            if mode == "identity":
                return IdentityInpainter()
            if mode == "fill":
                return FillInpainter(color=tuple(doc.get("color", [255, 0, 0])))
            raise ConfigError(f"unknown inpaint fixture mode {mode!r}")
        if service == "chat":
            script = doc.get("script", {})
            return ScriptedChat({name: [json.dumps(r) if not isinstance(r, str) else r
                                        for r in replies]
                                 for name, replies in script.items()})
        if service == "embed":
            return HashEmbedder(dim=int(doc.get("dim", 32)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"fixture file {config.path}: bad {service} fixture ({exc})") from exc
    raise ConfigError(f"no fixture loader for service {service!r}")

"""Deterministic in-process backends for tests and hermetic CLI runs.

Every mock is a pure function of its construction arguments and the request,
so end-to-end runs are byte-reproducible. Scripted mocks record the requests
they serve for call-trace assertions.
"""

from __future__ import annotations

import hashlib
import json
from typing import Mapping, Optional, Sequence

import numpy as np

from ..errors import BackendError
from ..masks import BinaryMask
from ..ssr import DepthMap, Detection
from .protocol import ChatRequest, EmbedRequest, EmbedVector


def _image_key(image: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(image).tobytes()).hexdigest()


class FixtureSegmenter:
    """Returns a fixed mask list, optionally keyed by segmentation threshold."""

    def __init__(self, masks: Sequence[BinaryMask] = (),
                 by_threshold: Optional[Mapping[float, Sequence[BinaryMask]]] = None):
        self._default = list(masks)
        self._by_threshold = {float(k): list(v) for k, v in (by_threshold or {}).items()}
        self.calls: list[Optional[float]] = []

    def segment(self, image: np.ndarray, threshold: Optional[float] = None) -> list[BinaryMask]:
        self.calls.append(threshold)
        if threshold is not None and float(threshold) in self._by_threshold:
            return list(self._by_threshold[float(threshold)])
        return list(self._default)


class FixtureDetector:
    """Returns fixed detections; a vocab hint can select an alternative set."""

    def __init__(self, detections: Sequence[Detection] = (),
                 by_hint: Optional[Mapping[tuple, Sequence[Detection]]] = None):
        self._default = list(detections)
        self._by_hint = {tuple(k): list(v) for k, v in (by_hint or {}).items()}
        self.calls: list[Optional[tuple]] = []

    def detect(self, image: np.ndarray,
               vocab_hint: Optional[Sequence[str]] = None) -> list[Detection]:
        key = None if vocab_hint is None else tuple(vocab_hint)
        self.calls.append(key)
        if key is not None and key in self._by_hint:
            return list(self._by_hint[key])
        return list(self._default)


class ConstantDepth:
    """A flat depth map with one value everywhere."""

    def __init__(self, value: float = 0.5):
        self.value = float(value)

    def estimate_depth(self, image: np.ndarray) -> DepthMap:
        h, w = image.shape[:2]
        return DepthMap(width=w, height=h, values=np.full((h, w), self.value))


class FixtureDepth:
    def __init__(self, depth: DepthMap):
        self.depth = depth

    def estimate_depth(self, image: np.ndarray) -> DepthMap:
        return self.depth


class IdentityInpainter:
    """Returns the input unchanged; the strictest possible preservation."""

    model_tag = "identity-inpaint"

    def inpaint(self, image: np.ndarray, mask: BinaryMask, prompt: str,
                seed: Optional[int] = None) -> np.ndarray:
        return np.array(image, copy=True)

    def __call__(self, image, mask, prompt, seed=None):
        return self.inpaint(image, mask, prompt, seed)


class FillInpainter:
    """Paints the masked region a solid color; outside pixels are untouched."""

    model_tag = "fill-inpaint"

    def __init__(self, color=(255, 0, 0)):
        self.color = np.asarray(color, dtype=np.uint8)
        self.prompts: list[str] = []

    def inpaint(self, image: np.ndarray, mask: BinaryMask, prompt: str,
                seed: Optional[int] = None) -> np.ndarray:
        self.prompts.append(prompt)
        out = np.array(image, copy=True)
        out[mask.to_array()] = self.color
        return out


class LeakyInpainter:
    """Intentionally violates preservation: flips one pixel outside the mask."""

    model_tag = "leaky-inpaint"

    def __init__(self, color=(255, 0, 0)):
        self.color = np.asarray(color, dtype=np.uint8)

    def inpaint(self, image: np.ndarray, mask: BinaryMask, prompt: str,
                seed: Optional[int] = None) -> np.ndarray:
        out = np.array(image, copy=True)
        inside = mask.to_array()
        out[inside] = self.color
        ys, xs = np.nonzero(~inside)
        if ys.size:
            out[ys[0], xs[0]] = 255 - out[ys[0], xs[0]]
        return out


class ScriptedChat:
    """Serves raw reply texts from per-schema queues, recording every request."""

    model_tag = "scripted-chat"

    def __init__(self, script: Mapping[str, Sequence[str]]):
        self._queues = {name: list(replies) for name, replies in script.items()}
        self.calls: list[ChatRequest] = []

    def chat_raw(self, request: ChatRequest) -> str:
        self.calls.append(request)
        queue = self._queues.get(request.schema_name)
        if not queue:
            raise BackendError(
                f"script exhausted for schema {request.schema_name!r}", backend="scripted-chat")
        return queue.pop(0)

    @staticmethod
    def reply(payload: dict) -> str:
        return json.dumps(payload)


class HashEmbedder:
    """Deterministic embeddings: a seeded unit-free vector per payload hash.

    Identical payloads map to identical vectors (cosine 1.0 after the gateway
    normalizes); the lpips distance is 0 for identical images.
    """

    model_tag = "hash-embed"

    def __init__(self, dim: int = 32):
        self.dim = dim

    def _vector(self, seed_material: bytes) -> np.ndarray:
        seed = int.from_bytes(hashlib.sha256(seed_material).digest()[:8], "big")
        rng = np.random.default_rng(seed)
        return rng.normal(size=self.dim)

    def embed(self, request: EmbedRequest) -> EmbedVector:
        if request.tag == "lpips-distance":
            a = _image_key(request.image)
            b = _image_key(request.image_b)
            distance = 0.0 if a == b else 0.25 + (int(a[:8], 16) ^ int(b[:8], 16)) / 2**33
            return EmbedVector(tag=request.tag, distance=distance)
        if request.tag == "clip-text":
            material = request.text.encode("utf-8")
        else:
            material = bytes.fromhex(_image_key(request.image))
        return EmbedVector(tag=request.tag, values=self._vector(material))


class FixtureEmbedder:
    """Serves embeddings from an explicit queue per tag (for edge-case tests)."""

    model_tag = "fixture-embed"

    def __init__(self, queues: Mapping[str, Sequence[EmbedVector]]):
        self._queues = {tag: list(vectors) for tag, vectors in queues.items()}

    def embed(self, request: EmbedRequest) -> EmbedVector:
        queue = self._queues.get(request.tag)
        if not queue:
            raise BackendError(f"no fixture for tag {request.tag!r}", backend="fixture-embed")
        return queue.pop(0)

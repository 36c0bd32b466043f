"""Wire types for the /v1/* JSON protocol and chat/embed value types.

Images travel as base64 PNG, masks as RLE JSON, depth as a flat row-major
float list. Field-by-field documentation lives in docs/protocol.md.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import MalformedMask, ProtocolViolation, ShapeError
from ..masks import BinaryMask, BoundingBox
from ..ssr import DepthMap, Detection

PROTOCOL_VERSION = 1

SERVICE_KINDS = ("segment", "detect", "depth", "inpaint", "embed", "chat")

EMBED_TAGS = ("clip-image", "clip-text", "dino", "lpips-distance")


def mask_to_wire(mask: BinaryMask) -> dict:
    return mask.to_json_obj()


def mask_from_wire(obj, expected: tuple[int, int] | None = None) -> BinaryMask:
    """Parse an RLE mask body; (width, height) must match ``expected`` if given."""
    if not isinstance(obj, dict):
        raise ProtocolViolation("mask body must be an object")
    try:
        mask = BinaryMask(width=int(obj["width"]), height=int(obj["height"]),
                          runs=tuple(int(r) for r in obj["runs"]))
    except (KeyError, TypeError, ValueError, MalformedMask) as exc:
        raise ProtocolViolation(f"malformed mask body: {exc}") from exc
    if expected is not None and (mask.width, mask.height) != expected:
        raise ProtocolViolation(
            f"mask is {mask.width}x{mask.height}, image is {expected[0]}x{expected[1]}")
    return mask


def detection_to_wire(det: Detection) -> dict:
    return {
        "box": {"x_min": det.box.x_min, "y_min": det.box.y_min,
                "x_max": det.box.x_max, "y_max": det.box.y_max},
        "label": det.label,
        "score": det.score,
    }


def detection_from_wire(obj, image_size: tuple[int, int]) -> Detection:
    """Parse a detection body; the box must lie within the image bounds."""
    try:
        raw_box = obj["box"]
        box = BoundingBox(int(raw_box["x_min"]), int(raw_box["y_min"]),
                          int(raw_box["x_max"]), int(raw_box["y_max"]))
        det = Detection(box=box, label=str(obj["label"]), score=float(obj["score"]))
    except (KeyError, TypeError, ValueError, ShapeError) as exc:
        raise ProtocolViolation(f"malformed detection body: {exc}") from exc
    width, height = image_size
    if not box.within(width, height):
        raise ProtocolViolation(f"box {box} exceeds image bounds {width}x{height}")
    return det


def depth_to_wire(depth: DepthMap) -> dict:
    values = [round(float(v), 6) for v in depth.values.ravel()]
    return {"width": depth.width, "height": depth.height, "values": values}


def depth_from_wire(obj, image_size: tuple[int, int]) -> DepthMap:
    """Parse a depth body; values must be in [0,1] and match the image size."""
    try:
        width, height = int(obj["width"]), int(obj["height"])
        values = np.asarray(obj["values"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolViolation(f"malformed depth body: {exc}") from exc
    if (width, height) != image_size:
        raise ProtocolViolation(
            f"depth is {width}x{height}, image is {image_size[0]}x{image_size[1]}")
    if values.size != width * height:
        raise ProtocolViolation(f"depth has {values.size} values, expected {width * height}")
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise ProtocolViolation("depth values outside [0,1]")
    return DepthMap(width=width, height=height, values=values.reshape(height, width))


# --- chat -------------------------------------------------------------------


def text_part(text: str) -> dict:
    return {"type": "text", "text": text}


def image_part(image: np.ndarray) -> dict:
    from ..imgio import encode_png_b64

    return {"type": "image", "image_png_b64": encode_png_b64(image)}


@dataclass(frozen=True)
class ChatMessage:
    role: str  # "system" | "user" | "assistant"
    parts: tuple[dict, ...]

    def text(self) -> str:
        return "\n".join(p["text"] for p in self.parts if p.get("type") == "text")

    def has_image(self) -> bool:
        return any(p.get("type") == "image" for p in self.parts)


def text_message(role: str, text: str) -> ChatMessage:
    return ChatMessage(role=role, parts=(text_part(text),))


@dataclass(frozen=True)
class ChatRequest:
    """Role-tagged messages plus the name of the schema the reply must satisfy."""

    messages: tuple[ChatMessage, ...]
    schema_name: str
    seed: Optional[int] = None

    def has_image_payload(self) -> bool:
        return any(m.has_image() for m in self.messages)

    def to_wire(self) -> dict:
        return {
            "messages": [{"role": m.role, "parts": list(m.parts)} for m in self.messages],
            "schema": self.schema_name,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ChatResponse:
    """Raw reply text plus the schema-validated payload."""

    text: str
    payload: dict
    malformed: bool = False


# --- embeddings ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EmbedVector:
    """A unit-normalized embedding or a scalar distance, tagged by model."""

    tag: str
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    distance: Optional[float] = None

    def __post_init__(self):
        if self.tag not in EMBED_TAGS:
            raise ProtocolViolation(f"unknown embed tag {self.tag!r}")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.tag == "lpips-distance":
            if self.distance is None or not np.isfinite(self.distance):
                raise ProtocolViolation("lpips-distance requires a finite scalar")
        else:
            if self.values.size == 0 or not np.all(np.isfinite(self.values)):
                raise ProtocolViolation(f"{self.tag} requires a finite vector")


def cosine_similarity(a: EmbedVector, b: EmbedVector) -> float:
    return float(np.dot(a.values, b.values))


@dataclass(frozen=True)
class EmbedRequest:
    tag: str
    image: Optional[np.ndarray] = None
    image_b: Optional[np.ndarray] = None
    text: Optional[str] = None

    def to_wire(self) -> dict:
        from ..imgio import encode_png_b64

        body: dict = {"model": self.tag}
        if self.image is not None:
            body["image"] = encode_png_b64(self.image)
        if self.image_b is not None:
            body["image_b"] = encode_png_b64(self.image_b)
        if self.text is not None:
            body["text"] = self.text
        return body

"""Service clients: contract enforcement over raw backends, HTTP transports.

``ServiceClients`` is the single entry point the engine uses. It wraps any
raw backend (HTTP client or in-process mock) and enforces the gateway
contracts uniformly: geometry validation, inpaint preservation, embed
normalization, and the chat schema-with-repair loop.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from typing import Optional, Sequence

import httpx
import numpy as np

from ..errors import (BackendError, EditLeakage, MalformedLLMOutput,
                      ProtocolViolation, ShapeError)
from ..imgio import decode_png_b64, encode_png_b64
from ..masks import BinaryMask
from ..ssr import DepthMap, Detection
from . import protocol, schemas
from .config import BackendConfig
from .protocol import (ChatMessage, ChatRequest, ChatResponse, EmbedRequest,
                       EmbedVector, text_message)

REPAIR_PROMPT = (
    "Your previous reply was not valid JSON for the required schema. "
    "Reply again with ONLY a JSON object matching the schema, no prose."
)


class HttpTransport:
    """POST JSON with retries; requests carry idempotency keys."""

    def __init__(self, service: str, endpoint: str, timeout: float, retry_count: int,
                 auth_token: Optional[str] = None, transport: Optional[httpx.BaseTransport] = None):
        self.service = service
        self.endpoint = endpoint.rstrip("/")
        self.retry_count = retry_count
        headers = {}
        if auth_token:
            headers["Authorization"] = f"Bearer {auth_token}"
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def post(self, path: str, body: dict) -> dict:
        body = dict(body)
        body.setdefault("idempotency_key", uuid.uuid4().hex)
        last_error: Exception | None = None
        for _ in range(self.retry_count + 1):
            try:
                response = self._client.post(f"{self.endpoint}{path}", json=body)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = BackendError(
                    f"HTTP {response.status_code}: {response.text[:200]}", backend=self.service)
                continue
            if response.status_code >= 400:
                raise BackendError(
                    f"HTTP {response.status_code}: {response.text[:200]}", backend=self.service)
            try:
                return response.json()
            except json.JSONDecodeError as exc:
                raise ProtocolViolation(f"{self.service}: non-JSON response body") from exc
        raise BackendError(f"transport failed after retries: {last_error}", backend=self.service)


class HttpSegmenter:
    def __init__(self, transport: HttpTransport):
        self._t = transport

    def segment(self, image: np.ndarray, threshold: Optional[float] = None) -> list[BinaryMask]:
        body = {"image": encode_png_b64(image)}
        if threshold is not None:
            body["threshold"] = float(threshold)
        reply = self._t.post("/v1/segment", body)
        h, w = image.shape[:2]
        return [protocol.mask_from_wire(m, (w, h)) for m in reply.get("masks", [])]


class HttpDetector:
    def __init__(self, transport: HttpTransport):
        self._t = transport

    def detect(self, image: np.ndarray,
               vocab_hint: Optional[Sequence[str]] = None) -> list[Detection]:
        body = {"image": encode_png_b64(image)}
        if vocab_hint is not None:
            body["vocab_hint"] = list(vocab_hint)
        reply = self._t.post("/v1/detect", body)
        h, w = image.shape[:2]
        return [protocol.detection_from_wire(d, (w, h)) for d in reply.get("detections", [])]


class HttpDepthEstimator:
    def __init__(self, transport: HttpTransport):
        self._t = transport

    def estimate_depth(self, image: np.ndarray) -> DepthMap:
        reply = self._t.post("/v1/depth", {"image": encode_png_b64(image)})
        h, w = image.shape[:2]
        return protocol.depth_from_wire(reply.get("depth", {}), (w, h))


class HttpInpainter:
    model_tag = "http-inpaint"

    def __init__(self, transport: HttpTransport):
        self._t = transport

    def inpaint(self, image: np.ndarray, mask: BinaryMask, prompt: str,
                seed: Optional[int] = None) -> np.ndarray:
        body = {
            "image": encode_png_b64(image),
            "mask": protocol.mask_to_wire(mask),
            "prompt": prompt,
        }
        if seed is not None:
            body["seed"] = int(seed)
        reply = self._t.post("/v1/inpaint", body)
        try:
            return decode_png_b64(reply["image"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolViolation(f"malformed inpaint reply: {exc}") from exc


class HttpChat:
    model_tag = "http-chat"

    def __init__(self, transport: HttpTransport):
        self._t = transport

    def chat_raw(self, request: ChatRequest) -> str:
        reply = self._t.post("/v1/chat", request.to_wire())
        try:
            return str(reply["text"])
        except (KeyError, TypeError) as exc:
            raise ProtocolViolation(f"malformed chat reply: {exc}") from exc


class HttpEmbedder:
    model_tag = "http-embed"

    def __init__(self, transport: HttpTransport):
        self._t = transport

    def embed(self, request: EmbedRequest) -> EmbedVector:
        reply = self._t.post("/v1/embed", request.to_wire())
        try:
            if request.tag == "lpips-distance":
                return EmbedVector(tag=request.tag, distance=float(reply["distance"]))
            return EmbedVector(tag=request.tag,
                               values=np.asarray(reply["values"], dtype=np.float64))
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolViolation(f"malformed embed reply: {exc}") from exc


@dataclass
class ServiceClients:
    """The engine-facing bundle; every call is contract-checked here.

    Backends left as None make the corresponding call raise BackendError,
    so partially configured pipelines fail with a clear identity.
    """

    segmenter: object = None
    detector: object = None
    depth_estimator: object = None
    inpainter: object = None
    chat_backend: object = None
    embedder: object = None
    preservation: str = "strict"
    preservation_tolerance: int = 2
    seed: Optional[int] = None
    chat_log: list = field(default_factory=list)

    @classmethod
    def from_config(cls, config: BackendConfig,
                    transport: Optional[httpx.BaseTransport] = None) -> "ServiceClients":
        """Build clients from a backend config (HTTP and/or fixture services)."""
        from .fixtures import load_fixture_backend

        backends: dict[str, object] = {}
        for name, service in config.services.items():
            if service.kind == "http":
                http = HttpTransport(name, service.endpoint, config.timeout,
                                     config.retry_count, config.auth_token, transport)
                backends[name] = {
                    "segment": HttpSegmenter, "detect": HttpDetector,
                    "depth": HttpDepthEstimator, "inpaint": HttpInpainter,
                    "chat": HttpChat, "embed": HttpEmbedder,
                }[name](http)
            else:
                backends[name] = load_fixture_backend(name, service)
        return cls(
            segmenter=backends.get("segment"),
            detector=backends.get("detect"),
            depth_estimator=backends.get("depth"),
            inpainter=backends.get("inpaint"),
            chat_backend=backends.get("chat"),
            embedder=backends.get("embed"),
            preservation=config.preservation,
            preservation_tolerance=config.preservation_tolerance,
        )

    def _require(self, backend, name: str):
        if backend is None:
            raise BackendError("service not configured", backend=name)
        return backend

    # --- perception ---------------------------------------------------------

    def segment(self, image: np.ndarray, threshold: Optional[float] = None) -> list[BinaryMask]:
        backend = self._require(self.segmenter, "segment")
        masks = backend.segment(image, threshold=threshold)
        h, w = image.shape[:2]
        for mask in masks:
            if (mask.width, mask.height) != (w, h):
                raise ProtocolViolation(
                    f"segmenter returned {mask.width}x{mask.height} mask for {w}x{h} image")
        return masks

    def detect(self, image: np.ndarray,
               vocab_hint: Optional[Sequence[str]] = None) -> list[Detection]:
        backend = self._require(self.detector, "detect")
        detections = backend.detect(image, vocab_hint=vocab_hint)
        h, w = image.shape[:2]
        for det in detections:
            if not det.box.within(w, h):
                raise ProtocolViolation(f"detection box {det.box} exceeds {w}x{h} image")
        return detections

    def estimate_depth(self, image: np.ndarray) -> DepthMap:
        backend = self._require(self.depth_estimator, "depth")
        depth = backend.estimate_depth(image)
        h, w = image.shape[:2]
        if (depth.width, depth.height) != (w, h):
            raise ProtocolViolation(f"depth map is {depth.width}x{depth.height}, image {w}x{h}")
        return depth

    # --- inpainting -----------------------------------------------------------

    def inpaint(self, image: np.ndarray, mask: BinaryMask, prompt: str) -> np.ndarray:
        backend = self._require(self.inpainter, "inpaint")
        h, w = image.shape[:2]
        if (mask.width, mask.height) != (w, h):
            raise ShapeError(f"mask is {mask.width}x{mask.height}, image is {w}x{h}")
        out = backend.inpaint(image, mask, prompt, seed=self.seed)
        out = np.asarray(out)
        if out.shape != image.shape:
            raise ProtocolViolation(
                f"inpaint output shape {out.shape} differs from input {image.shape}")
        outside = ~mask.to_array()
        diff = np.abs(out.astype(np.int16) - image.astype(np.int16))
        if image.ndim == 3:
            outside_diff = diff[outside, :]
        else:
            outside_diff = diff[outside]
        if self.preservation == "strict":
            if outside_diff.size and outside_diff.max() > 0:
                raise EditLeakage("inpaint modified pixels outside the mask (strict mode)")
        else:
            if outside_diff.size and outside_diff.max() > self.preservation_tolerance:
                raise EditLeakage(
                    f"outside-mask drift {int(outside_diff.max())} exceeds "
                    f"tolerance {self.preservation_tolerance}")
        return out

    # --- chat ------------------------------------------------------------------

    def chat(self, request: ChatRequest) -> ChatResponse:
        """Send a chat request; one repair retry on malformed output."""
        backend = self._require(self.chat_backend, "chat")
        if not schemas.known_schema(request.schema_name):
            raise ProtocolViolation(f"unknown chat schema {request.schema_name!r}")
        if request.seed is None and self.seed is not None:
            request = ChatRequest(messages=request.messages,
                                  schema_name=request.schema_name, seed=self.seed)
        text = backend.chat_raw(request)
        self.chat_log.append(request)
        payload = self._parse_payload(request.schema_name, text)
        if payload is not None:
            return ChatResponse(text=text, payload=payload)
        repair = ChatRequest(
            messages=request.messages + (
                ChatMessage(role="assistant", parts=(protocol.text_part(text),)),
                text_message("user", REPAIR_PROMPT),
            ),
            schema_name=request.schema_name,
            seed=request.seed,
        )
        text = backend.chat_raw(repair)
        self.chat_log.append(repair)
        payload = self._parse_payload(request.schema_name, text)
        if payload is None:
            raise MalformedLLMOutput(
                f"chat reply failed schema {request.schema_name!r} after repair retry")
        return ChatResponse(text=text, payload=payload)

    @staticmethod
    def _parse_payload(schema_name: str, text: str) -> Optional[dict]:
        import jsonschema

        try:
            payload = json.loads(text)
        except json.JSONDecodeError:
            return None
        try:
            schemas.validate_payload(schema_name, payload)
        except jsonschema.ValidationError:
            return None
        return payload

    # --- embeddings ---------------------------------------------------------------

    def embed(self, request: EmbedRequest) -> EmbedVector:
        backend = self._require(self.embedder, "embed")
        vector = backend.embed(request)
        if vector.tag != request.tag:
            raise ProtocolViolation(
                f"embed backend answered tag {vector.tag!r} for request {request.tag!r}")
        if vector.tag == "lpips-distance":
            return vector
        norm = float(np.linalg.norm(vector.values))
        if norm == 0.0:
            raise ProtocolViolation("embed backend returned a zero vector")
        return EmbedVector(tag=vector.tag, values=vector.values / norm)

    def has_embedder(self) -> bool:
        return self.embedder is not None

    def chat_model_tag(self) -> str:
        backend = self.chat_backend
        return getattr(backend, "model_tag", "unknown") if backend else "unconfigured"

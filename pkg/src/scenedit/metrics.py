"""Image-quality metrics: native PSNR/SSIM/L1/L2, delegated LPIPS/CLIP/DINO,
and the two-stage LLM-judged edit-correctness score."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (EmptyRegion, MalformedLLMOutput, MetricUnavailable,
                     ShapeError)
from .gateway.protocol import (ChatMessage, ChatRequest, EmbedRequest,
                               cosine_similarity, image_part, text_part)
from .masks import BinaryMask
from .reasoning import templates

PSNR_CAP_DB = 100.0  # reported for zero MSE

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = (0.01 * 255.0) ** 2
SSIM_C2 = (0.03 * 255.0) ** 2

DELEGATED_TAGS = ("lpips", "clip", "clip_i", "dino")


def _check_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def _region_bool(region: Optional[BinaryMask], shape) -> Optional[np.ndarray]:
    if region is None:
        return None
    arr = region.to_array()
    if arr.shape != shape[:2]:
        raise ShapeError(f"region is {arr.shape}, image is {shape[:2]}")
    if not arr.any():
        raise EmptyRegion("metric region has no pixels")
    return arr


def psnr(a: np.ndarray, b: np.ndarray, region: Optional[BinaryMask] = None) -> float:
    """Peak signal-to-noise ratio in dB over the region (whole image if None).

    Zero MSE reports the cap value 100.0 dB.
    """
    a, b = _check_pair(a, b)
    selector = _region_bool(region, a.shape)
    diff = a.astype(np.float64) - b.astype(np.float64)
    if selector is not None:
        diff = diff[selector]
    mse = float(np.mean(np.square(diff)))
    if mse == 0.0:
        return PSNR_CAP_DB
    return float(10.0 * np.log10(255.0 ** 2 / mse))


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    kernel = np.exp(-(offsets ** 2) / (2.0 * sigma ** 2))
    return kernel / kernel.sum()


def _filter_valid(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable valid-mode 2-D filtering with a 1-D kernel."""
    from numpy.lib.stride_tricks import sliding_window_view

    rows = sliding_window_view(img, kernel.size, axis=1) @ kernel
    return sliding_window_view(rows, kernel.size, axis=0) @ kernel


def _ssim_map(x: np.ndarray, y: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    mu_x = _filter_valid(x, kernel)
    mu_y = _filter_valid(y, kernel)
    var_x = _filter_valid(x * x, kernel) - mu_x * mu_x
    var_y = _filter_valid(y * y, kernel) - mu_y * mu_y
    cov = _filter_valid(x * y, kernel) - mu_x * mu_y
    return (((2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2))
            / ((mu_x * mu_x + mu_y * mu_y + SSIM_C1) * (var_x + var_y + SSIM_C2)))


def ssim(a: np.ndarray, b: np.ndarray, region: Optional[BinaryMask] = None) -> float:
    """Structural similarity with the standard 11x11 Gaussian window (sigma 1.5).

    The map is averaged over valid window centers (those whose full window
    fits inside the image); a region restricts which centers count.
    """
    a, b = _check_pair(a, b)
    if a.shape[0] < SSIM_WINDOW or a.shape[1] < SSIM_WINDOW:
        raise ShapeError(
            f"image {a.shape[1]}x{a.shape[0]} is smaller than the "
            f"{SSIM_WINDOW}x{SSIM_WINDOW} window")
    selector = _region_bool(region, a.shape)
    margin = SSIM_WINDOW // 2
    center_sel = None
    if selector is not None:
        center_sel = selector[margin:-margin, margin:-margin]
        if not center_sel.any():
            raise EmptyRegion("no full SSIM window fits inside the region")
    kernel = _gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA)
    channels = a[..., None] if a.ndim == 2 else a
    channels_b = b[..., None] if b.ndim == 2 else b
    means = []
    for c in range(channels.shape[2]):
        smap = _ssim_map(channels[:, :, c].astype(np.float64),
                         channels_b[:, :, c].astype(np.float64), kernel)
        means.append(float(smap[center_sel].mean() if center_sel is not None
                           else smap.mean()))
    return float(np.mean(means))


def l1(a: np.ndarray, b: np.ndarray) -> float:
    """Mean absolute difference with pixels normalized to [0,1]."""
    a, b = _check_pair(a, b)
    return float(np.mean(np.abs(a.astype(np.float64) - b.astype(np.float64))) / 255.0)


def l2(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared difference with pixels normalized to [0,1]."""
    a, b = _check_pair(a, b)
    return float(np.mean(np.square((a.astype(np.float64) - b.astype(np.float64)) / 255.0)))


def delegated_metric(a: np.ndarray, other, tag: str, clients=None) -> float:
    """LPIPS / CLIP / CLIP-I / DINO via the embedding backend.

    ``other`` is the comparison image, except for ``clip`` where it is the
    text prompt. Raises MetricUnavailable when no backend is configured.
    """
    if tag not in DELEGATED_TAGS:
        raise MetricUnavailable(f"unknown delegated metric {tag!r}")
    if clients is None or not clients.has_embedder():
        raise MetricUnavailable(f"no embedding backend configured for {tag!r}")
    if tag == "lpips":
        vector = clients.embed(EmbedRequest(tag="lpips-distance", image=a, image_b=other))
        return float(vector.distance)
    if tag == "clip":
        va = clients.embed(EmbedRequest(tag="clip-image", image=a))
        vb = clients.embed(EmbedRequest(tag="clip-text", text=str(other)))
        return cosine_similarity(va, vb)
    model = "clip-image" if tag == "clip_i" else "dino"
    va = clients.embed(EmbedRequest(tag=model, image=a))
    vb = clients.embed(EmbedRequest(tag=model, image=other))
    return cosine_similarity(va, vb)


@dataclass(frozen=True)
class DiffReport:
    """The judge's description of what changed between the two images."""

    description: str
    model_tag: str
    prompt_version: str = templates.PROMPT_VERSION

    def __post_init__(self):
        if not self.description:
            raise MalformedLLMOutput("empty difference description")


def idcs(original: np.ndarray, edited: np.ndarray, query: str, clients) -> tuple[int, DiffReport]:
    """Two-stage LLM-judged edit score in {1..5}.

    Stage one describes the differences and sees both images but not the
    query; stage two scores the description against the query and carries no
    image payload. The stage separation is part of the contract.
    """
    describe = ChatRequest(
        messages=(ChatMessage(role="user", parts=(
            text_part(templates.load_template("idcs_describe")),
            image_part(original),
            image_part(edited),
        )),),
        schema_name="idcs_description",
    )
    description = clients.chat(describe).payload["description"]
    report = DiffReport(description=description, model_tag=clients.chat_model_tag())

    score_request = ChatRequest(
        messages=(ChatMessage(role="user", parts=(
            text_part(templates.render("idcs_score", query=query,
                                       description=description)),
        )),),
        schema_name="idcs_score",
    )
    assert not score_request.has_image_payload()
    score = int(clients.chat(score_request).payload["score"])
    if score not in (1, 2, 3, 4, 5):
        raise MalformedLLMOutput(f"judge score {score} outside 1..5")
    return score, report

"""Shared fixtures: random rasters, oracle implementations, canned scenes.

The oracle functions here are deliberately independent of the package's
code paths (no kernel calls): dense-bitmap counting, pixel enumeration,
sort-based medians, direct-from-definition SSIM.
"""

from __future__ import annotations

import json

import numpy as np
import pytest

from scenedit.masks import BinaryMask, BoundingBox
from scenedit.ssr import DepthMap, Detection
from scenedit.gateway import ServiceClients
from scenedit.gateway.mocks import (ConstantDepth, FillInpainter, FixtureDepth,
                                    FixtureDetector, FixtureSegmenter,
                                    HashEmbedder, IdentityInpainter, ScriptedChat)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_raster(rng, height, width, density=0.4):
    return rng.random((height, width)) < density


# --- independent oracles ------------------------------------------------------


def iou_oracle(a: np.ndarray, b: np.ndarray) -> float:
    inter = int(np.logical_and(a, b).sum())
    union = int(np.logical_or(a, b).sum())
    return inter / union if union else 0.0


def box_raster(box: BoundingBox, width: int, height: int) -> np.ndarray:
    arr = np.zeros((height, width), dtype=bool)
    arr[box.y_min:box.y_max + 1, box.x_min:box.x_max + 1] = True
    return arr


def assign_oracle(rasters, detections, tau, width, height):
    """Exhaustive argmax over the full IoU table; ties by score then index."""
    labels = []
    for raster in rasters:
        best = None
        for index, det in enumerate(detections):
            iou = iou_oracle(raster, box_raster(det.box, width, height))
            key = (iou, det.score, -index)
            if best is None or key > best[0]:
                best = (key, det.label)
        if best is None or best[0][0] < tau:
            labels.append(None)
        else:
            labels.append(best[1])
    return labels


def touches_oracle(a: np.ndarray, b: np.ndarray) -> bool:
    """Overlap or 8-adjacency by brute-force pixel enumeration."""
    from scipy.ndimage import binary_dilation

    return bool(np.logical_and(binary_dilation(a, np.ones((3, 3), bool)), b).any())


def merge_groups_oracle(rasters, labels):
    """Transitive closure of same-label touching; returns groups of indices
    in first-appearance order."""
    n = len(rasters)
    adjacency = [[False] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if labels[i] is not None and labels[i] == labels[j] \
                    and touches_oracle(rasters[i], rasters[j]):
                adjacency[i][j] = adjacency[j][i] = True
    seen, groups = set(), []
    for start in range(n):
        if start in seen:
            continue
        stack, group = [start], []
        seen.add(start)
        while stack:
            node = stack.pop()
            group.append(node)
            for other in range(n):
                if adjacency[node][other] and other not in seen:
                    seen.add(other)
                    stack.append(other)
        groups.append(sorted(group))
    return groups


def median_oracle(values) -> float:
    ordered = sorted(values)
    n = len(ordered)
    if n % 2:
        return float(ordered[n // 2])
    return float((ordered[n // 2 - 1] + ordered[n // 2]) / 2.0)


def dilate_oracle(raster: np.ndarray, radius: int) -> np.ndarray:
    """Per-pixel Chebyshev-ball enumeration."""
    h, w = raster.shape
    out = np.zeros_like(raster, dtype=bool)
    for y in range(h):
        for x in range(w):
            y0, y1 = max(0, y - radius), min(h, y + radius + 1)
            x0, x1 = max(0, x - radius), min(w, x + radius + 1)
            out[y, x] = raster[y0:y1, x0:x1].any()
    return out


def ssim_oracle(a: np.ndarray, b: np.ndarray) -> float:
    """SSIM straight from the definition: loop over window centers, compute
    Gaussian-weighted moments explicitly."""
    window, sigma = 11, 1.5
    c1, c2 = (0.01 * 255) ** 2, (0.03 * 255) ** 2
    offsets = np.arange(window) - (window - 1) / 2
    g = np.exp(-offsets**2 / (2 * sigma**2))
    weights = np.outer(g, g)
    weights = weights / weights.sum()

    def channel_ssim(x, y):
        h, w = x.shape
        values = []
        for cy in range(h - window + 1):
            for cx in range(w - window + 1):
                px = x[cy:cy + window, cx:cx + window].astype(np.float64)
                py = y[cy:cy + window, cx:cx + window].astype(np.float64)
                mx, my = (weights * px).sum(), (weights * py).sum()
                vx = (weights * (px - mx) ** 2).sum()
                vy = (weights * (py - my) ** 2).sum()
                cxy = (weights * (px - mx) * (py - my)).sum()
                values.append(((2 * mx * my + c1) * (2 * cxy + c2))
                              / ((mx**2 + my**2 + c1) * (vx + vy + c2)))
        return float(np.mean(values))

    if a.ndim == 2:
        return channel_ssim(a, b)
    return float(np.mean([channel_ssim(a[:, :, c], b[:, :, c])
                          for c in range(a.shape[2])]))


# --- canned scene --------------------------------------------------------------


def two_object_backends(fill_color=(255, 0, 0)):
    """An 8x8 scene with a near small 'cup' and a far large 'plate'."""
    image = np.full((8, 8, 3), 40, np.uint8)
    near = np.zeros((8, 8), bool)
    near[1:3, 1:3] = True  # area 4, depth 0.2
    far = np.zeros((8, 8), bool)
    far[5:8, 4:8] = True  # area 12, depth 0.8
    depth = np.zeros((8, 8))
    depth[near] = 0.2
    depth[far] = 0.8
    masks = [BinaryMask.from_array(near), BinaryMask.from_array(far)]
    detections = [
        Detection(box=BoundingBox(1, 1, 2, 2), label="cup", score=0.9),
        Detection(box=BoundingBox(4, 5, 7, 7), label="plate", score=0.8),
    ]
    return {
        "image": image,
        "near": near,
        "far": far,
        "segmenter": FixtureSegmenter(masks),
        "detector": FixtureDetector(detections),
        "depth": FixtureDepth(DepthMap(width=8, height=8, values=depth)),
        "fill": FillInpainter(fill_color),
        "identity": IdentityInpainter(),
    }


def scripted_clients(script: dict, backends=None, inpainter="fill", **kwargs) -> ServiceClients:
    backends = backends or two_object_backends()
    return ServiceClients(
        segmenter=backends["segmenter"],
        detector=backends["detector"],
        depth_estimator=backends["depth"],
        inpainter=backends[inpainter],
        chat_backend=ScriptedChat({k: [json.dumps(r) if isinstance(r, dict) else r
                                       for r in v]
                                   for k, v in script.items()}),
        embedder=HashEmbedder(),
        **kwargs,
    )

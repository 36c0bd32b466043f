"""Binary masks (run-length encoded), bounding boxes, and mask algebra."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from . import kernels
from .errors import EmptyRegion, MalformedMask, ShapeError


def _canonical_runs(runs: Sequence[int], total: int) -> tuple[int, ...]:
    """Validate and canonicalize alternating counts (no interior/trailing zeros)."""
    if any(r < 0 for r in runs):
        raise MalformedMask("negative run length")
    if sum(runs) != total:
        raise MalformedMask(f"run lengths sum to {sum(runs)}, expected {total}")
    out: list[int] = []
    values: list[int] = []
    for i, r in enumerate(runs):
        value = i % 2  # 0 = background run, 1 = foreground run
        if r == 0:
            continue
        if values and values[-1] == value:
            out[-1] += r
        else:
            out.append(r)
            values.append(value)
    if not out:
        return (total,)
    if values[0] == 1:
        out.insert(0, 0)
    return tuple(out)


@dataclass(frozen=True)
class BinaryMask:
    """A raster region stored as alternating background/foreground run counts.

    Runs are over row-major pixel order and start with background (a leading
    0 when the first pixel is foreground). Canonicalized at construction so
    equal regions compare and hash equal.
    """

    width: int
    height: int
    runs: tuple[int, ...]

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise MalformedMask("mask dimensions must be positive")
        object.__setattr__(self, "runs", _canonical_runs(self.runs, self.width * self.height))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "BinaryMask":
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise ShapeError(f"expected a 2-D raster, got shape {arr.shape}")
        h, w = arr.shape
        counts = kernels.rle_encode((arr != 0).astype(np.uint8).ravel())
        return cls(width=w, height=h, runs=tuple(int(c) for c in counts))

    def to_array(self) -> np.ndarray:
        flat = kernels.rle_decode(np.asarray(self.runs, dtype=np.int64), self.width * self.height)
        return flat.reshape(self.height, self.width).astype(bool)

    @property
    def area(self) -> int:
        return sum(self.runs[1::2])

    def is_empty(self) -> bool:
        return self.area == 0

    def complement(self) -> "BinaryMask":
        return BinaryMask.from_array(~self.to_array())

    def bbox(self) -> "BoundingBox":
        """Tight bounding box of the foreground; EmptyRegion if there is none."""
        arr = self.to_array()
        ys, xs = np.nonzero(arr)
        if ys.size == 0:
            raise EmptyRegion("mask has no foreground pixels")
        return BoundingBox(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))

    def to_json_obj(self) -> dict:
        return {"width": self.width, "height": self.height, "runs": list(self.runs)}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "BinaryMask":
        return cls(width=int(obj["width"]), height=int(obj["height"]),
                   runs=tuple(int(r) for r in obj["runs"]))


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box, inclusive pixel coordinates."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ShapeError(f"degenerate box {self}")
        if self.x_min < 0 or self.y_min < 0:
            raise ShapeError(f"box {self} has negative coordinates")

    def within(self, width: int, height: int) -> bool:
        return self.x_max < width and self.y_max < height

    def to_mask(self, width: int, height: int) -> BinaryMask:
        if not self.within(width, height):
            raise ShapeError(f"box {self} exceeds {width}x{height} image bounds")
        arr = np.zeros((height, width), dtype=bool)
        arr[self.y_min:self.y_max + 1, self.x_min:self.x_max + 1] = True
        return BinaryMask.from_array(arr)


Region = Union[BinaryMask, BoundingBox]


def _as_mask(region: Region, width: int, height: int) -> BinaryMask:
    if isinstance(region, BoundingBox):
        return region.to_mask(width, height)
    return region


def _region_dims(a: Region, b: Region) -> tuple[int, int]:
    dims = [(r.width, r.height) for r in (a, b) if isinstance(r, BinaryMask)]
    if not dims:
        raise ShapeError("box-vs-box IoU needs explicit image dimensions; rasterize first")
    if len(dims) == 2 and dims[0] != dims[1]:
        raise ShapeError(f"region dimensions differ: {dims[0]} vs {dims[1]}")
    return dims[0]


def region_iou(a: Region, b: Region) -> float:
    """Intersection over union of two regions; boxes are rasterized filled.

    Returns 0.0 when the union is empty.
    """
    w, h = _region_dims(a, b)
    ma, mb = _as_mask(a, w, h), _as_mask(b, w, h)
    inter, union = kernels.inter_union(
        ma.to_array().ravel().astype(np.uint8), mb.to_array().ravel().astype(np.uint8))
    if union == 0:
        return 0.0
    return inter / union


def mask_union(masks: Iterable[BinaryMask]) -> BinaryMask:
    masks = list(masks)
    if not masks:
        raise EmptyRegion("union of zero masks")
    dims = {(m.width, m.height) for m in masks}
    if len(dims) != 1:
        raise ShapeError(f"mask dimensions differ: {sorted(dims)}")
    out = np.zeros((masks[0].height, masks[0].width), dtype=bool)
    for m in masks:
        out |= m.to_array()
    return BinaryMask.from_array(out)


def dilate_mask(mask: BinaryMask, factor: int) -> BinaryMask:
    """Morphological dilation by a square structuring element of radius ``factor``.

    Factor 0 is the identity.
    """
    if factor < 0:
        raise ShapeError("dilation factor must be non-negative")
    if factor == 0:
        return mask
    out = kernels.dilate(mask.to_array().astype(np.uint8), factor)
    return BinaryMask.from_array(out)


def masks_touch(a: BinaryMask, b: BinaryMask) -> bool:
    """True when the masks overlap or are 8-adjacent (Chebyshev distance <= 1)."""
    if (a.width, a.height) != (b.width, b.height):
        raise ShapeError("mask dimensions differ")
    grown = kernels.dilate(a.to_array().astype(np.uint8), 1)
    inter, _ = kernels.inter_union(grown.ravel(), b.to_array().ravel().astype(np.uint8))
    return inter > 0

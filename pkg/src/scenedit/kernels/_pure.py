"""Numpy fallback for the mask kernels.

Same contracts as the compiled core in ``_core.pyx``; selected at import time
by :mod:`scenedit.kernels` when the extension is unavailable or disabled.
"""

import numpy as np

BACKEND = "numpy"


def rle_encode(flat):
    """Run-length counts of a flat 0/1 array, alternating and starting with 0s.

    ``flat`` is row-major pixel order; the first count is the number of leading
    background pixels (possibly 0 when the array starts with foreground).
    """
    flat = np.ascontiguousarray(flat, dtype=np.uint8)
    n = flat.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [n]))
    counts = np.diff(bounds).astype(np.int64)
    if flat[0] != 0:
        counts = np.concatenate(([0], counts))
    return counts


def rle_decode(counts, total):
    """Expand alternating background/foreground counts into a flat 0/1 array."""
    counts = np.asarray(counts, dtype=np.int64)
    if counts.size and counts.min() < 0:
        raise ValueError("negative run length")
    if int(counts.sum()) != total:
        raise ValueError(f"run lengths sum to {int(counts.sum())}, expected {total}")
    values = np.zeros(counts.shape[0], dtype=np.uint8)
    values[1::2] = 1
    return np.repeat(values, counts)


def inter_union(a, b):
    """Foreground intersection and union counts of two flat 0/1 arrays."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    inter = int(np.count_nonzero(a & b))
    union = int(np.count_nonzero(a)) + int(np.count_nonzero(b)) - inter
    return inter, union


def dilate(mask, radius):
    """Binary dilation by a square structuring element of the given radius.

    Separable: a horizontal OR-window pass followed by a vertical one.
    """
    if radius <= 0:
        return np.array(mask, dtype=np.uint8, copy=True)
    out = np.asarray(mask, dtype=bool)
    for axis in (1, 0):
        acc = out.copy()
        for shift in range(1, radius + 1):
            pad = [(0, 0), (0, 0)]
            pad[axis] = (shift, 0)
            sl = [slice(None), slice(None)]
            sl[axis] = slice(None, out.shape[axis])
            acc |= np.pad(out, pad)[tuple(sl)]
            pad[axis] = (0, shift)
            sl[axis] = slice(shift, None)
            acc |= np.pad(out, pad)[tuple(sl)]
        out = acc
    return out.astype(np.uint8)

"""Discontinuity Score (DS) for the wrap-around seam of equirect images.

A 6-pixel-wide greyscale strip is cut around the seam (the seam lies
between strip columns 2 and 3), correlated with a 3x3 horizontal derivative
kernel, and scored by how much stronger the response right at the seam is
than one pixel away from it on either side::

    DS(a) = 1/(2L) * sum_y ( |r(2,y)| / (|r(1,y)| + c) + |r(3,y)| / (|r(4,y)| + c) )

Image scores weight each strip by its length relative to the image height.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .projection import as_image

STRIP_WIDTH = 6
_BT601 = np.array([0.299, 0.587, 0.114])

# Scharr smoothing column (3, 10, 3) times a horizontal derivative row.
SCHARR_FIRST_ORDER = np.array([[-3.0, 0.0, 3.0], [-10.0, 0.0, 10.0], [-3.0, 0.0, 3.0]])
SCHARR_SECOND_ORDER = np.outer([3.0, 10.0, 3.0], [1.0, -2.0, 1.0])
KERNELS = {
    "scharr_second_order": SCHARR_SECOND_ORDER,
    "scharr_first_order": SCHARR_FIRST_ORDER,
}


@dataclass(frozen=True)
class DsConfig:
    kernel: str = "scharr_second_order"
    c: float = 0.1

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise InvalidInputError(f"unknown DS kernel {self.kernel!r}; expected one of {sorted(KERNELS)}")
        if not (math.isfinite(self.c) and self.c > 0):
            raise InvalidInputError(f"DS stabiliser c must be positive, got {self.c}")

    @property
    def matrix(self) -> np.ndarray:
        return KERNELS[self.kernel]

    def to_dict(self) -> dict:
        return {"kernel": self.kernel, "c": self.c, "padding": "replicate"}


@dataclass
class SeamStrip:
    values: np.ndarray  # (L, 6) greyscale, seam between columns 2 and 3
    seam_id: str = "wrap"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != STRIP_WIDTH or self.values.shape[0] < 1:
            raise InvalidInputError(f"seam strip must have shape (L, 6), got {self.values.shape}")

    @property
    def length(self) -> int:
        return self.values.shape[0]


def to_grey(img) -> np.ndarray:
    return np.asarray(img, dtype=np.float64) @ _BT601


def extract_seam_strips(img) -> list:
    """The single wrap-around strip: columns W-3, W-2, W-1, 0, 1, 2."""
    arr = as_image(img)
    w = arr.shape[1]
    if w < STRIP_WIDTH:
        raise InvalidInputError(f"image width {w} is below the strip width {STRIP_WIDTH}")
    cols = [w - 3, w - 2, w - 1, 0, 1, 2]
    return [SeamStrip(to_grey(arr[:, cols]), "wrap")]


def convolve_kernel(strip, cfg: DsConfig = DsConfig()) -> np.ndarray:
    """3x3 correlation of a strip, replicate-padded on all sides.

    Only columns 1..4 are used by the score; columns 0 and 5 see the padded
    border. The vertically symmetric kernel is applied as
    ``mid * a[y] + edge * (a[y-1] + a[y+1])`` so the result does not depend on
    the direction the rows are traversed in.
    """
    a = strip.values if isinstance(strip, SeamStrip) else SeamStrip(strip).values
    k = cfg.matrix
    if not np.array_equal(k[0], k[2]):
        raise InvalidInputError("DS kernels must be vertically symmetric")
    padded = np.pad(a, 1, mode="edge")
    centre = padded[1:-1]
    outer = padded[:-2] + padded[2:]
    out = np.zeros_like(a)
    for j in range(3):
        out += k[1, j] * centre[:, j:j + STRIP_WIDTH] + k[0, j] * outer[:, j:j + STRIP_WIDTH]
    return out


def ds_strip(response, length: int | None = None, cfg: DsConfig = DsConfig()) -> float:
    resp = np.abs(np.asarray(response, dtype=np.float64))
    if resp.ndim != 2 or resp.shape[1] != STRIP_WIDTH:
        raise InvalidInputError(f"response must have shape (L, 6), got {resp.shape}")
    if length is None:
        length = resp.shape[0]
    terms = resp[:, 2] / (resp[:, 1] + cfg.c) + resp[:, 3] / (resp[:, 4] + cfg.c)
    # fsum is exactly rounded, so row order cannot change the score
    return math.fsum(terms) / (2.0 * length)


def ds_image(img, cfg: DsConfig = DsConfig()) -> float:
    arr = as_image(img)
    height = arr.shape[0]
    return math.fsum(
        (s.length / height) * ds_strip(convolve_kernel(s, cfg), s.length, cfg)
        for s in extract_seam_strips(arr)
    )


@dataclass
class DsSummary:
    ids: list
    scores: np.ndarray
    mean: float
    q1: float
    median: float
    q3: float
    iqr: float
    percentile_exemplars: dict  # percentile (0, 10, ..., 100) -> image id

    def to_dict(self) -> dict:
        return {
            "count": len(self.ids),
            "mean": self.mean,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "iqr": self.iqr,
            "percentile_exemplars": {str(p): i for p, i in self.percentile_exemplars.items()},
        }

    def rows(self):
        return list(zip(self.ids, (float(s) for s in self.scores)))


def summarize_scores(ids, scores) -> DsSummary:
    """Mean, quartiles and nearest-rank exemplars at every 10th percentile."""
    ids = list(ids)
    scores = np.asarray(scores, dtype=np.float64)
    if len(ids) != len(scores) or not ids:
        raise InvalidInputError("need one score per id and at least one image")
    order = sorted(range(len(ids)), key=lambda i: (scores[i], i))
    n = len(ids)
    exemplars = {p: ids[order[int(math.floor(p / 100 * (n - 1) + 0.5))]] for p in range(0, 101, 10)}
    q1, med, q3 = (float(x) for x in np.percentile(scores, [25, 50, 75]))
    return DsSummary(ids, scores, math.fsum(scores) / n, q1, med, q3, q3 - q1, exemplars)


def ds_dataset(images, cfg: DsConfig = DsConfig(), ids=None) -> DsSummary:
    images = list(images)
    if not images:
        raise InvalidInputError("DS needs at least one image")
    if ids is None:
        ids = [str(i) for i in range(len(images))]
    return summarize_scores(ids, [ds_image(im, cfg) for im in images])

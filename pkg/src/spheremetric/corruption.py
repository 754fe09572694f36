"""Controlled degradations of equirectangular images.

Every stochastic operator draws from a Philox generator keyed by
``(seed, image index, operator name)``, so corrupting image ``k`` of a
dataset does not depend on the order in which images are processed.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidInputError
from .projection import as_image

# Four levels per corruption, mild to severe.
DEFAULT_SWEEPS = {
    "salt_pepper": (0.01, 0.05, 0.1, 0.2),
    "gaussian_noise": (5.0, 10.0, 20.0, 40.0),
    "gaussian_blur": (1.0, 2.0, 4.0, 8.0),
    "fov": (10.0, 20.0, 30.0, 40.0),
    "seam_crop": (0.0025,),
}


def make_rng(seed: int, index: int = 0, operator: str = "") -> np.random.Generator:
    """Counter-based generator for one (seed, image, operator) triple."""
    if seed < 0 or index < 0:
        raise InvalidInputError("seed and index must be non-negative")
    key = [int(seed), int(index), zlib.crc32(operator.encode("utf-8"))]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


@dataclass(frozen=True)
class FovReductionConfig:
    """``v`` degrees of vertical field of view removed; ``fixed_band`` kept unscaled."""

    v: float
    fixed_band: float = 90.0

    def __post_init__(self):
        if not (math.isfinite(self.v) and math.isfinite(self.fixed_band)):
            raise InvalidInputError("FOV reduction angles must be finite")
        if not 0.0 <= self.v < 90.0:
            raise InvalidInputError(f"v must lie in [0, 90), got {self.v}")
        if self.fixed_band < 0.0 or self.fixed_band + self.v >= 180.0:
            raise InvalidInputError(
                f"fixed_band + v must stay below 180 degrees, got {self.fixed_band} + {self.v}"
            )

    def row_bounds(self, height: int):
        """``(crop, band_top, band_bottom)`` row indices for an image of ``height`` rows."""
        crop = math.ceil(height * self.v / 360.0 - 1e-9)
        band_top = int(round(height * (180.0 - self.fixed_band) / 360.0))
        band_bottom = height - band_top
        if self.v > 0 and crop >= band_top:
            raise InvalidInputError(
                f"cropping {crop} rows leaves nothing outside the fixed band at height {height}"
            )
        return crop, band_top, band_bottom


def _stretch_rows(src, s0, s1, d0, d1):
    """Bilinearly map source rows [s0, s1) onto destination rows [d0, d1)."""
    n_out = d1 - d0
    scale = (s1 - s0) / n_out
    pos = s0 + (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    pos = np.clip(pos, s0, s1 - 1)
    i0 = np.floor(pos).astype(np.intp)
    i1 = np.minimum(i0 + 1, s1 - 1)
    frac = (pos - i0)[:, None, None]
    return src[i0] + frac * (src[i1] - src[i0])


def reduce_vertical_fov(img, cfg: FovReductionConfig | float) -> np.ndarray:
    """Crop ``v/2`` degrees at each pole and stretch the outer bands back.

    The central ``fixed_band`` degrees are copied unchanged; each remaining
    outer band is resampled from the uncropped part of its source band so the
    output keeps the input size.
    """
    if not isinstance(cfg, FovReductionConfig):
        cfg = FovReductionConfig(float(cfg))
    src = as_image(img)
    if cfg.v == 0:
        return src.copy()
    height = src.shape[0]
    crop, band_top, band_bottom = cfg.row_bounds(height)
    out = src.copy()
    if band_top > 0:
        out[:band_top] = _stretch_rows(src, crop, band_top, 0, band_top)
        out[band_bottom:] = _stretch_rows(src, band_bottom, height - crop, band_bottom, height)
    return out


def salt_pepper(img, p: float, seed: int, index: int = 0) -> np.ndarray:
    """Replace each pixel (all channels) by 0 or 255 with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError(f"flip probability must lie in [0, 1], got {p}")
    src = as_image(img)
    rng = make_rng(seed, index, "salt_pepper")
    shape = src.shape[:2]
    flip = rng.random(shape) < p
    salt = rng.random(shape) < 0.5
    out = src.copy()
    out[flip] = np.where(salt[flip], 255.0, 0.0)[:, None]
    return out


def gaussian_noise(img, sigma: float, seed: int, index: int = 0) -> np.ndarray:
    """Add i.i.d. zero-mean noise with std ``sigma`` (8-bit scale), then clamp."""
    if not sigma >= 0.0:
        raise InvalidInputError(f"sigma must be non-negative, got {sigma}")
    src = as_image(img)
    if sigma == 0:
        return src.copy()
    rng = make_rng(seed, index, "gaussian_noise")
    noise = rng.standard_normal(src.shape)
    return np.clip(src + sigma * noise, 0.0, 255.0)


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return w / w.sum()


def gaussian_blur(img, sigma: float) -> np.ndarray:
    """Separable Gaussian blur; columns wrap around, rows replicate the border."""
    if not sigma >= 0.0:
        raise InvalidInputError(f"sigma must be non-negative, got {sigma}")
    src = as_image(img)
    if sigma == 0:
        return src.copy()
    w = gaussian_kernel(sigma)
    out = kernels.convolve_axis(src, w, 1, wrap=True)
    out = kernels.convolve_axis(out, w, 0, wrap=False)
    return np.clip(out, 0.0, 255.0)


def crop_seam(img, fraction: float) -> np.ndarray:
    """Drop ``round(fraction * width)`` columns from each side, without rescaling."""
    if not 0.0 <= fraction <= 0.1:
        raise InvalidInputError(f"seam crop fraction must lie in [0, 0.1], got {fraction}")
    src = as_image(img)
    width = src.shape[1]
    n = int(math.floor(fraction * width + 0.5))
    if width - 2 * n < 1:
        raise InvalidInputError("seam crop removes the whole image")
    return src[:, n:width - n].copy()


CORRUPTIONS = ("salt_pepper", "gaussian_noise", "gaussian_blur", "fov", "seam_crop")


def apply_corruption(img, kind: str, strength: float, seed: int = 0, index: int = 0) -> np.ndarray:
    """Dispatch by name; deterministic ones ignore ``seed`` and ``index``."""
    if kind == "salt_pepper":
        return salt_pepper(img, strength, seed, index)
    if kind == "gaussian_noise":
        return gaussian_noise(img, strength, seed, index)
    if kind == "gaussian_blur":
        return gaussian_blur(img, strength)
    if kind == "fov":
        return reduce_vertical_fov(img, FovReductionConfig(strength))
    if kind == "seam_crop":
        return crop_seam(img, strength)
    raise InvalidInputError(f"unknown corruption {kind!r}; expected one of {CORRUPTIONS}")

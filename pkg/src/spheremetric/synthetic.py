"""Procedural equirectangular test images.

All generators are analytic in (longitude, latitude), so the same image can
be rendered at any resolution, and they are deterministic given ``seed``.
"""
from __future__ import annotations

import numpy as np

from .corruption import make_rng


def lonlat_grid(width: int, height: int):
    """Pixel-center longitude/latitude in radians, each of shape (H, W)."""
    lon = ((np.arange(width) + 0.5) / width - 0.5) * 2.0 * np.pi
    lat = (0.5 - (np.arange(height) + 0.5) / height) * np.pi
    return np.meshgrid(lon, lat)


def _smoothstep(x, lo, hi):
    t = np.clip((x - lo) / (hi - lo), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def smooth_field(lon, lat, seed: int = 0, index: int = 0) -> np.ndarray:
    """Evaluate the smooth panorama at arbitrary longitudes/latitudes (radians)."""
    rng = make_rng(seed, index, "synthetic.smooth")
    lon, lat = np.broadcast_arrays(np.asarray(lon, dtype=np.float64), np.asarray(lat, dtype=np.float64))
    out = np.empty(lon.shape + (3,))
    for ch in range(3):
        a = rng.uniform(15.0, 35.0, size=3)
        ph = rng.uniform(0.0, 2.0 * np.pi, size=3)
        val = (
            rng.uniform(100.0, 150.0)
            + a[0] * np.cos(lon + ph[0]) * np.cos(lat)
            + a[1] * np.sin(2.0 * lon + ph[1]) * np.cos(lat) ** 2
            + a[2] * np.sin(2.0 * lat + ph[2])
        )
        out[..., ch] = val
    return np.clip(out, 0.0, 255.0)


def smooth_panorama(width: int, height: int, seed: int = 0, index: int = 0) -> np.ndarray:
    """Low-frequency content that is continuous across the wrap-around seam."""
    lon, lat = lonlat_grid(width, height)
    return smooth_field(lon, lat, seed, index)


def pole_textured_panorama(width: int, height: int, seed: int = 0, index: int = 0) -> np.ndarray:
    """Smooth mid-latitudes with distinct high-contrast caps above 60 degrees.

    The bright patterned cap in the north and the dark one in the south are
    what a vertical field-of-view reduction removes first.
    """
    rng = make_rng(seed, index, "synthetic.pole")
    lon, lat = lonlat_grid(width, height)
    base = smooth_panorama(width, height, seed, index) * 0.6 + 40.0
    colat = np.pi / 2 - np.abs(lat)
    out = base.copy()
    for sign, level in ((1.0, rng.uniform(170.0, 220.0)), (-1.0, rng.uniform(30.0, 80.0))):
        k = rng.integers(4, 9)
        rings = rng.uniform(10.0, 20.0)
        contrast = rng.uniform(30.0, 50.0)
        ph = rng.uniform(0.0, 2.0 * np.pi)
        pattern = np.sign(np.sin(k * lon + ph) * np.sin(rings * colat))
        cap = level + contrast * pattern
        weight = _smoothstep(sign * lat, np.radians(55.0), np.radians(65.0))[..., None]
        out = out * (1.0 - weight) + cap[..., None] * weight
    return np.clip(out, 0.0, 255.0)


def seam_panorama(width: int, height: int, step: float, seed: int = 0, index: int = 0) -> np.ndarray:
    """Smooth panorama whose left half is raised by ``step``.

    The background is rounded to whole intensities first, so with an integer
    ``step`` the image survives 8-bit storage unchanged. The jump lands on the
    wrap-around seam (and at yaw 0) while the columns next to the seam keep
    their background response, so DS grows with ``step``.
    """
    lon, _ = lonlat_grid(width, height)
    img = np.floor(smooth_panorama(width, height, seed, index) * 0.6 + 30.0 + 0.5)
    return np.clip(img + np.where(lon < 0.0, step, 0.0)[..., None], 0.0, 255.0)


def hidden_seam_panorama(width: int, height: int, step: float = 60.0, seed: int = 0) -> np.ndarray:
    """Seamless at the border but with a vertical step at yaw 0.

    Rotating by 180 degrees moves the step onto the seam.
    """
    lon, _ = lonlat_grid(width, height)
    jump = np.where(lon < 0.0, 0.0, step) - step * 0.5
    img = smooth_panorama(width, height, seed) * 0.6 + 50.0
    # a triangle profile keeps the border continuous
    taper = step * np.abs(lon) / np.pi
    return np.clip(img + (jump - np.sign(lon) * taper * 0.5)[..., None], 0.0, 255.0)


GENERATORS = {
    "smooth": smooth_panorama,
    "pole": pole_textured_panorama,
}


def make_dataset(kind: str, n: int, width: int, seed: int = 0) -> list:
    height = width // 2
    if kind == "seam":
        # one shared background, so only the seam contrast varies
        return [seam_panorama(width, height, 8.0 * (i + 1), seed) for i in range(n)]
    return [GENERATORS[kind](width, height, seed, i) for i in range(n)]

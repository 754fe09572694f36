"""Pure-numpy implementations of the resampling and filtering kernels.

These define the reference arithmetic; the compiled module mirrors the
operation order so both backends agree to rounding.
"""
import numpy as np


def _wrap_or_clamp(idx, n, wrap):
    if wrap:
        return np.mod(idx, n)
    return np.clip(idx, 0, n - 1)


def remap_bilinear(src, xs, ys, wrap_x):
    """Bilinearly sample ``src`` (H, W, C) at pixel coordinates (xs, ys).

    Pixel ``j`` has its center at coordinate ``j``. Columns wrap around when
    ``wrap_x`` is set and are clamped otherwise; rows are always clamped.
    Returns an (M, C) array.
    """
    h, w = src.shape[:2]
    x0f = np.floor(xs)
    y0f = np.floor(ys)
    fx = (xs - x0f)[:, None]
    fy = (ys - y0f)[:, None]
    x0 = x0f.astype(np.intp)
    y0 = y0f.astype(np.intp)
    x1 = _wrap_or_clamp(x0 + 1, w, wrap_x)
    x0 = _wrap_or_clamp(x0, w, wrap_x)
    y1 = np.clip(y0 + 1, 0, h - 1)
    y0 = np.clip(y0, 0, h - 1)
    p00 = src[y0, x0]
    p01 = src[y0, x1]
    p10 = src[y1, x0]
    p11 = src[y1, x1]
    top = p00 + fx * (p01 - p00)
    bottom = p10 + fx * (p11 - p10)
    return top + fy * (bottom - top)


def remap_nearest(src, xs, ys, wrap_x):
    h, w = src.shape[:2]
    xi = _wrap_or_clamp(np.floor(xs + 0.5).astype(np.intp), w, wrap_x)
    yi = np.clip(np.floor(ys + 0.5).astype(np.intp), 0, h - 1)
    return src[yi, xi].copy()


def convolve_axis(img, weights, axis, wrap):
    """Correlate ``img`` (H, W, C) with a centered 1-D kernel along ``axis``.

    Out-of-range taps wrap around when ``wrap`` is set and replicate the
    border sample otherwise.
    """
    n = img.shape[axis]
    radius = (len(weights) - 1) // 2
    base = np.arange(n)
    out = np.zeros_like(img)
    for k, wk in enumerate(weights):
        idx = _wrap_or_clamp(base + (k - radius), n, wrap)
        out += wk * np.take(img, idx, axis=axis)
    return out

"""Backend selection for the hot resampling/filtering kernels.

The compiled extension is used when it imports; otherwise the numpy
implementation takes over. ``SPHEREMETRIC_KERNELS=python`` forces the
fallback.
"""
import os

import numpy as np

from . import _kernels_py

_py_backend = _kernels_py
_c_backend = None

if os.environ.get("SPHEREMETRIC_KERNELS", "").lower() != "python":
    try:
        from . import _ckernels as _c_backend
    except ImportError:  # extension not built
        _c_backend = None

BACKEND = "cython" if _c_backend is not None else "python"
_impl = _c_backend if _c_backend is not None else _py_backend


def available_backends():
    names = ["python"]
    if _c_backend is not None:
        names.append("cython")
    return names


def get_backend(name=None):
    if name is None:
        return _impl
    if name == "python":
        return _py_backend
    if name == "cython":
        if _c_backend is None:
            raise ImportError("compiled kernels are not built")
        return _c_backend
    raise ValueError(f"unknown kernel backend {name!r}")


def _prep(src, xs, ys):
    return (
        np.ascontiguousarray(src, dtype=np.float64),
        np.ascontiguousarray(xs, dtype=np.float64).ravel(),
        np.ascontiguousarray(ys, dtype=np.float64).ravel(),
    )


def remap(src, xs, ys, *, wrap_x, sampling="bilinear", backend=None):
    """Sample a (H, W, C) image at pixel coordinates; see ``_kernels_py``."""
    impl = get_backend(backend)
    src, xf, yf = _prep(src, xs, ys)
    if sampling == "bilinear":
        out = impl.remap_bilinear(src, xf, yf, bool(wrap_x))
    elif sampling == "nearest":
        out = impl.remap_nearest(src, xf, yf, bool(wrap_x))
    else:
        raise ValueError(f"unknown sampling {sampling!r}")
    return np.asarray(out).reshape(np.shape(xs) + (src.shape[2],))


def convolve_axis(img, weights, axis, *, wrap, backend=None):
    impl = get_backend(backend)
    img = np.ascontiguousarray(img, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    return np.asarray(impl.convolve_axis(img, weights, int(axis), bool(wrap)))

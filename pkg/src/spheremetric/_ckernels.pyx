# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled resampling and filtering kernels.

Mirrors ``_kernels_py`` operation for operation; see that module for the
coordinate conventions.
"""
import numpy as np
from libc.math cimport floor


cdef inline Py_ssize_t _index(Py_ssize_t i, Py_ssize_t n, bint wrap) noexcept nogil:
    if wrap:
        i = i % n
        if i < 0:
            i += n
        return i
    if i < 0:
        return 0
    if i >= n:
        return n - 1
    return i


def remap_bilinear(const double[:, :, ::1] src, const double[::1] xs,
                   const double[::1] ys, bint wrap_x):
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1], nc = src.shape[2]
    cdef Py_ssize_t m = xs.shape[0]
    out_arr = np.empty((m, nc), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, c, x0, x1, y0, y1
    cdef double x0f, y0f, fx, fy, top, bottom
    with nogil:
        for i in range(m):
            x0f = floor(xs[i])
            y0f = floor(ys[i])
            fx = xs[i] - x0f
            fy = ys[i] - y0f
            x0 = <Py_ssize_t>x0f
            y0 = <Py_ssize_t>y0f
            x1 = _index(x0 + 1, w, wrap_x)
            x0 = _index(x0, w, wrap_x)
            y1 = _index(y0 + 1, h, False)
            y0 = _index(y0, h, False)
            for c in range(nc):
                top = src[y0, x0, c] + fx * (src[y0, x1, c] - src[y0, x0, c])
                bottom = src[y1, x0, c] + fx * (src[y1, x1, c] - src[y1, x0, c])
                out[i, c] = top + fy * (bottom - top)
    return out_arr


def remap_nearest(const double[:, :, ::1] src, const double[::1] xs,
                  const double[::1] ys, bint wrap_x):
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1], nc = src.shape[2]
    cdef Py_ssize_t m = xs.shape[0]
    out_arr = np.empty((m, nc), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, c, xi, yi
    with nogil:
        for i in range(m):
            xi = _index(<Py_ssize_t>floor(xs[i] + 0.5), w, wrap_x)
            yi = _index(<Py_ssize_t>floor(ys[i] + 0.5), h, False)
            for c in range(nc):
                out[i, c] = src[yi, xi, c]
    return out_arr


def convolve_axis(const double[:, :, ::1] img, const double[::1] weights,
                  int axis, bint wrap):
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1], nc = img.shape[2]
    cdef Py_ssize_t nk = weights.shape[0]
    cdef Py_ssize_t radius = (nk - 1) // 2
    out_arr = np.zeros((h, w, nc), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t y, x, c, k, j
    cdef double wk
    with nogil:
        # k outermost keeps the accumulation order of the numpy fallback
        for k in range(nk):
            wk = weights[k]
            if axis == 0:
                for y in range(h):
                    j = _index(y + k - radius, h, wrap)
                    for x in range(w):
                        for c in range(nc):
                            out[y, x, c] += wk * img[j, x, c]
            else:
                for y in range(h):
                    for x in range(w):
                        j = _index(x + k - radius, w, wrap)
                        for c in range(nc):
                            out[y, x, c] += wk * img[y, j, c]
    return out_arr

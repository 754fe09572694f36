"""Equirectangular <-> tangential cubemap conversion and bilinear resizing.

Coordinate conventions
----------------------
Directions use a right-handed frame with ``+z`` forward (yaw 0, pitch 0),
``+x`` to the right (yaw +90) and ``+y`` up (pitch +90). The equirect
column ``j`` of a ``W``-wide image has its center at longitude
``((j + 0.5) / W - 0.5) * 360`` degrees, so yaw 0 sits in the middle of the
image; row ``i`` has latitude ``(0.5 - (i + 0.5) / H) * 180``.

Face ``u`` grows left to right and ``v`` top to bottom, both in ``[0, 1]``.
The Up face has its top edge against the Back face and the Down face has
its top edge against the Front face.

Images are float64 arrays of shape (H, W, 3) holding intensities in
``[0, 255]``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidInputError


class FaceLabel(str, enum.Enum):
    F = "F"
    R = "R"
    B = "B"
    L = "L"
    U = "U"
    D = "D"

    @property
    def is_polar(self) -> bool:
        return self in (FaceLabel.U, FaceLabel.D)


FACES = tuple(FaceLabel)

# (center, right, up) unit vectors per face, in FACES order
_FACE_BASIS = {
    FaceLabel.F: ((0, 0, 1), (1, 0, 0), (0, 1, 0)),
    FaceLabel.R: ((1, 0, 0), (0, 0, -1), (0, 1, 0)),
    FaceLabel.B: ((0, 0, -1), (-1, 0, 0), (0, 1, 0)),
    FaceLabel.L: ((-1, 0, 0), (0, 0, 1), (0, 1, 0)),
    FaceLabel.U: ((0, 1, 0), (1, 0, 0), (0, 0, -1)),
    FaceLabel.D: ((0, -1, 0), (1, 0, 0), (0, 0, 1)),
}
_CENTERS = np.array([_FACE_BASIS[f][0] for f in FACES], dtype=np.float64)
_RIGHTS = np.array([_FACE_BASIS[f][1] for f in FACES], dtype=np.float64)
_UPS = np.array([_FACE_BASIS[f][2] for f in FACES], dtype=np.float64)

SAMPLING_METHODS = ("bilinear", "nearest")


@dataclass(frozen=True)
class Direction:
    """A viewing direction in degrees; yaw in [-180, 180), pitch in [-90, 90]."""

    yaw: float
    pitch: float

    def __post_init__(self):
        if not (math.isfinite(self.yaw) and math.isfinite(self.pitch)):
            raise InvalidInputError("direction angles must be finite")
        if not -90.0 <= self.pitch <= 90.0:
            raise InvalidInputError(f"pitch {self.pitch} outside [-90, 90]")

    def to_vector(self) -> np.ndarray:
        return angles_to_vectors(np.radians(self.yaw), np.radians(self.pitch))

    @classmethod
    def from_vector(cls, vec) -> "Direction":
        yaw, pitch = vectors_to_angles(np.asarray(vec, dtype=np.float64))
        yaw = math.degrees(float(yaw))
        if yaw >= 180.0:
            yaw -= 360.0
        return cls(yaw, math.degrees(float(pitch)))


@dataclass
class CubemapSet:
    """Six square faces keyed by :class:`FaceLabel`."""

    faces: dict

    def __post_init__(self):
        faces = {FaceLabel(k): v for k, v in self.faces.items()}
        missing = [f.value for f in FACES if f not in faces]
        if missing:
            raise InvalidInputError(f"cubemap is missing faces {missing}")
        shapes = {np.shape(faces[f]) for f in FACES}
        if len(shapes) != 1:
            raise InvalidInputError(f"cubemap faces differ in shape: {sorted(shapes)}")
        shape = shapes.pop()
        if len(shape) != 3 or shape[0] != shape[1] or shape[0] < 1:
            raise InvalidInputError(f"cubemap faces must be square (N, N, C), got {shape}")
        self.faces = {f: np.asarray(faces[f], dtype=np.float64) for f in FACES}

    @property
    def face_size(self) -> int:
        return self.faces[FaceLabel.F].shape[0]

    def __getitem__(self, face):
        return self.faces[FaceLabel(face)]

    def __iter__(self):
        return iter(FACES)


def as_image(img, *, name="image") -> np.ndarray:
    """Validate and convert to a float64 (H, W, 3) array in [0, 255]."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidInputError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 255.0:
        raise InvalidInputError(f"{name} intensities must lie in [0, 255]")
    return arr


def as_equirect(img) -> np.ndarray:
    arr = as_image(img, name="equirectangular image")
    h, w = arr.shape[:2]
    if w != 2 * h:
        raise InvalidInputError(f"equirectangular image must be 2:1, got {w}x{h}")
    return arr


def angles_to_vectors(yaw, pitch):
    """Unit vectors for yaw/pitch in radians (broadcasting); shape (..., 3)."""
    cp = np.cos(pitch)
    return np.stack(np.broadcast_arrays(cp * np.sin(yaw), np.sin(pitch), cp * np.cos(yaw)), axis=-1)


def vectors_to_angles(vec):
    """(yaw, pitch) in radians for vectors of shape (..., 3); need not be unit length."""
    x, y, z = vec[..., 0], vec[..., 1], vec[..., 2]
    return np.arctan2(x, z), np.arctan2(y, np.hypot(x, z))


def _select_faces(vec):
    dots = vec @ _CENTERS.T
    # first maximum wins, giving the F, R, B, L, U, D tie order
    return np.argmax(dots, axis=-1)


def vectors_to_face_uv(vec):
    """Face indices and in-face (u, v) for direction vectors of shape (..., 3)."""
    idx = _select_faces(vec)
    depth = np.einsum("...k,...k->...", vec, _CENTERS[idx])
    a = np.einsum("...k,...k->...", vec, _RIGHTS[idx]) / depth
    b = np.einsum("...k,...k->...", vec, _UPS[idx]) / depth
    u = np.clip((a + 1.0) * 0.5, 0.0, 1.0)
    v = np.clip((1.0 - b) * 0.5, 0.0, 1.0)
    return idx, u, v


def face_uv_to_vectors(face, u, v):
    """Unit direction vectors for in-face coordinates of one face."""
    center, right, up = (np.array(x, dtype=np.float64) for x in _FACE_BASIS[FaceLabel(face)])
    a = 2.0 * np.asarray(u, dtype=np.float64) - 1.0
    b = 1.0 - 2.0 * np.asarray(v, dtype=np.float64)
    vec = center + a[..., None] * right + b[..., None] * up
    return vec / np.linalg.norm(vec, axis=-1, keepdims=True)


def spherical_to_face(direction: Direction):
    """Return ``(face, u, v)`` for a direction."""
    idx, u, v = vectors_to_face_uv(direction.to_vector())
    return FACES[int(idx)], float(u), float(v)


def face_to_spherical(face, u: float, v: float) -> Direction:
    if not (0.0 <= u <= 1.0 and 0.0 <= v <= 1.0):
        raise InvalidInputError(f"face coordinates ({u}, {v}) outside [0, 1]")
    return Direction.from_vector(face_uv_to_vectors(face, u, v))


def face_pixel_vectors(face, face_size: int) -> np.ndarray:
    """Unit directions through the pixel centers of a face, shape (N, N, 3)."""
    centers = (np.arange(face_size, dtype=np.float64) + 0.5) / face_size
    u, v = np.meshgrid(centers, centers)
    return face_uv_to_vectors(face, u, v)


def vectors_to_equirect_pixels(vec, width: int, height: int):
    """Continuous equirect pixel coordinates (x, y) for direction vectors."""
    yaw, pitch = vectors_to_angles(vec)
    xs = (yaw / (2.0 * np.pi) + 0.5) * width - 0.5
    ys = (0.5 - pitch / np.pi) * height - 0.5
    return xs, ys


def equirect_pixel_vectors(width: int, height: int) -> np.ndarray:
    yaw = ((np.arange(width, dtype=np.float64) + 0.5) / width - 0.5) * 2.0 * np.pi
    pitch = (0.5 - (np.arange(height, dtype=np.float64) + 0.5) / height) * np.pi
    return angles_to_vectors(yaw[None, :], pitch[:, None])


def _check_sampling(sampling):
    if sampling not in SAMPLING_METHODS:
        raise InvalidInputError(f"sampling must be one of {SAMPLING_METHODS}, got {sampling!r}")


def equirect_to_cubemap(img, face_size: int | None = None, sampling: str = "bilinear") -> CubemapSet:
    """Project an equirectangular image onto the six faces of a cube.

    ``face_size`` defaults to half the image height, i.e. the 90 degree span
    of a face sampled at the source's vertical density.
    """
    src = as_equirect(img)
    _check_sampling(sampling)
    height, width = src.shape[:2]
    if face_size is None:
        face_size = max(2, height // 2)
    if int(face_size) != face_size or face_size < 2:
        raise InvalidInputError(f"face_size must be an integer >= 2, got {face_size}")
    face_size = int(face_size)
    faces = {}
    for face in FACES:
        xs, ys = vectors_to_equirect_pixels(face_pixel_vectors(face, face_size), width, height)
        faces[face] = kernels.remap(src, xs, ys, wrap_x=True, sampling=sampling)
    return CubemapSet(faces)


def cubemap_to_equirect(cm: CubemapSet, width: int, height: int, sampling: str = "bilinear") -> np.ndarray:
    """Render a cubemap back to an equirectangular image of the given size."""
    if width != 2 * height or height < 1:
        raise InvalidInputError(f"output must be 2:1, got {width}x{height}")
    _check_sampling(sampling)
    n = cm.face_size
    idx, u, v = vectors_to_face_uv(equirect_pixel_vectors(width, height))
    out = np.empty((height, width, 3), dtype=np.float64)
    for i, face in enumerate(FACES):
        mask = idx == i
        if not mask.any():
            continue
        xs = u[mask] * n - 0.5
        ys = v[mask] * n - 0.5
        out[mask] = kernels.remap(cm.faces[face], xs, ys, wrap_x=False, sampling=sampling)
    return out


def _axis_lerp(arr, new_len, axis):
    old_len = arr.shape[axis]
    if new_len == old_len:
        return arr
    pos = (np.arange(new_len, dtype=np.float64) + 0.5) * (old_len / new_len) - 0.5
    pos = np.clip(pos, 0.0, old_len - 1)
    i0 = np.floor(pos).astype(np.intp)
    i1 = np.minimum(i0 + 1, old_len - 1)
    frac = pos - i0
    shape = [1] * arr.ndim
    shape[axis] = new_len
    frac = frac.reshape(shape)
    a = np.take(arr, i0, axis=axis)
    b = np.take(arr, i1, axis=axis)
    return a + frac * (b - a)


def resize(img, new_width: int, new_height: int, method: str = "bilinear") -> np.ndarray:
    """Bilinear resize with pixel-center alignment and edge clamping.

    No anti-aliasing is applied when shrinking. Returns a copy even when the
    size is unchanged.
    """
    if method != "bilinear":
        raise InvalidInputError(f"unsupported resize method {method!r}")
    if int(new_width) != new_width or int(new_height) != new_height or new_width < 1 or new_height < 1:
        raise InvalidInputError(f"target size must be positive integers, got {new_width}x{new_height}")
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise InvalidInputError(f"cannot resize array of shape {arr.shape}")
    out = _axis_lerp(arr, int(new_height), 0)
    out = _axis_lerp(out, int(new_width), 1)
    return np.array(out, copy=True)


def rotate_yaw(img, degrees: float) -> np.ndarray:
    """Rotate an equirect image horizontally; content at yaw ``t`` moves to ``t + degrees``.

    Only whole-pixel shifts are supported.
    """
    arr = np.asarray(img)
    shift = degrees / 360.0 * arr.shape[1]
    if abs(shift - round(shift)) > 1e-9:
        raise InvalidInputError(f"{degrees} degrees is not a whole number of columns")
    return np.roll(arr, int(round(shift)), axis=1)

"""Gaussian feature statistics, the Frechet distance, FID and OmniFID.

OmniFID splits each cubemap into three view groups (the four frontal
faces, Up, Down), averages the features inside a group per cubemap, computes
a Frechet distance per group and reports the mean of the three.
"""
from __future__ import annotations

import enum
import io
import json
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NumericError, SampleSizeWarning
from .projection import FACES, FaceLabel, equirect_to_cubemap

DEFAULT_MIN_SAMPLES = 2048
_SYMMETRY_TOL = 1e-9
_EIG_CLAMP = 1e-8


class ViewGroup(str, enum.Enum):
    FRONTAL = "frontal"
    UP = "up"
    DOWN = "down"

    @property
    def faces(self):
        return _GROUP_FACES[self]


_GROUP_FACES = {
    ViewGroup.FRONTAL: (FaceLabel.F, FaceLabel.R, FaceLabel.B, FaceLabel.L),
    ViewGroup.UP: (FaceLabel.U,),
    ViewGroup.DOWN: (FaceLabel.D,),
}
VIEW_GROUPS = tuple(ViewGroup)


@dataclass
class GaussianStats:
    mean: np.ndarray
    cov: np.ndarray
    n: int

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.cov = np.asarray(self.cov, dtype=np.float64)
        d = self.mean.shape[0] if self.mean.ndim == 1 else -1
        if d < 1 or self.cov.shape != (d, d):
            raise InvalidInputError(f"inconsistent stats shapes: mean {self.mean.shape}, cov {self.cov.shape}")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def estimate_gaussian(features) -> GaussianStats:
    """Sample mean and unbiased (n - 1) covariance of an (n, d) feature array."""
    try:
        x = np.asarray(features, dtype=np.float64)
    except ValueError as exc:  # ragged input
        raise InvalidInputError("feature vectors differ in dimension") from exc
    if x.ndim != 2:
        raise InvalidInputError(f"features must be an (n, d) array, got shape {x.shape}")
    n = x.shape[0]
    if n < 2:
        raise InvalidInputError(f"need at least 2 feature vectors, got {n}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("features contain non-finite values")
    mu = x.mean(axis=0)
    centered = x - mu
    cov = centered.T @ centered / (n - 1)
    cov = 0.5 * (cov + cov.T)
    return GaussianStats(mu, cov, n)


def _check_cov(s, label):
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InvalidInputError(f"{label} must be square, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise InvalidInputError(f"{label} contains non-finite values")
    scale = np.abs(s).max() if s.size else 0.0
    if np.abs(s - s.T).max(initial=0.0) > _SYMMETRY_TOL * scale:
        raise InvalidInputError(f"{label} is not symmetric")
    return s


def _psd_sqrt(s):
    w, v = np.linalg.eigh(s)
    w = np.where(w > _EIG_CLAMP * max(w.max(initial=0.0), 0.0), w, 0.0)
    return (v * np.sqrt(w)) @ v.T


def trace_sqrt_product(sigma1, sigma2) -> float:
    """``tr((sigma1 sigma2)^(1/2))`` via the symmetric form ``sigma1^(1/2) sigma2 sigma1^(1/2)``.

    Eigenvalues below ``1e-8`` times the largest one are treated as zero.
    """
    s1 = _check_cov(sigma1, "sigma1")
    s2 = _check_cov(sigma2, "sigma2")
    if s1.shape != s2.shape:
        raise InvalidInputError(f"covariance shapes differ: {s1.shape} vs {s2.shape}")
    try:
        root = _psd_sqrt(s1)
        m = root @ s2 @ root
        lam = np.linalg.eigvalsh(0.5 * (m + m.T))
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            f"eigendecomposition failed (dim={s1.shape[0]}, "
            f"tr1={np.trace(s1):.6g}, tr2={np.trace(s2):.6g}): {exc}"
        ) from exc
    top = lam.max(initial=0.0)
    lam = np.where(lam > _EIG_CLAMP * max(top, 0.0), lam, 0.0)
    return float(np.sqrt(lam).sum())


def frechet_distance(g1: GaussianStats, g2: GaussianStats, *, rtol: float = 1e-10) -> float:
    """Squared Wasserstein-2 distance between two Gaussians.

    Values within ``rtol`` of zero, relative to the sum of the terms, are
    returned as exactly 0; clearly negative results raise :class:`NumericError`.
    """
    if g1.dim != g2.dim:
        raise InvalidInputError(f"stats dimensions differ: {g1.dim} vs {g2.dim}")
    if np.array_equal(g1.mean, g2.mean) and np.array_equal(g1.cov, g2.cov):
        return 0.0
    diff = g1.mean - g2.mean
    mean_term = float(diff @ diff)
    tr1 = float(np.trace(g1.cov))
    tr2 = float(np.trace(g2.cov))
    cross = trace_sqrt_product(g1.cov, g2.cov)
    value = mean_term + tr1 + tr2 - 2.0 * cross
    scale = mean_term + tr1 + tr2
    if abs(value) <= rtol * scale:
        return 0.0
    if value < 0:
        raise NumericError(f"negative Frechet distance {value:.6g} (scale {scale:.6g})")
    return value


def _warn_sample_size(n, floor, what):
    if floor and n < floor:
        warnings.warn(
            f"{what} has {n} samples (< {floor}); Frechet distances are biased at small sample sizes",
            SampleSizeWarning,
            stacklevel=3,
        )


def fid_from_features(feats_a, feats_b, *, min_samples: int = DEFAULT_MIN_SAMPLES) -> float:
    feats_a = np.asarray(feats_a, dtype=np.float64)
    feats_b = np.asarray(feats_b, dtype=np.float64)
    if feats_a.ndim == 2 and feats_b.ndim == 2 and feats_a.shape[1] != feats_b.shape[1]:
        raise InvalidInputError("feature sets differ in dimension")
    _warn_sample_size(len(feats_a), min_samples, "set A")
    _warn_sample_size(len(feats_b), min_samples, "set B")
    return frechet_distance(estimate_gaussian(feats_a), estimate_gaussian(feats_b))


def fid(set_a, set_b, extractor, *, min_samples: int = DEFAULT_MIN_SAMPLES, batch_size: int = 32) -> float:
    """FID between two image collections using whole-image features."""
    set_a, set_b = list(set_a), list(set_b)
    for label, s in (("set A", set_a), ("set B", set_b)):
        if len(s) < 2:
            raise InvalidInputError(f"{label} needs at least 2 images, got {len(s)}")
    fa = extractor.extract(set_a, batch_size=batch_size)
    fb = extractor.extract(set_b, batch_size=batch_size)
    return fid_from_features(fa, fb, min_samples=min_samples)


def group_features(cm_features) -> dict:
    """Average per-face feature vectors into the three view groups."""
    feats = {FaceLabel(k): np.asarray(v, dtype=np.float64) for k, v in cm_features.items()}
    missing = [f.value for f in FACES if f not in feats]
    if missing:
        raise InvalidInputError(f"missing face features for {missing}")
    out = {}
    for group in VIEW_GROUPS:
        members = [feats[f] for f in group.faces]
        total = members[0].copy()
        for m in members[1:]:
            total = total + m
        out[group] = total / len(members)
    return out


def group_feature_table(face_feats) -> dict:
    """Vectorised :func:`group_features` for an (n, 6, d) array in F, R, B, L, U, D order."""
    face_feats = np.asarray(face_feats, dtype=np.float64)
    if face_feats.ndim != 3 or face_feats.shape[1] != len(FACES):
        raise InvalidInputError(f"face features must have shape (n, 6, d), got {face_feats.shape}")
    out = {}
    for group in VIEW_GROUPS:
        cols = [FACES.index(f) for f in group.faces]
        total = face_feats[:, cols[0]].copy()
        for c in cols[1:]:
            total = total + face_feats[:, c]
        out[group] = total / len(cols)
    return out


@dataclass
class OmniFidReport:
    fid_bar: dict
    omnifid: float
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "fid_bar": {g.value: float(v) for g, v in self.fid_bar.items()},
            "omnifid": float(self.omnifid),
            "config": dict(self.config),
        }


def omnifid_from_features(face_feats_a, face_feats_b, *, min_samples: int = DEFAULT_MIN_SAMPLES,
                          config: dict | None = None) -> OmniFidReport:
    """OmniFID from two (n, 6, d) per-face feature tables."""
    ga = group_feature_table(face_feats_a)
    gb = group_feature_table(face_feats_b)
    if ga[ViewGroup.FRONTAL].shape[1] != gb[ViewGroup.FRONTAL].shape[1]:
        raise InvalidInputError("feature tables differ in dimension")
    _warn_sample_size(len(ga[ViewGroup.FRONTAL]), min_samples, "set A")
    _warn_sample_size(len(gb[ViewGroup.FRONTAL]), min_samples, "set B")
    fid_bar = {
        g: frechet_distance(estimate_gaussian(ga[g]), estimate_gaussian(gb[g])) for g in VIEW_GROUPS
    }
    score = sum(fid_bar[g] for g in VIEW_GROUPS) / len(VIEW_GROUPS)
    return OmniFidReport(fid_bar, score, dict(config or {}))


def cubemap_features(images, extractor, *, face_size=None, sampling="bilinear", batch_size=32) -> np.ndarray:
    """Per-face features for equirect images as an (n, 6, d) array."""
    rows = []
    for img in images:
        cm = equirect_to_cubemap(img, face_size, sampling)
        rows.append(extractor.extract([cm.faces[f] for f in FACES], batch_size=batch_size))
    return np.stack(rows)


def omnifid(ds_a, ds_b, extractor, *, face_size=None, sampling="bilinear",
            min_samples: int = DEFAULT_MIN_SAMPLES, batch_size: int = 32) -> OmniFidReport:
    """OmniFID between two collections of equirectangular images."""
    ds_a, ds_b = list(ds_a), list(ds_b)
    for label, s in (("set A", ds_a), ("set B", ds_b)):
        if len(s) < 2:
            raise InvalidInputError(f"{label} needs at least 2 images, got {len(s)}")
    fa = cubemap_features(ds_a, extractor, face_size=face_size, sampling=sampling, batch_size=batch_size)
    fb = cubemap_features(ds_b, extractor, face_size=face_size, sampling=sampling, batch_size=batch_size)
    config = {"extractor": extractor.describe(), "face_size": face_size, "sampling": sampling}
    return omnifid_from_features(fa, fb, min_samples=min_samples, config=config)


# Stats file: magic, uint32 header length, JSON header, then little-endian
# float64 mean (d) and covariance (d * d, row-major).
STATS_MAGIC = b"SPMSTATS"
STATS_VERSION = 1


def save_stats(path, stats: GaussianStats, provenance: dict | None = None) -> None:
    header = json.dumps({
        "version": STATS_VERSION,
        "dim": stats.dim,
        "count": int(stats.n),
        "provenance": provenance or {},
    }, sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    buf.write(STATS_MAGIC)
    buf.write(struct.pack("<I", len(header)))
    buf.write(header)
    buf.write(stats.mean.astype("<f8").tobytes())
    buf.write(stats.cov.astype("<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_stats(path):
    """Return ``(GaussianStats, provenance)`` from a stats file."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:len(STATS_MAGIC)] != STATS_MAGIC:
        raise InvalidInputError(f"{path} is not a stats file")
    off = len(STATS_MAGIC)
    (hlen,) = struct.unpack_from("<I", data, off)
    off += 4
    header = json.loads(data[off:off + hlen].decode("utf-8"))
    off += hlen
    if header.get("version") != STATS_VERSION:
        raise InvalidInputError(f"unsupported stats file version {header.get('version')}")
    d = int(header["dim"])
    need = off + 8 * (d + d * d)
    if len(data) != need:
        raise InvalidInputError(f"{path} is truncated or has trailing data")
    mean = np.frombuffer(data, dtype="<f8", count=d, offset=off).astype(np.float64)
    cov = np.frombuffer(data, dtype="<f8", count=d * d, offset=off + 8 * d).reshape(d, d).astype(np.float64)
    return GaussianStats(mean, cov, int(header["count"])), header.get("provenance", {})

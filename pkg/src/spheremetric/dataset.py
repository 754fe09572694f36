"""Dataset scanning, image I/O and the on-disk feature cache."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import struct
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import AspectRatioError, DatasetError, EmptyDatasetError, InvalidInputError
from .projection import FACES, equirect_to_cubemap, resize

log = logging.getLogger(__name__)

IMAGE_PATTERNS = ("*.png", "*.jpg", "*.jpeg", "*.PNG", "*.JPG", "*.JPEG")


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    path: str  # relative to the manifest root, POSIX separators
    content_hash: str
    width: int
    height: int


@dataclass
class DatasetManifest:
    root: str
    entries: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def abspath(self, entry: ManifestEntry) -> Path:
        return Path(self.root) / entry.path

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "entries": [
                {"id": e.id, "path": e.path, "hash": e.content_hash, "width": e.width, "height": e.height}
                for e in self.entries
            ],
        }

    def write(self, path) -> None:
        # root is omitted so the file is relocatable and byte-stable
        data = self.to_dict()
        data.pop("root")
        Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_rgb(path) -> np.ndarray:
    """Decode an 8-bit image file to a uint8 (H, W, 3) array."""
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, UnidentifiedImageError) as exc:
        raise DatasetError(f"cannot decode {path}: {exc}") from exc


def load_image(path) -> np.ndarray:
    return read_rgb(path).astype(np.float64)


def to_uint8(img) -> np.ndarray:
    return np.clip(np.floor(np.asarray(img, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


def save_image(path, img) -> None:
    """Write a [0, 255] float image as 8-bit PNG/JPEG (chosen by suffix)."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(img), mode="RGB").save(path)


def pixel_hash(pixels: np.ndarray) -> str:
    """SHA-256 over decoded pixel bytes and shape, independent of file encoding."""
    h = hashlib.sha256()
    h.update(("%dx%dx%d:" % pixels.shape).encode())
    h.update(np.ascontiguousarray(pixels, dtype=np.uint8).tobytes())
    return h.hexdigest()


def scan(root, patterns=IMAGE_PATTERNS) -> DatasetManifest:
    """Deterministic manifest of the images below ``root``, sorted by relative path."""
    root_path = Path(root)
    if not root_path.is_dir():
        raise DatasetError(f"not a readable directory: {root}")
    found = set()
    for pattern in patterns:
        found.update(p for p in root_path.rglob(pattern) if p.is_file())
    entries = []
    for p in sorted(found, key=lambda q: q.relative_to(root_path).as_posix()):
        rel = p.relative_to(root_path).as_posix()
        try:
            pixels = read_rgb(p)
        except DatasetError as exc:
            warnings.warn(f"skipping unreadable file {rel}: {exc}", stacklevel=2)
            continue
        entries.append(ManifestEntry(rel, rel, pixel_hash(pixels), pixels.shape[1], pixels.shape[0]))
    if not entries:
        raise EmptyDatasetError(f"no readable images under {root}")
    return DatasetManifest(os.fspath(root_path), entries)


def check_aspect(img, strict: bool = True):
    h, w = np.shape(img)[:2]
    if w != 2 * h:
        if strict:
            raise AspectRatioError(f"expected a 2:1 equirectangular image, got {w}x{h}")
        log.warning("image is %dx%d, not 2:1", w, h)


def load_and_normalize(source, target=None, strict: bool = True, manifest: DatasetManifest | None = None):
    """Decode, optionally resize to ``target=(width, height)``, and check the aspect ratio."""
    if isinstance(source, ManifestEntry):
        if manifest is None:
            raise InvalidInputError("a manifest is needed to resolve a manifest entry")
        source = manifest.abspath(source)
    img = load_image(source)
    if target is not None:
        width, height = target
        img = resize(img, width, height)
    check_aspect(img, strict)
    return img


# Feature cache file: 8-byte magic + uint16 version, then records of
#   uint32 payload length | payload
# payload = uint16 key length | key (UTF-8 JSON) | uint32 rows | uint32 dim | float64[rows*dim] LE
CACHE_MAGIC = b"SPMFCACH"
CACHE_VERSION = 1
_HEADER = CACHE_MAGIC + struct.pack("<H", CACHE_VERSION)


def _cache_key(content_hash, extractor_key, view_key):
    return json.dumps([content_hash, extractor_key, view_key], separators=(",", ":"))


class FeatureCache:
    """Append-only feature store keyed by (pixel hash, extractor, view spec).

    Records are appended with a single write; a truncated or unreadable file
    is rebuilt from its intact prefix with a warning.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries = {}
        self._load()

    def _load(self):
        if not self.path.exists():
            return
        data = self.path.read_bytes()
        if not data.startswith(_HEADER):
            self._rebuild("bad header")
            return
        off = len(_HEADER)
        good_end = off
        while off < len(data):
            try:
                (plen,) = struct.unpack_from("<I", data, off)
                payload = data[off + 4:off + 4 + plen]
                if len(payload) != plen:
                    raise ValueError("truncated record")
                key, feats = self._decode(payload)
            except (struct.error, ValueError, UnicodeDecodeError) as exc:
                self._rebuild(str(exc), good_end)
                return
            self._entries[key] = feats
            off += 4 + plen
            good_end = off

    def _rebuild(self, reason, keep=0):
        warnings.warn(f"feature cache {self.path} is corrupt ({reason}); rebuilding", stacklevel=3)
        data = self.path.read_bytes()[:keep] if keep else _HEADER
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, self.path)

    @staticmethod
    def _decode(payload):
        (klen,) = struct.unpack_from("<H", payload, 0)
        key = payload[2:2 + klen].decode("utf-8")
        rows, dim = struct.unpack_from("<II", payload, 2 + klen)
        body = payload[2 + klen + 8:]
        if len(body) != 8 * rows * dim:
            raise ValueError("feature payload size mismatch")
        return key, np.frombuffer(body, dtype="<f8").reshape(rows, dim).astype(np.float64)

    @staticmethod
    def _encode(key, feats):
        kb = key.encode("utf-8")
        feats = np.ascontiguousarray(feats, dtype="<f8")
        payload = struct.pack("<H", len(kb)) + kb + struct.pack("<II", *feats.shape) + feats.tobytes()
        return struct.pack("<I", len(payload)) + payload

    def get(self, content_hash, extractor_key, view_key):
        feats = self._entries.get(_cache_key(content_hash, extractor_key, view_key))
        return None if feats is None else feats.copy()

    def put(self, content_hash, extractor_key, view_key, feats) -> None:
        key = _cache_key(content_hash, extractor_key, view_key)
        feats = np.atleast_2d(np.asarray(feats, dtype=np.float64))
        record = self._encode(key, feats)
        with self._lock:
            new = not self.path.exists() or self.path.stat().st_size == 0
            with open(self.path, "ab") as fh:
                fh.write((_HEADER if new else b"") + record)
                fh.flush()
                os.fsync(fh.fileno())
            self._entries[key] = feats.copy()

    def __len__(self):
        return len(self._entries)


@dataclass
class FeatureTable:
    ids: list
    features: np.ndarray  # (n, views, d); views = 1 for equirect, 6 for cubemap
    view: str
    computed: int = 0  # images that needed the extractor


def view_spec(view: str, face_size=None, sampling: str = "bilinear", target=None) -> str:
    """String identifying how images are turned into network inputs."""
    if view not in ("equirect", "cubemap"):
        raise InvalidInputError(f"view must be 'equirect' or 'cubemap', got {view!r}")
    parts = {"view": view, "target": list(target) if target else None}
    if view == "cubemap":
        parts.update(face_size=face_size, sampling=sampling)
    return json.dumps(parts, sort_keys=True)


def image_views(img, view, face_size=None, sampling="bilinear"):
    if view == "equirect":
        return [img]
    cm = equirect_to_cubemap(img, face_size, sampling)
    return [cm.faces[f] for f in FACES]


def get_or_compute_features(manifest: DatasetManifest, extractor, *, view: str = "cubemap",
                            face_size=None, sampling: str = "bilinear", cache: FeatureCache | None = None,
                            target=None, strict: bool = True, jobs: int = 1) -> FeatureTable:
    """Features for every manifest entry, served from ``cache`` when the key matches.

    Results are ordered like the manifest regardless of ``jobs``.
    """
    vkey = view_spec(view, face_size, sampling, target)
    ekey = extractor.cache_key()

    def work(entry):
        if cache is not None:
            hit = cache.get(entry.content_hash, ekey, vkey)
            if hit is not None:
                return hit, False
        img = load_and_normalize(manifest.abspath(entry), target, strict)
        feats = extractor.extract(image_views(img, view, face_size, sampling))
        if cache is not None:
            cache.put(entry.content_hash, ekey, vkey, feats)
        return feats, True

    entries = list(manifest)
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, entries))
    else:
        results = [work(e) for e in entries]
    dims = {r[0].shape for r in results}
    if len(dims) != 1:
        raise DatasetError(f"inconsistent feature shapes across images: {sorted(dims)}")
    table = np.stack([r[0] for r in results])
    return FeatureTable([e.id for e in entries], table, view, sum(r[1] for r in results))

"""Feature extractors: an ONNX Inception-V3 backend and a cheap deterministic mock."""
from __future__ import annotations

import json
import os

import numpy as np

from .errors import BackendError, InvalidInputError
from .projection import as_image, resize

INPUT_SIZE = 299
MODEL_ENV_VAR = "SPHEREMETRIC_MODEL"
_GREY = np.array([0.299, 0.587, 0.114])


def preprocess(img, size: int = INPUT_SIZE) -> np.ndarray:
    """Resize to ``size`` x ``size`` (bilinear) and map [0, 255] to [-1, 1].

    Returns a float32 array in channel-first (3, size, size) RGB layout.
    """
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidInputError(f"expected an RGB image of shape (H, W, 3), got {arr.shape}")
    arr = resize(as_image(arr), size, size)
    return (arr / 127.5 - 1.0).transpose(2, 0, 1).astype(np.float32)


class FeatureExtractor:
    """Base class: subclasses implement ``_forward`` on preprocessed batches.

    Instances are immutable after construction and deterministic.
    """

    name = "abstract"
    dim = 0
    input_size = INPUT_SIZE

    @property
    def preprocessing(self) -> dict:
        return {
            "size": self.input_size,
            "resize": "bilinear",
            "range": [-1.0, 1.0],
            "channels": "RGB",
            "layout": "NCHW",
        }

    def cache_key(self) -> str:
        """Identity of this extractor for feature caches."""
        return json.dumps({"extractor": self.name, "dim": self.dim, "pre": self.preprocessing}, sort_keys=True)

    def describe(self) -> dict:
        return {"name": self.name, "dim": self.dim, "preprocessing": self.preprocessing}

    def _forward(self, batch: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def extract(self, images, batch_size: int = 32) -> np.ndarray:
        """Features for a sequence of images as an (n, dim) float64 array."""
        images = list(images)
        if not images:
            raise InvalidInputError("cannot extract features from an empty batch")
        if batch_size < 1:
            raise InvalidInputError("batch_size must be positive")
        chunks = []
        for start in range(0, len(images), batch_size):
            batch = np.stack([preprocess(im, self.input_size) for im in images[start:start + batch_size]])
            feats = np.asarray(self._forward(batch), dtype=np.float64)
            feats = feats.reshape(len(batch), -1)
            if feats.shape[1] != self.dim:
                raise BackendError(f"{self.name} produced {feats.shape[1]}-d features, expected {self.dim}")
            if not np.all(np.isfinite(feats)):
                raise BackendError(f"{self.name} produced non-finite features")
            chunks.append(feats)
        return np.concatenate(chunks, axis=0)


class MockExtractor(FeatureExtractor):
    """Greyscale mean and standard deviation over the four image quadrants.

    Features are computed on the preprocessed [-1, 1] input, so a constant
    image of value ``x`` gives means ``x / 127.5 - 1`` and zero stds. Layout is
    ``[mean, std]`` for top-left, top-right, bottom-left, bottom-right.
    Quadrant pooling keeps the features sensitive to content moving between
    the upper and lower halves of a view.
    """

    name = "mock"
    dim = 8

    def __init__(self, input_size: int = INPUT_SIZE):
        if input_size < 2:
            raise InvalidInputError("mock input size must be at least 2")
        self.input_size = int(input_size)

    def _forward(self, batch):
        grey = np.tensordot(_GREY, batch.astype(np.float64), axes=([0], [1]))
        out = np.empty((len(batch), self.dim))
        half = self.input_size // 2
        for i, g in enumerate(grey):
            pools = (g[:half, :half], g[:half, half:], g[half:, :half], g[half:, half:])
            for q, pool in enumerate(pools):
                out[i, 2 * q] = pool.mean()
                out[i, 2 * q + 1] = pool.std()
        return out


def mock_extract(img) -> np.ndarray:
    return MockExtractor().extract([img])[0]


class OnnxExtractor(FeatureExtractor):
    """Runs a pooled-feature network (e.g. Inception-V3 up to pool3) via onnxruntime.

    The model takes a float32 batch of 299 x 299 RGB images in [-1, 1], laid
    out NCHW or NHWC (detected from the input shape), and returns one feature
    row per image.
    """

    def __init__(self, model_path, *, dim: int | None = 2048, name: str = "inception-onnx",
                 input_name: str | None = None, output_name: str | None = None):
        try:
            import onnxruntime as ort
        except ImportError as exc:
            raise BackendError("onnxruntime is required for the ONNX backend "
                               "(pip install 'artifact[onnx]')") from exc
        model_path = os.fspath(model_path)
        if not os.path.isfile(model_path):
            raise BackendError(f"model file not found: {model_path}")
        opts = ort.SessionOptions()
        opts.intra_op_num_threads = 1
        try:
            self._session = ort.InferenceSession(model_path, sess_options=opts,
                                                 providers=["CPUExecutionProvider"])
        except Exception as exc:  # onnxruntime raises several unrelated types
            raise BackendError(f"could not load model {model_path}: {exc}") from exc
        inp = self._session.get_inputs()[0] if input_name is None else next(
            i for i in self._session.get_inputs() if i.name == input_name)
        out = self._session.get_outputs()[0] if output_name is None else next(
            o for o in self._session.get_outputs() if o.name == output_name)
        self._input_name = inp.name
        self._output_name = out.name
        self._channels_last = len(inp.shape) == 4 and inp.shape[-1] == 3
        static = [d for d in out.shape[1:] if isinstance(d, int)]
        model_dim = int(np.prod(static)) if static and len(static) == len(out.shape) - 1 else None
        if dim is not None and model_dim is not None and model_dim != dim:
            raise BackendError(f"model output has {model_dim} features, expected {dim}")
        self.dim = dim if dim is not None else model_dim
        if self.dim is None:
            raise BackendError("cannot infer feature dimension from model; pass dim explicitly")
        self.name = name
        self.model_path = model_path

    def describe(self):
        info = super().describe()
        info["model_path"] = self.model_path
        return info

    def _forward(self, batch):
        if self._channels_last:
            batch = batch.transpose(0, 2, 3, 1)
        (feats,) = self._session.run([self._output_name], {self._input_name: np.ascontiguousarray(batch)})
        return feats


EXTRACTORS = ("mock", "inception-onnx")


def make_extractor(name: str, model_path=None) -> FeatureExtractor:
    """Build an extractor by CLI name; the model path falls back to ``$SPHEREMETRIC_MODEL``."""
    if name == "mock":
        return MockExtractor()
    if name == "inception-onnx":
        model_path = model_path or os.environ.get(MODEL_ENV_VAR)
        if not model_path:
            raise BackendError(f"no model given: pass --model-path or set {MODEL_ENV_VAR}")
        return OnnxExtractor(model_path)
    raise InvalidInputError(f"unknown extractor {name!r}; expected one of {EXTRACTORS}")

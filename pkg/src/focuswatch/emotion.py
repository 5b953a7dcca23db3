"""Emotion classifier: a single-hidden-layer network (tanh hidden, softmax
output) over normalized landmark vectors, trained by mini-batch gradient
descent on cross-entropy.

AffectNet-scale training happens elsewhere; this module trains at desk
scale on synthetic landmark data and loads externally trained weights
from file. The live pipeline never feeds absent faces to the classifier:
frames without a face get the No-Face label directly.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import (
    CorruptWeights,
    DimensionMismatch,
    EmptyDataset,
    FormatVersionMismatch,
    NonFiniteInput,
)
from .types import EmotionDistribution, N_EMOTIONS

WEIGHTS_MAGIC = b"FWMLPW01"
WEIGHTS_VERSION = 1
DEFAULT_HIDDEN = 64


@dataclass(frozen=True)
class MlpModel:
    w1: np.ndarray  # (hidden, d_in)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (11, hidden)
    b2: np.ndarray  # (11,)
    version: int = WEIGHTS_VERSION

    def __post_init__(self):
        for name in ("w1", "b1", "w2", "b2"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise NonFiniteInput(f"{name} contains non-finite weights")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.w2.shape[0] != N_EMOTIONS or self.b2.shape != (N_EMOTIONS,):
            raise DimensionMismatch("output layer must have width 11")
        if self.w1.shape[0] != self.b1.shape[0] or self.w2.shape[1] != self.w1.shape[0]:
            raise DimensionMismatch("inconsistent layer shapes")

    @property
    def d_in(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    @classmethod
    def zeros(cls, d_in: int, hidden: int = DEFAULT_HIDDEN) -> "MlpModel":
        return cls(
            w1=np.zeros((hidden, d_in)),
            b1=np.zeros(hidden),
            w2=np.zeros((N_EMOTIONS, hidden)),
            b2=np.zeros(N_EMOTIONS),
        )


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _forward(model: MlpModel, x: np.ndarray):
    h = np.tanh(x @ model.w1.T + model.b1)
    p = softmax(h @ model.w2.T + model.b2)
    return h, p


def infer(model: MlpModel, landmarks) -> EmotionDistribution:
    """Forward pass for one normalized landmark vector."""
    x = np.asarray(landmarks, dtype=np.float64).ravel()
    if x.shape != (model.d_in,):
        raise DimensionMismatch(f"expected input of length {model.d_in}, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("landmark vector contains non-finite values")
    _, p = _forward(model, x[None, :])
    return EmotionDistribution(p[0])


def infer_batch(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Probabilities for an (n, d_in) batch, without per-row wrapping."""
    if x.shape[1] != model.d_in:
        raise DimensionMismatch(f"expected width {model.d_in}, got {x.shape}")
    return _forward(model, x)[1]


def _loss_and_grads(model: MlpModel, x: np.ndarray, labels: np.ndarray):
    n = len(x)
    h, p = _forward(model, x)
    loss = -np.mean(np.log(np.maximum(p[np.arange(n), labels], 1e-300)))
    dz2 = p.copy()
    dz2[np.arange(n), labels] -= 1.0
    dz2 /= n
    gw2 = dz2.T @ h
    gb2 = dz2.sum(axis=0)
    dh = dz2 @ model.w2
    dz1 = dh * (1.0 - h * h)
    gw1 = dz1.T @ x
    gb1 = dz1.sum(axis=0)
    return loss, (gw1, gb1, gw2, gb2)


def train(
    examples_x,
    labels,
    epochs: int = 100,
    learning_rate: float = 0.1,
    batch_size: int = 32,
    seed: int = 0,
    hidden: int = DEFAULT_HIDDEN,
):
    """Mini-batch gradient descent on mean cross-entropy.

    Single-threaded and bitwise reproducible for a fixed seed. Returns
    (model, final_loss).
    """
    x = np.asarray(examples_x, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or len(x) == 0:
        raise EmptyDataset("need a non-empty (n, d_in) example matrix")
    if len(y) != len(x) or y.min() < 0 or y.max() >= N_EMOTIONS:
        raise DimensionMismatch("labels must align with examples and lie in 0..10")
    rng = np.random.default_rng(seed)
    d_in = x.shape[1]
    scale1 = 1.0 / np.sqrt(d_in)
    scale2 = 1.0 / np.sqrt(hidden)
    w1 = rng.normal(0.0, scale1, size=(hidden, d_in))
    b1 = np.zeros(hidden)
    w2 = rng.normal(0.0, scale2, size=(N_EMOTIONS, hidden))
    b2 = np.zeros(N_EMOTIONS)
    model = MlpModel(w1=w1, b1=b1, w2=w2, b2=b2)
    n = len(x)
    loss = float("nan")
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            loss, (gw1, gb1, gw2, gb2) = _loss_and_grads(model, x[idx], y[idx])
            model = MlpModel(
                w1=model.w1 - learning_rate * gw1,
                b1=model.b1 - learning_rate * gb1,
                w2=model.w2 - learning_rate * gw2,
                b2=model.b2 - learning_rate * gb2,
            )
    final_loss, _ = _loss_and_grads(model, x, y)
    return model, float(final_loss)


def mean_loss(model: MlpModel, x, labels) -> float:
    loss, _ = _loss_and_grads(model, np.asarray(x, dtype=np.float64), np.asarray(labels))
    return float(loss)


# ---------------------------------------------------------------------------
# Weights file: magic, version, dims, row-major float64 matrices, crc32
# ---------------------------------------------------------------------------

def save_weights(model: MlpModel, path) -> None:
    body = struct.pack("<III", model.d_in, model.hidden, N_EMOTIONS)
    for arr in (model.w1, model.b1, model.w2, model.b2):
        body += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    crc = zlib.crc32(body) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack("<I", WEIGHTS_VERSION))
        fh.write(struct.pack("<Q", len(body)))
        fh.write(body)
        fh.write(struct.pack("<I", crc))


def load_weights(path) -> MlpModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(WEIGHTS_MAGIC) + 12 or not data.startswith(WEIGHTS_MAGIC):
        raise CorruptWeights("missing or truncated weights header")
    off = len(WEIGHTS_MAGIC)
    (version,) = struct.unpack_from("<I", data, off)
    if version != WEIGHTS_VERSION:
        raise FormatVersionMismatch(f"unsupported weights version {version}")
    off += 4
    (body_len,) = struct.unpack_from("<Q", data, off)
    off += 8
    body = data[off : off + body_len]
    if len(body) != body_len or len(data) < off + body_len + 4:
        raise CorruptWeights("truncated weights file")
    (crc,) = struct.unpack_from("<I", data, off + body_len)
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise CorruptWeights("checksum mismatch")
    d_in, hidden, n_out = struct.unpack_from("<III", body, 0)
    if n_out != N_EMOTIONS:
        raise CorruptWeights(f"output width {n_out} != {N_EMOTIONS}")
    sizes = [hidden * d_in, hidden, N_EMOTIONS * hidden, N_EMOTIONS]
    expected = 12 + 8 * sum(sizes)
    if body_len != expected:
        raise CorruptWeights("declared layer sizes do not match stored matrices")
    vals = np.frombuffer(body, dtype="<f8", offset=12)
    pos = 0
    arrs = []
    for size in sizes:
        arrs.append(vals[pos : pos + size].copy())
        pos += size
    return MlpModel(
        w1=arrs[0].reshape(hidden, d_in),
        b1=arrs[1],
        w2=arrs[2].reshape(N_EMOTIONS, hidden),
        b2=arrs[3],
    )


# ---------------------------------------------------------------------------
# Desk-scale surrogate dataset
# ---------------------------------------------------------------------------

def make_surrogate_dataset(
    template,
    classes=(0, 1, 2),
    per_class: int = 40,
    amplitude: float = 0.08,
    noise: float = 0.01,
    seed: int = 0,
):
    """Labeled landmark clusters built by deforming the canonical template.

    Each class gets its own smooth displacement field (seeded by the class
    index), scaled so clusters are separable but overlapping under noise.
    Returns (x, labels) where x rows are normalized landmark vectors.
    """
    from .geometry import normalize_landmarks
    from .types import LandmarkFrame

    rng = np.random.default_rng(seed)
    n_pts = template.landmark_count
    xs, ys = [], []
    for label in classes:
        field_rng = np.random.default_rng(1000 + label)
        field = field_rng.normal(0.0, 1.0, size=(n_pts, 3))
        field /= np.linalg.norm(field)
        for _ in range(per_class):
            pts = template.points + amplitude * field
            pts = pts + rng.normal(0.0, noise, size=(n_pts, 3))
            vec = normalize_landmarks(LandmarkFrame(0, pts, True), template).ravel()
            xs.append(vec)
            ys.append(label)
    return np.array(xs), np.array(ys)

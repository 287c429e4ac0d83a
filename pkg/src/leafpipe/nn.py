"""Minimal convolutional network: conv / maxpool / dense / relu / flatten
layers, softmax cross-entropy, backpropagation, and SGD with momentum.

Tensors are plain numpy arrays, activations shaped (B, C, H, W) between
spatial layers and (B, F) once flattened. Layers run in float32 for training
speed or float64 for gradient verification (finite differences are unreliable
at 32-bit). Any non-finite activation or loss aborts training with the
offending layer named rather than letting NaN propagate.

Architectures are declared as comma-separated layer tokens, e.g.

    conv:32k3,relu,pool:2,conv:64k3,relu,pool:2,flatten,dense:128,relu

``build_network`` appends the final dense classifier sized to the class
count, which is always taken from the data.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import quote, unquote

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dataset import SplitDataset
from .errors import DataError, NumericError
from .metrics import EpochRecord
from .rng import Rng, mix64

DEFAULT_ARCH = ("conv:32k3,relu,pool:2,conv:64k3,relu,pool:2,"
                "conv:128k3,relu,pool:2,flatten,dense:128,relu")

CHECKPOINT_MAGIC = b"LPNN"
CHECKPOINT_VERSION = 1
_KIND_IDS = {"conv": 1, "relu": 2, "maxpool": 3, "flatten": 4, "dense": 5}
_KIND_NAMES = {v: k for k, v in _KIND_IDS.items()}


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 16
    learning_rate: float = 0.01
    momentum: float = 0.9
    seed: int = 0
    weight_init: str = "he"  # "he" | "std:<value>"
    precision: str = "float32"  # "float32" | "float64"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate < 0:
            # 0 is allowed: it freezes the weights, useful as a control
            raise ValueError("learning_rate must be non-negative")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.precision not in ("float32", "float64"):
            raise ValueError(f"precision must be float32|float64, got {self.precision!r}")

    @property
    def dtype(self):
        return np.float32 if self.precision == "float32" else np.float64


class Layer:
    """Base layer: forward caches what backward needs; backward clears it."""

    kind = "layer"

    def __init__(self):
        self._cache = None

    def params(self) -> list[np.ndarray]:
        return []

    def grads(self) -> list[np.ndarray]:
        return []

    def out_shape(self, in_shape: tuple) -> tuple:
        raise NotImplementedError

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _take_cache(self):
        if self._cache is None:
            raise RuntimeError(f"backward before forward in {self.kind} layer")
        cache, self._cache = self._cache, None
        return cache


class Conv2d(Layer):
    kind = "conv"

    def __init__(self, in_ch: int, out_ch: int, k: int, stride: int = 1,
                 pad: int = 0, dtype=np.float32):
        super().__init__()
        if min(in_ch, out_ch, k, stride) < 1 or pad < 0:
            raise ValueError("conv dims must be positive (pad >= 0)")
        self.in_ch, self.out_ch, self.k, self.stride, self.pad = in_ch, out_ch, k, stride, pad
        self.w = np.zeros((out_ch, in_ch, k, k), dtype=dtype)
        self.b = np.zeros(out_ch, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.dw, self.db]

    def init_params(self, rng: Rng, std: float | None = None):
        fan_in = self.in_ch * self.k * self.k
        scale = std if std is not None else float(np.sqrt(2.0 / fan_in))
        self.w[...] = rng.normal(self.w.size, std=scale).reshape(self.w.shape)
        self.b[...] = 0.0

    def out_shape(self, in_shape):
        c, h, w = in_shape
        if c != self.in_ch:
            raise ValueError(f"conv expects {self.in_ch} channels, got {c}")
        ho = (h + 2 * self.pad - self.k) // self.stride + 1
        wo = (w + 2 * self.pad - self.k) // self.stride + 1
        if ho < 1 or wo < 1:
            raise ValueError(f"conv output collapses on input {in_shape}")
        return (self.out_ch, ho, wo)

    def forward(self, x):
        b, c, h, w = x.shape
        if c != self.in_ch:
            raise ValueError(f"conv expects {self.in_ch} channels, got {c}")
        _, ho, wo = self.out_shape((c, h, w))
        p, s, k = self.pad, self.stride, self.k
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::s, ::s]
        # (C*k*k, B*Ho*Wo) layout: the innermost gather axis is contiguous
        cols = win.transpose(1, 4, 5, 0, 2, 3).reshape(c * k * k, b * ho * wo)
        out = self.w.reshape(self.out_ch, -1) @ cols + self.b[:, np.newaxis]
        self._cache = (cols, (b, c, h, w), (ho, wo))
        return np.ascontiguousarray(out.reshape(self.out_ch, b, ho, wo).transpose(1, 0, 2, 3))

    def backward(self, dy, need_dx: bool = True):
        cols, (b, c, h, w), (ho, wo) = self._take_cache()
        p, s, k = self.pad, self.stride, self.k
        dyf = dy.transpose(1, 0, 2, 3).reshape(self.out_ch, -1)
        self.dw[...] = (dyf @ cols.T).reshape(self.w.shape)
        self.db[...] = dyf.sum(axis=1)
        if not need_dx:
            return None
        dcols = self.w.reshape(self.out_ch, -1).T @ dyf
        dwin = dcols.reshape(c, k, k, b, ho, wo)
        dxp = np.zeros((b, c, h + 2 * p, w + 2 * p), dtype=dy.dtype)
        for i in range(k):
            for j in range(k):
                dxp[:, :, i : i + s * ho : s, j : j + s * wo : s] += \
                    dwin[:, i, j].transpose(1, 0, 2, 3)
        return dxp[:, :, p : p + h, p : p + w] if p else dxp


class MaxPool2d(Layer):
    kind = "maxpool"

    def __init__(self, window: int, stride: int | None = None):
        super().__init__()
        if window < 1:
            raise ValueError("pool window must be >= 1")
        self.window = window
        self.stride = stride if stride is not None else window
        if self.stride < 1:
            raise ValueError("pool stride must be >= 1")

    def out_shape(self, in_shape):
        c, h, w = in_shape
        if h < self.window or w < self.window:
            raise ValueError(f"pool window {self.window} exceeds input {in_shape}")
        return (c, (h - self.window) // self.stride + 1,
                (w - self.window) // self.stride + 1)

    def forward(self, x):
        b, c, h, w = x.shape
        k, s = self.window, self.stride
        _, ho, wo = self.out_shape((c, h, w))
        fast = s == k and h % k == 0 and w % k == 0
        if fast:
            flat = (x.reshape(b, c, ho, k, wo, k).transpose(0, 1, 2, 4, 3, 5)
                    .reshape(b, c, ho, wo, k * k))
        else:
            win = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::s, ::s]
            flat = win.reshape(b, c, ho, wo, k * k)
        arg = flat.argmax(axis=-1)  # first max wins ties
        out = np.take_along_axis(flat, arg[..., np.newaxis], axis=-1)[..., 0]
        self._cache = (arg, (b, c, h, w), (ho, wo), fast)
        return out

    def backward(self, dy):
        arg, (b, c, h, w), (ho, wo), fast = self._take_cache()
        k, s = self.window, self.stride
        if fast:
            dflat = np.zeros((b, c, ho, wo, k * k), dtype=dy.dtype)
            np.put_along_axis(dflat, arg[..., np.newaxis], dy[..., np.newaxis], axis=-1)
            return (dflat.reshape(b, c, ho, wo, k, k).transpose(0, 1, 2, 4, 3, 5)
                    .reshape(b, c, h, w))
        # overlapping windows: scatter-add to absolute positions
        oy = np.arange(ho)[:, np.newaxis] * s
        ox = np.arange(wo)[np.newaxis, :] * s
        ay = oy + arg // k
        ax = ox + arg % k
        bidx = np.arange(b)[:, np.newaxis, np.newaxis, np.newaxis]
        cidx = np.arange(c)[np.newaxis, :, np.newaxis, np.newaxis]
        flat_idx = ((bidx * c + cidx) * h + ay) * w + ax
        dx = np.zeros(b * c * h * w, dtype=dy.dtype)
        np.add.at(dx, flat_idx.ravel(), dy.ravel())
        return dx.reshape(b, c, h, w)


class ReLU(Layer):
    kind = "relu"

    def out_shape(self, in_shape):
        return in_shape

    def forward(self, x):
        self._cache = x > 0
        return np.maximum(x, 0)

    def backward(self, dy):
        return dy * self._take_cache()


class Flatten(Layer):
    kind = "flatten"

    def out_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def forward(self, x):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._take_cache())


class Dense(Layer):
    kind = "dense"

    def __init__(self, in_features: int, out_features: int, dtype=np.float32):
        super().__init__()
        if min(in_features, out_features) < 1:
            raise ValueError("dense dims must be positive")
        self.in_features, self.out_features = in_features, out_features
        self.w = np.zeros((out_features, in_features), dtype=dtype)
        self.b = np.zeros(out_features, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.dw, self.db]

    def init_params(self, rng: Rng, std: float | None = None):
        scale = std if std is not None else float(np.sqrt(2.0 / self.in_features))
        self.w[...] = rng.normal(self.w.size, std=scale).reshape(self.w.shape)
        self.b[...] = 0.0

    def out_shape(self, in_shape):
        if len(in_shape) != 1 or in_shape[0] != self.in_features:
            raise ValueError(f"dense expects flat ({self.in_features},), got {in_shape}")
        return (self.out_features,)

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ValueError(f"dense expects (B, {self.in_features}), got {x.shape}")
        self._cache = x
        return x @ self.w.T + self.b

    def backward(self, dy, need_dx: bool = True):
        x = self._take_cache()
        self.dw[...] = dy.T @ x
        self.db[...] = dy.sum(axis=0)
        return dy @ self.w if need_dx else None


class Network:
    """Ordered layer stack ending in a K-way linear classifier (softmax at the
    loss/inference boundary, not as a parameterized layer)."""

    def __init__(self, layers: list[Layer], num_classes: int,
                 input_shape: tuple, meta: dict | None = None):
        self.layers = layers
        self.num_classes = num_classes
        self.input_shape = tuple(input_shape)
        self.meta = dict(meta) if meta else {}
        shape = self.input_shape
        for layer in layers:
            shape = layer.out_shape(shape)
        if shape != (num_classes,):
            raise ValueError(f"network output shape {shape} != ({num_classes},)")
        self.dtype = self._param_dtype()

    def _param_dtype(self):
        for layer in self.layers:
            for p in layer.params():
                return p.dtype
        return np.float32

    @property
    def param_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def parameters(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params()]

    def grads(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads()]

    def logits(self, x: np.ndarray, check: bool = False) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        if x.shape[1:] != self.input_shape:
            raise ValueError(f"input shape {x.shape[1:]} != expected {self.input_shape}")
        for i, layer in enumerate(self.layers):
            x = layer.forward(x)
            if check and not np.isfinite(x).all():
                raise NumericError(f"non-finite activation after layer {i} ({layer.kind})")
        return x

    def forward(self, x: np.ndarray, check: bool = False) -> np.ndarray:
        """Class probabilities [B, K]: each row a simplex."""
        return softmax(self.logits(x, check=check))

    def backward(self, dlogits: np.ndarray) -> list[np.ndarray]:
        d = dlogits
        for i, layer in enumerate(reversed(self.layers)):
            last = i == len(self.layers) - 1
            if last and isinstance(layer, (Conv2d, Dense)):
                layer.backward(d, need_dx=False)  # nothing consumes dx below
            else:
                d = layer.backward(d)
        return self.grads()


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with log-sum-exp stabilization."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_softmax_xent(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient (p - onehot) / B."""
    labels = np.asarray(labels)
    b, k = logits.shape
    if labels.shape != (b,):
        raise ValueError(f"labels shape {labels.shape} != ({b},)")
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"labels must lie in [0, {k})")
    z = logits - logits.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1))
    loss = float((logsumexp - z[np.arange(b), labels]).mean())
    dlogits = softmax(logits).astype(logits.dtype)
    dlogits[np.arange(b), labels] -= 1.0
    return loss, dlogits / b


def sgd_step(net: Network, grads: list[np.ndarray], lr: float, momentum: float,
             velocity: list[np.ndarray]) -> None:
    """v <- momentum * v - lr * g;  w <- w + v (in place)."""
    params = net.parameters()
    if len(grads) != len(params) or len(velocity) != len(params):
        raise ValueError("grads/velocity must match parameter list")
    for w, g, v in zip(params, grads, velocity):
        if g.shape != w.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {w.shape}")
        v *= momentum
        v -= lr * g.astype(w.dtype, copy=False)
        w += v


def _parse_arch_token(token: str):
    token = token.strip()
    if token == "relu":
        return ("relu",)
    if token == "flatten":
        return ("flatten",)
    if token.startswith("pool:"):
        spec = token[5:]
        if "s" in spec:
            w_str, s_str = spec.split("s", 1)
            return ("maxpool", int(w_str), int(s_str))
        return ("maxpool", int(spec), None)
    if token.startswith("dense:"):
        return ("dense", int(token[6:]))
    if token.startswith("conv:"):
        spec = token[5:]
        if "k" not in spec:
            raise ValueError(f"conv token needs a kernel size: {token!r}")
        out_str, rest = spec.split("k", 1)
        stride, pad = 1, None
        if "p" in rest:
            rest, pad_str = rest.split("p", 1)
            pad = int(pad_str)
        if "s" in rest:
            rest, stride_str = rest.split("s", 1)
            stride = int(stride_str)
        k = int(rest)
        return ("conv", int(out_str), k, stride, pad if pad is not None else k // 2)
    raise ValueError(f"unknown architecture token {token!r}")


def build_network(arch: str, input_shape: tuple, num_classes: int,
                  seed: int = 0, precision: str = "float32",
                  weight_init: str = "he") -> Network:
    """Build and initialize a network from an architecture string.

    ``input_shape`` is (C, H, W); a dense classifier with ``num_classes``
    outputs is appended after the declared stack. Hidden layers use He
    fan-in init; the classifier starts near zero so the initial prediction
    is close to uniform.
    """
    if num_classes < 2:
        raise ValueError("num_classes must be >= 2")
    dtype = np.float32 if precision == "float32" else np.float64
    if precision not in ("float32", "float64"):
        raise ValueError(f"precision must be float32|float64, got {precision!r}")
    hidden_std = None
    if weight_init != "he":
        if not weight_init.startswith("std:"):
            raise ValueError(f"weight_init must be 'he' or 'std:<x>', got {weight_init!r}")
        hidden_std = float(weight_init[4:])

    layers: list[Layer] = []
    shape = tuple(input_shape)
    for token in arch.split(","):
        parsed = _parse_arch_token(token)
        if parsed[0] == "relu":
            layer = ReLU()
        elif parsed[0] == "flatten":
            layer = Flatten()
        elif parsed[0] == "maxpool":
            layer = MaxPool2d(parsed[1], parsed[2])
        elif parsed[0] == "dense":
            if len(shape) != 1:
                raise ValueError("dense layer requires a flatten before it")
            layer = Dense(shape[0], parsed[1], dtype=dtype)
        else:
            _, out_ch, k, stride, pad = parsed
            if len(shape) != 3:
                raise ValueError("conv layer requires spatial input")
            layer = Conv2d(shape[0], out_ch, k, stride=stride, pad=pad, dtype=dtype)
        shape = layer.out_shape(shape)
        layers.append(layer)
    if len(shape) == 3:
        layer = Flatten()
        shape = layer.out_shape(shape)
        layers.append(layer)
    classifier = Dense(shape[0], num_classes, dtype=dtype)
    layers.append(classifier)

    rng = Rng(mix64(seed, 0x494E4954))  # "INIT"
    for layer in layers[:-1]:
        if isinstance(layer, (Conv2d, Dense)):
            layer.init_params(rng, std=hidden_std)
    classifier.init_params(rng, std=0.01)
    return Network(layers, num_classes, input_shape)


def _score_batches(net: Network, batches) -> tuple[float, float]:
    total_loss, correct, count = 0.0, 0, 0
    for batch in batches:
        logits = net.logits(batch.inputs)
        loss, _ = loss_softmax_xent(logits, batch.labels)
        total_loss += loss * len(batch.labels)
        correct += int((logits.argmax(axis=1) == batch.labels).sum())
        count += len(batch.labels)
    if count == 0:
        raise DataError("no readable evaluation images")
    return total_loss / count, correct / count


def evaluate(net: Network, items, pipeline, batch_size: int = 32) -> tuple[float, float]:
    """Mean loss and accuracy over ``items`` with evaluation preprocessing."""
    return _score_batches(net, pipeline.batches(items, batch_size, train=False))


def train(net: Network, split_data: SplitDataset, cfg: TrainConfig, pipeline,
          sink=None) -> list[EpochRecord]:
    """Run exactly cfg.epochs epochs of SGD; returns the per-epoch history.

    Train metrics are running averages over the epoch's batches (measured as
    trained); validation metrics come from a full pass over the test
    partition. ``sink``, if given, receives each EpochRecord as it is made.
    """
    velocity = [np.zeros_like(p) for p in net.parameters()]
    history: list[EpochRecord] = []
    # evaluation inputs are augmentation-free, so prepare them once
    val_batches = list(pipeline.batches(split_data.test, cfg.batch_size, train=False))
    for epoch in range(cfg.epochs):
        total_loss, correct, count = 0.0, 0, 0
        for batch in pipeline.batches(split_data.train, cfg.batch_size,
                                      seed=cfg.seed, epoch=epoch, train=True):
            logits = net.logits(batch.inputs, check=True)
            loss, dlogits = loss_softmax_xent(logits, batch.labels)
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}")
            grads = net.backward(dlogits)
            sgd_step(net, grads, cfg.learning_rate, cfg.momentum, velocity)
            total_loss += loss * len(batch.labels)
            correct += int((logits.argmax(axis=1) == batch.labels).sum())
            count += len(batch.labels)
        if count == 0:
            raise DataError("no readable training images")
        val_loss, val_acc = _score_batches(net, val_batches)
        record = EpochRecord(epoch=epoch, train_loss=total_loss / count,
                             train_acc=correct / count, val_loss=val_loss,
                             val_acc=val_acc)
        history.append(record)
        if sink is not None:
            sink(record)
    return history


def predict(net: Network, x: np.ndarray) -> tuple[int, np.ndarray]:
    """Argmax class (ties to the lowest index) and the probability vector."""
    x = np.asarray(x)
    if x.ndim == len(net.input_shape):
        x = x[np.newaxis]
    probs = net.forward(x)[0]
    return int(np.argmax(probs)), probs


# ---------------------------------------------------------------------------
# checkpoint serialization
#
# magic "LPNN" | version u16 LE | meta_len u32 LE | meta (UTF-8 "k=v\n" lines,
# percent-encoded values) | layer_count u16 | layer records | parameter block
# (float32 LE, weights then bias per parameterized layer, in layer order).
#
# layer record: kind u8, then
#   conv:    in u16, out u16, k u8, stride u8, pad u8
#   maxpool: window u8, stride u8
#   dense:   in u32, out u32
#   relu / flatten: no payload
# ---------------------------------------------------------------------------


def _encode_meta(meta: dict) -> bytes:
    lines = [f"{k}={quote(str(v))}" for k, v in sorted(meta.items())]
    return ("\n".join(lines) + "\n" if lines else "").encode("utf-8")


def _decode_meta(blob: bytes) -> dict:
    meta = {}
    for line in blob.decode("utf-8").splitlines():
        if not line:
            continue
        k, _, v = line.partition("=")
        meta[k] = unquote(v)
    return meta


def save_checkpoint(net: Network, path, meta: dict | None = None) -> None:
    """Write the layer table and float32 parameters; see format note above."""
    merged = dict(net.meta)
    if meta:
        merged.update(meta)
    merged.setdefault("input_shape", "x".join(str(d) for d in net.input_shape))
    merged.setdefault("num_classes", str(net.num_classes))
    out = bytearray()
    out += CHECKPOINT_MAGIC
    out += struct.pack("<H", CHECKPOINT_VERSION)
    blob = _encode_meta(merged)
    out += struct.pack("<I", len(blob))
    out += blob
    out += struct.pack("<H", len(net.layers))
    for layer in net.layers:
        out += struct.pack("<B", _KIND_IDS[layer.kind])
        if isinstance(layer, Conv2d):
            out += struct.pack("<HHBBB", layer.in_ch, layer.out_ch, layer.k,
                               layer.stride, layer.pad)
        elif isinstance(layer, MaxPool2d):
            out += struct.pack("<BB", layer.window, layer.stride)
        elif isinstance(layer, Dense):
            out += struct.pack("<II", layer.in_features, layer.out_features)
    for layer in net.layers:
        for p in layer.params():
            out += np.ascontiguousarray(p, dtype="<f4").tobytes()
    try:
        Path(path).write_bytes(bytes(out))
    except OSError as exc:
        raise DataError(f"cannot write checkpoint {path}: {exc}") from exc


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise DataError(f"truncated {what}")
        chunk = self.buf[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def load_checkpoint(path) -> Network:
    """Reload a checkpoint; parameters load as float32 bit-identically."""
    p = Path(path)
    if not p.is_file():
        raise DataError(f"file not found: {path}")
    r = _Reader(p.read_bytes())
    if r.take(4, "header") != CHECKPOINT_MAGIC:
        raise DataError(f"not a checkpoint: {path}")
    (version,) = r.unpack("<H", "header")
    if version != CHECKPOINT_VERSION:
        raise DataError(f"unsupported checkpoint version {version}")
    (meta_len,) = r.unpack("<I", "header")
    meta = _decode_meta(r.take(meta_len, "metadata block"))
    (layer_count,) = r.unpack("<H", "layer table")

    layers: list[Layer] = []
    for _ in range(layer_count):
        (kind_id,) = r.unpack("<B", "layer table")
        kind = _KIND_NAMES.get(kind_id)
        if kind is None:
            raise DataError(f"unknown layer kind id {kind_id}")
        if kind == "conv":
            in_ch, out_ch, k, stride, pad = r.unpack("<HHBBB", "layer table")
            layers.append(Conv2d(in_ch, out_ch, k, stride=stride, pad=pad))
        elif kind == "maxpool":
            window, stride = r.unpack("<BB", "layer table")
            layers.append(MaxPool2d(window, stride))
        elif kind == "dense":
            in_f, out_f = r.unpack("<II", "layer table")
            layers.append(Dense(in_f, out_f))
        elif kind == "relu":
            layers.append(ReLU())
        else:
            layers.append(Flatten())

    for layer in layers:
        for param in layer.params():
            raw = r.take(param.size * 4, "parameter block")
            param[...] = np.frombuffer(raw, dtype="<f4").reshape(param.shape)
    if r.pos != len(r.buf):
        raise DataError("parameter block length disagrees with layer table")

    if "input_shape" not in meta or "num_classes" not in meta:
        raise DataError("checkpoint metadata missing input_shape/num_classes")
    input_shape = tuple(int(d) for d in meta["input_shape"].split("x"))
    num_classes = int(meta["num_classes"])
    try:
        return Network(layers, num_classes, input_shape, meta=meta)
    except ValueError as exc:
        raise DataError(f"inconsistent checkpoint layer table: {exc}") from exc

"""A small 1D convolutional regressor written directly in numpy, with Adam training and a gradient check."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import struct
import time
import zlib
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import CorruptFile, Diverged, ShapeMismatch, VersionMismatch

logger = logging.getLogger(__name__)

MAGIC = b"FCNN"
FORMAT_VERSION = 1

# (kind, *args): conv (out, k), relu, maxpool (size), gap, dense (out)
PRODUCTION_LAYERS = (
    ("conv", 32, 5), ("relu",), ("maxpool", 2),
    ("conv", 48, 5), ("relu",),
    ("conv", 64, 3), ("relu",),
    ("gap",),
    ("dense", 64), ("relu",),
    ("dense", 3),
)


@dataclass(eq=False)
class RegressorModel:
    """Layer spec plus one flat parameter vector; weights are views into it."""

    layers: tuple
    input_shape: tuple  # (timesteps, channels)
    params: np.ndarray
    target_lo: np.ndarray = field(default_factory=lambda: np.zeros(3))
    target_hi: np.ndarray = field(default_factory=lambda: np.ones(3))
    _slots: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.layers = tuple(tuple(l) for l in self.layers)
        self.input_shape = tuple(int(x) for x in self.input_shape)
        self.target_lo = np.asarray(self.target_lo, dtype=float)
        self.target_hi = np.asarray(self.target_hi, dtype=float)
        self._slots = _param_slots(self.layers, self.input_shape)
        if self.params.shape != (self.n_params,):
            raise ShapeMismatch(f"expected {self.n_params} parameters, got {self.params.shape}")

    @property
    def n_params(self) -> int:
        return sum(int(np.prod(s)) for slot in self._slots for s in slot)

    @property
    def output_dim(self) -> int:
        return _param_slots(self.layers, self.input_shape, out_dim=True)

    def weights(self, params=None):
        """Per-layer lists of parameter views (weight, bias) for ``params``."""
        p = self.params if params is None else params
        out, off = [], 0
        for slot in self._slots:
            views = []
            for shape in slot:
                size = int(np.prod(shape))
                views.append(p[off:off + size].reshape(shape))
                off += size
            out.append(views)
        return out

    def astype(self, dtype) -> "RegressorModel":
        return RegressorModel(self.layers, self.input_shape, self.params.astype(dtype), self.target_lo, self.target_hi)

    def normalize_targets(self, y):
        return (np.asarray(y, dtype=float) - self.target_lo) / (self.target_hi - self.target_lo)

    def denormalize(self, y):
        return np.asarray(y, dtype=float) * (self.target_hi - self.target_lo) + self.target_lo


def _param_slots(layers, input_shape, out_dim=False):
    t, c = input_shape
    slots = []
    for layer in layers:
        kind = layer[0]
        if kind == "conv":
            o, k = layer[1], layer[2]
            slots.append([(k, c, o), (o,)])
            c = o
        elif kind == "dense":
            if t is not None:
                raise ShapeMismatch("dense layers need a pooled (flat) input")
            o = layer[1]
            slots.append([(c, o), (o,)])
            c = o
        else:
            if kind == "maxpool":
                t = t // layer[1]
            elif kind == "gap":
                t = None
            elif kind != "relu":
                raise ValueError(f"unknown layer kind {kind!r}")
            slots.append([])
    if out_dim:
        return c
    return slots


def build_model(n_channels: int, seed: int = 0, layers=PRODUCTION_LAYERS, timesteps: int = 30,
                target_lo=(0.0, 0.0, 0.0), target_hi=(1.0, 1.0, 1.0), dtype=np.float64) -> RegressorModel:
    """Fan-in scaled uniform initialization: weights in +-sqrt(6 / fan_in), zero biases."""
    slots = _param_slots(layers, (timesteps, n_channels))
    rng = np.random.default_rng(seed)
    chunks = []
    for slot in slots:
        if not slot:
            continue
        wshape, bshape = slot
        fan_in = int(np.prod(wshape[:-1]))
        bound = np.sqrt(6.0 / fan_in)
        chunks.append(rng.uniform(-bound, bound, int(np.prod(wshape))))
        chunks.append(np.zeros(int(np.prod(bshape))))
    params = np.concatenate(chunks).astype(dtype)
    model = RegressorModel(layers, (timesteps, n_channels), params, target_lo, target_hi)
    logger.info("built regressor with %d parameters", model.n_params)
    return model


# ---------------------------------------------------------------------------
# forward / backward


def _conv_forward(x, w, b):
    k = w.shape[0]
    pad = (k - 1) // 2
    xp = np.pad(x, ((0, 0), (pad, k - 1 - pad), (0, 0)))
    cols = np.lib.stride_tricks.sliding_window_view(xp, k, axis=1)  # (B, T, C, k)
    bsz, t, c, _ = cols.shape
    cols = cols.transpose(0, 1, 3, 2).reshape(bsz * t, k * c)
    y = cols @ w.reshape(k * c, -1) + b
    return y.reshape(bsz, t, -1), cols


def _conv_backward(dy, cols, w, x_shape, need_dx=True):
    k, c, o = w.shape
    bsz, t, _ = x_shape
    pad = (k - 1) // 2
    d2 = dy.reshape(bsz * t, o)
    dw = (cols.T @ d2).reshape(k, c, o)
    db = d2.sum(axis=0)
    if not need_dx:
        return None, dw, db
    dxp = np.zeros((bsz, t + k - 1, c), dtype=dy.dtype)
    for j in range(k):
        dxp[:, j:j + t] += (d2 @ w[j].T).reshape(bsz, t, c)
    return dxp[:, pad:pad + t], dw, db


def _pool_forward(x, s):
    """Max over non-overlapping blocks of ``s`` steps; also returns the winning offset."""
    t2 = x.shape[1] // s
    y = x[:, 0:t2 * s:s].copy()
    arg = np.zeros(y.shape, dtype=np.int8)
    for j in range(1, s):
        cand = x[:, j:t2 * s:s]
        arg = np.where(cand > y, np.int8(j), arg)
        y = np.maximum(y, cand)
    return y, arg


def _pool_backward(g, arg, s, x_shape):
    full = np.zeros(x_shape, dtype=g.dtype)
    t2 = arg.shape[1]
    for j in range(s):
        full[:, j:t2 * s:s] = np.where(arg == j, g, 0)
    return full


def forward(model: RegressorModel, x, params=None, keep: bool = False):
    """Network output in normalized target units, shape (B, out)."""
    x = np.asarray(x)
    if x.ndim != 3 or x.shape[1:] != model.input_shape:
        raise ShapeMismatch(f"expected batch shape (B, {model.input_shape[0]}, {model.input_shape[1]}), got {x.shape}")
    p = model.params if params is None else params
    x = x.astype(p.dtype, copy=False)
    cache = []
    for layer, wb in zip(model.layers, model.weights(p)):
        kind = layer[0]
        if kind == "conv":
            y, cols = _conv_forward(x, *wb)
            cache.append((x.shape, cols))
        elif kind == "relu":
            y = np.maximum(x, 0)
            cache.append(x > 0)
        elif kind == "maxpool":
            y, arg = _pool_forward(x, layer[1])
            cache.append((x.shape, arg))
        elif kind == "gap":
            y = x.mean(axis=1)
            cache.append(x.shape)
        else:  # dense
            y = x @ wb[0] + wb[1]
            cache.append(x)
        x = y
    return (x, cache) if keep else x


def loss_and_grad(model: RegressorModel, x, y_norm, params=None):
    """Mean squared error over all outputs and its gradient w.r.t. the flat parameters."""
    p = model.params if params is None else params
    out, cache = forward(model, x, p, keep=True)
    y_norm = np.asarray(y_norm, dtype=p.dtype)
    diff = out - y_norm
    loss = float(np.mean(diff * diff))
    g = (2.0 / diff.size) * diff
    grad = np.zeros_like(p)
    gviews = model.weights(grad)
    for i in range(len(model.layers) - 1, -1, -1):
        kind = model.layers[i][0]
        c = cache[i]
        if kind == "conv":
            x_shape, cols = c
            w = model.weights(p)[i][0]
            g, dw, db = _conv_backward(g, cols, w, x_shape, need_dx=i > 0)
            gviews[i][0][...] = dw
            gviews[i][1][...] = db
        elif kind == "relu":
            g = g * c
        elif kind == "maxpool":
            x_shape, arg = c
            g = _pool_backward(g, arg, model.layers[i][1], x_shape)
        elif kind == "gap":
            bsz, t, ch = c
            g = np.broadcast_to(g[:, None, :] / t, c)
        else:
            w = model.weights(p)[i][0]
            gviews[i][0][...] = c.T @ g
            gviews[i][1][...] = g.sum(axis=0)
            g = g @ w.T
    return loss, grad


def predict(model: RegressorModel, x, batch: int = 8192) -> np.ndarray:
    """De-normalized predictions (cm) for windows of shape (B, T, N)."""
    x = np.asarray(x)
    if x.ndim != 3 or x.shape[1:] != model.input_shape:
        raise ShapeMismatch(f"expected (B, {model.input_shape[0]}, {model.input_shape[1]}), got {x.shape}")
    outs = [forward(model, x[i:i + batch]) for i in range(0, x.shape[0], batch)]
    return model.denormalize(np.concatenate(outs) if outs else np.zeros((0, model.output_dim)))


def backward_check(model: RegressorModel, x, y_norm, eps: float = 1e-5, n_checks: int = 200, seed: int = 0) -> float:
    """Largest relative gap between analytic and central-difference gradients, in float64."""
    if not 1e-6 <= eps <= 1e-4:
        raise ValueError("eps must lie in [1e-6, 1e-4]")
    m = model.astype(np.float64)
    x = np.asarray(x, dtype=np.float64)
    y_norm = np.asarray(y_norm, dtype=np.float64)
    _, grad = loss_and_grad(m, x, y_norm)
    rng = np.random.default_rng(seed)
    idx = rng.choice(m.n_params, size=min(n_checks, m.n_params), replace=False)
    worst = 0.0
    for i in idx:
        p = m.params.copy()
        p[i] += eps
        lp, _ = _loss(m, x, y_norm, p)
        p[i] -= 2 * eps
        lm, _ = _loss(m, x, y_norm, p)
        num = (lp - lm) / (2 * eps)
        rel = abs(num - grad[i]) / max(abs(num) + abs(grad[i]), 1e-8)
        worst = max(worst, rel)
    return worst


def _loss(model, x, y_norm, params):
    out = forward(model, x, params)
    d = out - y_norm
    return float(np.mean(d * d)), out


# ---------------------------------------------------------------------------
# training


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 4096
    lr0: float = 0.01
    lr_decay: float = 0.5
    decay_every: int = 20
    early_stop_patience: int = 100
    max_epochs: int = 1000
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    dtype: str = "float32"

    def __post_init__(self):
        for name in ("batch_size", "lr0", "lr_decay", "decay_every", "early_stop_patience", "max_epochs"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def learning_rate(self, epoch: int) -> float:
        return self.lr0 * self.lr_decay ** (epoch // self.decay_every)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainReport:
    train_loss: list
    val_loss: list
    learning_rate: list
    best_epoch: int
    epochs_run: int
    stopped_early: bool
    param_checksum: str
    wall_time_s: float
    n_params: int
    config: dict

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path) -> None:
        _atomic_write(path, json.dumps(self.to_dict(), indent=2).encode())


class Adam:
    def __init__(self, n: int, beta1=0.9, beta2=0.999, eps=1e-8, dtype=np.float64):
        self.m = np.zeros(n, dtype=dtype)
        self.v = np.zeros(n, dtype=dtype)
        self.t = 0
        self.beta1, self.beta2, self.eps = beta1, beta2, eps

    def step(self, params, grad, lr):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        self.m *= b1
        self.m += (1 - b1) * grad
        self.v *= b2
        self.v += (1 - b2) * grad * grad
        mhat = self.m / (1 - b1 ** self.t)
        vhat = self.v / (1 - b2 ** self.t)
        params -= lr * mhat / (np.sqrt(vhat) + self.eps)


def checksum(params) -> str:
    return hashlib.sha256(np.ascontiguousarray(params, dtype="<f8").tobytes()).hexdigest()


def _mse(model, x, y_norm, params, batch):
    total = 0.0
    for i in range(0, x.shape[0], batch):
        out = forward(model, x[i:i + batch], params)
        d = out - y_norm[i:i + batch]
        total += float(np.sum(d.astype(np.float64) ** 2))
    return total / (x.shape[0] * y_norm.shape[1])


def train(model: RegressorModel, train_x, train_y, val_x, val_y, cfg: TrainConfig = TrainConfig(),
          progress=None):
    """Adam with step decay and early stopping; returns the best-validation model and a report.

    ``train_y``/``val_y`` are primitives in cm; the loss runs on targets
    normalized by the model's target range.
    """
    if len(train_x) == 0 or len(val_x) == 0:
        raise ValueError("training and validation sets must be non-empty")
    start = time.perf_counter()
    dtype = np.dtype(cfg.dtype)
    work = model.astype(dtype)
    params = work.params
    tx = np.asarray(train_x, dtype=dtype)
    vx = np.asarray(val_x, dtype=dtype)
    ty = work.normalize_targets(train_y).astype(dtype)
    vy = work.normalize_targets(val_y).astype(dtype)
    opt = Adam(params.size, cfg.beta1, cfg.beta2, cfg.adam_eps, dtype)
    rng = np.random.default_rng(cfg.seed)

    train_hist, val_hist, lr_hist = [], [], []
    best_val, best_epoch, best_params = np.inf, -1, params.copy()
    stopped = False
    for epoch in range(cfg.max_epochs):
        lr = cfg.learning_rate(epoch)
        order = rng.permutation(tx.shape[0])
        running, seen = 0.0, 0
        for i in range(0, order.size, cfg.batch_size):
            idx = order[i:i + cfg.batch_size]
            loss, grad = loss_and_grad(work, tx[idx], ty[idx], params)
            if not np.isfinite(loss):
                report = _report(train_hist, val_hist, lr_hist, best_epoch, epoch, False, best_params,
                                 start, work, cfg)
                raise Diverged(f"non-finite loss at epoch {epoch}", report)
            opt.step(params, grad, dtype.type(lr))
            running += loss * idx.size
            seen += idx.size
        val = _mse(work, vx, vy, params, 8192)
        train_hist.append(running / seen)
        val_hist.append(val)
        lr_hist.append(lr)
        if not np.isfinite(val):
            report = _report(train_hist, val_hist, lr_hist, best_epoch, epoch + 1, False, best_params, start, work, cfg)
            raise Diverged(f"non-finite validation loss at epoch {epoch}", report)
        if val < best_val:
            best_val, best_epoch, best_params = val, epoch, params.copy()
        if progress:
            progress(epoch, train_hist[-1], val)
        if epoch - best_epoch >= cfg.early_stop_patience:
            stopped = True
            break

    best = RegressorModel(model.layers, model.input_shape, best_params.astype(np.float64),
                          model.target_lo, model.target_hi)
    report = _report(train_hist, val_hist, lr_hist, best_epoch, len(train_hist), stopped, best.params, start, best, cfg)
    return best, report


def _report(train_hist, val_hist, lr_hist, best_epoch, epochs, stopped, params, start, model, cfg):
    return TrainReport(list(map(float, train_hist)), list(map(float, val_hist)), list(map(float, lr_hist)),
                       int(best_epoch), int(epochs), bool(stopped), checksum(params),
                       time.perf_counter() - start, model.n_params, cfg.to_dict())


# ---------------------------------------------------------------------------
# persistence


def _atomic_write(path, data: bytes) -> None:
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def save_model(model: RegressorModel, path) -> None:
    """Binary layout: magic, u16 version, u32 header length, JSON header, f64 params, u32 CRC32."""
    header = json.dumps({
        "layers": [list(l) for l in model.layers],
        "input_shape": list(model.input_shape),
        "n_params": model.n_params,
        "target_lo": model.target_lo.tolist(),
        "target_hi": model.target_hi.tolist(),
    }, sort_keys=True).encode()
    payload = np.ascontiguousarray(model.params, dtype="<f8").tobytes()
    body = MAGIC + struct.pack("<HI", FORMAT_VERSION, len(header)) + header + payload
    _atomic_write(path, body + struct.pack("<I", zlib.crc32(body)))


def load_model(path, expected_channels: int | None = None) -> RegressorModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 14 or data[:4] != MAGIC:
        raise CorruptFile("not a regressor model file")
    version, hlen = struct.unpack("<HI", data[4:10])
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"model format version {version}, expected {FORMAT_VERSION}")
    try:
        header = json.loads(data[10:10 + hlen])
    except (ValueError, UnicodeDecodeError) as exc:
        raise CorruptFile("unreadable model header") from exc
    n = int(header.get("n_params", -1))
    end = 10 + hlen + 8 * n
    if n < 0 or len(data) != end + 4:
        raise CorruptFile(f"model file is {len(data)} bytes, expected {end + 4}")
    (crc,) = struct.unpack("<I", data[end:end + 4])
    if crc != zlib.crc32(data[:end]):
        raise CorruptFile("checksum mismatch")
    params = np.frombuffer(data[10 + hlen:end], dtype="<f8").astype(np.float64)
    model = RegressorModel(tuple(tuple(l) for l in header["layers"]), tuple(header["input_shape"]), params,
                           header["target_lo"], header["target_hi"])
    if expected_channels is not None and expected_channels != model.input_shape[1]:
        raise VersionMismatch(f"model expects {model.input_shape[1]} channels, data has {expected_channels}")
    return model

"""From-scratch MLP binary classifier: forward/backward, SGD with a geometric
learning-rate schedule, early stopping on validation AUC, and checkpoints.

Checkpoint layout (little-endian): magic "DMLP", version u16 = 1, u32 JSON
config length, JSON config bytes, then per layer weights f32 row-major
(fan_out x fan_in) followed by biases f32.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from . import metrics
from .corpus import Label, Manifest, Split
from .embedding import MODE_IMAGE_ONLY, EmbeddingStore

MAGIC = b"DMLP"
VERSION = 1


class TrainerError(RuntimeError):
    pass


@dataclass(frozen=True)
class MlpConfig:
    input_dim: int
    hidden_dims: tuple[int, ...] = (4096, 4096, 1024)
    lr_start: float = 0.1
    lr_end: float = 0.001
    max_epochs: int = 270
    batch_size: int = 256
    seed: int = 0
    early_stop_patience: int = 20

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(self.hidden_dims))
        if self.input_dim <= 0 or any(h <= 0 for h in self.hidden_dims):
            raise TrainerError("layer dims must be positive")
        if not (self.lr_start >= self.lr_end > 0):
            raise TrainerError("need lr_start >= lr_end > 0")
        if self.max_epochs < 1:
            raise TrainerError("max_epochs must be >= 1")
        if self.batch_size < 1:
            raise TrainerError("batch_size must be >= 1")

    def layer_shapes(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden_dims, 1]
        return [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]


@dataclass
class MlpModel:
    weights: list[np.ndarray]  # each (fan_out, fan_in)
    biases: list[np.ndarray]   # each (fan_out,)
    config: MlpConfig

    def __post_init__(self):
        shapes = self.config.layer_shapes()
        if [w.shape for w in self.weights] != shapes:
            raise TrainerError("weight shapes do not chain with the config")
        if [b.shape for b in self.biases] != [(s[0],) for s in shapes]:
            raise TrainerError("bias shapes do not match the config")
        for p in (*self.weights, *self.biases):
            if not np.all(np.isfinite(p)):
                raise TrainerError("non-finite parameter")

    def copy(self) -> "MlpModel":
        return MlpModel(weights=[w.copy() for w in self.weights],
                        biases=[b.copy() for b in self.biases],
                        config=self.config)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    val_acc: float
    val_auc: float


@dataclass(frozen=True)
class TrainHistory:
    epochs: tuple[EpochRecord, ...]
    best_epoch: int

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("epoch,lr,train_loss,val_acc,val_auc\n")
            for e in self.epochs:
                fh.write(f"{e.epoch},{e.lr!r},{e.train_loss!r},"
                         f"{e.val_acc!r},{e.val_auc!r}\n")


def param_count(config: MlpConfig) -> int:
    return sum((fan_in + 1) * fan_out for fan_out, fan_in in config.layer_shapes())


def init_model(config: MlpConfig) -> MlpModel:
    """Seeded uniform init scaled by 1/sqrt(fan_in); zero biases."""
    rng = np.random.Generator(np.random.PCG64(config.seed))
    weights, biases = [], []
    for fan_out, fan_in in config.layer_shapes():
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound,
                                   size=(fan_out, fan_in)).astype(np.float32))
        biases.append(np.zeros(fan_out, dtype=np.float32))
    return MlpModel(weights=weights, biases=biases, config=config)


def _forward_full(model: MlpModel, batch: np.ndarray, dtype=np.float32):
    """Returns (activations per layer incl. input, pre-sigmoid logits [B])."""
    x = np.asarray(batch, dtype=dtype)
    if x.ndim != 2 or x.shape[1] != model.config.input_dim:
        raise TrainerError(
            f"batch shape {x.shape} incompatible with input_dim "
            f"{model.config.input_dim}")
    activations = [x]
    n_layers = len(model.weights)
    for k in range(n_layers - 1):
        z = x @ model.weights[k].T.astype(dtype) + model.biases[k].astype(dtype)
        x = np.maximum(z, 0)
        activations.append(x)
    logits = (x @ model.weights[-1].T.astype(dtype)
              + model.biases[-1].astype(dtype))[:, 0]
    return activations, logits


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(model: MlpModel, batch: np.ndarray) -> np.ndarray:
    """Probabilities in (0,1), one per row."""
    _, logits = _forward_full(model, batch)
    return _sigmoid(logits)


def bce_loss(probabilities: np.ndarray, labels: np.ndarray,
             eps: float = 1e-12) -> float:
    p = np.clip(np.asarray(probabilities, dtype=np.float64), eps, 1.0 - eps)
    y = np.asarray(labels, dtype=np.float64)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log1p(-p))))


def bce_loss_from_logits(logits: np.ndarray, labels: np.ndarray) -> float:
    """mean(softplus(z) - y*z): the numerically stable training-path loss."""
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def backward(model: MlpModel, batch: np.ndarray, labels: np.ndarray,
             dtype=np.float32):
    """Exact gradients of mean BCE w.r.t. every weight and bias."""
    activations, logits = _forward_full(model, batch, dtype=dtype)
    y = np.asarray(labels, dtype=dtype)
    if y.shape != logits.shape:
        raise TrainerError("labels length does not match batch size")
    n = len(y)
    delta = ((_sigmoid(logits.astype(np.float64)).astype(dtype) - y)
             / dtype(n))[:, np.newaxis]                       # [B,1]
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    for k in range(len(model.weights) - 1, -1, -1):
        a_prev = activations[k]
        grads_w[k] = delta.T @ a_prev
        grads_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ model.weights[k].astype(dtype)) \
                * (activations[k] > 0)
    return grads_w, grads_b


def lr_at(epoch: int, config: MlpConfig) -> float:
    """Geometric interpolation from lr_start (epoch 0) to lr_end (last epoch)."""
    if not 0 <= epoch < config.max_epochs:
        raise TrainerError(f"epoch {epoch} outside [0, {config.max_epochs})")
    if config.max_epochs == 1:
        return config.lr_start
    frac = epoch / (config.max_epochs - 1)
    return float(config.lr_start * (config.lr_end / config.lr_start) ** frac)


def sgd_step(model: MlpModel, grads_w, grads_b, lr: float) -> None:
    """In-place theta <- theta - lr * grad."""
    lr32 = np.float32(lr)
    for k in range(len(model.weights)):
        model.weights[k] -= lr32 * grads_w[k].astype(np.float32)
        model.biases[k] -= lr32 * grads_b[k].astype(np.float32)


def _dataset_from(store: EmbeddingStore, manifest: Manifest, split: Split,
                  mode: str):
    index = store.by_id()
    subset = manifest.filter(split=split)
    if len(subset) == 0:
        raise TrainerError(f"split {split.value!r} is empty")
    feats, labels, ids = [], [], []
    for sample in subset:
        if sample.id not in index:
            raise TrainerError(f"sample {sample.id!r} missing from store")
        feats.append(store.features_for(sample.id, mode, index))
        labels.append(1.0 if sample.label is Label.GENERATED else 0.0)
        ids.append(sample.id)
    return (np.stack(feats).astype(np.float32),
            np.asarray(labels, dtype=np.float32), ids)


def train(
    store: EmbeddingStore,
    manifest: Manifest,
    config: MlpConfig,
    mode: str = MODE_IMAGE_ONLY,
) -> tuple[MlpModel, TrainHistory]:
    """Mini-batch SGD over the Train split with per-epoch validation.

    Returns the parameters of the best validation-AUC epoch. Deterministic
    per (store, manifest, config): one PCG64 stream drives init and the
    per-epoch shuffles.
    """
    x_train, y_train, _ = _dataset_from(store, manifest, Split.TRAIN, mode)
    x_val, y_val, _ = _dataset_from(store, manifest, Split.VAL, mode)
    if x_train.shape[1] != config.input_dim:
        raise TrainerError(
            f"store features have dim {x_train.shape[1]} but config expects "
            f"{config.input_dim}")

    model = init_model(config)
    shuffle_rng = np.random.Generator(np.random.PCG64(config.seed + 1))
    best = model.copy()
    best_auc = -np.inf
    best_epoch = -1
    stale = 0
    history: list[EpochRecord] = []
    n = len(y_train)
    for epoch in range(config.max_epochs):
        lr = lr_at(epoch, config)
        order = shuffle_rng.permutation(n)
        losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            grads_w, grads_b = backward(model, xb, yb)
            _, logits = _forward_full(model, xb)
            losses.append(bce_loss_from_logits(logits, yb) * len(idx))
            sgd_step(model, grads_w, grads_b, lr)
        train_loss = float(np.sum(losses) / n)
        val_scores = forward(model, x_val)
        val_acc = metrics.accuracy((val_scores >= 0.5).astype(int),
                                   y_val.astype(int))
        try:
            val_auc = metrics.roc_auc(val_scores, y_val.astype(int))
        except metrics.MetricError:
            raise TrainerError("validation split has a single class")
        history.append(EpochRecord(epoch=epoch, lr=lr, train_loss=train_loss,
                                   val_acc=val_acc, val_auc=val_auc))
        if val_auc >= best_auc:
            # ties go to the later epoch: same ranking, better calibration
            best = model.copy()
            best_epoch = epoch
            if val_auc > best_auc:
                best_auc = val_auc
                stale = 0
            else:
                stale += 1
        else:
            stale += 1
        if stale >= config.early_stop_patience:
            break
    return best, TrainHistory(epochs=tuple(history), best_epoch=best_epoch)


def save_checkpoint(model: MlpModel, path) -> None:
    cfg = asdict(model.config)
    cfg["hidden_dims"] = list(model.config.hidden_dims)
    cfg_bytes = json.dumps(cfg, sort_keys=True).encode("utf-8")
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HI", VERSION, len(cfg_bytes)))
        fh.write(cfg_bytes)
        for w, b in zip(model.weights, model.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f4").tobytes())
    os.replace(tmp, path)


def load_checkpoint(path) -> MlpModel:
    with open(path, "rb") as fh:
        head = fh.read(4 + struct.calcsize("<HI"))
        if len(head) < 4 or head[:4] != MAGIC:
            raise TrainerError(f"{path}: not a checkpoint (bad magic)")
        version, cfg_len = struct.unpack("<HI", head[4:])
        if version != VERSION:
            raise TrainerError(f"{path}: unsupported checkpoint version {version}")
        cfg_bytes = fh.read(cfg_len)
        if len(cfg_bytes) < cfg_len:
            raise TrainerError(f"{path}: truncated checkpoint")
        cfg = json.loads(cfg_bytes.decode("utf-8"))
        cfg["hidden_dims"] = tuple(cfg["hidden_dims"])
        config = MlpConfig(**cfg)
        weights, biases = [], []
        for fan_out, fan_in in config.layer_shapes():
            wb = fh.read(4 * fan_out * fan_in)
            bb = fh.read(4 * fan_out)
            if len(wb) < 4 * fan_out * fan_in or len(bb) < 4 * fan_out:
                raise TrainerError(f"{path}: truncated checkpoint")
            weights.append(np.frombuffer(wb, dtype="<f4")
                           .reshape(fan_out, fan_in).copy())
            biases.append(np.frombuffer(bb, dtype="<f4").copy())
        if fh.read(1):
            raise TrainerError(f"{path}: trailing bytes after parameters")
    return MlpModel(weights=weights, biases=biases, config=config)


def gradient_check(
    config: MlpConfig,
    batch_size: int = 4,
    epsilon: float = 1e-4,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Max relative error of backprop vs central finite differences (f64)."""
    rng = rng or np.random.Generator(np.random.PCG64(config.seed))
    model = init_model(config)
    # float64 shadow parameters for the finite-difference path
    # generic parameter point: small random biases avoid whole layers
    # sitting exactly on the ReLU kink (zero-bias init + dead inputs)
    model64 = MlpModel(weights=[w.astype(np.float64) for w in model.weights],
                       biases=[rng.uniform(-0.2, 0.2, size=b.shape)
                               for b in model.biases],
                       config=config)
    # central differences are invalid within epsilon of a ReLU kink, so
    # resample inputs until every hidden pre-activation clears a margin
    margin = 10 * epsilon
    for _ in range(1000):
        x = rng.standard_normal((batch_size, config.input_dim))
        a = x
        clear = True
        for k in range(len(model64.weights) - 1):
            z = a @ model64.weights[k].T + model64.biases[k]
            if np.min(np.abs(z)) < margin:
                clear = False
                break
            a = np.maximum(z, 0)
        if clear:
            break
    else:
        raise TrainerError("could not sample a kink-free batch")
    y = rng.integers(0, 2, size=batch_size).astype(np.float64)

    def loss_at() -> float:
        _, logits = _forward_full(model64, x, dtype=np.float64)
        return bce_loss_from_logits(logits, y)

    grads_w, grads_b = backward(model64, x, y, dtype=np.float64)
    worst = 0.0
    for params, grads in ((model64.weights, grads_w), (model64.biases, grads_b)):
        for p, g in zip(params, grads):
            flat = p.reshape(-1)
            gflat = np.asarray(g).reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + epsilon
                lp = loss_at()
                flat[i] = orig - epsilon
                lm = loss_at()
                flat[i] = orig
                fd = (lp - lm) / (2 * epsilon)
                denom = max(abs(fd), abs(gflat[i]), 1e-8)
                worst = max(worst, abs(fd - gflat[i]) / denom)
    return worst

"""Bidirectional LSTM sequence classifier, built on plain numpy.

Implements the forward recurrence, backpropagation through time, Adam
updates, finite-difference gradient checking, evaluation and a versioned
binary model format.  The readout concatenates the final hidden state of the
forward pass with the final state of a second pass over the reversed
sequence, followed by an affine layer and softmax.

Gate layout in every (4H, .) parameter block, in slice order:
input gate, forget gate, cell candidate, output gate.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dataset import Dataset
from .errors import DatasetError, ModelFormatError, NumericalFailureError
from .signals import TouchSequence

_MAGIC = b"DPADLSTM"
_FORMAT_VERSION = 1
_PROB_FLOOR = 1e-12


@dataclass
class LstmDirectionParams:
    """Weights of one recurrence direction; shapes (4H, D), (4H, H), (4H,)."""

    w_in: np.ndarray
    w_rec: np.ndarray
    bias: np.ndarray

    @property
    def hidden(self) -> int:
        return self.w_rec.shape[1]


@dataclass
class BiLstmClassifier:
    """Parameters plus the train-set normalization carried with them."""

    fwd: LstmDirectionParams
    bwd: LstmDirectionParams
    head_w: np.ndarray          # (C, 2H)
    head_b: np.ndarray          # (C,)
    norm_mean: np.ndarray       # (D,)
    norm_std: np.ndarray        # (D,)

    @property
    def hidden(self) -> int:
        return self.fwd.hidden

    @property
    def input_dim(self) -> int:
        return self.fwd.w_in.shape[1]

    @property
    def classes(self) -> int:
        return self.head_w.shape[0]

    def params(self) -> dict:
        return {
            "fwd.w_in": self.fwd.w_in, "fwd.w_rec": self.fwd.w_rec, "fwd.bias": self.fwd.bias,
            "bwd.w_in": self.bwd.w_in, "bwd.w_rec": self.bwd.w_rec, "bwd.bias": self.bwd.bias,
            "head.w": self.head_w, "head.b": self.head_b,
        }

    def parameter_count(self) -> int:
        return sum(p.size for p in self.params().values())

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.norm_mean) / self.norm_std


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    learning_rate: float = 0.002
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 32
    seed: int = 0
    shuffle: bool = True
    hidden: int = 23
    features: str = "wrench"    # or "wrench+torque" for the 13-channel experiment
    log_every: int = 0          # epochs between progress prints; 0 = silent

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0.0:
            raise ValueError("learning rate must be positive")


@dataclass(frozen=True)
class Prediction:
    """Class probabilities with the argmax label and its confidence."""

    probabilities: np.ndarray
    label: int
    confidence: float

    @classmethod
    def from_probabilities(cls, probs: np.ndarray) -> "Prediction":
        probs = np.asarray(probs, dtype=float)
        label = int(np.argmax(probs))  # ties resolve to the lowest digit
        return cls(probs, label, float(probs[label]))

    @classmethod
    def uniform(cls, classes: int = 10) -> "Prediction":
        return cls.from_probabilities(np.full(classes, 1.0 / classes))


@dataclass
class ConfusionMatrix:
    """Row = true class, column = predicted class."""

    counts: np.ndarray = field(default_factory=lambda: np.zeros((10, 10), dtype=int))

    def add(self, true_label: int, predicted: int) -> None:
        self.counts[true_label, predicted] += 1

    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        return float(np.trace(self.counts)) / max(self.total(), 1)

    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)


def sigmoid(x: np.ndarray, out: Optional[np.ndarray] = None) -> np.ndarray:
    """Logistic function built on np.exp; saturates cleanly to 0/1 at the extremes."""
    out = np.negative(x, out=out)
    np.exp(out, out=out)
    out += 1.0
    np.reciprocal(out, out=out)
    return out


# ---------------------------------------------------------------------------
# Initialization and the recurrence
# ---------------------------------------------------------------------------

def init_model(hidden: int = 23, input_dim: int = 6, classes: int = 10,
               seed: int = 0) -> BiLstmClassifier:
    """Uniform(-1/sqrt(H), 1/sqrt(H)) weights, forget-gate bias 1, zero head bias."""
    rng = np.random.default_rng(seed)
    k = 1.0 / np.sqrt(hidden)

    def direction():
        bias = np.zeros(4 * hidden)
        bias[hidden:2 * hidden] = 1.0  # open forget gates at the start of training
        return LstmDirectionParams(
            w_in=rng.uniform(-k, k, size=(4 * hidden, input_dim)),
            w_rec=rng.uniform(-k, k, size=(4 * hidden, hidden)),
            bias=bias,
        )

    return BiLstmClassifier(
        fwd=direction(),
        bwd=direction(),
        head_w=rng.uniform(-k, k, size=(classes, 2 * hidden)),
        head_b=np.zeros(classes),
        norm_mean=np.zeros(input_dim),
        norm_std=np.ones(input_dim),
    )


def _run_bidirectional(model: BiLstmClassifier, x: np.ndarray):
    """Unroll both directions at once from zero state.

    Directions are stacked on a leading axis (0 = forward order, 1 =
    reversed), and all step tensors are gate-major, shape (2, 4H, B) or
    (2, H, B), so every gate block is a contiguous chunk and each step is
    one batched matmul plus a handful of full-array elementwise ops.  The
    candidate tanh rides on the same sigmoid evaluation via
    tanh(v) = 2*sigmoid(2v) - 1.  Returns the (B, 2H) readout and the
    caches needed for BPTT.
    """
    b, t_len, d_in = x.shape
    h_dim = model.hidden
    w_in = np.stack([model.fwd.w_in, model.bwd.w_in])         # (2, 4H, D)
    w_rec = np.stack([model.fwd.w_rec, model.bwd.w_rec])      # (2, 4H, H)
    bias = np.stack([model.fwd.bias, model.bwd.bias])         # (2, 4H)

    g_lo, g_hi = 2 * h_dim, 3 * h_dim
    # pre-double the candidate rows so tanh(v) = 2*sigmoid(2v) - 1 needs no
    # per-step input scaling; gradients are still w.r.t. the original weights
    w_in_run = w_in.copy()
    w_in_run[:, g_lo:g_hi] *= 2.0
    w_rec_run = w_rec.copy()
    w_rec_run[:, g_lo:g_hi] *= 2.0
    bias_run = bias.copy()
    bias_run[:, g_lo:g_hi] *= 2.0

    xs = np.stack([x, x[:, ::-1]])                            # (2, B, T, D)
    xt = np.ascontiguousarray(xs.transpose(0, 3, 2, 1))       # (2, D, T, B)
    pre = w_in_run @ xt.reshape(2, d_in, t_len * b) + bias_run[:, :, None]
    pre = np.ascontiguousarray(
        pre.reshape(2, 4 * h_dim, t_len, b).transpose(2, 0, 1, 3))  # (T, 2, 4H, B)

    # h and c are shifted by one so index t is the previous state, t+1 the new
    gates = np.empty((t_len, 2, 4 * h_dim, b))
    c_all = np.zeros((t_len + 1, 2, h_dim, b))
    h_all = np.zeros((t_len + 1, 2, h_dim, b))
    tc_all = np.empty((t_len, 2, h_dim, b))
    z = np.empty((2, 4 * h_dim, b))
    tmp = np.empty((2, h_dim, b))
    with np.errstate(over="ignore"):  # saturated sigmoids are fine
        for t in range(t_len):
            np.matmul(w_rec_run, h_all[t], out=z)
            z += pre[t]
            a = gates[t]
            sigmoid(z, out=a)
            ag = a[:, g_lo:g_hi]
            ag *= 2.0
            ag -= 1.0
            np.multiply(a[:, :h_dim], ag, out=tmp)
            np.multiply(a[:, h_dim:g_lo], c_all[t], out=c_all[t + 1])
            c_all[t + 1] += tmp
            np.tanh(c_all[t + 1], out=tc_all[t])
            np.multiply(a[:, g_hi:], tc_all[t], out=h_all[t + 1])
    cache = {"gates": gates, "c": c_all, "tc": tc_all, "h": h_all,
             "xs": xt, "w_rec": w_rec}
    h_final = h_all[t_len]
    readout = np.concatenate([h_final[0].T, h_final[1].T], axis=1)
    return readout, cache


def _first_bad_timestep(cache) -> int:
    for t in range(cache["gates"].shape[0]):
        if not (np.all(np.isfinite(cache["gates"][t])) and np.all(np.isfinite(cache["c"][t + 1]))):
            return t
    return -1


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _forward_batch(model: BiLstmClassifier, x: np.ndarray, normalized: bool = False,
                   strict: bool = False):
    """Probabilities (B, C) plus caches for BPTT.  x is (B, T, D) raw features.

    ``strict`` additionally validates the input and every cached activation
    (used on the single-sequence path; batch training only checks the logits).
    """
    if strict and not np.all(np.isfinite(x)):
        t = int(np.nonzero(~np.isfinite(x).all(axis=(0, 2)))[0][0])
        raise NumericalFailureError(f"non-finite input feature at timestep {t}", timestep=t)
    if not normalized:
        x = model.normalize(x)
    readout, cache = _run_bidirectional(model, x)
    logits = readout @ model.head_w.T + model.head_b
    bad = not np.all(np.isfinite(logits))
    if strict and not bad:
        bad = not (np.all(np.isfinite(cache["gates"])) and np.all(np.isfinite(cache["c"])))
    if bad:
        t = _first_bad_timestep(cache)
        if t >= 0:
            raise NumericalFailureError(
                f"non-finite activation in the recurrence at timestep {t}", timestep=t)
        raise NumericalFailureError("non-finite logits in the readout head")
    probs = _softmax(logits)
    return probs, {"cache": cache, "readout": readout}


def readout_batch(model: BiLstmClassifier, x: np.ndarray, normalized: bool = False) -> np.ndarray:
    """The (B, 2H) concatenated final hidden states fed to the affine head."""
    if not normalized:
        x = model.normalize(x)
    readout, _ = _run_bidirectional(model, x)
    return readout


def forward(model: BiLstmClassifier, seq) -> Prediction:
    """Classify one canonical sequence (TouchSequence or (T, D) array)."""
    x = seq.wrench if isinstance(seq, TouchSequence) else np.asarray(seq, dtype=float)
    probs, _ = _forward_batch(model, x[None], strict=True)
    return Prediction.from_probabilities(probs[0])


def predict_batch(model: BiLstmClassifier, x: np.ndarray, chunk: int = 512,
                  normalized: bool = False) -> np.ndarray:
    """Probabilities for (N, T, D) inputs, chunked to bound cache memory."""
    parts = [_forward_batch(model, x[i:i + chunk], normalized=normalized)[0]
             for i in range(0, x.shape[0], chunk)]
    return np.concatenate(parts, axis=0)


def loss(pred, label: int) -> float:
    """Cross-entropy of one prediction, clamped at p >= 1e-12."""
    if label not in range(10):
        raise ValueError(f"label must be a digit 0..9, got {label}")
    probs = pred.probabilities if isinstance(pred, Prediction) else np.asarray(pred, dtype=float)
    return float(-np.log(max(float(probs[label]), _PROB_FLOOR)))


# ---------------------------------------------------------------------------
# Backpropagation through time
# ---------------------------------------------------------------------------

def _backward_bidirectional(cache, dh_final: np.ndarray) -> dict:
    """Gradients of both stacked directions given loss gradients at their final states.

    Tensors follow the forward pass's gate-major (2, ., B) layout.
    """
    t_len, _, four_h, b = cache["gates"].shape
    h_dim = four_h // 4
    w_rec = cache["w_rec"]
    w_rec_t = np.ascontiguousarray(w_rec.transpose(0, 2, 1))  # (2, H, 4H)
    dz_all = np.empty((t_len, 2, four_h, b))
    dh = dh_final.copy()
    dc = np.zeros((2, h_dim, b))
    t1 = np.empty((2, h_dim, b))
    t2 = np.empty((2, h_dim, b))
    g_lo, g_hi = 2 * h_dim, 3 * h_dim
    for t in range(t_len - 1, -1, -1):
        a = cache["gates"][t]
        gi = a[:, :h_dim]
        gf = a[:, h_dim:g_lo]
        gg = a[:, g_lo:g_hi]
        go = a[:, g_hi:]
        tc = cache["tc"][t]
        dz = dz_all[t]

        # dc accumulates dh routed through h = o * tanh(c)
        np.multiply(dh, go, out=t1)
        np.multiply(tc, tc, out=t2)
        np.subtract(1.0, t2, out=t2)
        t1 *= t2
        dc += t1
        # output gate: dL/dz_o = (dh * tc) * o * (1 - o)
        np.multiply(dh, tc, out=t1)
        np.subtract(1.0, go, out=t2)
        t1 *= t2
        np.multiply(t1, go, out=dz[:, g_hi:])
        # input gate: (dc * g) * i * (1 - i)
        np.multiply(dc, gg, out=t1)
        np.subtract(1.0, gi, out=t2)
        t1 *= t2
        np.multiply(t1, gi, out=dz[:, :h_dim])
        # forget gate: (dc * c_prev) * f * (1 - f)
        np.multiply(dc, cache["c"][t], out=t1)
        np.subtract(1.0, gf, out=t2)
        t1 *= t2
        np.multiply(t1, gf, out=dz[:, h_dim:g_lo])
        # candidate: (dc * i) * (1 - g^2)
        np.multiply(dc, gi, out=t1)
        np.multiply(gg, gg, out=t2)
        np.subtract(1.0, t2, out=t2)
        np.multiply(t1, t2, out=dz[:, g_lo:g_hi])

        np.matmul(w_rec_t, dz, out=dh)
        dc *= gf
    # weight gradients as two batched matmuls over all (t, sample) pairs
    dzt = np.ascontiguousarray(dz_all.transpose(1, 2, 0, 3)).reshape(2, four_h, t_len * b)
    xs_flat = cache["xs"].reshape(2, -1, t_len * b).transpose(0, 2, 1)      # (2, T*B, D)
    hp_flat = np.ascontiguousarray(
        cache["h"][:t_len].transpose(1, 0, 3, 2)).reshape(2, t_len * b, h_dim)
    dw_in = dzt @ xs_flat
    dw_rec = dzt @ hp_flat
    db = dz_all.sum(axis=(0, 3))
    return {
        "fwd.w_in": dw_in[0], "fwd.w_rec": dw_rec[0], "fwd.bias": db[0],
        "bwd.w_in": dw_in[1], "bwd.w_rec": dw_rec[1], "bwd.bias": db[1],
    }


def backward(model: BiLstmClassifier, x: np.ndarray, labels: np.ndarray,
             normalized: bool = False, loss_scale: float = 1.0):
    """Mean cross-entropy over the batch and its exact gradients.

    Returns (loss, grads, probs) with grads keyed like :meth:`BiLstmClassifier.params`.
    """
    labels = np.asarray(labels, dtype=int)
    b = x.shape[0]
    probs, ctx = _forward_batch(model, x, normalized=normalized)
    batch_loss = float(np.mean(-np.log(np.maximum(probs[np.arange(b), labels], _PROB_FLOOR))))

    dlogits = probs.copy()
    dlogits[np.arange(b), labels] -= 1.0
    dlogits *= loss_scale / b
    readout = ctx["readout"]
    h_dim = model.hidden
    grads = {
        "head.w": dlogits.T @ readout,
        "head.b": dlogits.sum(axis=0),
    }
    dreadout = dlogits @ model.head_w
    dh_final = np.stack([dreadout[:, :h_dim].T, dreadout[:, h_dim:].T])  # (2, H, B)
    grads.update(_backward_bidirectional(ctx["cache"], dh_final))
    return batch_loss * loss_scale, grads, probs


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    t: int
    m: dict
    v: dict

    @classmethod
    def for_params(cls, params: dict) -> "AdamState":
        return cls(t=0,
                   m={k: np.zeros_like(p) for k, p in params.items()},
                   v={k: np.zeros_like(p) for k, p in params.items()})


def adam_step(params: dict, grads: dict, state: AdamState, cfg: TrainConfig) -> dict:
    """One bias-corrected Adam update, applied in place; returns the params."""
    state.t += 1
    bc1 = 1.0 - cfg.beta1 ** state.t
    bc2 = 1.0 - cfg.beta2 ** state.t
    for k, p in params.items():
        g = grads[k]
        m = state.m[k]
        v = state.v[k]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * (g * g)
        p -= cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.eps)
    return params


# ---------------------------------------------------------------------------
# Training and evaluation
# ---------------------------------------------------------------------------

def features_of(ds: Dataset, features: str = "wrench") -> np.ndarray:
    """Stack dataset sequences into the (N, T, D) feature tensor."""
    if features == "wrench":
        return ds.stacked()
    if features == "wrench+torque":
        wrench = ds.stacked()
        torques = []
        for s in ds.sequences:
            if s.torque is None:
                raise DatasetError("wrench+torque features need torque on every sequence")
            torques.append(s.torque)
        return np.concatenate([wrench, np.stack(torques)], axis=2)
    raise ValueError(f"unknown feature set {features!r}")


def train(ds_train: Dataset, ds_val: Optional[Dataset], cfg: TrainConfig = TrainConfig()):
    """Train a fresh classifier; deterministic for a fixed config.

    Returns (model, history); history rows are dicts with epoch, loss,
    train_acc (running accuracy over the epoch's batches) and val_acc.
    Normalization statistics come from the training set only.
    """
    if len(ds_train) == 0:
        raise DatasetError("training dataset is empty")
    x_train = features_of(ds_train, cfg.features)
    y_train = ds_train.labels()
    model = init_model(hidden=cfg.hidden, input_dim=x_train.shape[2], seed=cfg.seed)

    flat = x_train.reshape(-1, x_train.shape[2])
    model.norm_mean = flat.mean(axis=0)
    model.norm_std = np.maximum(flat.std(axis=0), 1e-8)
    x_train = model.normalize(x_train)

    x_val = y_val = None
    if ds_val is not None and len(ds_val) > 0:
        x_val = model.normalize(features_of(ds_val, cfg.features))  # normalized once here
        y_val = ds_val.labels()

    params = model.params()
    opt = AdamState.for_params(params)
    shuffle_rng = np.random.default_rng(cfg.seed + 1)
    n = x_train.shape[0]
    history = []
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(n) if cfg.shuffle else np.arange(n)
        epoch_loss = 0.0
        hits = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            batch_loss, grads, probs = backward(model, x_train[idx], y_train[idx], normalized=True)
            adam_step(params, grads, opt, cfg)
            epoch_loss += batch_loss * len(idx)
            hits += int(np.sum(np.argmax(probs, axis=1) == y_train[idx]))
        row = {"epoch": epoch, "loss": epoch_loss / n, "train_acc": hits / n, "val_acc": float("nan")}
        if x_val is not None:
            val_probs = predict_batch(model, x_val, normalized=True)
            row["val_acc"] = float(np.mean(np.argmax(val_probs, axis=1) == y_val))
        history.append(row)
        if cfg.log_every and (epoch % cfg.log_every == 0 or epoch == cfg.epochs):
            print(f"epoch {epoch:4d}  loss {row['loss']:.4f}  "
                  f"train_acc {row['train_acc']:.4f}  val_acc {row['val_acc']:.4f}")
    return model, history


def evaluate(model: BiLstmClassifier, ds: Dataset):
    """Accuracy and confusion matrix over a labeled dataset."""
    if len(ds) == 0:
        raise DatasetError("cannot evaluate on an empty dataset")
    x = features_of(ds, "wrench" if model.input_dim == 6 else "wrench+torque")
    probs = predict_batch(model, x)
    predicted = np.argmax(probs, axis=1)
    cm = ConfusionMatrix()
    for t, p in zip(ds.labels(), predicted):
        cm.add(int(t), int(p))
    return cm.accuracy(), cm


# ---------------------------------------------------------------------------
# Gradient checking
# ---------------------------------------------------------------------------

def gradient_check(model: BiLstmClassifier, x: np.ndarray, labels: np.ndarray,
                   step: float = 1e-5, coords: int = 200, seed: int = 0) -> float:
    """Max relative error of analytic gradients vs central finite differences.

    Samples at least ``coords`` coordinates spread over every parameter
    tensor (each tensor contributes at least two), reproducibly for a seed.
    """
    rng = np.random.default_rng(seed)
    params = model.params()
    _, grads, _ = backward(model, x, labels)

    total = sum(p.size for p in params.values())
    worst = 0.0
    for name, p in params.items():
        k = max(2, int(round(coords * p.size / total)))
        k = min(k, p.size)
        flat_idx = rng.choice(p.size, size=k, replace=False)
        flat = p.reshape(-1)
        gflat = grads[name].reshape(-1)
        for j in flat_idx:
            orig = flat[j]
            flat[j] = orig + step
            lp = _batch_loss(model, x, labels)
            flat[j] = orig - step
            lm = _batch_loss(model, x, labels)
            flat[j] = orig
            numeric = (lp - lm) / (2.0 * step)
            analytic = gflat[j]
            denom = max(abs(numeric), abs(analytic), 1e-8)
            worst = max(worst, abs(numeric - analytic) / denom)
    return worst


def _batch_loss(model: BiLstmClassifier, x: np.ndarray, labels: np.ndarray) -> float:
    probs, _ = _forward_batch(model, x)
    picked = probs[np.arange(x.shape[0]), np.asarray(labels, dtype=int)]
    return float(np.mean(-np.log(np.maximum(picked, _PROB_FLOOR))))


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def save(model: BiLstmClassifier, path) -> None:
    """Versioned little-endian binary: magic, version, dims, norm stats, tensors."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIII", _FORMAT_VERSION, model.hidden, model.input_dim, model.classes))
        for arr in (model.norm_mean, model.norm_std, *model.params().values()):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load(path) -> BiLstmClassifier:
    """Read a model written by :func:`save`; bit-identical predictions guaranteed."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MAGIC) + 16:
        raise ModelFormatError(f"{path}: file too short to be a model")
    if blob[:len(_MAGIC)] != _MAGIC:
        raise ModelFormatError(f"{path}: bad magic bytes; not a model file")
    version, hidden, input_dim, classes = struct.unpack_from("<IIII", blob, len(_MAGIC))
    if version != _FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported format version {version}")
    offset = len(_MAGIC) + 16

    def take(shape):
        nonlocal offset
        count = int(np.prod(shape))
        end = offset + count * 8
        if end > len(blob):
            raise ModelFormatError(f"{path}: truncated file")
        arr = np.frombuffer(blob[offset:end], dtype="<f8").astype(float).reshape(shape)
        offset = end
        return arr

    norm_mean = take((input_dim,))
    norm_std = take((input_dim,))
    fwd = LstmDirectionParams(take((4 * hidden, input_dim)), take((4 * hidden, hidden)), take((4 * hidden,)))
    bwd = LstmDirectionParams(take((4 * hidden, input_dim)), take((4 * hidden, hidden)), take((4 * hidden,)))
    head_w = take((classes, 2 * hidden))
    head_b = take((classes,))
    if offset != len(blob):
        raise ModelFormatError(f"{path}: {len(blob) - offset} unexpected trailing bytes")
    return BiLstmClassifier(fwd=fwd, bwd=bwd, head_w=head_w, head_b=head_b,
                            norm_mean=norm_mean, norm_std=norm_std)

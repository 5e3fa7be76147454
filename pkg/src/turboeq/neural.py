"""Feed-forward residual equalizer network written directly in numpy.

Topology::

    features --Linear--> h0
    h_{i+1} = h_i + Linear(Dropout(ReLU(BatchNorm(h_i))))      i = 0..n_hidden-1
    ext     = Linear(ReLU(BatchNorm(h_n)))
    app     = ext + apr_target                                    (bit head only)

The same class serves the plain multi-label (per-bit BCE) equalizer, the joint
``2**(2m)``-class softmax equalizer, and the turbo equalizer whose inputs carry
a-priori LLRs and whose loss is the worse of the EXT and APP cross-entropies.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _container
from .exitchart import j_inverse
from .ldpc import LLR_MAX
from .signal import SymbolFrame, int_to_bits

BN_EPS = 1e-5
BN_MOMENTUM = 0.1
MODEL_FORMAT_VERSION = 1
LOSS_MODES = ("bce_multilabel", "nb_softmax", "teq_minmax")


class TrainingDivergence(FloatingPointError):
    pass


@dataclass(frozen=True)
class Topology:
    n_symbols: int  # window length W
    bits_per_symbol: int  # 2m
    width: int = 1000
    n_hidden: int = 4
    head: str = "bit"  # "bit" -> 2m LLRs, "nb" -> 2**(2m) class logits
    use_apr: bool = True

    @property
    def n_real(self) -> int:
        return 4 * self.n_symbols

    @property
    def n_apr(self) -> int:
        return self.bits_per_symbol * self.n_symbols if self.use_apr else 0

    @property
    def in_dim(self) -> int:
        return self.n_real + self.n_apr

    @property
    def out_dim(self) -> int:
        return self.bits_per_symbol if self.head == "bit" else 1 << self.bits_per_symbol

    @property
    def target_apr(self) -> slice:
        """Columns of the feature vector holding the centre symbol's a-priori LLRs."""
        start = self.n_real + (self.n_symbols // 2) * self.bits_per_symbol
        return slice(start, start + self.bits_per_symbol)


class NeuralModel:
    def __init__(self, topology: Topology, dropout: float = 0.5, seed: int = 0, dtype=np.float64):
        if topology.n_symbols % 2 == 0:
            raise ValueError("window length must be odd")
        self.topology = topology
        self.dropout = dropout
        self.seed = seed
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        t = topology
        H = t.width

        def he(fan_in, fan_out, scale=1.0):
            return (rng.standard_normal((fan_in, fan_out)) * scale * math.sqrt(2.0 / fan_in)).astype(self.dtype)

        p: dict[str, np.ndarray] = {"W_in": he(t.in_dim, H, 0.5), "b_in": np.zeros(H, self.dtype)}
        for i in range(t.n_hidden):
            p[f"g{i}"] = np.ones(H, self.dtype)
            p[f"be{i}"] = np.zeros(H, self.dtype)
            # small residual branches keep the stack near identity at start
            p[f"W{i}"] = he(H, H, 0.5)
            p[f"b{i}"] = np.zeros(H, self.dtype)
        p["g_out"] = np.ones(H, self.dtype)
        p["be_out"] = np.zeros(H, self.dtype)
        p["W_out"] = he(H, t.out_dim, 0.1)
        p["b_out"] = np.zeros(t.out_dim, self.dtype)
        self.params = p
        self.running = {}
        for name in self.bn_names:
            self.running[f"{name}_mean"] = np.zeros(H, self.dtype)
            self.running[f"{name}_var"] = np.ones(H, self.dtype)

    @property
    def bn_names(self) -> list[str]:
        return [str(i) for i in range(self.topology.n_hidden)] + ["out"]

    def param_order(self) -> list[str]:
        return list(self.params) + list(self.running)

    def n_parameters(self) -> int:
        return int(sum(a.size for a in self.params.values()))

    def copy_state(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in {**self.params, **self.running}.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for k, v in state.items():
            target = self.params if k in self.params else self.running
            target[k] = v.astype(self.dtype, copy=True)

    def astype(self, dtype) -> "NeuralModel":
        other = NeuralModel.__new__(NeuralModel)
        other.topology, other.dropout, other.seed = self.topology, self.dropout, self.seed
        other.dtype = np.dtype(dtype)
        other.params = {k: v.astype(dtype) for k, v in self.params.items()}
        other.running = {k: v.astype(dtype) for k, v in self.running.items()}
        return other


# --- input features ------------------------------------------------------------------


@dataclass(frozen=True)
class AprSynthSpec:
    I_in: float | np.ndarray  # scalar, or one value per row of the bit array
    seed: int = 0

    def __post_init__(self):
        I = np.asarray(self.I_in, dtype=float)
        if np.any((I < 0) | (I > 1) | np.isnan(I)):
            raise ValueError("I_in must lie in [0, 1]")


def synthesize_apr(bits: np.ndarray, spec: AprSynthSpec) -> np.ndarray:
    """Consistent Gaussian a-priori LLRs N((-1)^b s^2/2, s^2) with s = J^-1(I_in).

    A per-row ``I_in`` (shape ``(rows,)`` or ``(rows, 1)``) gives each row its own
    feedback quality. I_in = 1 is capped at the largest tabulated s.
    """
    bits = np.asarray(bits)
    I = np.asarray(spec.I_in, dtype=float)
    if I.ndim == 1:
        I = I[:, None]
    sigma = np.minimum(j_inverse(I), 10.0)
    rng = np.random.default_rng(spec.seed)
    sign = 1.0 - 2.0 * bits
    return sigma**2 / 2 * sign + sigma * rng.standard_normal(bits.shape)


def _window_index(n: int, W: int, block: int | None = None) -> np.ndarray:
    """Row indices of each length-W window, wrapping inside blocks of ``block`` rows
    (independent circular bursts); ``None`` treats all rows as one block."""
    block = n if block is None else block
    if block <= 0 or n % block:
        raise ValueError("row count must be a multiple of the block length")
    c = W // 2
    pos = np.arange(n)
    base = pos - pos % block
    return base[:, None] + (pos[:, None] % block + np.arange(-c, c + 1)[None, :]) % block


def window_reals(frame: SymbolFrame, W: int = 3, block: int | None = None) -> np.ndarray:
    """Rows of W consecutive DP symbols as ``[xI, xQ, yI, yQ]`` per symbol, shape (n, 4W).
    The frame is treated as periodic (per block), matching the circular channel simulation."""
    if W % 2 == 0:
        raise ValueError("window length must be odd")
    per = np.stack([frame.x.real, frame.x.imag, frame.y.real, frame.y.imag], axis=1)
    return per[_window_index(len(per), W, block)].reshape(len(per), 4 * W)


def window_values(per_symbol: np.ndarray, W: int = 3, block: int | None = None) -> np.ndarray:
    """Gathers per-symbol rows (n, k) into windows (n, k W), centre symbol in the middle."""
    n, k = per_symbol.shape
    return per_symbol[_window_index(n, W, block)].reshape(n, k * W)


def build_features(reals: np.ndarray, apr_windows: np.ndarray | None, topology: Topology) -> np.ndarray:
    """Concatenates window reals and (clipped) windowed a-priori LLRs."""
    if not topology.use_apr:
        return reals
    if apr_windows is None:
        apr_windows = np.zeros((reals.shape[0], topology.n_apr), dtype=reals.dtype)
    return np.concatenate([reals, np.clip(apr_windows, -LLR_MAX, LLR_MAX).astype(reals.dtype)], axis=1)


# --- forward / backward ------------------------------------------------------------


@dataclass
class _Cache:
    x: np.ndarray
    hs: list = field(default_factory=list)
    bn: list = field(default_factory=list)  # (xhat, inv_std) per BN
    relu: list = field(default_factory=list)
    masks: list = field(default_factory=list)
    acts: list = field(default_factory=list)  # inputs to each linear after dropout


def _batchnorm(model: NeuralModel, name: str, h: np.ndarray, train: bool, cache: _Cache | None):
    g, b = model.params[f"g{name}" if name != "out" else "g_out"], model.params[f"be{name}" if name != "out" else "be_out"]
    if train:
        mu = h.mean(axis=0)
        var = h.var(axis=0)
        inv = 1.0 / np.sqrt(var + BN_EPS)
        xhat = (h - mu) * inv
        n = h.shape[0]
        rm, rv = model.running[f"{name}_mean"], model.running[f"{name}_var"]
        rm *= 1 - BN_MOMENTUM
        rm += BN_MOMENTUM * mu
        rv *= 1 - BN_MOMENTUM
        rv += BN_MOMENTUM * var * n / max(n - 1, 1)
        if cache is not None:
            cache.bn.append((xhat, inv))
    else:
        xhat = (h - model.running[f"{name}_mean"]) / np.sqrt(model.running[f"{name}_var"] + BN_EPS)
    return xhat * g + b


def forward(model: NeuralModel, features: np.ndarray, mode: str = "eval", seed=None, _cache: _Cache | None = None):
    """Returns ``(ext, app)``; ``app`` is None for the softmax head.

    In ``"train"`` mode batch statistics are used (and running statistics updated) and
    dropout masks are drawn from ``seed``. ``"eval"`` is deterministic.
    """
    t = model.topology
    x = np.asarray(features, dtype=model.dtype)
    if x.ndim != 2 or x.shape[1] != t.in_dim:
        raise ValueError(f"expected features of shape (batch, {t.in_dim}), got {x.shape}")
    train = mode == "train"
    rng = np.random.default_rng(seed) if train else None
    p = model.params
    if _cache is not None:
        _cache.x = x
    h = x @ p["W_in"] + p["b_in"]
    for i in range(t.n_hidden):
        if _cache is not None:
            _cache.hs.append(h)
        a = _batchnorm(model, str(i), h, train, _cache)
        r = np.maximum(a, 0)
        if _cache is not None:
            _cache.relu.append(a > 0)
        if train and model.dropout > 0:
            mask = (rng.random(r.shape) >= model.dropout).astype(model.dtype) / (1 - model.dropout)
            r = r * mask
        else:
            mask = None
        if _cache is not None:
            _cache.masks.append(mask)
            _cache.acts.append(r)
        h = h + r @ p[f"W{i}"] + p[f"b{i}"]
    if _cache is not None:
        _cache.hs.append(h)
    a = _batchnorm(model, "out", h, train, _cache)
    r = np.maximum(a, 0)
    if _cache is not None:
        _cache.relu.append(a > 0)
        _cache.acts.append(r)
    ext = r @ p["W_out"] + p["b_out"]
    if t.head != "bit":
        return ext, None
    app = ext + x[:, t.target_apr] if t.use_apr else ext.copy()
    return ext, app


def _bn_backward(dy, xhat, inv, g):
    n = dy.shape[0]
    dg = np.sum(dy * xhat, axis=0)
    db = np.sum(dy, axis=0)
    dxhat = dy * g
    dx = inv / n * (n * dxhat - dxhat.sum(axis=0) - xhat * np.sum(dxhat * xhat, axis=0))
    return dx, dg, db


def backward(model: NeuralModel, cache: _Cache, d_ext: np.ndarray, d_app: np.ndarray | None = None):
    """Parameter gradients and the feature gradient given upstream output gradients."""
    t = model.topology
    p = model.params
    grads: dict[str, np.ndarray] = {}
    dx_skip = None
    if d_app is not None:
        d_ext = d_ext + d_app
        if t.use_apr:
            dx_skip = d_app
    r = cache.acts[-1]
    grads["W_out"] = r.T @ d_ext
    grads["b_out"] = d_ext.sum(axis=0)
    dr = d_ext @ p["W_out"].T
    da = dr * cache.relu[-1]
    xhat, inv = cache.bn[-1]
    dh, grads["g_out"], grads["be_out"] = _bn_backward(da, xhat, inv, p["g_out"])
    for i in reversed(range(t.n_hidden)):
        r = cache.acts[i]
        grads[f"W{i}"] = r.T @ dh
        grads[f"b{i}"] = dh.sum(axis=0)
        dr = dh @ p[f"W{i}"].T
        if cache.masks[i] is not None:
            dr = dr * cache.masks[i]
        da = dr * cache.relu[i]
        xhat, inv = cache.bn[i]
        dbn, grads[f"g{i}"], grads[f"be{i}"] = _bn_backward(da, xhat, inv, p[f"g{i}"])
        dh = dh + dbn
    grads["W_in"] = cache.x.T @ dh
    grads["b_in"] = dh.sum(axis=0)
    dx = dh @ p["W_in"].T
    if dx_skip is not None:
        dx[:, t.target_apr] += dx_skip
    return grads, dx


# --- losses ----------------------------------------------------------------------------


def _signed(llrs, bits):
    return (1 - 2 * np.asarray(bits, dtype=llrs.dtype)) * llrs


def loss_bce_multilabel(llrs, bits, with_grad: bool = False):
    """Mean per-bit ``softplus(-(1-2b) L)`` in nats (positive LLR means bit 0)."""
    llrs = np.asarray(llrs)
    if llrs.shape != np.shape(bits):
        raise ValueError("LLR and bit shapes differ")
    z = _signed(llrs, bits)
    loss = float(np.mean(np.logaddexp(0, -z)))
    if not with_grad:
        return loss
    sig = 0.5 * (1 + np.tanh(-z / 2))  # sigmoid(-z), overflow-free
    grad = -(1 - 2 * np.asarray(bits, dtype=llrs.dtype)) * sig / llrs.size
    return loss, grad


def symbol_classes(bits: np.ndarray) -> np.ndarray:
    """Joint class index of each row of 2m bits (MSB first)."""
    bits = np.asarray(bits, dtype=np.int64)
    return bits @ (1 << np.arange(bits.shape[-1] - 1, -1, -1))


def loss_nb_softmax(logits, classes, with_grad: bool = False):
    logits = np.asarray(logits)
    classes = np.asarray(classes, dtype=np.int64)
    if classes.min(initial=0) < 0 or classes.max(initial=0) >= logits.shape[1]:
        raise IndexError("class index out of range")
    mx = logits.max(axis=1, keepdims=True)
    lse = mx[:, 0] + np.log(np.sum(np.exp(logits - mx), axis=1))
    rows = np.arange(len(classes))
    loss = float(np.mean(lse - logits[rows, classes]))
    if not with_grad:
        return loss
    prob = np.exp(logits - lse[:, None])
    prob[rows, classes] -= 1
    return loss, prob / len(classes)


def nb_logits_to_llrs(logits: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    """Per-bit LLRs marginalised from joint-class logits."""
    labels = int_to_bits(np.arange(1 << bits_per_symbol), bits_per_symbol)
    out = np.empty((logits.shape[0], bits_per_symbol))
    mx = logits.max(axis=1, keepdims=True)
    e = np.exp(logits - mx)
    for k in range(bits_per_symbol):
        zero = labels[:, k] == 0
        out[:, k] = np.log(e[:, zero].sum(axis=1) + 1e-300) - np.log(e[:, ~zero].sum(axis=1) + 1e-300)
    return out


def loss_teq_minmax(ext, app, bits, with_grad: bool = False):
    """Worse of the EXT and APP cross-entropies; the gradient follows that branch
    (EXT on exact ties)."""
    if np.shape(ext) != np.shape(app):
        raise ValueError("EXT and APP shapes differ")
    le = loss_bce_multilabel(ext, bits, with_grad)
    la = loss_bce_multilabel(app, bits, with_grad)
    if not with_grad:
        return max(le, la)
    if le[0] >= la[0]:
        return le[0], le[1], np.zeros_like(ext)
    return la[0], np.zeros_like(ext), la[1]


def compute_loss(model: NeuralModel, features, bits, loss_mode: str, mode: str = "eval", seed=None, cache=None):
    """Forward pass plus loss; with a cache, also the output gradients."""
    ext, app = forward(model, features, mode, seed, cache)
    want = cache is not None
    if loss_mode == "bce_multilabel":
        out = loss_bce_multilabel(ext, bits, want)
        return (out[0], out[1], None) if want else out
    if loss_mode == "nb_softmax":
        out = loss_nb_softmax(ext, symbol_classes(bits), want)
        return (out[0], out[1], None) if want else out
    if loss_mode == "teq_minmax":
        return loss_teq_minmax(ext, app, bits, want)
    raise ValueError(f"unknown loss mode {loss_mode!r}")


# --- optimisation ------------------------------------------------------------------------


@dataclass
class TrainSpec:
    loss_mode: str = "teq_minmax"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 1000
    max_epochs: int = 500
    patience: int = 13
    val_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.loss_mode not in LOSS_MODES:
            raise ValueError(f"loss_mode must be one of {LOSS_MODES}")
        if self.patience > self.max_epochs:
            raise ValueError("patience exceeds max_epochs")


class Adam:
    def __init__(self, params: dict[str, np.ndarray], spec: TrainSpec):
        self.spec = spec
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        s = self.spec
        self.t += 1
        c1 = 1 - s.beta1**self.t
        c2 = 1 - s.beta2**self.t
        if s.lr == 0:
            return
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= s.beta1
            m += (1 - s.beta1) * g
            v *= s.beta2
            v += (1 - s.beta2) * g * g
            params[k] -= (s.lr * (m / c1) / (np.sqrt(v / c2) + s.eps)).astype(params[k].dtype)


def backward_and_adam_step(model: NeuralModel, features, bits, spec: TrainSpec, opt: Adam, seed=None) -> float:
    cache = _Cache(x=None)
    loss, d_ext, d_app = compute_loss(model, features, bits, spec.loss_mode, "train", seed, cache)
    if not math.isfinite(loss):
        raise TrainingDivergence(f"non-finite loss at Adam step {opt.t + 1}")
    grads, _ = backward(model, cache, d_ext, d_app)
    opt.step(model.params, grads)
    return loss


@dataclass
class TrainingData:
    """Equalized symbols as window reals with the target bits of each window.

    ``bits`` holds the 2m labels of every symbol (row i is symbol i); the
    windowed bit matrix needed for a-priori synthesis is derived on demand.
    """

    reals: np.ndarray  # (n, 4W)
    bits: np.ndarray  # (n, 2m) uint8
    W: int = 3
    block: int | None = None  # rows per independent circular burst

    def __post_init__(self):
        if len(self.reals) != len(self.bits):
            raise ValueError("reals and bits differ in length")

    def __len__(self) -> int:
        return len(self.bits)

    @property
    def bit_windows(self) -> np.ndarray:
        return window_values(self.bits, self.W, self.block)


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)  # index 0 is the untrained model
    best_epoch: int = 0
    epochs_run: int = 0


def _teq_features(data_reals, bit_windows, rows, topology, rng):
    I = rng.random(len(rows))
    apr = synthesize_apr(bit_windows[rows], AprSynthSpec(I, int(rng.integers(2**63))))
    return build_features(data_reals[rows], apr, topology)


def train(model: NeuralModel, data: TrainingData, spec: TrainSpec, log=None) -> tuple[NeuralModel, TrainHistory]:
    """Mini-batch Adam with early stopping on a held-out split; the parameters of
    the best validation epoch are restored before returning.

    In ``teq_minmax`` mode every training example gets a fresh a-priori quality
    ``I_in ~ U[0, 1]`` each epoch; the validation split uses one fixed draw.
    """
    if len(data) == 0:
        raise ValueError("empty dataset")
    t = model.topology
    rng = np.random.default_rng(spec.seed)
    order = rng.permutation(len(data))
    n_val = max(1, int(round(spec.val_fraction * len(data)))) if len(data) > 1 else 0
    val_rows, train_rows = order[:n_val], order[n_val:]
    if len(train_rows) == 0:
        train_rows = val_rows
    teq = t.use_apr and spec.loss_mode == "teq_minmax"
    bit_windows = data.bit_windows if t.use_apr else None
    reals = data.reals.astype(model.dtype)

    def features(rows, rng_):
        if teq:
            return _teq_features(reals, bit_windows, rows, t, rng_)
        return build_features(reals[rows], None, t)

    val_x = features(val_rows, np.random.default_rng([spec.seed, 1]))
    val_b = data.bits[val_rows]

    def val_loss():
        return float(compute_loss(model, val_x, val_b, spec.loss_mode, "eval"))

    hist = TrainHistory()
    best = val_loss()
    hist.val_loss.append(best)
    best_state = model.copy_state()
    opt = Adam(model.params, spec)
    for epoch in range(1, spec.max_epochs + 1):
        ep_rng = np.random.default_rng([spec.seed, 2, epoch])
        perm = train_rows[ep_rng.permutation(len(train_rows))]
        x_all = features(perm, ep_rng)
        b_all = data.bits[perm]
        losses = []
        for start in range(0, len(perm), spec.batch_size):
            sl = slice(start, start + spec.batch_size)
            if len(b_all[sl]) < 2 and len(perm) > 1:
                continue  # batch-norm needs at least two rows
            try:
                losses.append(backward_and_adam_step(model, x_all[sl], b_all[sl], spec, opt, ep_rng.integers(2**63)))
            except TrainingDivergence as exc:
                raise TrainingDivergence(f"epoch {epoch}, batch starting at {start}: {exc}") from None
        hist.train_loss.append(float(np.mean(losses)) if losses else math.nan)
        v = val_loss()
        hist.val_loss.append(v)
        hist.epochs_run = epoch
        if log is not None:
            log(f"epoch {epoch}: train {hist.train_loss[-1]:.5f} val {v:.5f}")
        if v < best:
            best, hist.best_epoch, best_state = v, epoch, model.copy_state()
        elif epoch - hist.best_epoch >= spec.patience:
            break
    model.load_state(best_state)
    return model, hist


def predict_llrs(
    model: NeuralModel,
    reals: np.ndarray,
    apr_per_symbol: np.ndarray | None = None,
    batch: int = 8192,
    block: int | None = None,
):
    """Eval-mode bit LLRs per symbol. Returns ``(ext, app)``; for the softmax head
    the marginal bit LLRs are returned in both slots."""
    t = model.topology
    apr_w = window_values(apr_per_symbol, t.n_symbols, block) if (apr_per_symbol is not None and t.use_apr) else None
    exts, apps = [], []
    for start in range(0, len(reals), batch):
        sl = slice(start, start + batch)
        x = build_features(reals[sl].astype(model.dtype), None if apr_w is None else apr_w[sl], t)
        ext, app = forward(model, x, "eval")
        if t.head != "bit":
            ext = app = nb_logits_to_llrs(ext.astype(float), t.bits_per_symbol)
        exts.append(ext)
        apps.append(app)
    return np.concatenate(exts).astype(float), np.concatenate(apps).astype(float)


# --- checkpoint file ---------------------------------------------------------------------


def save_model(model: NeuralModel, path, extra: dict | None = None) -> None:
    """Text manifest plus little-endian float64 blobs in manifest order."""
    order = model.param_order()
    state = {**model.params, **model.running}
    manifest = {
        "kind": "turboeq-model",
        "format_version": MODEL_FORMAT_VERSION,
        "topology": asdict(model.topology),
        "dropout": model.dropout,
        "seed": model.seed,
        "dtype": model.dtype.name,
        "order": order,
        "n_values": int(sum(state[k].size for k in order)),
        **(extra or {}),
    }
    _container.write(path, manifest, [(k, state[k].astype("<f8")) for k in order])


def load_model(path) -> tuple[NeuralModel, dict]:
    manifest, arrays = _container.read(path)
    if manifest.get("kind") != "turboeq-model" or manifest.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError("not a supported model checkpoint")
    if sum(arrays[k].size for k in manifest["order"]) != manifest["n_values"]:
        raise ValueError("parameter count checksum mismatch")
    model = NeuralModel(Topology(**manifest["topology"]), manifest["dropout"], manifest["seed"], manifest["dtype"])
    expected = {k: v.shape for k, v in {**model.params, **model.running}.items()}
    for k in manifest["order"]:
        if arrays[k].shape != expected[k]:
            raise ValueError(f"parameter {k} has shape {arrays[k].shape}, expected {expected[k]}")
    model.load_state(arrays)
    return model, manifest


def manifest_json(model: NeuralModel) -> str:
    return json.dumps({"topology": asdict(model.topology), "dropout": model.dropout, "seed": model.seed})

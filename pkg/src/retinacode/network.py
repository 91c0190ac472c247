"""Dense recognition-reconstruction autoencoder.

A stack of fully connected sigmoid layers, symmetric about a 32-unit
encoding layer, trained to reconstruct its own retinal input by hand-written
backpropagation.  Everything runs in float64; training is single-threaded
over steps and bit-reproducible under a fixed seed.

Layer naming: for widths [4096, 1024, 256, 64, 32, 64, 256, 1024, 4096] the
activities are labelled retina, V1, V2, V3, V4 (the encoding), V3', V2',
V1', retina' (the reconstruction).
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dataset import RetinaImage, StimulusProps
from .errors import (CheckpointFormatError, CheckpointSpecError,
                     CheckpointTruncatedError, NumericError, TrainingDiverged)

ENCODING_DIM = 32

CHECKPOINT_MAGIC = b"RTNCODE1"

DEFAULT_WIDTHS = (4096, 1024, 256, 64, 32, 64, 256, 1024, 4096)
DESK_WIDTHS = (4096, 256, 64, 32, 64, 256, 4096)


@dataclass(frozen=True)
class LayerSpec:
    """Unit counts from retina through the encoding layer back to retina'."""

    widths: tuple[int, ...] = DEFAULT_WIDTHS
    activation: str = "sigmoid"

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        w = self.widths
        if len(w) < 3 or len(w) % 2 == 0:
            raise ValueError("widths must be an odd-length list of >= 3 layers")
        if w[0] != w[-1]:
            raise ValueError("retina and reconstruction widths must match")
        if w != tuple(reversed(w)):
            raise ValueError("widths must be symmetric about the encoding layer")
        if w[len(w) // 2] != ENCODING_DIM:
            raise ValueError(f"encoding layer must have {ENCODING_DIM} units")
        side = int(round(np.sqrt(w[0])))
        if side * side != w[0]:
            raise ValueError("retina width must be a perfect square pixel count")
        if self.activation != "sigmoid":
            raise ValueError(f"unsupported activation {self.activation!r}")

    @property
    def retina_width(self) -> int:
        return int(round(np.sqrt(self.widths[0])))

    @property
    def encoding_index(self) -> int:
        """Index of the encoding layer within the activity list."""
        return len(self.widths) // 2

    @property
    def n_weight_layers(self) -> int:
        return len(self.widths) - 1

    def layer_names(self) -> tuple[str, ...]:
        k = self.encoding_index
        names = ["retina"] + [f"V{i}" for i in range(1, k + 1)]
        names += [f"V{i}'" for i in range(k - 1, 0, -1)] + ["retina'"]
        return tuple(names)


@dataclass
class NetworkParams:
    """Per-layer weight matrices (fan_in x fan_out) and bias vectors."""

    spec: LayerSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        w = self.spec.widths
        if len(self.weights) != len(w) - 1 or len(self.biases) != len(w) - 1:
            raise ValueError("one weight matrix and bias per layer transition")
        for l, (wm, bv) in enumerate(zip(self.weights, self.biases)):
            if wm.shape != (w[l], w[l + 1]) or bv.shape != (w[l + 1],):
                raise ValueError(f"layer {l}: shapes {wm.shape}/{bv.shape} "
                                 f"inconsistent with widths {w[l]}->{w[l + 1]}")

    def copy(self) -> "NetworkParams":
        return NetworkParams(spec=self.spec,
                             weights=[w.copy() for w in self.weights],
                             biases=[b.copy() for b in self.biases])

    def allclose(self, other: "NetworkParams") -> bool:
        return (self.spec == other.spec
                and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
                and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases)))

    def n_parameters(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)


@dataclass
class ActivationRecord:
    """All layer activities for one forward pass, retina input included."""

    spec: LayerSpec
    activities: list[np.ndarray]        # one vector per layer, input first

    @property
    def layer_names(self) -> tuple[str, ...]:
        return self.spec.layer_names()

    @property
    def encoding(self) -> np.ndarray:
        return self.activities[self.spec.encoding_index]

    @property
    def reconstruction(self) -> np.ndarray:
        w = self.spec.retina_width
        return self.activities[-1].reshape(w, w)

    def layer(self, name: str) -> np.ndarray:
        try:
            return self.activities[self.layer_names.index(name)]
        except ValueError:
            raise ValueError(f"unknown layer {name!r}; have {self.layer_names}")


@dataclass
class Gradients:
    """Loss gradients matching a NetworkParams layout."""

    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]


@dataclass(frozen=True)
class TrainConfig:
    total_steps: int
    batch_size: int = 32
    learning_rate: float = 1e-4
    optimizer: str = "adam"             # or "sgd"
    seed: int = 0
    snapshot_schedule: tuple[int, ...] = ()
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.total_steps < 0:
            raise ValueError("total_steps must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def digest(self) -> str:
        blob = json.dumps(
            {k: getattr(self, k) for k in
             ("total_steps", "batch_size", "learning_rate", "optimizer",
              "seed", "snapshot_schedule", "adam_beta1", "adam_beta2", "adam_eps")},
            sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class MetricLog:
    """Per-step training trace: step index and batch reconstruction MSE."""

    steps: list[int] = field(default_factory=list)
    batch_mse: list[float] = field(default_factory=list)

    def append(self, step: int, mse: float) -> None:
        self.steps.append(int(step))
        self.batch_mse.append(float(mse))

    def __len__(self) -> int:
        return len(self.steps)


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------

def _sigmoid(z: np.ndarray) -> np.ndarray:
    # IEEE arithmetic makes the naive form safe for every finite z:
    # exp overflow gives inf and 1/inf is an exact 0, underflow gives 1.
    with np.errstate(over="ignore"):
        out = np.exp(-z)
    out += 1.0
    np.divide(1.0, out, out=out)
    return out


def init_params(spec: LayerSpec, seed: int) -> NetworkParams:
    """Fresh parameters: zero-mean normals scaled by layer fan-in, zero biases.

    The 0.5/sqrt(fan_in) scale keeps every pre-activation in the near-linear
    sigmoid regime, so an untrained network outputs nearly uniform 0.5.
    """
    rng = np.random.default_rng(seed)
    w = spec.widths
    weights = [rng.normal(0.0, 0.5 / np.sqrt(w[l]), size=(w[l], w[l + 1]))
               for l in range(len(w) - 1)]
    biases = [np.zeros(w[l + 1]) for l in range(len(w) - 1)]
    return NetworkParams(spec=spec, weights=weights, biases=biases)


def _encode_batch(params: NetworkParams, x: np.ndarray) -> list[np.ndarray]:
    """Activities [input, a1, ..., encoding] for a (B, P) batch."""
    acts = [x]
    mid = params.spec.encoding_index
    a = x
    for l in range(mid):
        a = _sigmoid(a @ params.weights[l] + params.biases[l])
        acts.append(a)
    return acts


def _decode_batch(params: NetworkParams, encoding: np.ndarray) -> list[np.ndarray]:
    """Activities [d1, ..., reconstruction] for a (B, 32) encoding batch."""
    acts = []
    a = encoding
    for l in range(params.spec.encoding_index, params.spec.n_weight_layers):
        a = _sigmoid(a @ params.weights[l] + params.biases[l])
        acts.append(a)
    return acts


def _forward_batch(params: NetworkParams, x: np.ndarray) -> list[np.ndarray]:
    acts = _encode_batch(params, x)
    acts.extend(_decode_batch(params, acts[-1]))
    return acts


def _as_input(params: NetworkParams, stimulus) -> np.ndarray:
    pixels = stimulus.pixels if isinstance(stimulus, RetinaImage) else np.asarray(stimulus)
    flat = np.asarray(pixels, dtype=np.float64).reshape(-1)
    if flat.size != params.spec.widths[0]:
        raise ValueError(f"input has {flat.size} pixels, "
                         f"spec expects {params.spec.widths[0]}")
    return flat


def forward(params: NetworkParams, stimulus) -> ActivationRecord:
    """Full forward pass for one stimulus (RetinaImage or array)."""
    flat = _as_input(params, stimulus)
    acts = _forward_batch(params, flat[None, :])
    for l, a in enumerate(acts):
        if not np.isfinite(a).all():
            raise NumericError(f"non-finite activity at layer index {l}")
    return ActivationRecord(spec=params.spec, activities=[a[0] for a in acts])


def encode(params: NetworkParams, stimuli) -> np.ndarray:
    """Encoding vectors for a stimulus batch: (N, 32).

    Accepts a (N, P) matrix, a list of RetinaImages, or a TrialSet.
    """
    if hasattr(stimuli, "as_matrix"):
        x = stimuli.as_matrix()
    elif isinstance(stimuli, np.ndarray):
        x = stimuli.reshape(len(stimuli), -1).astype(np.float64)
    else:
        x = np.stack([_as_input(params, s) for s in stimuli])
    return _encode_batch(params, x)[-1]


def reconstruction_loss(record_or_output, target) -> float:
    """Mean squared error over all retina pixels."""
    if isinstance(record_or_output, ActivationRecord):
        recon = record_or_output.reconstruction
    else:
        recon = np.asarray(record_or_output, dtype=np.float64)
    tgt = target.pixels if isinstance(target, RetinaImage) else np.asarray(target)
    tgt = np.asarray(tgt, dtype=np.float64)
    if recon.size != tgt.size:
        raise ValueError(f"shape mismatch: {recon.shape} vs {tgt.shape}")
    diff = recon.reshape(-1) - tgt.reshape(-1)
    return float(diff @ diff / diff.size)


def _batch_loss(acts: list[np.ndarray], targets: np.ndarray) -> float:
    diff = acts[-1] - targets
    return float((diff * diff).mean())


def _backward_batch(params: NetworkParams, acts: list[np.ndarray],
                    targets: np.ndarray) -> Gradients:
    """Gradient of the batch-mean pixel MSE for every weight and bias."""
    n_layers = params.spec.n_weight_layers
    d_weights = [None] * n_layers
    d_biases = [None] * n_layers

    out = acts[-1]
    # d loss / d out for loss = mean over batch*pixels of squared error,
    # then through the output sigmoid; kept in-place on one buffer
    delta = out - targets
    delta *= 2.0 / out.size
    delta *= out
    delta *= 1.0 - out
    for l in range(n_layers - 1, -1, -1):
        d_weights[l] = acts[l].T @ delta
        d_biases[l] = delta.sum(axis=0)
        if l > 0:
            a_prev = acts[l]
            delta = delta @ params.weights[l].T
            delta *= a_prev
            delta *= 1.0 - a_prev
    return Gradients(d_weights=d_weights, d_biases=d_biases)


def backward(params: NetworkParams, record: ActivationRecord, target) -> Gradients:
    """Gradients of reconstruction_loss(record, target) w.r.t. all parameters."""
    tgt = target.pixels if isinstance(target, RetinaImage) else np.asarray(target)
    targets = np.asarray(tgt, dtype=np.float64).reshape(1, -1)
    acts = [a[None, :] for a in record.activities]
    return _backward_batch(params, acts, targets)


# ---------------------------------------------------------------------------
# Optimizers and the training loop
# ---------------------------------------------------------------------------

class _AdamState:
    def __init__(self, params: NetworkParams):
        self.m_w = [np.zeros_like(w) for w in params.weights]
        self.v_w = [np.zeros_like(w) for w in params.weights]
        self.m_b = [np.zeros_like(b) for b in params.biases]
        self.v_b = [np.zeros_like(b) for b in params.biases]
        # scratch buffers keep the per-step update allocation-free
        self.s_w = [np.empty_like(w) for w in params.weights]
        self.s_b = [np.empty_like(b) for b in params.biases]
        self.t = 0

    def update(self, params: NetworkParams, grads: Gradients,
               lr: float, b1: float, b2: float, eps: float) -> None:
        self.t += 1
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for l in range(len(params.weights)):
            for p, g, m, v, s in ((params.weights[l], grads.d_weights[l],
                                   self.m_w[l], self.v_w[l], self.s_w[l]),
                                  (params.biases[l], grads.d_biases[l],
                                   self.m_b[l], self.v_b[l], self.s_b[l])):
                m *= b1
                np.multiply(g, 1.0 - b1, out=s)
                m += s
                v *= b2
                np.multiply(g, g, out=s)
                s *= 1.0 - b2
                v += s
                np.divide(v, c2, out=s)
                np.sqrt(s, out=s)
                s += eps
                np.divide(m, s, out=s)
                s *= lr / c1
                p -= s


def _sgd_update(params: NetworkParams, grads: Gradients, lr: float) -> None:
    for l in range(len(params.weights)):
        params.weights[l] -= lr * grads.d_weights[l]
        params.biases[l] -= lr * grads.d_biases[l]


def train(params: NetworkParams, config: TrainConfig, sampler: Callable,
          hooks: Sequence[Callable] = ()) -> tuple[NetworkParams, MetricLog]:
    """Run total_steps autoencoding updates; input and target are the batch.

    sampler(rng, n) must return an (n, P) stimulus matrix.  Hooks are called
    as hook(step, params_snapshot, log) at every step listed in
    config.snapshot_schedule (step 0 means before any update); they receive
    a read-only copy of the parameters.  The caller's params are not
    mutated.  Raises TrainingDiverged on a non-finite batch loss.
    """
    params = params.copy()
    log = MetricLog()
    rng = np.random.default_rng(config.seed)
    schedule = set(int(s) for s in config.snapshot_schedule)

    def fire(step: int) -> None:
        if step in schedule:
            snapshot = params.copy()
            for hook in hooks:
                hook(step, snapshot, log)

    adam = _AdamState(params) if config.optimizer == "adam" else None
    last_good = params.copy() if config.total_steps > 0 else None

    fire(0)
    for step in range(1, config.total_steps + 1):
        batch = sampler(rng, config.batch_size)
        acts = _forward_batch(params, batch)
        loss = _batch_loss(acts, batch)
        if not np.isfinite(loss):
            raise TrainingDiverged(step, last_good_params=last_good, log=log)
        log.append(step, loss)
        grads = _backward_batch(params, acts, batch)
        if adam is not None:
            adam.update(params, grads, config.learning_rate,
                        config.adam_beta1, config.adam_beta2, config.adam_eps)
        else:
            _sgd_update(params, grads, config.learning_rate)
        if step % 1000 == 0 or step == config.total_steps:
            last_good = params.copy()
        fire(step)
    return params, log


def evaluate_mse(params: NetworkParams, stimuli) -> float:
    """Mean reconstruction MSE over a stimulus set; never mutates params."""
    if hasattr(stimuli, "as_matrix"):
        x = stimuli.as_matrix()
    elif isinstance(stimuli, np.ndarray):
        x = stimuli.reshape(len(stimuli), -1).astype(np.float64)
    else:
        x = np.stack([_as_input(params, s) for s in stimuli])
    acts = _forward_batch(params, x)
    return _batch_loss(acts, x)


def decode_from_encoding(params: NetworkParams, encoding: np.ndarray) -> RetinaImage:
    """Run the decoder half only, from an injected 32-vector.

    Follows exactly the same code path as the decoder half of forward(), so
    decode_from_encoding(params, forward(params, img).encoding) reproduces
    forward(params, img).reconstruction bit for bit.
    """
    enc = np.asarray(encoding, dtype=np.float64).reshape(-1)
    if enc.size != ENCODING_DIM:
        raise ValueError(f"encoding must have {ENCODING_DIM} entries, got {enc.size}")
    if enc.min() < 0.0 or enc.max() > 1.0:
        raise ValueError("encoding entries must lie in [0, 1]")
    acts = _decode_batch(params, enc[None, :])
    w = params.spec.retina_width
    return RetinaImage(pixels=acts[-1][0].reshape(w, w),
                       props=StimulusProps(identity=None))


# ---------------------------------------------------------------------------
# Finite-difference gradient checking
# ---------------------------------------------------------------------------

def gradient_check(params: NetworkParams, batch: np.ndarray,
                   n_per_layer: int = 200, step: float = 1e-5,
                   seed: int = 0) -> dict[str, float]:
    """Central-difference check of the analytic gradient, per layer.

    Samples n_per_layer coordinates from every weight matrix and bias
    vector and returns the max relative error for each, keyed
    'W0', 'b0', 'W1', ...  Relative error uses max(|analytic|, |numeric|)
    as the scale.  Coordinates whose analytic/numeric discrepancy sits
    below the cancellation noise of the difference quotient itself
    (float64 eps times the loss magnitude over the step) are skipped:
    there the quotient carries no signal either way.
    """
    rng = np.random.default_rng(seed)
    x = np.asarray(batch, dtype=np.float64)
    acts = _forward_batch(params, x)
    grads = _backward_batch(params, acts, x)

    def loss_now() -> float:
        return _batch_loss(_forward_batch(params, x), x)

    eps = np.finfo(np.float64).eps
    result = {}
    for l in range(params.spec.n_weight_layers):
        for tag, arr, g in ((f"W{l}", params.weights[l], grads.d_weights[l]),
                            (f"b{l}", params.biases[l], grads.d_biases[l])):
            flat = arr.reshape(-1)
            gflat = g.reshape(-1)
            idx = rng.choice(flat.size, size=min(n_per_layer, flat.size),
                             replace=False)
            worst = 0.0
            for i in idx:
                orig = flat[i]
                flat[i] = orig + step
                up = loss_now()
                flat[i] = orig - step
                down = loss_now()
                flat[i] = orig
                numeric = (up - down) / (2.0 * step)
                analytic = gflat[i]
                noise = 100.0 * eps * (abs(up) + abs(down)) / (2.0 * step)
                if abs(analytic - numeric) <= noise:
                    continue
                scale = max(abs(analytic), abs(numeric))
                worst = max(worst, abs(analytic - numeric) / scale)
            result[tag] = worst
    return result


# ---------------------------------------------------------------------------
# Checkpointing
# ---------------------------------------------------------------------------
#
# Layout: 8-byte magic, uint32 little-endian header length, UTF-8 JSON
# header {widths, activation, step, metadata}, then per-layer float64
# little-endian weight and bias payloads in declaration order.

def save_checkpoint(params: NetworkParams, step: int, metadata: dict,
                    path) -> None:
    header = json.dumps({
        "widths": list(params.spec.widths),
        "activation": params.spec.activation,
        "step": int(step),
        "metadata": metadata,
    }, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        for w, b in zip(params.weights, params.biases):
            f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_checkpoint(path, expected_spec: LayerSpec | None = None
                    ) -> tuple[NetworkParams, int, dict]:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < len(CHECKPOINT_MAGIC) + 4 or not raw.startswith(CHECKPOINT_MAGIC):
        raise CheckpointFormatError(f"{path}: bad checkpoint magic")
    (header_len,) = struct.unpack_from("<I", raw, len(CHECKPOINT_MAGIC))
    off = len(CHECKPOINT_MAGIC) + 4
    if len(raw) < off + header_len:
        raise CheckpointTruncatedError(f"{path}: header truncated")
    try:
        header = json.loads(raw[off:off + header_len].decode("utf-8"))
        spec = LayerSpec(widths=tuple(header["widths"]),
                         activation=header["activation"])
        step = int(header["step"])
        metadata = header.get("metadata", {})
    except (ValueError, KeyError, TypeError) as exc:
        raise CheckpointFormatError(f"{path}: corrupt header ({exc})") from exc

    if expected_spec is not None and spec.widths != expected_spec.widths:
        for l, (a, b) in enumerate(zip(spec.widths, expected_spec.widths)):
            if a != b:
                raise CheckpointSpecError(
                    f"{path}: layer {l} width {a}, expected {b}")
        raise CheckpointSpecError(f"{path}: layer count mismatch")

    off += header_len
    w = spec.widths
    weights, biases = [], []
    for l in range(len(w) - 1):
        n_w = w[l] * w[l + 1]
        need = (n_w + w[l + 1]) * 8
        if len(raw) < off + need:
            raise CheckpointTruncatedError(
                f"{path}: payload for layer {l} truncated "
                f"({len(raw) - off} bytes left, need {need})")
        weights.append(np.frombuffer(raw, dtype="<f8", count=n_w, offset=off)
                       .reshape(w[l], w[l + 1]).copy())
        off += n_w * 8
        biases.append(np.frombuffer(raw, dtype="<f8", count=w[l + 1], offset=off)
                      .copy())
        off += w[l + 1] * 8
    return NetworkParams(spec=spec, weights=weights, biases=biases), step, metadata

"""Feed-forward softmax classifier standing in for a large vision net.

Covers the full two-stage protocol: train on imbalanced data, split at the
penultimate layer, extract per-class features, retrain only the head on an
augmented feature set, and reassemble the pieces into one network.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DataError, TrainingDiverged
from .dataset import Dataset
from .rng import Stream, derive_seed

_ACTIVATIONS = {"relu": _kernels.RELU, "tanh": _kernels.TANH}


@dataclass(frozen=True)
class NetworkSpec:
    """Layer widths (input, hidden..., n_classes) and hidden activation."""

    layer_widths: tuple
    activation: str = "relu"

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise DataError("layer_widths needs >= 2 positive entries")
        if self.activation not in _ACTIVATIONS:
            raise DataError(f"unknown activation {self.activation!r}")
        object.__setattr__(self, "layer_widths", widths)

    @property
    def n_layers(self):
        return len(self.layer_widths) - 1

    @property
    def input_dim(self):
        return self.layer_widths[0]

    @property
    def n_classes(self):
        return self.layer_widths[-1]


@dataclass(frozen=True)
class NetworkParams:
    """Per-layer weight matrices and bias vectors, float64."""

    weights: tuple
    biases: tuple

    def __post_init__(self):
        ws = tuple(np.ascontiguousarray(w, dtype=np.float64) for w in self.weights)
        bs = tuple(np.ascontiguousarray(b, dtype=np.float64) for b in self.biases)
        if len(ws) != len(bs) or not ws:
            raise DataError("weights and biases must be non-empty and parallel")
        for w, b in zip(ws, bs):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise DataError("layer shapes inconsistent")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise DataError("parameters contain non-finite values")
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)


@dataclass(frozen=True)
class TrainConfig:
    """Adam hyperparameters plus the seed driving shuffles and fresh inits."""

    epochs: int = 100
    batch_size: int = 128
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise DataError("epochs must be >= 0 and batch_size >= 1")
        if not self.learning_rate > 0 or not self.adam_epsilon > 0:
            raise DataError("learning_rate and adam_epsilon must be positive")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise DataError("Adam betas must lie in (0, 1)")


@dataclass(frozen=True)
class SplitNetwork:
    """A network cut before its final linear layer.

    The extractor may be empty (single-layer networks), in which case
    features are the raw inputs.
    """

    extractor_weights: tuple
    extractor_biases: tuple
    head_weight: np.ndarray
    head_bias: np.ndarray
    activation: str

    @property
    def feature_dim(self):
        return self.head_weight.shape[0]

    @property
    def n_classes(self):
        return self.head_weight.shape[1]


@dataclass(frozen=True)
class FeatureSet:
    """Per-class feature matrices sharing one feature dimension."""

    matrices: tuple
    feature_dim: int
    class_ids: tuple

    def __post_init__(self):
        mats = []
        for m in self.matrices:
            m = np.ascontiguousarray(m, dtype=np.float64).reshape(-1, self.feature_dim)
            if not np.all(np.isfinite(m)):
                raise DataError("feature matrix contains non-finite values")
            mats.append(m)
        if len(mats) != len(self.class_ids):
            raise DataError("matrices and class_ids must be parallel")
        object.__setattr__(self, "matrices", tuple(mats))
        object.__setattr__(self, "class_ids", tuple(int(c) for c in self.class_ids))

    @property
    def n_classes(self):
        return len(self.matrices)

    def counts(self):
        return np.array([m.shape[0] for m in self.matrices], dtype=np.int64)

    def stacked(self):
        """All rows class-major plus their labels."""
        feats = np.vstack(self.matrices)
        labels = np.repeat(np.array(self.class_ids, dtype=np.int64), self.counts())
        return feats, labels


def feature_set_from_dataset(data):
    """Group a dataset's rows by class, preserving row order within a class."""
    mats = [data.features[data.labels == k] for k in range(data.n_classes)]
    return FeatureSet(tuple(mats), data.n_dims, tuple(range(data.n_classes)))


def init(spec, seed):
    """Glorot-uniform weights (zero biases), deterministic from seed."""
    root = Stream(seed)
    weights = []
    biases = []
    for l in range(spec.n_layers):
        fan_in, fan_out = spec.layer_widths[l], spec.layer_widths[l + 1]
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        u = root.spawn("init", l).uniforms(fan_in * fan_out)
        weights.append((2.0 * u - 1.0).reshape(fan_in, fan_out) * limit)
        biases.append(np.zeros(fan_out))
    return NetworkParams(tuple(weights), tuple(biases))


def _check_consistent(params, spec):
    shapes = [w.shape for w in params.weights]
    expected = [(spec.layer_widths[i], spec.layer_widths[i + 1]) for i in range(spec.n_layers)]
    if shapes != expected:
        raise DataError(f"params shapes {shapes} do not match spec widths {spec.layer_widths}")


def _hidden(weights, biases, act_code, x):
    a = x
    for w, b in zip(weights, biases):
        z = np.dot(a, w) + b
        a = np.maximum(z, 0.0) if act_code == _kernels.RELU else np.tanh(z)
    return a


def _logits(params, spec, x):
    a = _hidden(params.weights[:-1], params.biases[:-1], _ACTIVATIONS[spec.activation], x)
    return np.dot(a, params.weights[-1]) + params.biases[-1]


def _softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(params, spec, batch):
    """Class-probability matrix for a batch; rows sum to 1."""
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    _check_consistent(params, spec)
    if batch.shape[1] != spec.input_dim:
        raise DataError(f"batch has {batch.shape[1]} columns, spec wants {spec.input_dim}")
    return _softmax(_logits(params, spec, batch))


def predict(params, spec, batch):
    """Argmax class labels for a batch."""
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    _check_consistent(params, spec)
    if batch.shape[1] != spec.input_dim:
        raise DataError(f"batch has {batch.shape[1]} columns, spec wants {spec.input_dim}")
    return _logits(params, spec, batch).argmax(axis=1)


def loss_and_grad(params, spec, x, labels):
    """Mean cross-entropy and its analytic gradients for one batch.

    Reference implementation used by the finite-difference tests; the
    training kernels follow the same update algebra.
    """
    _check_consistent(params, spec)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.int64)
    n = x.shape[0]
    act = _ACTIVATIONS[spec.activation]
    acts = [x]
    a = x
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        z = np.dot(a, w) + b
        a = np.maximum(z, 0.0) if act == _kernels.RELU else np.tanh(z)
        acts.append(a)
    probs = _softmax(np.dot(a, params.weights[-1]) + params.biases[-1])
    rows = np.arange(n)
    loss = float(-np.log(probs[rows, labels]).sum() / n)
    delta = probs
    delta[rows, labels] -= 1.0
    delta /= n
    grad_w = [None] * spec.n_layers
    grad_b = [None] * spec.n_layers
    for l in range(spec.n_layers - 1, -1, -1):
        grad_w[l] = np.dot(acts[l].T, delta)
        grad_b[l] = delta.sum(axis=0)
        if l > 0:
            back = np.dot(delta, params.weights[l].T)
            al = acts[l]
            if act == _kernels.RELU:
                back[al <= 0.0] = 0.0
            else:
                back *= 1.0 - al * al
            delta = back
    return loss, grad_w, grad_b


def train(params, spec, data, cfg):
    """Adam minibatch training; returns new params, inputs untouched.

    Shuffle order comes from cfg.seed alone, one permutation per epoch.
    Raises TrainingDiverged when the loss leaves the finite range.
    """
    _check_consistent(params, spec)
    if data.n_dims != spec.input_dim:
        raise DataError(f"data has {data.n_dims} dims, spec wants {spec.input_dim}")
    if data.labels.max() >= spec.n_classes:
        raise DataError("label outside the network's class range")
    if cfg.epochs == 0:
        return NetworkParams(params.weights, params.biases)
    root = Stream(cfg.seed)
    perms = np.stack([root.spawn("shuffle", e).permutation(data.n_samples)
                      for e in range(cfg.epochs)])
    ws, bs, failure = _kernels.adam_epochs(
        list(params.weights), list(params.biases), data.features, data.labels,
        perms, cfg.batch_size, cfg.learning_rate, cfg.adam_beta1,
        cfg.adam_beta2, cfg.adam_epsilon, _ACTIVATIONS[spec.activation])
    if failure is not None:
        raise TrainingDiverged(*failure)
    return NetworkParams(tuple(ws), tuple(bs))


def split_at_penultimate(params, spec):
    """Cut before the final linear layer; single-layer nets get an identity extractor."""
    _check_consistent(params, spec)
    return SplitNetwork(
        extractor_weights=params.weights[:-1],
        extractor_biases=params.biases[:-1],
        head_weight=params.weights[-1],
        head_bias=params.biases[-1],
        activation=spec.activation,
    )


def feature_matrix(split_net, x):
    """Extractor outputs for raw input rows, order preserved."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    expected = (split_net.extractor_weights[0].shape[0]
                if split_net.extractor_weights else split_net.feature_dim)
    if x.shape[1] != expected:
        raise DataError("data dims do not match the extractor input")
    return _hidden(split_net.extractor_weights, split_net.extractor_biases,
                   _ACTIVATIONS[split_net.activation], x)


def extract_features(split_net, data):
    """Run the extractor over a dataset and group outputs by true class."""
    feats = feature_matrix(split_net, data.features)
    mats = [feats[data.labels == k] for k in range(data.n_classes)]
    return FeatureSet(tuple(mats), split_net.feature_dim, tuple(range(data.n_classes)))


def retrain_head(split_net, real, pseudo, cfg):
    """Train a fresh head on real plus pseudo features; extractor unchanged.

    The head is re-initialized from cfg.seed (not warm-started), then trained
    on the class-major union with real rows before pseudo rows per class.
    """
    if real.feature_dim != split_net.feature_dim:
        raise DataError("real features do not match the head input dim")
    if pseudo is not None and pseudo.feature_dim != split_net.feature_dim:
        raise DataError("pseudo features do not match the head input dim")
    parts = []
    labels = []
    for k, mat in zip(real.class_ids, real.matrices):
        chunk = [mat]
        if pseudo is not None and k in pseudo.class_ids:
            chunk.append(pseudo.matrices[pseudo.class_ids.index(k)])
        stacked = np.vstack(chunk)
        parts.append(stacked)
        labels.append(np.full(stacked.shape[0], k, dtype=np.int64))
    if not parts:
        raise DataError("empty training union for head retraining")
    x = np.vstack(parts)
    y = np.concatenate(labels)
    if x.shape[0] == 0:
        raise DataError("empty training union for head retraining")
    head_spec = NetworkSpec((split_net.feature_dim, split_net.n_classes),
                            split_net.activation)
    head_params = init(head_spec, derive_seed(cfg.seed, "head-init"))
    trained = train(head_params, head_spec,
                    Dataset(x, y, split_net.n_classes), cfg)
    return SplitNetwork(
        extractor_weights=split_net.extractor_weights,
        extractor_biases=split_net.extractor_biases,
        head_weight=trained.weights[0],
        head_bias=trained.biases[0],
        activation=split_net.activation,
    )


def reassemble(split_net):
    """Recompose extractor and head into one network."""
    weights = split_net.extractor_weights + (split_net.head_weight,)
    biases = split_net.extractor_biases + (split_net.head_bias,)
    widths = [w.shape[0] for w in weights] + [split_net.n_classes]
    return NetworkParams(weights, biases), NetworkSpec(tuple(widths), split_net.activation)


def save_model(params, spec, path):
    """Write params and spec as JSON, losslessly (floats as repr)."""
    doc = {
        "layer_widths": list(spec.layer_widths),
        "activation": spec.activation,
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_model(path):
    """Read a model written by save_model."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid model JSON: {exc}") from None
    try:
        spec = NetworkSpec(tuple(doc["layer_widths"]), doc["activation"])
        params = NetworkParams(tuple(np.array(w) for w in doc["weights"]),
                               tuple(np.array(b) for b in doc["biases"]))
    except (KeyError, TypeError) as exc:
        raise DataError(f"{path}: malformed model document: {exc}") from None
    _check_consistent(params, spec)
    return params, spec

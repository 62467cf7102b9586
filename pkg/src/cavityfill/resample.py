"""The compared resampling strategies, all operating on per-class features.

Baseline passes features through; undersampling and oversampling rebalance
by dropping or repeating real rows; SMOTE interpolates toward k-nearest
neighbors; perturbation adds per-class diagonal Gaussian noise to resampled
rows; cavity filling samples from a Gaussian fitted to each deficient class,
with a full-covariance and a diagonal variant.

Per-class randomness always comes from substreams spawned off the caller's
stream by class id, so concurrent per-class generation stays reproducible.
"""

from dataclasses import dataclass

import numpy as np

from . import gaussian
from ._kernels import knn_indices
from .errors import DataError
from .net import FeatureSet

_CLI_TO_KIND = {
    "baseline": "baseline",
    "under": "undersample",
    "over": "oversample",
    "smote": "smote",
    "perturb": "perturb",
    "cavity": "cavity_full",
    "cavity-diag": "cavity_diagonal",
}
_KIND_TO_CLI = {v: k for k, v in _CLI_TO_KIND.items()}

# report column labels; the first six match the established table order
LABELS = {
    "baseline": "Baseline",
    "undersample": "Under",
    "oversample": "Over",
    "smote": "SMOTE",
    "perturb": "Perturbed",
    "cavity_full": "Cavity Filling",
    "cavity_diagonal": "Cavity Filling (Diag.)",
}

STRATEGY_CLI_NAMES = tuple(_CLI_TO_KIND)


@dataclass(frozen=True)
class Strategy:
    """One of the compared methods; k applies to SMOTE only."""

    kind: str
    k: int = 5

    def __post_init__(self):
        if self.kind not in LABELS:
            raise DataError(f"unknown strategy kind {self.kind!r}")
        if self.k < 1:
            raise DataError("smote k must be >= 1")

    @property
    def cli_name(self):
        return _KIND_TO_CLI[self.kind]

    @property
    def label(self):
        return LABELS[self.kind]


def parse_strategy(name, k=5):
    """Strategy from its command-line name (baseline, under, ..., cavity-diag)."""
    if name not in _CLI_TO_KIND:
        raise DataError(f"unknown strategy {name!r}, expected one of {', '.join(_CLI_TO_KIND)}")
    return Strategy(_CLI_TO_KIND[name], k)


@dataclass(frozen=True)
class BalancePlan:
    """Per-class generation targets: bring every class up to the max count."""

    targets: tuple
    pseudo_counts: tuple


def plan_balance(counts):
    """Plan pseudo counts of target - current with target = max class count."""
    counts = [int(c) for c in counts]
    if not counts:
        raise DataError("no classes to balance")
    if any(c < 1 for c in counts):
        empty = counts.index(0)
        raise DataError(f"class {empty} has no samples")
    target = max(counts)
    return BalancePlan(
        targets=tuple(target for _ in counts),
        pseudo_counts=tuple(target - c for c in counts),
    )


def _require_nonempty(features):
    counts = features.counts()
    if np.any(counts == 0):
        raise DataError(f"class {int(np.argmin(counts))} has no samples")
    return counts


def undersample(features, rng):
    """Cut every class to the minimum class count, keeping row order."""
    counts = _require_nonempty(features)
    floor = int(counts.min())
    mats = []
    for k, mat in zip(features.class_ids, features.matrices):
        picked = rng.spawn("class", k).subset(mat.shape[0], floor)
        mats.append(mat[picked])
    return FeatureSet(tuple(mats), features.feature_dim, features.class_ids)


def oversample(features, rng):
    """Raise every class to the maximum count by repeating rows uniformly."""
    counts = _require_nonempty(features)
    target = int(counts.max())
    mats = []
    for k, mat in zip(features.class_ids, features.matrices):
        extra = target - mat.shape[0]
        repeats = rng.spawn("class", k).integers(mat.shape[0], extra)
        mats.append(np.vstack([mat, mat[repeats]]))
    return FeatureSet(tuple(mats), features.feature_dim, features.class_ids)


def smote(features_of_class, k, n_pseudo, rng):
    """Interpolate n_pseudo points between class rows and their k-NN.

    Each point is x + lambda * (x_nn - x) with lambda uniform on [0, 1),
    x a uniform class row and x_nn a uniform choice among its k nearest
    neighbors (k clamped to class size - 1, distance ties to lower index).
    """
    x = np.ascontiguousarray(features_of_class, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("smote needs at least 2 class points")
    if k < 1:
        raise DataError("smote k must be >= 1")
    if n_pseudo == 0:
        return np.empty((0, x.shape[1]))
    k_eff = min(k, x.shape[0] - 1)
    neighbors = knn_indices(x, k_eff)
    base = rng.integers(x.shape[0], n_pseudo)
    pick = rng.integers(k_eff, n_pseudo)
    lam = rng.uniforms(n_pseudo)
    xb = x[base]
    xn = x[neighbors[base, pick]]
    return xb + lam[:, None] * (xn - xb)


def perturb(features_of_class, n_pseudo, rng):
    """Resample class rows and add zero-mean diagonal Gaussian noise.

    Noise variance per dimension is the class's MLE variance.
    """
    x = np.ascontiguousarray(features_of_class, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("perturb needs at least 2 class points")
    if n_pseudo == 0:
        return np.empty((0, x.shape[1]))
    model = gaussian.fit_diagonal(x)
    rows = rng.integers(x.shape[0], n_pseudo)
    noise = rng.normals(n_pseudo * x.shape[1]).reshape(n_pseudo, x.shape[1])
    return x[rows] + noise * np.sqrt(model.variances)


def cavity(features, plan, variant, rng):
    """Fit a Gaussian per deficient class and sample its planned count.

    variant selects the full-covariance or the diagonal fit. Classes with a
    zero pseudo count contribute empty matrices.
    """
    if variant not in ("full", "diagonal"):
        raise DataError(f"unknown cavity variant {variant!r}")
    mats = []
    for k, mat, want in zip(features.class_ids, features.matrices, plan.pseudo_counts):
        if want == 0:
            mats.append(np.empty((0, features.feature_dim)))
            continue
        sub = rng.spawn("class", k)
        if variant == "full":
            model = gaussian.fit_full(mat)
            mats.append(gaussian.sample_full(model, want, sub))
        else:
            model = gaussian.fit_diagonal(mat)
            mats.append(gaussian.sample_diagonal(model, want, sub))
    return FeatureSet(tuple(mats), features.feature_dim, features.class_ids)


def generate(strategy, features, rng):
    """Produce (real, pseudo) parts of the head's training set.

    Baseline, undersample, and oversample return adjusted real features and
    an empty pseudo set; the generative strategies keep the real features
    verbatim and add pseudo rows that balance every class to the max count.
    Per-class substreams derive from rng's seed, so the caller should pass
    a stream dedicated to this call.
    """
    counts = _require_nonempty(features)
    empty = FeatureSet(tuple(np.empty((0, features.feature_dim)) for _ in counts),
                       features.feature_dim, features.class_ids)
    if strategy.kind == "baseline":
        return features, empty
    if strategy.kind == "undersample":
        return undersample(features, rng), empty
    if strategy.kind == "oversample":
        return oversample(features, rng), empty
    plan = plan_balance(counts)
    if strategy.kind in ("cavity_full", "cavity_diagonal"):
        variant = "full" if strategy.kind == "cavity_full" else "diagonal"
        return features, cavity(features, plan, variant, rng)
    mats = []
    for k, mat, want in zip(features.class_ids, features.matrices, plan.pseudo_counts):
        if want == 0:
            mats.append(np.empty((0, features.feature_dim)))
        elif strategy.kind == "smote":
            mats.append(smote(mat, strategy.k, want, rng.spawn("class", k)))
        else:
            mats.append(perturb(mat, want, rng.spawn("class", k)))
    return features, FeatureSet(tuple(mats), features.feature_dim, features.class_ids)


def apply(strategy, features, rng):
    """The head's full training set: real and pseudo parts joined per class."""
    real, pseudo = generate(strategy, features, rng)
    mats = tuple(np.vstack([r, p]) for r, p in zip(real.matrices, pseudo.matrices))
    return FeatureSet(mats, features.feature_dim, features.class_ids)

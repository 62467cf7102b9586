"""Labeled datasets: loading, synthesis, decimation, and stratified splitting."""

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .rng import Stream, derive_seed


@dataclass(frozen=True)
class Dataset:
    """Immutable labeled sample matrix.

    features: (n_samples, n_dims) float64; labels: (n_samples,) int64 in
    [0, n_classes). Classes may be empty (a label value that never occurs).
    """

    features: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        labs = np.ascontiguousarray(self.labels, dtype=np.int64)
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise DataError("features must be a non-empty 2-d matrix")
        if labs.shape != (feats.shape[0],):
            raise DataError("labels length must match feature rows")
        if not np.all(np.isfinite(feats)):
            raise DataError("features contain non-finite values")
        if self.n_classes < 1:
            raise DataError("n_classes must be positive")
        if labs.min() < 0 or labs.max() >= self.n_classes:
            raise DataError("labels out of range [0, n_classes)")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_dims(self):
        return self.features.shape[1]


@dataclass(frozen=True)
class ImbalanceSpec:
    """Which classes to decimate and by how much."""

    minor_class_ids: tuple
    reduction_factor: int

    def __post_init__(self):
        ids = tuple(sorted(set(int(i) for i in self.minor_class_ids)))
        if len(ids) == 0:
            raise DataError("minor_class_ids must be non-empty")
        if self.reduction_factor < 1:
            raise DataError("reduction_factor must be >= 1")
        object.__setattr__(self, "minor_class_ids", ids)


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for the synthetic Gaussian-cluster generator."""

    n_classes: int
    samples_per_class: int
    n_dims: int
    cluster_spread: float
    seed: int

    def __post_init__(self):
        if self.n_classes < 1 or self.samples_per_class < 1 or self.n_dims < 1:
            raise DataError("n_classes, samples_per_class, n_dims must be positive")
        if not self.cluster_spread > 0:
            raise DataError("cluster_spread must be positive")


def load_csv(path):
    """Read a dataset from CSV: header f0,...,f{d-1},label, one sample per line.

    A trailing `origin` column (as written by augmented outputs) is accepted
    and ignored. Errors carry 1-based line numbers.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataError(f"{path}: empty file")
    header = [c.strip() for c in lines[0].split(",")]
    has_origin = bool(header) and header[-1] == "origin"
    if has_origin:
        header = header[:-1]
    if len(header) < 2 or header[-1] != "label":
        raise DataError(f"{path}: line 1: header must be f0,...,f{{d-1}},label")
    d = len(header) - 1
    if header[:-1] != [f"f{i}" for i in range(d)]:
        raise DataError(f"{path}: line 1: feature columns must be f0..f{d-1}")
    n_cols = d + 2 if has_origin else d + 1
    rows = []
    labels = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != n_cols:
            raise DataError(f"{path}: line {lineno}: expected {n_cols} columns, got {len(cells)}")
        if has_origin:
            cells = cells[:-1]
        try:
            rows.append([float(c) for c in cells[:-1]])
        except ValueError:
            raise DataError(f"{path}: line {lineno}: non-numeric feature") from None
        lab = cells[-1].strip()
        try:
            lab_val = int(lab)
        except ValueError:
            raise DataError(f"{path}: line {lineno}: non-integer label {lab!r}") from None
        if lab_val < 0:
            raise DataError(f"{path}: line {lineno}: negative label")
        labels.append(lab_val)
    if not rows:
        raise DataError(f"{path}: empty dataset")
    feats = np.array(rows, dtype=np.float64)
    labs = np.array(labels, dtype=np.int64)
    if not np.all(np.isfinite(feats)):
        bad = int(np.argwhere(~np.isfinite(feats).all(axis=1))[0, 0])
        raise DataError(f"{path}: line {bad + 2}: non-finite feature")
    return Dataset(feats, labs, int(labs.max()) + 1)


def save_csv(data, path, origins=None):
    """Write a dataset in the CSV format load_csv reads, losslessly.

    origins, when given, adds the per-row `origin` column (real or pseudo).
    """
    d = data.n_dims
    header = ",".join([f"f{i}" for i in range(d)] + ["label"])
    if origins is not None:
        header += ",origin"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for i in range(data.n_samples):
            cells = [repr(float(v)) for v in data.features[i]]
            cells.append(str(int(data.labels[i])))
            if origins is not None:
                cells.append(origins[i])
            fh.write(",".join(cells) + "\n")


def _kronecker_means(n_classes, n_dims, seed):
    # means on a d-dimensional Kronecker (R-sequence) lattice: well spread,
    # deterministic, never coincident
    phi = 2.0
    for _ in range(64):
        phi = (1.0 + phi) ** (1.0 / (n_dims + 1))
    alpha = phi ** -np.arange(1.0, n_dims + 1.0)
    u0 = Stream(derive_seed(seed, "means")).uniforms(n_dims)
    return np.mod(u0 + np.outer(np.arange(1, n_classes + 1), alpha), 1.0)


def make_synthetic(spec):
    """Isotropic Gaussian clusters, one per class, deterministic from spec.seed."""
    means = _kronecker_means(spec.n_classes, spec.n_dims, spec.seed)
    root = Stream(spec.seed)
    blocks = []
    for k in range(spec.n_classes):
        z = root.spawn("class", k).normals(spec.samples_per_class * spec.n_dims)
        blocks.append(means[k] + spec.cluster_spread * z.reshape(spec.samples_per_class, spec.n_dims))
    feats = np.vstack(blocks)
    labs = np.repeat(np.arange(spec.n_classes, dtype=np.int64), spec.samples_per_class)
    return Dataset(feats, labs, spec.n_classes)


def class_counts(data):
    """Per-class sample counts, length n_classes."""
    return np.bincount(data.labels, minlength=data.n_classes).astype(np.int64)


def synthesize_imbalanced(data, spec, rng):
    """Decimate the minor classes by the reduction factor.

    Each minor class keeps floor(count / factor) rows, chosen uniformly
    without replacement; majors are untouched; relative row order survives.
    """
    counts = class_counts(data)
    keep = np.ones(data.n_samples, dtype=bool)
    for k in spec.minor_class_ids:
        if k >= data.n_classes:
            raise DataError(f"minor class {k} out of range for {data.n_classes} classes")
        count = int(counts[k])
        if count < spec.reduction_factor:
            raise DataError(
                f"class {k} has {count} samples, fewer than reduction factor {spec.reduction_factor}")
        n_keep = count // spec.reduction_factor
        rows = np.flatnonzero(data.labels == k)
        survivors = rows[rng.spawn("decimate", k).subset(count, n_keep)]
        keep[rows] = False
        keep[survivors] = True
    return Dataset(data.features[keep], data.labels[keep], data.n_classes)


def split(data, test_fraction, rng):
    """Stratified train/test split.

    Test size per class is floor(count * fraction) but at least 1; every
    class therefore needs >= 2 samples. Row order within each part follows
    the input.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must be in (0, 1)")
    counts = class_counts(data)
    in_test = np.zeros(data.n_samples, dtype=bool)
    for k in range(data.n_classes):
        count = int(counts[k])
        if count < 2:
            raise DataError(f"class {k} has {count} samples, too few to stratify")
        n_test = max(1, int(count * test_fraction))
        rows = np.flatnonzero(data.labels == k)
        in_test[rows[rng.spawn("split", k).subset(count, n_test)]] = True
    train = Dataset(data.features[~in_test], data.labels[~in_test], data.n_classes)
    test = Dataset(data.features[in_test], data.labels[in_test], data.n_classes)
    return train, test

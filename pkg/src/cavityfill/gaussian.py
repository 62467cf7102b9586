"""Multivariate Gaussian models fitted to per-class features.

The full-covariance fit parameterizes a class's feature cloud including
cross-dimension structure; the diagonal fit is the independent-variables
comparison variant. Sampling is deterministic per stream, and fitted
covariances carry an explicit diagonal regularizer so the Cholesky factor
exists even when a class has fewer samples than feature dimensions.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericError


@dataclass(frozen=True)
class GaussianModel:
    """Mean, regularized covariance, its Cholesky factor, and fit metadata."""

    mean: np.ndarray
    covariance: np.ndarray
    cholesky: np.ndarray
    epsilon: float
    n_fit: int

    def __post_init__(self):
        if not self.epsilon > 0:
            raise NumericError("epsilon must be positive")
        if np.abs(self.covariance - self.covariance.T).max() > 1e-12:
            raise NumericError("covariance is not symmetric")
        rebuilt = np.dot(self.cholesky, self.cholesky.T)
        scale = max(float(np.linalg.norm(self.covariance)), 1e-300)
        if np.linalg.norm(rebuilt - self.covariance) / scale > 1e-8:
            raise NumericError("cholesky does not reproduce the covariance")

    @property
    def dim(self):
        return self.mean.shape[0]


@dataclass(frozen=True)
class DiagonalModel:
    """Per-dimension mean and MLE variance."""

    mean: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        if np.any(self.variances < 0):
            raise NumericError("variances must be non-negative")

    @property
    def dim(self):
        return self.mean.shape[0]


def _validated(features):
    x = np.ascontiguousarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise DataError("features must be a 2-d matrix")
    if x.shape[0] < 2:
        raise DataError(f"need at least 2 samples to fit, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise DataError("features contain non-finite values")
    return x


def fit_full(features):
    """MLE mean and covariance plus diagonal jitter, Cholesky-factored.

    The stored covariance includes the jitter: epsilon starts at
    max(1e-6 * mean diagonal, 1e-10) and escalates tenfold up to six times
    if the factorization fails, after which fitting is an error.
    """
    x = _validated(features)
    n, d = x.shape
    mean = x.mean(axis=0)
    centered = x - mean
    raw = np.dot(centered.T, centered) / n
    cov_mle = 0.5 * (raw + raw.T)
    epsilon = max(1e-6 * float(np.trace(cov_mle)) / d, 1e-10)
    for _ in range(7):
        cov = cov_mle + epsilon * np.eye(d)
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            epsilon *= 10.0
            continue
        return GaussianModel(mean, cov, chol, epsilon, n)
    raise NumericError(
        f"covariance not positive definite after jitter escalation to {epsilon / 10.0:g}")


def fit_diagonal(features):
    """Per-dimension mean and MLE variance, no regularization."""
    x = _validated(features)
    mean = x.mean(axis=0)
    variances = ((x - mean) ** 2).mean(axis=0)
    return DiagonalModel(mean, variances)


def sample_full(model, n, rng):
    """n draws: mean + cholesky @ z with z standard normal from rng."""
    if n < 0:
        raise DataError("sample count must be >= 0")
    d = model.dim
    if n == 0:
        return np.empty((0, d))
    z = rng.normals(n * d).reshape(n, d)
    return model.mean + np.dot(z, model.cholesky.T)


def sample_diagonal(model, n, rng):
    """n draws with independent per-dimension scaling."""
    if n < 0:
        raise DataError("sample count must be >= 0")
    d = model.dim
    if n == 0:
        return np.empty((0, d))
    z = rng.normals(n * d).reshape(n, d)
    return model.mean + z * np.sqrt(model.variances)


def save_model(model, path):
    """Write a fitted model as plain text, lossless at 17 significant digits."""
    def fmt(values):
        return " ".join(f"{float(v):.17g}" for v in np.atleast_1d(values))

    lines = []
    if isinstance(model, GaussianModel):
        lines.append("cavityfill-gaussian full")
        lines.append(f"d {model.dim}")
        lines.append(f"n_fit {model.n_fit}")
        lines.append(f"epsilon {model.epsilon:.17g}")
        lines.append("mean " + fmt(model.mean))
        for row in model.covariance:
            lines.append("cov " + fmt(row))
    elif isinstance(model, DiagonalModel):
        lines.append("cavityfill-gaussian diagonal")
        lines.append(f"d {model.dim}")
        lines.append("mean " + fmt(model.mean))
        lines.append("var " + fmt(model.variances))
    else:
        raise DataError(f"not a Gaussian model: {type(model).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path):
    """Read a model written by save_model; the Cholesky factor is recomputed."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh.read().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("cavityfill-gaussian "):
        raise DataError(f"{path}: not a cavityfill Gaussian model file")
    kind = lines[0].split()[1]
    fields = {}
    rows = []
    for ln in lines[1:]:
        key, _, rest = ln.partition(" ")
        if key == "cov":
            rows.append([float(v) for v in rest.split()])
        else:
            fields[key] = rest
    try:
        d = int(fields["d"])
        mean = np.array([float(v) for v in fields["mean"].split()])
        if kind == "full":
            cov = np.array(rows)
            if cov.shape != (d, d) or mean.shape != (d,):
                raise DataError(f"{path}: dimension mismatch")
            return GaussianModel(mean, cov, np.linalg.cholesky(cov),
                                 float(fields["epsilon"]), int(fields["n_fit"]))
        if kind == "diagonal":
            variances = np.array([float(v) for v in fields["var"].split()])
            if variances.shape != (d,) or mean.shape != (d,):
                raise DataError(f"{path}: dimension mismatch")
            return DiagonalModel(mean, variances)
    except np.linalg.LinAlgError:
        # must precede ValueError: LinAlgError subclasses it
        raise NumericError(f"{path}: stored covariance is not positive definite") from None
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: malformed model file: {exc}") from None
    raise DataError(f"{path}: unknown model kind {kind!r}")

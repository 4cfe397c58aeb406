"""Exact Gaussian-process regression with Cholesky factorisation.

Fitting conditions a GP prior (kernel + mean function) on training data.
Nonzero prior means are handled by regressing on the residuals y - m(X) and
adding m(X*) back at prediction time, which is algebraically identical to a
GP with that prior mean.  A fitted model is immutable and safe to share
across threads for prediction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .errors import NumericalError
from .kernels import Kernel, build_gram, _as_matrix
from .means import MeanFunction, ZeroMean

# Escalating Cholesky stabilisation, relative to mean(diag K).
JITTER_START = 1e-10
JITTER_MAX = 1e-4
LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class Dataset:
    """Training data: inputs (n, d), outputs (n,), optional timestamps (s)."""

    inputs: np.ndarray
    outputs: np.ndarray
    timestamps: np.ndarray | None = None

    def __post_init__(self):
        X = _as_matrix(self.inputs)
        y = np.asarray(self.outputs, dtype=float).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"row counts differ: inputs {X.shape[0]}, outputs {y.shape[0]}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite entries")
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "outputs", y)
        if self.timestamps is not None:
            t = np.asarray(self.timestamps, dtype=float).reshape(-1)
            if t.shape[0] != y.shape[0]:
                raise ValueError("timestamps length does not match outputs")
            object.__setattr__(self, "timestamps", t)

    def __len__(self) -> int:
        return self.outputs.shape[0]


@dataclass(frozen=True)
class TrainedGp:
    """Fitted regression state.

    ``chol`` is the lower-triangular factor of K(X, X) + noise_var I +
    jitter I, ``alpha`` solves that matrix against the mean-subtracted
    outputs, and ``lml`` is the log marginal likelihood at the fitted
    hyperparameters.
    """

    kernel: Kernel
    mean: MeanFunction
    noise_var: float
    X: np.ndarray
    y: np.ndarray
    residual: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float
    lml: float


class Prediction(NamedTuple):
    mean: np.ndarray
    var: np.ndarray
    cov: np.ndarray | None


def chol_with_jitter(A: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of A with an escalating diagonal jitter.

    The jitter starts at 1e-10 mean(diag A) and grows tenfold up to
    1e-4 mean(diag A); failure beyond that signals genuinely
    ill-conditioned hyperparameters rather than roundoff.
    """
    base = float(np.mean(np.diag(A)))
    if base <= 0.0 or not np.isfinite(base):
        base = 1.0
    jitter = JITTER_START * base
    eye = np.eye(A.shape[0])
    while jitter <= JITTER_MAX * base * (1.0 + 1e-12):
        try:
            L = cholesky(A + jitter * eye, lower=True)
            return L, jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise NumericalError(
        f"Cholesky factorisation failed with jitter up to {JITTER_MAX:g} * mean diagonal"
    )


def fit_exact(
    data: Dataset,
    kernel: Kernel,
    mean: MeanFunction | None = None,
    noise_var: float = 0.0,
) -> TrainedGp:
    """Condition a GP prior on the dataset.

    Raises ``ValueError`` for an empty dataset or negative noise variance
    and ``NumericalError`` if factorisation fails after the jitter ladder.
    """
    if len(data) < 1:
        raise ValueError("cannot fit a GP to an empty dataset")
    if noise_var < 0.0 or not np.isfinite(noise_var):
        raise ValueError(f"noise variance must be finite and >= 0, got {noise_var!r}")
    mean = mean if mean is not None else ZeroMean()

    X, y = data.inputs, data.outputs
    K = build_gram(kernel, X)
    A = K + noise_var * np.eye(len(data))
    L, jitter = chol_with_jitter(A)
    residual = y - mean(X)
    alpha = cho_solve((L, True), residual)
    lml = _log_marginal(residual, alpha, L)
    return TrainedGp(
        kernel=kernel,
        mean=mean,
        noise_var=float(noise_var),
        X=X,
        y=y,
        residual=residual,
        chol=L,
        alpha=alpha,
        jitter=jitter,
        lml=lml,
    )


def _log_marginal(residual: np.ndarray, alpha: np.ndarray, L: np.ndarray) -> float:
    n = residual.shape[0]
    return float(
        -0.5 * residual @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * LOG_2PI
    )


def log_marginal_likelihood(model: TrainedGp) -> float:
    """Log marginal likelihood of the training outputs under the prior.

    Recomputed from the stored triangular factor; identical to the value
    cached at fit time.
    """
    return _log_marginal(model.residual, model.alpha, model.chol)


def predict(model: TrainedGp, X_star, full_cov: bool = False) -> Prediction:
    """Posterior mean and variance (optionally full covariance) at X_star.

    Variances are clamped at zero: subtraction cancellation may leave
    values a hair below zero, which is roundoff rather than signal.
    """
    X_star = _as_matrix(X_star)
    if X_star.shape[1] != model.X.shape[1]:
        raise ValueError(
            f"prediction inputs have dimension {X_star.shape[1]}, trained on {model.X.shape[1]}"
        )
    Ks = build_gram(model.kernel, X_star, model.X)
    mean = model.mean(X_star) + Ks @ model.alpha
    V = solve_triangular(model.chol, Ks.T, lower=True)
    var = model.kernel.diag(X_star) - np.sum(V * V, axis=0)
    np.clip(var, 0.0, None, out=var)
    cov = None
    if full_cov:
        cov = build_gram(model.kernel, X_star) - V.T @ V
        cov = 0.5 * (cov + cov.T)
    return Prediction(mean=mean, var=var, cov=cov)

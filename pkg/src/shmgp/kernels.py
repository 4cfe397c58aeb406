"""Stationary covariance functions.

Each kernel is a small frozen dataclass carrying its hyperparameters and
knowing how to evaluate its own Gram matrix.  The module-level helpers
:func:`kernel_eval` and :func:`build_gram` are the entry points used by the
regression code; they normalise input shapes and enforce dimension checks.

Gram matrices are computed from explicit pairwise differences so that the
square case is exactly symmetric and results do not depend on BLAS
parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _as_matrix(X) -> np.ndarray:
    """Coerce to an (n, d) float matrix; 1-D input is read as n points in 1-D."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        return X.reshape(1, 1)
    if X.ndim == 1:
        return X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"expected at most 2-D input array, got shape {X.shape}")
    return X


def _require_positive(value: float, name: str) -> None:
    if not np.all(np.isfinite(value)) or np.any(np.asarray(value) <= 0.0):
        raise ValueError(f"{name} must be strictly positive and finite, got {value!r}")


class Kernel:
    """Interface shared by all covariance functions."""

    def gram(self, X: np.ndarray, X2: np.ndarray) -> np.ndarray:
        """Covariance matrix between the rows of X (n, d) and X2 (m, d)."""
        raise NotImplementedError

    def diag(self, X: np.ndarray) -> np.ndarray:
        """k(x, x) for each row of X."""
        raise NotImplementedError

    def check_input_dim(self, d: int) -> None:
        """Raise if the kernel cannot act on d-dimensional inputs."""


@dataclass(frozen=True)
class SquaredExponential(Kernel):
    """k(x, x') = signal_scale^2 exp(-1/2 sum_k ((x_k - x'_k)/l_k)^2).

    ``lengthscales`` may be a scalar (isotropic) or a length-d vector (one
    lengthscale per input dimension, for regressors with heterogeneous
    scales).
    """

    signal_scale: float = 1.0
    lengthscales: float | np.ndarray = 1.0

    def __post_init__(self):
        object.__setattr__(
            self, "lengthscales", np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        )
        _require_positive(self.signal_scale, "signal_scale")
        _require_positive(self.lengthscales, "lengthscales")

    def check_input_dim(self, d: int) -> None:
        if self.lengthscales.shape[0] not in (1, d):
            raise ValueError(
                f"kernel has {self.lengthscales.shape[0]} lengthscales but inputs have dimension {d}"
            )

    def gram(self, X, X2):
        ell = np.broadcast_to(self.lengthscales, (X.shape[1],))
        sqdist = _scaled_sqdist(X, X2, ell)
        return self.signal_scale**2 * np.exp(-0.5 * sqdist)

    def diag(self, X):
        return np.full(X.shape[0], self.signal_scale**2)


@dataclass(frozen=True)
class Matern12(Kernel):
    """Exponential kernel k(r) = signal_scale^2 exp(-r/lengthscale)."""

    signal_scale: float = 1.0
    lengthscale: float = 1.0

    def __post_init__(self):
        _require_positive(self.signal_scale, "signal_scale")
        _require_positive(self.lengthscale, "lengthscale")

    def gram(self, X, X2):
        r = _pairwise_dist(X, X2)
        return self.signal_scale**2 * np.exp(-r / self.lengthscale)

    def diag(self, X):
        return np.full(X.shape[0], self.signal_scale**2)


@dataclass(frozen=True)
class Matern32(Kernel):
    """k(r) = signal_scale^2 (1 + sqrt(3) r/l) exp(-sqrt(3) r/l)."""

    signal_scale: float = 1.0
    lengthscale: float = 1.0

    def __post_init__(self):
        _require_positive(self.signal_scale, "signal_scale")
        _require_positive(self.lengthscale, "lengthscale")

    def gram(self, X, X2):
        s = np.sqrt(3.0) * _pairwise_dist(X, X2) / self.lengthscale
        return self.signal_scale**2 * (1.0 + s) * np.exp(-s)

    def diag(self, X):
        return np.full(X.shape[0], self.signal_scale**2)


def _scaled_sqdist(X: np.ndarray, X2: np.ndarray, ell: np.ndarray) -> np.ndarray:
    """sum_k ((x_k - x'_k)/ell_k)^2, accumulated one dimension at a time.

    Pairwise differences keep the square case exactly symmetric and the
    result independent of BLAS threading, unlike the dot-product identity.
    """
    sq = np.zeros((X.shape[0], X2.shape[0]))
    for k in range(X.shape[1]):
        dk = np.subtract.outer(X[:, k], X2[:, k])
        dk /= ell[k]
        np.square(dk, out=dk)
        sq += dk
    return sq


def _pairwise_dist(X: np.ndarray, X2: np.ndarray) -> np.ndarray:
    return np.sqrt(_scaled_sqdist(X, X2, np.ones(X.shape[1])))


def kernel_eval(spec: Kernel, x, x_prime) -> float:
    """Evaluate the covariance between two single points.

    Delegates to :func:`build_gram` on 1-row matrices so scalar and matrix
    evaluation share one code path bit for bit.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_prime = np.atleast_1d(np.asarray(x_prime, dtype=float))
    if x.shape != x_prime.shape:
        raise ValueError(f"point dimensions differ: {x.shape} vs {x_prime.shape}")
    return float(build_gram(spec, x.reshape(1, -1), x_prime.reshape(1, -1))[0, 0])


def build_gram(spec: Kernel, X, X_prime=None) -> np.ndarray:
    """Covariance matrix K[i, j] = k(X[i], X_prime[j]).

    With ``X_prime`` omitted, the (symmetric) training Gram matrix is
    returned.  Entries are finite by construction for valid hyperparameters.
    """
    X = _as_matrix(X)
    X2 = X if X_prime is None else _as_matrix(X_prime)
    if X.shape[1] != X2.shape[1]:
        raise ValueError(f"input dimensions differ: {X.shape[1]} vs {X2.shape[1]}")
    spec.check_input_dim(X.shape[1])
    K = spec.gram(X, X2)
    if not np.all(np.isfinite(K)):
        raise ValueError("kernel evaluation produced non-finite entries")
    return K

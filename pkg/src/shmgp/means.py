"""Prior mean functions for GP regression.

A mean function maps an (n, d) input matrix to an n-vector of prior mean
values.  Nonzero means are handled by the fitting routines through residual
subtraction, so every mean here only needs to be evaluable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class MeanFunction:
    """Interface: calling with an (n, d) matrix returns an n-vector."""

    def __call__(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class ZeroMean(MeanFunction):
    """Identically-zero prior mean (the standard uninformed choice)."""

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.zeros(X.shape[0])


@dataclass(frozen=True)
class LinearMean(MeanFunction):
    """Affine prior mean m(x) = intercept + slope . x."""

    intercept: float
    slope: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "slope", np.atleast_1d(np.asarray(self.slope, dtype=float)))

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.slope.shape[0]:
            raise ValueError(
                f"input dimension {X.shape[1]} does not match slope dimension {self.slope.shape[0]}"
            )
        return self.intercept + X @ self.slope


@dataclass(frozen=True)
class ExternalMean(MeanFunction):
    """Named wrapper around an externally supplied mean function.

    ``fn`` receives the full (n, d) input matrix and must return an
    n-vector.  The name identifies the physics model for reporting and
    serialization; ``params`` carries whatever that model needs to be
    reconstructed.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.asarray(self.fn(X), dtype=float)
        if out.shape != (X.shape[0],):
            raise ValueError(f"external mean '{self.name}' returned shape {out.shape}")
        return out

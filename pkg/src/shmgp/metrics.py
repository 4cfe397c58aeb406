"""Prediction scoring.

The headline metric is the normalised mean-squared error in percent,

    nMSE = 100 / (n var(y)) sum_i (y_i - f_i)^2

with var(y) the population variance of the targets, so predicting the
target mean scores exactly 100.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def nmse(y, f) -> float:
    """Normalised mean-squared error (%) of predictions f against targets y.

    Zero for a perfect prediction; invariant under a common additive shift
    of y and f.  Raises for mismatched lengths, fewer than two points, or
    zero-variance targets.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    f = np.asarray(f, dtype=float).reshape(-1)
    if y.shape != f.shape:
        raise ValueError(f"length mismatch: targets {y.shape[0]}, predictions {f.shape[0]}")
    if y.shape[0] < 2:
        raise ValueError("nMSE needs at least two points")
    var = float(np.var(y))  # population variance
    if var <= 0.0:
        raise ValueError("targets have zero variance; nMSE undefined")
    return 100.0 / (y.shape[0] * var) * float(np.sum((y - f) ** 2))


@dataclass
class MetricsReport:
    """Scores and bookkeeping for one experiment run."""

    nmse_percent: float | None = None
    log_marginal_likelihood: float | None = None
    coverage_percent: float | None = None
    wall_ms: float = 0.0
    squared_errors: np.ndarray | None = None
    extras: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = {
            "nmse_percent": self.nmse_percent,
            "log_marginal_likelihood": self.log_marginal_likelihood,
            "coverage_percent": self.coverage_percent,
            "wall_ms": self.wall_ms,
            # denominator convention: population variance of the scored targets
            "nmse_variance_convention": "population",
        }
        out.update(self.extras)
        return out

"""Particle-swarm minimisation over a box.

Used for hyperparameter optimisation of every model family in the toolkit:
the objective is a negative log (marginal) likelihood and the box encodes
physically plausible parameter ranges.  Global-best PSO with inertia and
velocity clamping; non-finite objective values are treated as +inf so
unstable hyperparameter combinations are simply avoided.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np


@dataclass(frozen=True)
class PsoConfig:
    """Swarm settings and per-parameter box bounds.

    ``bounds`` is a sequence of (lower, upper) pairs, one per parameter.
    The same seed always reproduces the same trace.
    """

    bounds: tuple
    particles: int = 30
    iterations: int = 200
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    seed: int = 0

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2 or b.shape[0] < 1:
            raise ValueError("bounds must be a non-empty sequence of (lower, upper) pairs")
        if not np.all(b[:, 0] < b[:, 1]):
            raise ValueError("each lower bound must be strictly below its upper bound")
        if self.particles < 1 or self.iterations < 1:
            raise ValueError("particle and iteration counts must be >= 1")
        object.__setattr__(self, "bounds", tuple(map(tuple, b)))

    @property
    def bounds_array(self) -> np.ndarray:
        return np.asarray(self.bounds, dtype=float)


class PsoResult(NamedTuple):
    best_params: np.ndarray
    best_value: float
    trace: np.ndarray  # global-best objective value after each iteration


def pso_minimize(objective: Callable[[np.ndarray], float], cfg: PsoConfig) -> PsoResult:
    """Minimise ``objective`` over the configured box.

    The trace of global-best values is nonincreasing by construction, every
    evaluated position lies inside the box (positions are clamped after each
    velocity step), and runs are deterministic for a fixed seed.
    """
    rng = np.random.default_rng(cfg.seed)
    bounds = cfg.bounds_array
    lo, hi = bounds[:, 0], bounds[:, 1]
    width = hi - lo
    vmax = 0.5 * width  # keeps particles from thrashing against the box

    pos = lo + width * rng.random((cfg.particles, len(lo)))
    vel = vmax * (2.0 * rng.random((cfg.particles, len(lo))) - 1.0)

    values = np.array([_safe_eval(objective, p) for p in pos])
    pbest_pos = pos.copy()
    pbest_val = values.copy()
    g = int(np.argmin(pbest_val))
    gbest_pos, gbest_val = pbest_pos[g].copy(), float(pbest_val[g])

    trace = np.empty(cfg.iterations)
    for it in range(cfg.iterations):
        r1 = rng.random((cfg.particles, len(lo)))
        r2 = rng.random((cfg.particles, len(lo)))
        vel = (
            cfg.inertia * vel
            + cfg.cognitive * r1 * (pbest_pos - pos)
            + cfg.social * r2 * (gbest_pos - pos)
        )
        np.clip(vel, -vmax, vmax, out=vel)
        pos = np.clip(pos + vel, lo, hi)

        values = np.array([_safe_eval(objective, p) for p in pos])
        improved = values < pbest_val
        pbest_pos[improved] = pos[improved]
        pbest_val[improved] = values[improved]
        g = int(np.argmin(pbest_val))  # particle-index-ordered, deterministic
        if pbest_val[g] < gbest_val:
            gbest_val = float(pbest_val[g])
            gbest_pos = pbest_pos[g].copy()
        trace[it] = gbest_val

    return PsoResult(best_params=gbest_pos, best_value=gbest_val, trace=trace)


def _safe_eval(objective, params) -> float:
    value = objective(np.asarray(params, dtype=float))
    value = float(value)
    return value if np.isfinite(value) else np.inf

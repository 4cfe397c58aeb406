"""PSO-driven hyperparameter selection.

Positive hyperparameters are searched in log10 space against box bounds
given in natural units; bounds default to physically sensible ranges
derived from the data (target variance, input ranges, sampling Nyquist).
The objective is the negative log marginal likelihood of an exact GP fit;
hyperparameter combinations whose factorisation fails are treated as +inf.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from scipy.linalg import cho_solve

from . import gp
from .errors import NumericalError
from .kernels import Kernel, Matern12, Matern32, SquaredExponential, build_gram
from .means import LinearMean, MeanFunction
from .physics import SdofKernel, SdofKernelParams
from .pso import PsoConfig, PsoResult, pso_minimize

FAMILIES = ("squared_exponential", "matern12", "matern32", "sdof")


@dataclass
class TuneResult:
    model: gp.TrainedGp
    params: dict
    pso: PsoResult


def gls_linear_mean(data: gp.Dataset, kernel: Kernel, noise_var: float) -> LinearMean:
    """Affine mean with coefficients profiled by generalised least squares.

    Weighting the regression by the inverse GP covariance discounts
    kernel-correlated deviations, so the recovered line tracks the global
    trend instead of absorbing local structure (ordinary least squares would
    bias the slope whenever the residual process correlates with an input).
    """
    X, y = data.inputs, data.outputs
    K = build_gram(kernel, X) + noise_var * np.eye(len(data))
    L, _ = gp.chol_with_jitter(K)
    A = np.column_stack([np.ones(len(data)), X])
    W = cho_solve((L, True), A)
    theta = np.linalg.solve(A.T @ W, W.T @ y)
    return LinearMean(intercept=float(theta[0]), slope=theta[1:])


def default_bounds(
    family: str, data: gp.Dataset, ard: bool = False, dt: float | None = None
) -> dict:
    """Likely hyperparameter ranges for a family, derived from the data."""
    y_var = max(float(np.var(data.outputs)), 1e-12)
    y_std = np.sqrt(y_var)
    if family == "sdof":
        if dt is None:
            t = data.inputs[:, 0]
            dt = float(np.median(np.diff(np.sort(t)))) if len(data) > 1 else 1.0
        nyquist = np.pi / dt
        return {
            "zeta": (1e-3, 0.5),
            "omega_n": (0.1, nyquist),
            "sigma2": (1e-8 * y_var, 1e4 * y_var),
            "noise_var": (1e-8 * y_var, y_var),
        }
    ranges = data.inputs.max(axis=0) - data.inputs.min(axis=0)
    ranges = np.where(ranges > 0.0, ranges, 1.0)
    bounds = {
        "signal_scale": (1e-2 * y_std, 1e2 * y_std),
        "noise_var": (1e-8 * y_var, y_var),
    }
    if family == "squared_exponential" and ard:
        bounds["lengthscales"] = [(1e-2 * r, 1e1 * r) for r in ranges]
    else:
        r = float(np.max(ranges))
        bounds["lengthscale"] = (1e-2 * r, 1e1 * r)
    return bounds


def _kernel_builder(family: str, d: int, ard: bool):
    """Map a natural-unit parameter vector to a kernel; returns (names, build)."""
    if family == "squared_exponential":
        if ard:
            names = ["signal_scale"] + [f"lengthscale_{k}" for k in range(d)]
            build = lambda v: SquaredExponential(signal_scale=v[0], lengthscales=v[1 : 1 + d])
        else:
            names = ["signal_scale", "lengthscale"]
            build = lambda v: SquaredExponential(signal_scale=v[0], lengthscales=v[1])
    elif family in ("matern12", "matern32"):
        cls = Matern12 if family == "matern12" else Matern32
        names = ["signal_scale", "lengthscale"]
        build = lambda v: cls(signal_scale=v[0], lengthscale=v[1])
    elif family == "sdof":
        names = ["zeta", "omega_n", "sigma2"]
        build = lambda v: SdofKernel(SdofKernelParams(zeta=v[0], omega_n=v[1], sigma2=v[2]))
    else:
        raise ValueError(f"unknown kernel family {family!r}; expected one of {FAMILIES}")
    return names, build


def tune_exact_gp(
    data: gp.Dataset,
    family: str,
    mean: MeanFunction | None = None,
    profile_linear_mean: bool = False,
    ard: bool = False,
    noise_var: float | None = None,
    bounds: dict | None = None,
    dt: float | None = None,
    particles: int = 30,
    iterations: int = 100,
    seed: int = 0,
    inertia: float = 0.72,
    cognitive: float = 1.49,
    social: float = 1.49,
) -> TuneResult:
    """Maximise the marginal likelihood over kernel (and optionally noise)
    hyperparameters.

    ``noise_var`` fixes the observation noise when given; when None it is
    optimised alongside the kernel.  ``bounds`` entries override the
    defaults per parameter name.  With ``profile_linear_mean`` the affine
    prior-mean coefficients are profiled out by GLS at every objective
    evaluation instead of being supplied through ``mean``.
    """
    d = data.inputs.shape[1]
    names, build = _kernel_builder(family, d, ard)
    box = default_bounds(family, data, ard=ard, dt=dt)
    if bounds:
        box.update(bounds)

    pairs = []
    for name in names:
        if name.startswith("lengthscale_"):
            pairs.append(box["lengthscales"][int(name.split("_")[-1])])
        else:
            pairs.append(box[name])
    if noise_var is None:
        names = names + ["noise_var"]
        pairs.append(box["noise_var"])
    pairs = np.asarray(pairs, dtype=float)
    if np.any(pairs <= 0.0):
        raise ValueError("all tuning bounds must be positive (log-space search)")

    cfg = PsoConfig(
        bounds=tuple(map(tuple, np.log10(pairs))),
        particles=particles,
        iterations=iterations,
        inertia=inertia,
        cognitive=cognitive,
        social=social,
        seed=seed,
    )

    def fit_at(v: np.ndarray) -> gp.TrainedGp:
        sigma_n2 = float(v[-1]) if noise_var is None else float(noise_var)
        kernel = build(v)
        mean_fn = gls_linear_mean(data, kernel, sigma_n2) if profile_linear_mean else mean
        return gp.fit_exact(data, kernel, mean=mean_fn, noise_var=sigma_n2)

    def objective(log_v: np.ndarray) -> float:
        try:
            return -fit_at(10.0**log_v).lml
        except (NumericalError, ValueError):
            return np.inf

    result = pso_minimize(objective, cfg)
    best = 10.0**result.best_params
    model = fit_at(best)
    params = {name: float(val) for name, val in zip(names, best)}
    params["noise_var"] = model.noise_var
    if profile_linear_mean:
        params["mean_intercept"] = float(model.mean.intercept)
        params["mean_slope"] = np.asarray(model.mean.slope).tolist()
    return TuneResult(model=model, params=params, pso=result)

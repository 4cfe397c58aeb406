"""Physics-derived priors: oscillator covariance, wave loading, linear means.

The covariance of a single-degree-of-freedom (SDOF) linear oscillator under
Gaussian white-noise forcing has a closed form, which makes an expressive
kernel for responses dominated by one vibration mode.  Morison's equation
(drag + inertia wave loading) serves as a prior mean for loads monitoring.
Kernel spectral densities live here too, shared by the reduced-rank and
state-space modules.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import Kernel, Matern12, Matern32, SquaredExponential
from .means import MeanFunction


@dataclass(frozen=True)
class SdofKernelParams:
    """Parameters of the white-noise-driven SDOF oscillator covariance.

    Mass is fixed at 1: the covariance only ever contains sigma2 / m^2, so
    mass and forcing magnitude are not jointly identifiable and sigma2
    absorbs the mass.  Requires an underdamped oscillator (0 < zeta < 1) so
    the damped natural frequency is real.
    """

    zeta: float
    omega_n: float
    sigma2: float

    def __post_init__(self):
        if not (0.0 < self.zeta < 1.0):
            raise ValueError(f"damping ratio must lie in (0, 1), got {self.zeta!r}")
        if not (np.isfinite(self.omega_n) and self.omega_n > 0.0):
            raise ValueError(f"natural frequency must be positive, got {self.omega_n!r}")
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0.0):
            raise ValueError(f"forcing magnitude sigma2 must be positive, got {self.sigma2!r}")

    @property
    def omega_d(self) -> float:
        """Damped natural frequency."""
        return self.omega_n * np.sqrt(1.0 - self.zeta**2)


def sdof_kernel_eval(params: SdofKernelParams, tau) -> float | np.ndarray:
    """Autocovariance of the SDOF response at time lag ``tau`` (seconds).

    k(tau) = sigma2/(4 zeta w_n^3) exp(-zeta w_n |tau|)
             (cos(w_d tau) + (zeta w_n / w_d) sin(w_d |tau|))

    Even in tau; k(0) = sigma2 / (4 zeta w_n^3).
    """
    tau = np.asarray(tau, dtype=float)
    zwn = params.zeta * params.omega_n
    wd = params.omega_d
    scale = params.sigma2 / (4.0 * zwn * params.omega_n**2)
    at = np.abs(tau)
    value = scale * np.exp(-zwn * at) * (np.cos(wd * tau) + (zwn / wd) * np.sin(wd * at))
    return value if value.ndim else float(value)


@dataclass(frozen=True)
class SdofKernel(Kernel):
    """Oscillator-response covariance as a 1-D (time-input) GP kernel."""

    params: SdofKernelParams

    def check_input_dim(self, d: int) -> None:
        if d != 1:
            raise ValueError(f"SDOF kernel is defined on 1-D time inputs, got dimension {d}")

    def gram(self, X, X2):
        tau = X[:, 0][:, None] - X2[:, 0][None, :]
        return sdof_kernel_eval(self.params, tau)

    def diag(self, X):
        return np.full(X.shape[0], sdof_kernel_eval(self.params, 0.0))


@dataclass(frozen=True)
class MorisonParams:
    """Drag and inertia coefficients of the simplified Morison equation."""

    drag: float
    inertia: float

    def __post_init__(self):
        if not (np.isfinite(self.drag) and np.isfinite(self.inertia)):
            raise ValueError("Morison coefficients must be finite")


def morison_force(params: MorisonParams, velocity, acceleration):
    """Wave force C_d U|U| + C_m dU/dt; odd in U, linear in dU/dt."""
    U = np.asarray(velocity, dtype=float)
    Ud = np.asarray(acceleration, dtype=float)
    out = params.drag * U * np.abs(U) + params.inertia * Ud
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class MorisonMean(MeanFunction):
    """Morison force as a prior mean over regressors whose first two columns
    are the current wave velocity and acceleration."""

    params: MorisonParams

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] < 2:
            raise ValueError("Morison mean needs velocity and acceleration columns")
        return morison_force(self.params, X[:, 0], X[:, 1])


def linear_mean(theta0: float, theta, x) -> float:
    """Affine map theta0 + theta . x for a single input point."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if theta.shape != x.shape:
        raise ValueError(f"coefficient/input dimensions differ: {theta.shape} vs {x.shape}")
    return float(theta0 + theta @ x)


def spectral_density(spec: Kernel, omega) -> float | np.ndarray:
    """Spectral density S(omega) of a stationary 1-D kernel.

    Normalisation follows k(tau) = (1/2pi) int S(w) exp(i w tau) dw, so the
    density integrates to 2 pi k(0).  Supported families: squared
    exponential and Matern-1/2, -3/2; anything else (including the SDOF
    kernel, whose density is never needed) raises ValueError.
    """
    w = np.asarray(omega, dtype=float)
    if isinstance(spec, SquaredExponential):
        ell = spec.lengthscales
        if ell.shape[0] != 1:
            raise ValueError("spectral_density is 1-D; kernel has per-dimension lengthscales")
        ell = float(ell[0])
        out = spec.signal_scale**2 * np.sqrt(2.0 * np.pi) * ell * np.exp(-0.5 * (w * ell) ** 2)
    elif isinstance(spec, (Matern12, Matern32)):
        nu = 0.5 if isinstance(spec, Matern12) else 1.5
        lam = np.sqrt(2.0 * nu) / spec.lengthscale
        # 2 sqrt(pi) Gamma(nu + 1/2) / Gamma(nu): 2 for nu=1/2, 4 for nu=3/2
        const = 2.0 if nu == 0.5 else 4.0
        out = spec.signal_scale**2 * const * lam ** (2.0 * nu) * (lam**2 + w**2) ** -(nu + 0.5)
    else:
        raise ValueError(f"no spectral density available for kernel {type(spec).__name__}")
    return out if out.ndim else float(out)

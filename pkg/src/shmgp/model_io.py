"""Fitted-model persistence and CSV interchange.

Models are saved as a JSON description (kernel family, mean form, layout)
next to an .npz holding the arrays.  All files are written to a temporary
name and renamed into place, so a crash never leaves partial artifacts.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .errors import DataError
from .gp import TrainedGp
from .kernels import Kernel, Matern12, Matern32, SquaredExponential
from .means import LinearMean, MeanFunction, ZeroMean
from .narx import BlackBox, InputAugmentation, NarxConfig, NarxModel, ResidualMean
from .physics import MorisonMean, MorisonParams, SdofKernel, SdofKernelParams
from .reduced_rank import DomainSpec, ReducedRankGp, eigenpairs, spectral_weights

MODEL_JSON = "model.json"
MODEL_NPZ = "model.npz"


def atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + f".tmp-{os.getpid()}")
    tmp.write_text(text)
    os.replace(tmp, path)


def atomic_write_bytes(path: Path, payload: bytes) -> None:
    tmp = path.with_name(path.name + f".tmp-{os.getpid()}")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    rows = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    lines = [",".join(header)]
    lines += [",".join(repr(float(v)) for v in row) for row in rows]
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header plus float matrix from a comma-separated file."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path} is empty")
            rows = list(reader)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    header = [h.strip() for h in header]
    try:
        data = np.array([[float(v) for v in row] for row in rows if row], dtype=float)
    except ValueError as exc:
        raise DataError(f"non-numeric value in {path}: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != len(header):
        raise DataError(f"{path}: column count does not match header")
    return header, data


def kernel_to_dict(kernel: Kernel) -> dict:
    if isinstance(kernel, SquaredExponential):
        return {
            "family": "squared_exponential",
            "signal_scale": float(kernel.signal_scale),
            "lengthscales": np.asarray(kernel.lengthscales).tolist(),
        }
    if isinstance(kernel, (Matern12, Matern32)):
        family = "matern12" if isinstance(kernel, Matern12) else "matern32"
        return {
            "family": family,
            "signal_scale": float(kernel.signal_scale),
            "lengthscale": float(kernel.lengthscale),
        }
    if isinstance(kernel, SdofKernel):
        return {
            "family": "sdof",
            "zeta": float(kernel.params.zeta),
            "omega_n": float(kernel.params.omega_n),
            "sigma2": float(kernel.params.sigma2),
        }
    raise ValueError(f"cannot serialise kernel {type(kernel).__name__}")


def kernel_from_dict(doc: dict) -> Kernel:
    family = doc.get("family")
    if family == "squared_exponential":
        return SquaredExponential(
            signal_scale=doc["signal_scale"], lengthscales=doc["lengthscales"]
        )
    if family in ("matern12", "matern32"):
        cls = Matern12 if family == "matern12" else Matern32
        return cls(signal_scale=doc["signal_scale"], lengthscale=doc["lengthscale"])
    if family == "sdof":
        return SdofKernel(
            SdofKernelParams(zeta=doc["zeta"], omega_n=doc["omega_n"], sigma2=doc["sigma2"])
        )
    raise DataError(f"unknown kernel family {family!r}")


def mean_to_dict(mean: MeanFunction) -> dict:
    if isinstance(mean, ZeroMean):
        return {"form": "zero"}
    if isinstance(mean, LinearMean):
        return {
            "form": "linear",
            "intercept": float(mean.intercept),
            "slope": np.asarray(mean.slope).tolist(),
        }
    if isinstance(mean, MorisonMean):
        return {
            "form": "morison",
            "drag": float(mean.params.drag),
            "inertia": float(mean.params.inertia),
        }
    raise ValueError(f"cannot serialise mean {type(mean).__name__}")


def mean_from_dict(doc: dict) -> MeanFunction:
    form = doc.get("form", "zero")
    if form == "zero":
        return ZeroMean()
    if form == "linear":
        return LinearMean(intercept=doc["intercept"], slope=doc["slope"])
    if form == "morison":
        return MorisonMean(MorisonParams(drag=doc["drag"], inertia=doc["inertia"]))
    raise DataError(f"unknown mean form {form!r}")


def save_exact_gp(directory, model: TrainedGp, input_columns: list[str], target: str) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    doc = {
        "type": "exact_gp",
        "kernel": kernel_to_dict(model.kernel),
        "mean": mean_to_dict(model.mean),
        "noise_var": model.noise_var,
        "jitter": model.jitter,
        "lml": model.lml,
        "input_columns": list(input_columns),
        "target": target,
    }
    _save(directory, doc, X=model.X, y=model.y, residual=model.residual,
          chol=model.chol, alpha=model.alpha)


def save_narx(directory, model: NarxModel, input_columns: list[str], target: str) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    cfg = model.config
    if isinstance(cfg.mode, ResidualMean):
        mode = {"name": "residual_morison", "drag": cfg.mode.morison.drag,
                "inertia": cfg.mode.morison.inertia}
    elif isinstance(cfg.mode, InputAugmentation):
        mode = {"name": "augmented_morison", "drag": cfg.mode.morison.drag,
                "inertia": cfg.mode.morison.inertia}
    else:
        mode = {"name": "blackbox"}
    doc = {
        "type": "narx",
        "kernel": kernel_to_dict(model.gp.kernel),
        "mean": mean_to_dict(model.gp.mean),
        "noise_var": model.gp.noise_var,
        "jitter": model.gp.jitter,
        "lml": model.gp.lml,
        "narx": {"exog_lags": cfg.exog_lags, "auto_lags": cfg.auto_lags, "mode": mode,
                 "n_channels": model.n_channels},
        "input_columns": list(input_columns),
        "target": target,
    }
    _save(directory, doc, X=model.gp.X, y=model.gp.y, residual=model.gp.residual,
          chol=model.gp.chol, alpha=model.gp.alpha)


def save_reduced_rank(directory, model: ReducedRankGp, input_columns: list[str], target: str) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    domain = model.basis.domain
    doc = {
        "type": "reduced_rank",
        "kernel": kernel_to_dict(model.kernel),
        "noise_var": model.noise_var,
        "domain": {
            "half_widths": domain.half_widths.tolist(),
            "boundary": domain.boundary,
            "basis_counts": domain.basis_counts.tolist(),
            "max_total": domain.max_total,
        },
        "input_columns": list(input_columns),
        "target": target,
    }
    _save(directory, doc, weight_mean=model.weight_mean, weight_cov=model.weight_cov)


def _save(directory: Path, doc: dict, **arrays) -> None:
    import io

    buf = io.BytesIO()
    np.savez(buf, **arrays)
    atomic_write_bytes(directory / MODEL_NPZ, buf.getvalue())
    atomic_write_text(directory / MODEL_JSON, json.dumps(doc, indent=2) + "\n")


def load_model(directory):
    """Rebuild a saved model; returns (doc, model) with model matching doc['type']."""
    directory = Path(directory)
    try:
        doc = json.loads((directory / MODEL_JSON).read_text())
        arrays = np.load(directory / MODEL_NPZ)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load model from {directory}: {exc}") from exc

    kind = doc.get("type")
    if kind in ("exact_gp", "narx"):
        gp_model = TrainedGp(
            kernel=kernel_from_dict(doc["kernel"]),
            mean=mean_from_dict(doc["mean"]),
            noise_var=doc["noise_var"],
            X=arrays["X"],
            y=arrays["y"],
            residual=arrays["residual"],
            chol=arrays["chol"],
            alpha=arrays["alpha"],
            jitter=doc["jitter"],
            lml=doc["lml"],
        )
        if kind == "exact_gp":
            return doc, gp_model
        spec = doc["narx"]
        mode_doc = spec["mode"]
        if mode_doc["name"] == "blackbox":
            mode = BlackBox()
        else:
            params = MorisonParams(drag=mode_doc["drag"], inertia=mode_doc["inertia"])
            mode = (ResidualMean(params) if mode_doc["name"] == "residual_morison"
                    else InputAugmentation(params))
        cfg = NarxConfig(exog_lags=spec["exog_lags"], auto_lags=spec["auto_lags"], mode=mode)
        return doc, NarxModel(gp=gp_model, config=cfg, n_channels=spec["n_channels"])
    if kind == "reduced_rank":
        d = doc["domain"]
        domain = DomainSpec(half_widths=d["half_widths"], boundary=d["boundary"],
                            basis_counts=d["basis_counts"], max_total=d["max_total"])
        kernel = kernel_from_dict(doc["kernel"])
        basis = spectral_weights(eigenpairs(domain), kernel)
        model = ReducedRankGp(
            basis=basis,
            kernel=kernel,
            noise_var=doc["noise_var"],
            weight_mean=arrays["weight_mean"],
            weight_cov=arrays["weight_cov"],
        )
        return doc, model
    raise DataError(f"unknown model type {kind!r} in {directory}")

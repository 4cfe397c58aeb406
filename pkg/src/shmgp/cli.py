"""Command-line entry point.

Subcommands:

* ``generate <spec.json> -o <dir>``   -- run a data generator, write CSV
* ``fit <config.json> [-o dir]``      -- run an experiment end to end
* ``predict <model-dir> <data.csv>``  -- predictions from a saved model
* ``eval <pred.csv> <truth.csv>``     -- score a prediction file
* ``latent-force <config.json>``      -- force estimation experiment

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure; each failure prints a one-line diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import model_io
from .config import ExperimentConfig
from .errors import ConfigError, DataError, NumericalError
from .experiments import OUTPUT_ROOT_ENV, _generated_frame, run_experiment
from .metrics import nmse

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _out_dir(arg, name: str) -> Path:
    if arg is not None:
        return Path(arg)
    return Path(os.environ.get(OUTPUT_ROOT_ENV, ".")) / name


def cmd_generate(args) -> int:
    try:
        spec = json.loads(Path(args.spec).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read generator spec: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {args.spec}: {exc}") from exc
    if not isinstance(spec, dict) or "generator" not in spec:
        raise ConfigError("generator spec must be an object with a 'generator' key")

    frame = _generated_frame(spec)
    out = _out_dir(args.output, f"{spec['generator']}-data")
    out.mkdir(parents=True, exist_ok=True)

    if "columns" in frame:
        cols = frame["columns"]
        header = list(cols)
        model_io.write_csv(out / "data.csv", header, [cols[h] for h in header])
    elif "sim" in frame:
        sim = frame["sim"]
        header = ["time"] + [f"{kind}_{dof}" for kind, dof in sim.observed] + ["force_true"]
        columns = [sim.time] + [sim.observations[:, i] for i in range(sim.observations.shape[1])]
        columns.append(sim.force)
        model_io.write_csv(out / "data.csv", header, columns)
    else:  # bounded field: separate train/test tables
        for name in ("train", "test"):
            ds = frame[name]
            model_io.write_csv(
                out / f"{name}.csv",
                ["index", "x0", "x1", "y"],
                [np.arange(len(ds), dtype=float), ds.inputs[:, 0], ds.inputs[:, 1], ds.outputs],
            )
    model_io.atomic_write_text(out / "generator.json", json.dumps(spec, indent=2) + "\n")
    print(str(out))
    return 0


def cmd_fit(args) -> int:
    report = run_experiment(args.config, output_dir=args.output)
    print(json.dumps(report.to_json_dict(), indent=2))
    return 0


def cmd_latent_force(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    if config.task != "latent_force":
        raise ConfigError(f"latent-force subcommand requires task 'latent_force', got {config.task!r}")
    report = run_experiment(config, output_dir=args.output)
    print(json.dumps(report.to_json_dict(), indent=2))
    return 0


def cmd_predict(args) -> int:
    doc, model = model_io.load_model(args.model_dir)
    header, data = model_io.read_csv(args.data)

    kind = doc["type"]
    if kind in ("exact_gp", "reduced_rank"):
        try:
            X = np.column_stack([data[:, header.index(c)] for c in doc["input_columns"]])
        except ValueError as exc:
            raise DataError(f"input column missing from {args.data}: {exc}") from exc
        if kind == "exact_gp":
            from .gp import predict

            pred = predict(model, X)
            mean, var = pred.mean, pred.var
        else:
            from .reduced_rank import predict_reduced

            mean, var = predict_reduced(model, X)
        index = data[:, 0]
    else:  # narx: one-step-ahead over a sequence file
        from .narx import SequenceData, predict_osa

        try:
            u = np.column_stack([data[:, header.index(c)] for c in doc["input_columns"]])
            y = data[:, header.index(doc["target"])]
        except ValueError as exc:
            raise DataError(f"column missing from {args.data}: {exc}") from exc
        t = data[:, 0]
        dt = float(np.median(np.diff(t))) if len(t) > 1 else 1.0
        if len(t) > 1 and np.abs(np.diff(t) - dt).max() > 1e-6 * abs(dt):
            raise DataError(f"{args.data}: lagged models need uniformly sampled time")
        seq = SequenceData(u=u, y=y, dt=dt)
        mean, var = predict_osa(model, seq)
        index = t[model.config.first_index :]

    columns = [index, mean, var]
    header_out = ["time", "y_mean", "y_var"]
    target = doc.get("target")
    if kind != "narx" and target in header:
        header_out = ["time", "y_true", "y_mean", "y_var"]
        columns = [index, data[:, header.index(target)], mean, var]

    out = Path(args.output) if args.output else Path(args.model_dir) / "predictions.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    model_io.write_csv(out, header_out, columns)
    print(str(out))
    return 0


def cmd_eval(args) -> int:
    pred_header, pred = model_io.read_csv(args.predictions)
    truth_header, truth = model_io.read_csv(args.truth)
    if args.pred_column not in pred_header:
        raise DataError(f"column {args.pred_column!r} not in {args.predictions}")
    if args.truth_column not in truth_header:
        raise DataError(f"column {args.truth_column!r} not in {args.truth}")
    f = pred[:, pred_header.index(args.pred_column)]
    y = truth[:, truth_header.index(args.truth_column)]
    if f.shape[0] != y.shape[0]:
        raise DataError(
            f"row counts differ: {args.predictions} has {f.shape[0]}, {args.truth} has {y.shape[0]}"
        )
    print(json.dumps({"nmse_percent": nmse(y, f)}, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shmgp",
        description="Physics-informed GP regression toolkit: generators, fitting, scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="run a synthetic data generator")
    p.add_argument("spec", help="generator spec JSON")
    p.add_argument("-o", "--output", help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="run an experiment from a config file")
    p.add_argument("config", help="experiment config JSON")
    p.add_argument("-o", "--output", help="output directory override")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("model_dir", help="directory holding model.json/model.npz")
    p.add_argument("data", help="input data CSV")
    p.add_argument("-o", "--output", help="output CSV path")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score predictions against truth")
    p.add_argument("predictions", help="predictions CSV")
    p.add_argument("truth", help="truth CSV")
    p.add_argument("--pred-column", default="y_mean")
    p.add_argument("--truth-column", default="y")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("latent-force", help="run a latent force experiment")
    p.add_argument("config", help="experiment config JSON")
    p.add_argument("-o", "--output", help="output directory override")
    p.set_defaults(func=cmd_latent_force)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())

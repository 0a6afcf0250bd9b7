"""Command line front end.

Five subcommands cover the workflow: ``simulate`` writes trajectory CSVs,
``identify`` fits a model from a CSV, ``validate`` scores a model against a
reference trajectory, ``control`` runs a closed-loop benchmark, and
``sweep`` re-fits models across training lengths or noise levels.

Conventions shared by all subcommands:

* ``--config FILE`` loads a JSON object validated against the subcommand's
  schema (unknown keys are rejected); explicit flags beat config values.
* ``--out`` names the output file or directory; the ``SINDY_MPC_OUT``
  environment variable, when set, overrides it.
* exit codes: 2 for bad arguments or config (including unknown system
  names), 3 for missing or malformed data CSVs (with a line number when
  available), 4 for a missing model file, 1 for other runtime failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
from jsonschema import ValidationError, validate

from . import bench, dynamics, sysid
from .bench import (BUILTIN_PLANS, ModelRecipe, builtin_plan, derive_seed,
                    fit_recipe, run_experiment, sweep_noise,
                    sweep_training_length)
from .dynamics import (CsvFormatError, ExcitationSignal, custom_signal,
                       read_trajectory_csv, write_trajectory_csv)
from .sysid import coefficient_table, load_model, predict, save_model

__all__ = ["main"]

_SYSTEMS = sorted(BUILTIN_PLANS)
_METHODS = ["sindyc", "dmdc", "delay-dmdc", "edmdc"]

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_MODEL = 4


class CliError(Exception):
    def __init__(self, message, code=1):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# Config schemas

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_INT1 = {"type": "integer", "minimum": 1}
_SEED = {"type": "integer", "minimum": 0}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}

_SIGNAL_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"type": "string",
                 "enum": ["SchroederSweep", "SineProduct", "CubedSine",
                          "PRBS", "PiecewiseConstantRandom", "Zero",
                          "Constant"]},
        "n_inputs": _INT1,
        "params": {
            "type": "object",
            "properties": {
                "amplitude": _NUM, "base_freq": _POS, "components": _INT1,
                "rate": _NUM, "slow_rate": _NUM, "bit_duration": _POS,
                "t_max": _POS, "low": _NUM, "high": _NUM, "hold_min": _POS,
                "hold_max": _POS, "seed": _SEED, "value": {
                    "anyOf": [_NUM, _VEC]},
            },
            "additionalProperties": False,
        },
    },
    "required": ["kind", "params"],
    "additionalProperties": False,
}

_SCHEMAS = {
    "simulate": {
        "type": "object",
        "properties": {
            "system": {"type": "string", "enum": _SYSTEMS},
            "x0": _VEC,
            "duration": _POS,
            "dt": _POS,
            "sample_every": _INT1,
            "noise_eta": _NONNEG,
            "signal": _SIGNAL_SCHEMA,
            "seed": _SEED,
        },
        "additionalProperties": False,
    },
    "identify": {
        "type": "object",
        "properties": {
            "method": {"type": "string", "enum": _METHODS},
            "poly_order": {"type": "integer", "minimum": 1},
            "thresholds": {"anyOf": [_NONNEG, {"type": "array",
                                               "items": _NONNEG,
                                               "minItems": 1}]},
            "normalize": {"type": "boolean"},
            "form": {"type": "string", "enum": ["continuous", "discrete"]},
            "smooth_window": _INT1,
            "derivative_source": {"type": "string",
                                  "enum": ["auto", "measured",
                                           "finite_difference"]},
            "adapt": {"type": "boolean"},
            "delays": _INT1,
            "lag_steps": _INT1,
            "offset": _VEC,
        },
        "additionalProperties": False,
    },
    "validate": {
        "type": "object",
        "properties": {"eps": _POS},
        "additionalProperties": False,
    },
    "control": {
        "type": "object",
        "properties": {
            "preset": {"type": "string", "enum": _SYSTEMS},
            "duration": _POS,
            "seed": _SEED,
        },
        "additionalProperties": False,
    },
    "sweep": {
        "type": "object",
        "properties": {
            "preset": {"type": "string", "enum": _SYSTEMS},
            "kind": {"type": "string", "enum": ["length", "noise"]},
            "lengths": {"type": "array", "items": {"type": "integer",
                                                   "minimum": 2},
                        "minItems": 1},
            "etas": {"type": "array", "items": _NONNEG, "minItems": 1},
            "realizations": _INT1,
            "seed": _SEED,
        },
        "additionalProperties": False,
    },
}


def _load_config(args, command):
    if not getattr(args, "config", None):
        return {}
    path = Path(args.config)
    if not path.exists():
        raise CliError(f"config file not found: {path}", EXIT_USAGE)
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CliError(f"config is not valid JSON: {exc}", EXIT_USAGE) from exc
    try:
        validate(cfg, _SCHEMAS[command])
    except ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise CliError(f"bad config at {where}: {exc.message}",
                       EXIT_USAGE) from exc
    return cfg


def _pick(args, cfg, key, default=None):
    """Explicit CLI flag beats config value beats default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in cfg:
        return cfg[key]
    return default


def _out_path(args, default=None):
    env = os.environ.get("SINDY_MPC_OUT")
    if env:
        return Path(env)
    if args.out is not None:
        return Path(args.out)
    if default is not None:
        return Path(default)
    raise CliError("no output path: pass --out or set SINDY_MPC_OUT",
                   EXIT_USAGE)


def _say(args, message):
    if not args.quiet:
        print(message)


def _read_data(path):
    path = Path(path)
    if not path.exists():
        raise CliError(f"data file not found: {path}", EXIT_DATA)
    try:
        return read_trajectory_csv(path)
    except CsvFormatError as exc:
        raise CliError(f"{path}:{exc.line_number}: {exc}", EXIT_DATA) from exc


def _load_model_arg(args):
    """--model PATH, or --model exact with --system NAME."""
    if args.model == "exact":
        if not getattr(args, "system", None):
            raise CliError("--model exact needs --system", EXIT_USAGE)
        system = _system_by_name(args.system)
        return sysid.true_sparse_model(system)
    path = Path(args.model)
    if not path.exists():
        raise CliError(f"model file not found: {path}", EXIT_MODEL)
    try:
        return load_model(path)
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise CliError(f"cannot parse model {path}: {exc}", EXIT_MODEL) from exc


def _system_by_name(name):
    factories = {"lotka": dynamics.lotka_volterra, "lorenz": dynamics.lorenz,
                 "f8": dynamics.f8_aircraft, "hiv": dynamics.hiv_immune}
    if name not in factories:
        raise CliError(f"unknown system {name!r}", EXIT_USAGE)
    return factories[name]()


def _zoh_from_trajectory(traj):
    """Replay a recorded input sequence as a zero-order-hold signal."""
    times = traj.times
    inputs = traj.inputs

    def fn(t):
        idx = int(np.searchsorted(times, t + 1e-12, side="right") - 1)
        return inputs[:, min(max(idx, 0), inputs.shape[1] - 1)]

    return custom_signal(fn, traj.n_inputs)


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_simulate(args):
    cfg = _load_config(args, "simulate")
    name = _pick(args, cfg, "system")
    if name is None:
        raise CliError("no system given (flag --system or config key)",
                       EXIT_USAGE)
    seed = _pick(args, cfg, "seed", 0)
    plan = builtin_plan(name, seed=seed)
    training = plan.training

    duration = float(_pick(args, cfg, "duration", training.duration))
    dt = float(_pick(args, cfg, "dt", training.plant_dt))
    sample_every = int(_pick(args, cfg, "sample_every", training.sample_every))
    x0 = _pick(args, cfg, "x0", training.x0)
    if isinstance(x0, str):
        x0 = [float(v) for v in x0.split(",")]
    x0 = np.asarray(x0, dtype=float)
    noise_eta = float(_pick(args, cfg, "noise_eta", 0.0))

    if "signal" in cfg and args.signal is None:
        signal = ExcitationSignal.from_json(cfg["signal"])
    elif args.signal is not None:
        signal = _signal_by_name(args.signal, plan, seed)
    else:
        signal = training.signal

    traj = dynamics.integrate(plan.system, x0, signal, duration,
                              dynamics.IntegratorConfig(dt))
    traj = traj.subsample(sample_every)
    if noise_eta > 0:
        traj = sysid.add_noise(traj, sysid.NoiseSpec(
            noise_eta, derive_seed(seed, "cli-noise")))
    out = _out_path(args)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(traj, out)
    _say(args, f"wrote {traj.n_samples} samples ({traj.n_states} states, "
               f"{traj.n_inputs} inputs) to {out}")
    return 0


def _signal_by_name(name, plan, seed):
    if name == "training":
        return plan.training.signal
    if name == "validation":
        return plan.validation.signal
    if name == "schroeder":
        return dynamics.schroeder_sweep()
    if name == "sine-product":
        return dynamics.sine_product()
    if name == "cubed-sine":
        return dynamics.cubed_sine()
    if name == "prbs":
        return dynamics.prbs(1.0, 1.0, plan.training.duration,
                             seed=derive_seed(seed, "cli-signal"))
    if name == "random-steps":
        return dynamics.piecewise_constant_random(
            0.0, 1.0, 0.2, 10.0, plan.training.duration,
            seed=derive_seed(seed, "cli-signal"))
    if name == "zero":
        return dynamics.zero_signal(plan.system.n_inputs)
    raise CliError(f"unknown signal {name!r}", EXIT_USAGE)


def _cmd_identify(args):
    cfg = _load_config(args, "identify")
    traj = _read_data(args.data)
    thresholds = _pick(args, cfg, "thresholds", 0.1)
    if isinstance(thresholds, str):
        parts = [float(v) for v in thresholds.split(",")]
        thresholds = parts[0] if len(parts) == 1 else tuple(parts)
    elif isinstance(thresholds, list):
        thresholds = tuple(thresholds)
    offset = cfg.get("offset")
    recipe = ModelRecipe(
        kind=_pick(args, cfg, "method", "sindyc"),
        poly_order=int(_pick(args, cfg, "poly_order", 2)),
        thresholds=thresholds,
        normalize=bool(_pick(args, cfg, "normalize", False)),
        form=_pick(args, cfg, "form", "continuous"),
        smooth_window=_pick(args, cfg, "smooth_window"),
        derivative_source=_pick(args, cfg, "derivative_source", "auto"),
        adapt=bool(_pick(args, cfg, "adapt", False)),
        delays=int(_pick(args, cfg, "delays", 1)),
        lag_steps=int(_pick(args, cfg, "lag_steps", 1)),
        offset="none" if offset is None else "target",
    )
    model = fit_recipe(recipe, traj, target_state=offset)
    out = _out_path(args)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    if isinstance(model, sysid.SparseModel):
        active = int((model.coefficients != 0).sum())
        _say(args, f"fitted {recipe.kind}: {active} active of "
                   f"{model.coefficients.size} coefficients -> {out}")
        if not args.quiet:
            for line in coefficient_table(model).splitlines():
                print("  " + line)
    else:
        _say(args, f"fitted {recipe.kind}: A {model.a.shape}, "
                   f"B {model.b.shape} -> {out}")
    return 0


def _cmd_validate(args):
    cfg = _load_config(args, "validate")
    model = _load_model_arg(args)
    truth = _read_data(args.data)
    eps = _pick(args, cfg, "eps")
    signal = _zoh_from_trajectory(truth)
    duration = float(truth.times[-1] - truth.times[0])
    dt = truth.dt
    pred = predict(model, truth.states[:, 0], signal, duration, dt)
    report = {
        "samples": truth.n_samples,
        "avg_rel_error": bench.avg_relative_error(truth, pred),
        "mse": bench.mse_error(truth, pred),
    }
    if eps is not None:
        report["pred_horizon"] = bench.prediction_horizon(truth, pred,
                                                          float(eps))
    if args.out or os.environ.get("SINDY_MPC_OUT"):
        out = _out_path(args)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
        _say(args, f"wrote report to {out}")
    for key, value in report.items():
        _say(args, f"{key}: {value:.6g}" if isinstance(value, float)
             else f"{key}: {value}")
    return 0


def _cmd_control(args):
    cfg = _load_config(args, "control")
    preset = _pick(args, cfg, "preset")
    if preset is None:
        raise CliError("no preset given (flag --preset or config key)",
                       EXIT_USAGE)
    seed = _pick(args, cfg, "seed", 0)
    plan = builtin_plan(preset, seed=seed)
    duration = _pick(args, cfg, "duration")
    if duration is not None:
        plan = replace(plan, control=replace(plan.control,
                                             duration=float(duration)))
    out = _out_path(args, default="out")

    if args.model is not None:
        args.system = getattr(args, "system", None) or preset
        model = _load_model_arg(args)
        ref = bench.reference_signal(plan)
        metrics, result = bench._control_metrics(plan, model, ref)
        out_dir = out / plan.name / "cli-model"
        out_dir.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(result.trajectory, out_dir / "control.csv")
        with open(out_dir / "report.json", "w") as fh:
            json.dump(metrics, fh, indent=2, sort_keys=True)
        _say(args, f"closed loop success={metrics['control_success']} "
                   f"final_state_error={metrics['final_state_error']:.4g}")
        return 0

    reports, _ = run_experiment(plan, out_dir=out, run_control=True)
    for name, report in reports.items():
        if report.failed:
            _say(args, f"{name}: FAILED ({report.failure})")
        else:
            _say(args, f"{name}: success={report.control_success} "
                       f"avg_rel_error={report.avg_rel_error:.4g}")
    _say(args, f"artifacts in {out / plan.name}")
    return 0


def _cmd_sweep(args):
    cfg = _load_config(args, "sweep")
    preset = _pick(args, cfg, "preset")
    if preset is None:
        raise CliError("no preset given (flag --preset or config key)",
                       EXIT_USAGE)
    kind = _pick(args, cfg, "kind", "noise")
    seed = _pick(args, cfg, "seed", 0)
    plan = builtin_plan(preset, seed=seed)
    realizations = _pick(args, cfg, "realizations")
    out = _out_path(args, default="out")
    jobs = args.jobs or 1
    if kind == "length":
        lengths = cfg.get("lengths")
        rows, summary, control_rows = sweep_training_length(
            plan, lengths=lengths, realizations=realizations, out_dir=out,
            jobs=jobs)
    else:
        etas = cfg.get("etas")
        rows, summary = sweep_noise(plan, etas=etas,
                                    realizations=realizations, out_dir=out,
                                    jobs=jobs)
    for rec in summary:
        metric = rec.get("avg_rel_error_median")
        label = f"{rec['model']} @ {rec.get('length', rec.get('eta'))}"
        if metric is not None:
            _say(args, f"{label}: median avg_rel_error {metric:.4g} "
                       f"({rec['count']} fits)")
        else:
            _say(args, f"{label}: no successful fits")
    _say(args, f"artifacts in {Path(out) / plan.name}")
    return 0


# ---------------------------------------------------------------------------
# Parser


def _add_common(parser):
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", help="output file or directory "
                                      "(SINDY_MPC_OUT overrides)")
    parser.add_argument("--seed", type=int, help="experiment seed")
    parser.add_argument("--jobs", type=int, help="parallel workers for sweeps")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress progress output")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sindy-mpc",
        description="identify sparse or linear dynamical models from data "
                    "and run them in predictive control loops")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a benchmark system and "
                                        "write a trajectory CSV")
    p.add_argument("--system", choices=_SYSTEMS)
    p.add_argument("--duration", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--sample-every", dest="sample_every", type=int)
    p.add_argument("--x0", help="comma separated initial state")
    p.add_argument("--signal", help="training|validation|schroeder|"
                                    "sine-product|cubed-sine|prbs|"
                                    "random-steps|zero")
    p.add_argument("--noise-eta", dest="noise_eta", type=float)
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("identify", help="fit a model from a trajectory CSV")
    p.add_argument("--data", required=True, help="training CSV")
    p.add_argument("--method", choices=_METHODS)
    p.add_argument("--poly-order", dest="poly_order", type=int)
    p.add_argument("--thresholds", help="scalar or comma separated per-state")
    p.add_argument("--normalize", action="store_const", const=True)
    p.add_argument("--form", choices=["continuous", "discrete"])
    p.add_argument("--smooth-window", dest="smooth_window", type=int)
    p.add_argument("--derivative-source", dest="derivative_source",
                   choices=["auto", "measured", "finite_difference"])
    p.add_argument("--adapt", action="store_const", const=True,
                   help="relax thresholds until every state keeps a term")
    p.add_argument("--delays", type=int)
    p.add_argument("--lag-steps", dest="lag_steps", type=int)
    _add_common(p)
    p.set_defaults(func=_cmd_identify)

    p = sub.add_parser("validate", help="score a model against a recorded "
                                        "trajectory")
    p.add_argument("--model", required=True,
                   help="model JSON, or 'exact' with --system")
    p.add_argument("--system", choices=_SYSTEMS)
    p.add_argument("--data", required=True, help="reference CSV")
    p.add_argument("--eps", type=float,
                   help="error radius for the prediction horizon")
    _add_common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("control", help="run a closed-loop benchmark")
    p.add_argument("--preset", choices=_SYSTEMS)
    p.add_argument("--model", help="model JSON or 'exact'; omit to fit per "
                                   "the preset recipes")
    p.add_argument("--duration", type=float)
    _add_common(p)
    p.set_defaults(func=_cmd_control)

    p = sub.add_parser("sweep", help="re-fit models across training lengths "
                                     "or noise levels")
    p.add_argument("--preset", choices=_SYSTEMS)
    p.add_argument("--kind", choices=["length", "noise"])
    p.add_argument("--realizations", type=int)
    _add_common(p)
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except CsvFormatError as exc:
        print(f"error: line {exc.line_number}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        return 130
    except (ValueError, OSError, dynamics.DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Examples::

    temporal-steering simulate-rabi --g 9 --gamma 1 --t_max 5 --steps 2000
    temporal-steering thresholds
    temporal-steering --config run.cfg --out s3.csv
    temporal-steering records-analyze trials.csv --resamples 500 --seed 3

Config files hold one ``key = value`` per line; ``#`` starts a comment.
Flags override config values and share their names.
"""

import argparse
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import bb84, dynamics, records, steering

EXPERIMENTS = {
    "rabi": "simulate-rabi",
    "ancilla": "simulate-ancilla",
    "bb84-sweep": "bb84-sweep",
    "thresholds": "thresholds",
    "ordering": "ordering-test",
    "records": "records-analyze",
}
SUBCOMMANDS = {v: k for k, v in EXPERIMENTS.items()}
FORMATS = ("csv", "json")

PARAM_TYPES = {
    "g": float,
    "gamma": float,
    "J": float,
    "gamma1": float,
    "t_max": float,
    "steps": int,
    "n_bases": int,
    "p": float,
    "q": float,
    "grid_n": int,
    "V": float,
    "seed": int,
    "smoothing": float,
    "resamples": int,
    "damping": str,
    "ancilla": str,
    "input": str,
}

# (required, optional with defaults)
EXPERIMENT_PARAMS = {
    "rabi": (
        ("g", "gamma", "t_max"),
        {"steps": 2000, "n_bases": 3, "damping": "population"},
    ),
    "ancilla": (
        ("J", "gamma1", "t_max"),
        {"steps": 2000, "n_bases": 3, "damping": "population", "ancilla": "mixed"},
    ),
    "bb84-sweep": ((), {"grid_n": 21, "p": None, "q": None}),
    "thresholds": ((), {}),
    "ordering": ((), {"n_bases": 3, "seed": None, "V": None}),
    "records": (("input",), {"smoothing": 0.0, "resamples": 200, "seed": 0}),
}

DEFAULT_FORMAT = {
    "rabi": "csv",
    "ancilla": "csv",
    "bb84-sweep": "csv",
    "thresholds": "json",
    "ordering": "json",
    "records": "csv",
}

TABULAR = ("rabi", "ancilla", "bb84-sweep")
ORDERING_TRIALS = 100_000


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass
class ExperimentConfig:
    experiment: str
    parameters: dict = field(default_factory=dict)
    output_path: str = None
    format: str = None


def _convert(key, raw, line=None):
    kind = PARAM_TYPES[key]
    try:
        value = kind(raw)
    except ValueError:
        raise ConfigError(f"{key} expects {kind.__name__}, got {raw!r}", line) from None
    if kind is float and not math.isfinite(value):
        raise ConfigError(f"{key} must be finite", line)
    return value


def parse_config(text):
    """Parse ``key = value`` lines into an :class:`ExperimentConfig`.

    Unknown keys, duplicates and badly typed values raise ``ConfigError``
    naming the line.
    """
    seen = {}
    experiment = None
    out = None
    fmt = None
    params = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen[key]})", lineno)
        seen[key] = lineno
        if key == "experiment":
            if value not in EXPERIMENTS:
                raise ConfigError(f"unknown experiment {value!r}", lineno)
            experiment = value
        elif key == "out":
            out = value
        elif key == "format":
            if value not in FORMATS:
                raise ConfigError(f"format must be csv or json, got {value!r}", lineno)
            fmt = value
        elif key in PARAM_TYPES:
            params[key] = _convert(key, value, lineno)
        else:
            raise ConfigError(f"unknown key {key!r}", lineno)
    if experiment is None:
        raise ConfigError("config does not set 'experiment'")
    return ExperimentConfig(experiment, params, out, fmt)


def _nonneg(params, *keys):
    for k in keys:
        if params.get(k) is not None and params[k] < 0:
            raise ConfigError(f"{k} must be nonnegative")


def resolve(config):
    """Check parameters for the experiment and fill in defaults."""
    if config.experiment not in EXPERIMENT_PARAMS:
        raise ConfigError(f"unknown experiment {config.experiment!r}")
    required, defaults = EXPERIMENT_PARAMS[config.experiment]
    params = dict(config.parameters)
    for k in params:
        if k not in required and k not in defaults:
            raise ConfigError(f"parameter {k!r} does not apply to experiment {config.experiment}")
    missing = [k for k in required if k not in params]
    if missing:
        raise ConfigError(f"missing parameter(s) for {config.experiment}: {', '.join(missing)}")
    for k, v in defaults.items():
        params.setdefault(k, v)

    _nonneg(params, "g", "gamma", "J", "gamma1", "smoothing", "seed", "p", "q")
    if "t_max" in params and params["t_max"] <= 0:
        raise ConfigError("t_max must be positive")
    if "steps" in params and params["steps"] < 1:
        raise ConfigError("steps must be at least 1")
    if "n_bases" in params and params["n_bases"] not in (2, 3):
        raise ConfigError("n_bases must be 2 or 3")
    if params.get("grid_n") is not None and params["grid_n"] < 2:
        raise ConfigError("grid_n must be at least 2")
    for k in ("p", "q", "V"):
        if params.get(k) is not None and not 0 <= params[k] <= 1:
            raise ConfigError(f"{k} must lie in [0, 1]")
    if "resamples" in params and params["resamples"] < 2:
        raise ConfigError("resamples must be at least 2")
    if "damping" in params and params["damping"] not in dynamics.DAMPING_CONVENTIONS:
        raise ConfigError(f"damping must be one of {', '.join(dynamics.DAMPING_CONVENTIONS)}")
    if "ancilla" in params and params["ancilla"] not in dynamics.ANCILLA_STATES:
        raise ConfigError(f"ancilla must be one of {', '.join(dynamics.ANCILLA_STATES)}")

    fmt = config.format or DEFAULT_FORMAT[config.experiment]
    if fmt not in FORMATS:
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    return ExperimentConfig(config.experiment, params, config.output_path, fmt)


def fmt_number(x):
    """Nine significant digits, locale independent, no negative zero."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    s = format(float(x), ".9g")
    return "0" if s == "-0" else s


def _json_value(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    v = float(format(float(x), ".9g"))
    return 0.0 if v == 0 else v


def _render(columns, rows, fmt, tabular):
    if fmt == "json":
        if tabular:
            obj = [{c: _json_value(v) for c, v in zip(columns, r)} for r in rows]
        else:
            obj = {c: _json_value(v) for c, v in zip(columns, rows[0])}
        return json.dumps(obj, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(fmt_number(v) for v in r) + "\n")
    return buf.getvalue()


def _time_rows(model, rho0, params, system_qubit=1):
    grid = dynamics.TimeGrid(0.0, params["t_max"], params["steps"])
    n = params["n_bases"]
    results = steering.steering_results(model, rho0, grid, 3, system_qubit)
    rows = []
    for t, res in zip(grid.times, results):
        c = dict(zip(res.bases, res.contributions))
        s_n = sum(c[b] for b in steering.bases_for(n))
        rows.append((t, s_n, c["x"], c["y"], c["z"]))
    return ("t", "s_n", "e_x", "e_y", "e_z"), rows


def _experiment_rabi(p):
    model = dynamics.rabi_model(p["g"], p["gamma"], p["damping"])
    return _time_rows(model, np.eye(2) / 2, p)


def _experiment_ancilla(p):
    model = dynamics.ancilla_model(p["J"], p["gamma1"], p["damping"])
    return _time_rows(model, dynamics.ancilla_initial_state(ancilla=p["ancilla"]), p)


def _experiment_sweep(p):
    axis = np.linspace(0.0, 1.0, p["grid_n"])
    p_grid = axis if p["p"] is None else [p["p"]]
    q_grid = axis if p["q"] is None else [p["q"]]
    rows = [tuple(r) for r in bb84.sweep(p_grid, q_grid)]
    return ("p", "q", "s2", "r_err", "violates"), rows


def _experiment_thresholds(p):
    return ("independent", "entropic"), [(bb84.threshold_independent(), bb84.threshold_entropic())]


def _experiment_ordering(p):
    n = p["n_bases"]
    cols = ["pre_measured", "entangled"]
    row = [
        steering.steering_parameter(
            steering.ordering_scenario(kind, p["seed"], n, ORDERING_TRIALS)
        ).s_value
        for kind in cols
    ]
    if p["V"] is not None:
        cols.append("werner")
        row.append(steering.steering_parameter(steering.werner_table(p["V"], n)).s_value)
    return tuple(cols), [tuple(row)]


def _experiment_records(p):
    with open(p["input"], "rb") as fh:
        recs = records.parse_records(fh)
    table = records.estimate_table(recs, p["smoothing"])
    s_n = steering.steering_parameter(table).s_value
    _, s_std = records.bootstrap_uncertainty(recs, p["resamples"], p["seed"], p["smoothing"])
    return ("s_n", "s_std", "n_records"), [(s_n, s_std, len(recs))]


_RUNNERS = {
    "rabi": _experiment_rabi,
    "ancilla": _experiment_ancilla,
    "bb84-sweep": _experiment_sweep,
    "thresholds": _experiment_thresholds,
    "ordering": _experiment_ordering,
    "records": _experiment_records,
}


def render(config):
    """Output text for a config (validated first)."""
    config = resolve(config)
    columns, rows = _RUNNERS[config.experiment](config.parameters)
    return _render(columns, rows, config.format, config.experiment in TABULAR)


def run(config, stdout=None):
    """Run an experiment and write its output; returns the exit status."""
    text = render(config)
    if config.output_path:
        with open(config.output_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        (stdout or sys.stdout).write(text)
    return 0


def _global_flags(parser):
    s = argparse.SUPPRESS
    parser.add_argument("--out", default=s, help="output file (default: stdout)")
    parser.add_argument("--format", choices=FORMATS, default=s)
    parser.add_argument("--config", default=s, help="key = value config file")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="temporal-steering",
        description="Temporal steering simulations, BB84 thresholds and record analysis.",
    )
    _global_flags(parser)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for experiment, name in EXPERIMENTS.items():
        sp = sub.add_parser(name)
        _global_flags(sp)
        required, defaults = EXPERIMENT_PARAMS[experiment]
        for key in required + tuple(defaults):
            if key == "input":
                sp.add_argument("input", nargs="?", default=argparse.SUPPRESS)
                continue
            flags = [f"--{key}"]
            if "_" in key:
                flags.append(f"--{key.replace('_', '-')}")
            sp.add_argument(*flags, dest=key, default=argparse.SUPPRESS, metavar=key.upper())
    return parser


def config_from_args(args):
    ns = vars(args)
    if "config" in ns:
        try:
            with open(ns["config"], encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {ns['config']}: {exc.strerror}") from None
        config = parse_config(text)
    else:
        config = None
    command = ns.get("command")
    if command is None:
        if config is None:
            raise ConfigError("no command given and no --config file")
    else:
        experiment = SUBCOMMANDS[command]
        if config is None:
            config = ExperimentConfig(experiment)
        elif config.experiment != experiment:
            raise ConfigError(
                f"config experiment {config.experiment!r} does not match command {command!r}"
            )
    for key in PARAM_TYPES:
        if key in ns:
            config.parameters[key] = _convert(key, ns[key])
    if "out" in ns:
        config.output_path = ns["out"]
    if "format" in ns:
        config.format = ns["format"]
    return config


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        return run(config)
    except ConfigError as exc:
        print(f"temporal-steering: error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        # downstream reader (e.g. head) closed early
        sys.stdout = open(os.devnull, "w")
        return 0
    except (OSError, ValueError, RuntimeError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        if isinstance(exc, OSError) and exc.filename:
            msg = f"{exc.strerror}: {exc.filename}"
        print(f"temporal-steering: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

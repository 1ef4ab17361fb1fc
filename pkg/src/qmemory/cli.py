"""Command-line front end.

Each run reads one JSON configuration file; flags override single keys.
Example configuration::

    {
      "process": {"name": "golden-mean-3-2", "params": {"p": 0.9}},
      "L": [1, 2, 3, 4],
      "N": [10000, 1000000],
      "trials": 5,
      "delta": 0.01,
      "r_max": 8,
      "seed": 2024
    }

``machine_file`` (path to a machine definition) may replace ``process``,
and ``sequence`` (path to a symbol file) supplies data for ``infer`` and
``emo``. Exit status is 0 on success, 2 for configuration errors, 3 for
data or I/O errors and 4 when a numerical routine fails to converge.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DataError, NumericalError
from .inference import SWEEP_COLUMNS, format_params, inference_row, sweep, write_rows
from .perturbation import noise_scaling_experiment, random_deviation, weyl_check
from .process import (
    MachineDefinition,
    load_definition,
    load_zoo,
    read_sequence,
    sample_sequence,
    validate_machine,
    word_probabilities,
    write_sequence,
)
from .quantum import exact_report, quantum_statistical_memory, statistical_complexity
from .rng import derive_seed, make_rng
from .words import effective_markov_order

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

DEFAULT_EPSILONS = [1e-6, 1e-5, 1e-4, 1e-3]


# -- configuration -------------------------------------------------------------

def load_config(args: argparse.Namespace) -> dict:
    cfg = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("configuration must be a JSON object")
        base = Path(args.config).resolve().parent
        for key in ("sequence", "machine_file"):
            if isinstance(cfg.get(key), str):
                cfg[key] = str(base / cfg[key])
    overrides = {
        "out": args.out, "seed": args.seed, "threads": args.threads,
        "sequence": args.sequence, "L": args.L, "N": args.N,
        "delta": args.delta, "r_max": args.r_max, "trials": args.trials,
    }
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    if args.process:
        cfg["process"] = {"name": args.process, "params": _parse_params(args.param)}
        cfg.pop("machine_file", None)
    elif args.param:
        raise ConfigError("--param needs --process")
    return cfg


def _parse_params(items) -> dict:
    params = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"parameter {item!r} is not of the form name=value")
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"parameter {item!r} has a non-numeric value") from None
    return params


def _grid(cfg: dict, key: str) -> list[int]:
    if key not in cfg:
        raise ConfigError(f"configuration needs {key!r}")
    value = cfg[key]
    values = value if isinstance(value, list) else [value]
    if not values:
        raise ConfigError(f"{key!r} grid is empty")
    try:
        out = [int(v) for v in values]
    except (TypeError, ValueError):
        raise ConfigError(f"{key!r} must hold integers") from None
    if any(v < 1 for v in out):
        raise ConfigError(f"{key!r} values must be positive")
    return out


def _seed(cfg: dict) -> int:
    if cfg.get("seed") is None:
        raise ConfigError("a seed is required (set 'seed' or pass --seed)")
    return int(cfg["seed"])


def _delta(cfg: dict) -> float:
    delta = float(cfg.get("delta", 0.01))
    if delta <= 0:
        raise ConfigError("delta must be positive")
    return delta


def _machine(cfg: dict):
    """Return ``(machine, params)`` from ``process`` or ``machine_file``."""
    if "machine_file" in cfg:
        return validate_machine(load_definition(cfg["machine_file"])), {}
    proc = cfg.get("process")
    if proc is None:
        raise ConfigError("configuration names no process or machine_file")
    if isinstance(proc, str):
        proc = {"name": proc}
    params = dict(proc.get("params") or {})
    return validate_machine(load_zoo(proc["name"], params)), params


def _sequence(cfg: dict):
    """Sequence from a file, or a fresh sample of ``process`` at the first ``N``."""
    if "sequence" in cfg:
        return read_sequence(cfg["sequence"])
    machine, _ = _machine(cfg)
    return sample_sequence(machine, _grid(cfg, "N")[0], _seed(cfg))


def _sidecar(path) -> dict | None:
    meta = Path(str(path) + ".json")
    if not meta.exists():
        return None
    with open(meta, encoding="utf-8") as fh:
        return json.load(fh)


def _out(cfg: dict):
    return cfg.get("out") or sys.stdout


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


# -- subcommands ---------------------------------------------------------------

def cmd_generate(cfg: dict) -> None:
    machine, params = _machine(cfg)
    n = _grid(cfg, "N")[0]
    seed = _seed(cfg)
    out = cfg.get("out")
    if not out:
        raise ConfigError("generate needs an output path ('out' or --out)")
    seq = sample_sequence(machine, n, seed)
    write_sequence(seq, out)
    meta = {
        "process": machine.name,
        "params": params,
        "N": n,
        "seed": seed,
        "machine": machine.definition.to_dict(),
    }
    with open(str(out) + ".json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    _note(f"wrote {n} symbols to {out}")


def cmd_infer(cfg: dict) -> None:
    L_values = _grid(cfg, "L")
    seq = _sequence(cfg)
    process, params, cq_exact, cmu = "external", "", None, None
    meta = _sidecar(cfg["sequence"]) if "sequence" in cfg else None
    machine = None
    if meta is not None:
        machine = validate_machine(MachineDefinition.from_dict(meta["machine"]))
        process, params = meta["process"], format_params(meta.get("params"))
    elif "sequence" not in cfg:
        machine, p = _machine(cfg)
        process, params = machine.name, format_params(p)
    if machine is not None:
        cq_exact = quantum_statistical_memory(machine).entropy
        cmu = statistical_complexity(machine)
    rows = [
        inference_row(seq, L, process=process, params=params, cq_exact=cq_exact, cmu=cmu,
                      delta=_delta(cfg), r_max=int(cfg.get("r_max", 8)))
        for L in L_values
    ]
    write_rows(rows, _out(cfg), SWEEP_COLUMNS)


def cmd_exact(cfg: dict) -> None:
    machine, params = _machine(cfg)
    data = exact_report(machine)
    data["params"] = params
    text = json.dumps(data, indent=2) + "\n"
    if cfg.get("out"):
        Path(cfg["out"]).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_emo(cfg: dict) -> None:
    seq = _sequence(cfg)
    profile = effective_markov_order(seq, _delta(cfg), int(cfg.get("r_max", 8)))
    profile.write_csv(_out(cfg))
    if profile.crossed:
        _note(f"R_eff = {profile.r_eff}")
    else:
        _note(f"R_eff absent (threshold never crossed up to r_max = {profile.r_max})")


def cmd_sweep(cfg: dict) -> None:
    machine, params = _machine(cfg)
    rows = sweep(machine, _grid(cfg, "L"), _grid(cfg, "N"), int(cfg.get("trials", 1)), _seed(cfg),
                 delta=_delta(cfg), r_max=int(cfg.get("r_max", 8)), params=params,
                 threads=int(cfg.get("threads", 1)))
    write_rows(rows, _out(cfg), SWEEP_COLUMNS)


def cmd_perturb(cfg: dict) -> None:
    machine, _ = _machine(cfg)
    seed = _seed(cfg)
    opts = dict(cfg.get("perturb") or {})
    mode = opts.get("mode", "weyl")
    L = int(opts.get("L", _grid(cfg, "L")[0] if "L" in cfg else 3))
    if mode == "weyl":
        eps = [float(e) for e in opts.get("epsilons", DEFAULT_EPSILONS)]
        if not eps or any(e < 0 for e in eps):
            raise ConfigError("epsilons must be a nonempty list of nonnegative values")
        P = word_probabilities(machine, 2 * L)
        dP = random_deviation(P, make_rng(derive_seed(seed, int(opts.get("deviation", 0)))))
        report = weyl_check(P, dP, eps, L, slack=float(opts.get("slack", 0.1)),
                            second_order=float(opts.get("second_order", 0.0)))
        report.write_csv(_out(cfg))
        _note(f"||dG||_2 = {report.delta_gram_norm:.6g}; Weyl bound "
              + ("holds at every epsilon" if report.passed else "violated"))
    elif mode == "scaling":
        report = noise_scaling_experiment(machine, L, _grid(cfg, "N"), int(cfg.get("trials", 10)), seed,
                                          threads=int(cfg.get("threads", 1)))
        report.write_csv(_out(cfg))
        _note(f"slope = {report.slope:.4f} +/- {report.slope_se:.4f}")
    else:
        raise ConfigError(f"unknown perturb mode {mode!r} (expected 'weyl' or 'scaling')")


COMMANDS = {
    "generate": (cmd_generate, "sample a sequence from a machine"),
    "infer": (cmd_infer, "estimate C_q from a sequence for each L"),
    "exact": (cmd_exact, "exact C_mu, C_q, D_q and overlaps of a machine"),
    "emo": (cmd_emo, "effective Markov order profile"),
    "sweep": (cmd_sweep, "inference over an (L, N, trial) grid"),
    "perturb": (cmd_perturb, "Weyl-bound check or noise-scaling experiment"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmemory", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--seed", type=int, help="base seed override")
    common.add_argument("--threads", type=int, help="worker threads for grid runs")
    common.add_argument("--process", help="zoo process name (overrides the config)")
    common.add_argument("--param", action="append", metavar="NAME=VALUE",
                        help="process parameter, repeatable")
    common.add_argument("--sequence", help="symbol file to analyse")
    common.add_argument("--L", type=int, nargs="+", help="history lengths")
    common.add_argument("--N", type=int, nargs="+", help="sequence lengths")
    common.add_argument("--delta", type=float, help="effective Markov order threshold")
    common.add_argument("--r-max", dest="r_max", type=int, help="largest r examined")
    common.add_argument("--trials", type=int, help="trials per grid cell")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        COMMANDS[args.command][0](cfg)
    except ConfigError as exc:
        _note(f"config error: {exc}")
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        _note(f"data error: {exc}")
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError) as exc:
        _note(f"numerical error: {exc}")
        return EXIT_NUMERICAL
    except (ValueError, KeyError, TypeError) as exc:
        _note(f"config error: {exc}")
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

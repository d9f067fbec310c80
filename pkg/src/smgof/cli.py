"""Command-line entry point: ``smgof simulate | test | montecarlo``.

Exit codes: 0 success without rejection, 3 at least one test rejected,
64 bad usage, 65 bad config or data, 70 numerical failure. Errors print a
single ``smgof: error exit=<code> type=<name> message=<json string>`` line
to stderr.
"""
from __future__ import annotations

import argparse
import copy
import json
import os
import sys
from pathlib import Path

from . import catalogue, config, harness
from .config import ConfigError
from .errors import SmgofError
from .expr import ExpressionError
from .io import DataError, observation_csv, path_csv, read_observations, write_text
from .observers import observe
from .simulate import SimConfig, seeds_for
from .testing import asymptotic_test, bootstrap_test, NullSimulator

EXIT_OK, EXIT_REJECT, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 3, 64, 65, 70
SEED_ENV = "SMGOF_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parallelism(text):
    if text == "auto":
        return -1
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("must be a positive integer or 'auto'") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer or 'auto'")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", default="-", help="output file (default: stdout)")
    common.add_argument("--seed", type=int, help=f"64-bit seed (fallback: ${SEED_ENV}, then config, then 0)")
    common.add_argument("--parallelism", type=_parallelism, default=1, help="worker count or 'auto'")
    common.add_argument("--timing", action="store_true", help="include wall-clock times in outputs")

    p = _Parser(prog="smgof", description="Wavelet goodness-of-fit tests for volatility models.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="simulate a path and write it as CSV")
    s.add_argument("--observations", action="store_true", help="write the observation series instead")

    t = sub.add_parser("test", parents=[common], help="run the goodness-of-fit test")
    t.add_argument("--alpha", type=float)
    t.add_argument("--method", choices=config.METHODS)
    t.add_argument("--bootstrap-reps", type=int)
    t.add_argument("--data", help="observation CSV (overrides the config)")

    m = sub.add_parser("montecarlo", parents=[common], help="rejection-rate experiments")
    m.add_argument("--scale", type=float, help="fraction of 1000 MC x 1000 bootstrap reps")
    m.add_argument("--rows", help="only catalogue rows whose name contains this text")
    m.add_argument("--ns", type=int, nargs="+", help="sample sizes (default 100 200 500)")
    return p


def _seed(args, cfg) -> int:
    if args.seed is not None:
        seed = args.seed
    elif os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise UsageError(f"{SEED_ENV} is not an integer") from None
    else:
        seed = int(cfg.get("seed", 0))
    if not -(2**63) <= seed < 2**64:
        raise UsageError("seed must fit in 64 bits")
    return seed & (2**64 - 1)


def _load(args, required: bool) -> dict:
    if args.config is None:
        if required:
            raise UsageError(f"{args.command} needs --config")
        return {}
    path = Path(args.config)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    return config.load(path)


def cmd_simulate(args, cfg):
    seed = _seed(args, cfg)
    kind, n = config.kind_of(cfg), config.sample_size(cfg)
    raw = copy.deepcopy(cfg)
    raw.update(kind=kind.value, n=n, euler_substeps=config.substeps(cfg))
    resolved = config.Resolved(raw, seed)
    path = harness.simulate_path(kind, config.sde_spec(cfg), n, SimConfig(seed, config.substeps(cfg)),
                                 config.vol_spec(cfg))
    if args.observations:
        text = observation_csv(observe(path, kind, config.truncation(cfg)), resolved.header())
    else:
        text = path_csv(path, resolved.header())
    write_text(args.out, text)
    return EXIT_OK


def cmd_test(args, cfg):
    seed = _seed(args, cfg)
    kind = config.kind_of(cfg)
    alpha = config.alpha(cfg, args.alpha)
    method = config.method(cfg, args.method)
    data = args.data or cfg.get("data")
    raw = copy.deepcopy(cfg)
    raw.update(kind=kind.value, alpha=alpha, method=method)
    if method != "asymptotic":
        raw["bootstrap_reps"] = config.bootstrap_reps(cfg, args.bootstrap_reps)
    data_seed, boot_seed = seeds_for(seed, 2)
    model = config.null_model(cfg)
    rule = config.truncation(cfg)
    if data:
        path = Path(data)
        if args.data is None and args.config and not path.is_absolute():
            path = Path(args.config).parent / path
        if not path.is_file():
            raise DataError(f"observation file not found: {path}")
        raw["data"] = str(data)
        series = read_observations(path, kind)
    else:
        raw.update(n=config.sample_size(cfg), euler_substeps=config.substeps(cfg))
        sim = harness.simulate_path(kind, config.sde_spec(cfg), raw["n"], SimConfig(data_seed, raw["euler_substeps"]),
                                    config.vol_spec(cfg))
        series = observe(sim, kind, rule)
    reports = []
    if method in ("asymptotic", "both"):
        reports.append(asymptotic_test(series, model, alpha))
    if method in ("bootstrap", "both"):
        null = NullSimulator.for_series(series, model, rule, config.substeps(cfg))
        reports.append(bootstrap_test(series, model, null, alpha, raw["bootstrap_reps"], boot_seed, rule))
    out = config.Resolved(raw, seed).as_json()
    out["reports"] = [r.to_dict(args.timing) for r in reports]
    write_text(args.out, json.dumps(out, indent=2, sort_keys=True) + "\n")
    return EXIT_REJECT if any(r.reject for r in reports) else EXIT_OK


def _custom_scenarios(specs, seed, scale_reps):
    out = []
    for i, (spec, base) in enumerate(zip(specs, seeds_for(seed, len(specs)))):
        config.check_keys(spec)
        kind = config.kind_of(spec)
        mc, boot = scale_reps
        try:
            out.append(harness.Scenario(
                name=str(spec.get("name", f"scenario {i + 1}")), kind=kind, null_model=config.null_model(spec),
                dynamics=config.sde_spec(spec), n=config.sample_size(spec),
                alpha_levels=tuple(spec.get("alpha_levels", catalogue.ALPHAS)),
                mc_reps=int(spec.get("mc_reps", mc)), bootstrap_reps=int(spec.get("bootstrap_reps", boot)),
                base_seed=base, vol_dynamics=config.vol_spec(spec), rule=config.truncation(spec),
                substeps=config.substeps(spec)))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"scenario {i + 1}: {exc}") from None
    return out


def cmd_montecarlo(args, cfg):
    seed = _seed(args, cfg)
    mc = cfg.get("montecarlo") or {}
    scale = args.scale if args.scale is not None else float(mc.get("scale", 1.0))
    if not 0 < scale <= 1:
        raise UsageError("--scale must lie in (0, 1]")
    ns = tuple(args.ns or mc.get("ns", catalogue.NS))
    rows = args.rows if args.rows is not None else mc.get("rows")
    raw = copy.deepcopy(cfg)
    raw["montecarlo"] = dict(mc, scale=scale, ns=list(ns), rows=rows)
    if mc.get("scenarios"):
        scenarios = _custom_scenarios(mc["scenarios"], seed, harness.scaled_reps(scale))
    else:
        unknown = set(ns) - set(catalogue.NS)
        if unknown:
            raise UsageError(f"catalogue sample sizes are {catalogue.NS}, got {sorted(unknown)}")
        select = (lambda row: rows in row.name) if rows else None
        scenarios = harness.table1_scenarios(scale, seed, ns, select)
        if not scenarios:
            raise UsageError(f"no catalogue rows match {rows!r}")
    results = [harness.run_scenario(s, args.parallelism) for s in scenarios]
    header = config.Resolved(raw, seed).header()
    write_text(args.out, harness.results_csv(results, header, args.timing))
    if args.out != "-":
        sys.stdout.write(harness.format_table(results))
    return EXIT_OK


COMMANDS = {"simulate": (cmd_simulate, True), "test": (cmd_test, True), "montecarlo": (cmd_montecarlo, False)}


def _fail(code, exc) -> int:
    sys.stderr.write(f"smgof: error exit={code} type={type(exc).__name__} message={json.dumps(str(exc))}\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        fn, needs_config = COMMANDS[args.command]
        cfg = _load(args, needs_config)
        return fn(args, cfg)
    except UsageError as exc:
        return _fail(EXIT_USAGE, exc)
    except (ConfigError, DataError, ExpressionError, OSError) as exc:
        return _fail(EXIT_DATA, exc)
    except SmgofError as exc:
        return _fail(EXIT_NUMERIC, exc)
    except (ValueError, ArithmeticError, TypeError) as exc:
        return _fail(EXIT_NUMERIC, exc)


if __name__ == "__main__":
    sys.exit(main())

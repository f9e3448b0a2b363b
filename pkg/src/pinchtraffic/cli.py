"""Command-line entry point.

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 config error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import harness
from .opt_average import optimize_average
from .opt_maxmin import optimize_maxmin
from .scenario import InvalidParams, SystemParams, derive_geometry
from .traffic import TrafficMap, active_set, discretize, sample_random_map

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_FAIL, EXIT_USAGE, EXIT_CONFIG, EXIT_IO = 1, 2, 3, 4
SWEEP_KINDS = {"n": "sweep-N", "dx": "sweep-Dx", "tau": "sweep-tau"}
METHODS = ("proposed", "exhaustive", "pg", "hotspot-center", "fixed-array")


class ConfigError(Exception):
    pass


def load_config(path) -> dict:
    """Read a TOML or JSON config; an empty mapping when ``path`` is None."""
    if path is None:
        return {}
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(raw)
        else:
            data = tomllib.loads(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table")
    unknown = set(data) - {"scenario", "traffic", "experiment"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    return data


def scenario_from(cfg: dict, base: SystemParams) -> SystemParams:
    """``base`` with any ``[scenario]`` keys applied on top."""
    section = cfg.get("scenario", {})
    try:
        return SystemParams.from_mapping({**dataclasses.asdict(base), **section})
    except (InvalidParams, TypeError, ValueError) as exc:
        raise ConfigError(f"[scenario]: {exc}") from exc


def traffic_from(cfg: dict, params: SystemParams, seed: int) -> TrafficMap:
    """Explicit ``[traffic] hotspots`` when given, otherwise a random map from ``seed``."""
    section = cfg.get("traffic", {})
    spots = section.get("hotspots")
    try:
        if spots:
            return TrafficMap.from_list(spots, normalize=bool(section.get("normalize", False)))
        return sample_random_map(int(section.get("seed", seed)), params, section.get("n_hotspots"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[traffic]: {exc}") from exc


def _experiment(cfg: dict, args, kind: str, base: SystemParams, **extra) -> harness.ExperimentSpec:
    section = dict(cfg.get("experiment", {}))
    for key in ("trials", "seed", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            section[key] = value
    section.update({k: v for k, v in extra.items() if v is not None})
    if "methods" in section:
        section["methods"] = tuple(section["methods"])
    section["include_timing"] = not args.no_timing
    try:
        return harness.ExperimentSpec(kind=kind, params=scenario_from(cfg, base), **section)
    except TypeError as exc:
        raise ConfigError(f"[experiment]: {exc}") from exc


def _emit_text(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _parse_values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad value list {text!r}") from exc


def _parse_methods(text: str) -> tuple[str, ...]:
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown methods {bad}; choose from {', '.join(METHODS)}")
    return methods


def cmd_optimize(args, cfg) -> int:
    params = scenario_from(cfg, SystemParams())
    seed = args.seed if args.seed is not None else int(cfg.get("experiment", {}).get("seed", 0))
    tmap = traffic_from(cfg, params, seed)
    geom = derive_geometry(params)
    grid = discretize(tmap, params)
    if args.command == "optimize-avg":
        report = optimize_average(geom, grid, tmap)
    else:
        report = optimize_maxmin(geom, grid, active_set(grid, params.tau), tmap=tmap,
                                 max_sweeps=args.max_sweeps)
        if args.trace_csv:
            report.trace_to_csv(args.trace_csv)
    _emit_text(report.to_json(include_timing=not args.no_timing) + "\n", args.out)
    return 0


def _write_rows(rows, args) -> None:
    timing = not args.no_timing
    harness.write_rows_csv(rows, sys.stdout if args.out is None else args.out, timing)
    if args.summary:
        harness.write_summary_csv(harness.summarize(rows), args.summary, timing)


def cmd_compare(args, cfg) -> int:
    values = [int(v) for v in args.values] if args.values else None
    spec = _experiment(cfg, args, "alg-compare", harness.DESK_PARAMS, sweep_values=values, methods=args.methods)
    _write_rows(harness.run_alg_compare(spec), args)
    return 0


def cmd_sweep(args, cfg) -> int:
    spec = _experiment(cfg, args, SWEEP_KINDS[args.var], harness.DESK_PARAMS, sweep_values=args.values,
                       objective=args.objective, methods=args.methods)
    _write_rows(harness.run_sweep(spec), args)
    return 0


def cmd_topview(args, cfg) -> int:
    spec = _experiment(cfg, args, "topview", harness.DESK_PARAMS)
    tmap = None
    if cfg.get("traffic", {}).get("hotspots"):
        tmap = traffic_from(cfg, spec.params, spec.seed)
    payload = harness.run_topview(spec, args.out, tmap=tmap)
    print(json.dumps({"x_avg": payload["x_avg"], "x_maxmin": payload["x_maxmin"]}))
    return 0


def cmd_validate(args, cfg) -> int:
    params = scenario_from(cfg, SystemParams())
    cases = harness.run_validation(params, cases=args.cases, samples=args.samples, seed=args.seed)
    for k, case in enumerate(cases):
        verdict = "PASS" if case.passed else "FAIL"
        print(f"case {k}: x={case.x_cell:.4f} closed_form={case.closed_form:.6e} "
              f"mc={case.mc_mean:.6e} se={case.mc_stderr:.3e} z={case.z:.2f} {verdict}")
    ok = all(c.passed for c in cases)
    print("PASS" if ok else "FAIL")
    return 0 if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pinchtraffic", description="Traffic-aware pinching-antenna placement.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_help="output file (default: stdout)"):
        p.add_argument("--config", help="TOML or JSON config with [scenario], [traffic], [experiment]")
        p.add_argument("--out", help=out_help)
        p.add_argument("--no-timing", action="store_true", help="write wall times as 0 for byte-stable output")
        return p

    for name in ("optimize-avg", "optimize-maxmin"):
        p = common(sub.add_parser(name, help=f"{name.split('-')[1]} objective on one traffic map"))
        p.add_argument("--seed", type=int, help="random map seed when the config has no hotspots")
        if name == "optimize-maxmin":
            p.add_argument("--max-sweeps", type=int, default=100)
            p.add_argument("--trace-csv", help="write the worst-SNR trace here")

    def experiment(p):
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--methods", type=_parse_methods, help="comma-separated: " + ",".join(METHODS))
        p.add_argument("--summary", help="also write per-point means to this CSV")
        return p

    p = experiment(common(sub.add_parser("compare", help="proposed vs exhaustive vs projected gradient"),
                          "rows CSV (default: stdout)"))
    p.add_argument("--values", type=_parse_values, help="antenna counts, e.g. 2,3,4")

    p = experiment(common(sub.add_parser("sweep", help="proposed vs heuristic vs fixed array over one variable"),
                          "rows CSV (default: stdout)"))
    p.add_argument("--var", choices=sorted(SWEEP_KINDS), required=True)
    p.add_argument("--values", type=_parse_values, required=True)
    p.add_argument("--objective", choices=("avg", "maxmin"), default="avg")

    p = common(sub.add_parser("topview", help="single-waveguide heatmap and both optimised positions"),
               "output directory")
    p.set_defaults(out="topview_out")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("validate", help="closed-form average SNR vs fading Monte-Carlo")
    p.add_argument("--config")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int, default=10)
    return parser


COMMANDS = {
    "optimize-avg": cmd_optimize,
    "optimize-maxmin": cmd_optimize,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "topview": cmd_topview,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"pinchtraffic: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"pinchtraffic: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"pinchtraffic: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

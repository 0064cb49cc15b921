"""Command-line front end.

Subcommands::

    playoutsim gen PROFILE N_PACKETS SEED OUT.csv
    playoutsim run TRACE ALGORITHM [--param key=value ...]
    playoutsim compare [TRACE ...] [--algorithms ids]
    playoutsim timeseries TRACE ALGORITHM WINDOW_MS OUT.csv

TRACE is a shipped profile name, a profile INI file or a trace CSV.
Reports go to ``--out-dir``, else ``$PLAYOUTSIM_OUT_DIR``, else ./results.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import statistics
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .algorithms import ALGORITHMS, make_estimator
from .report import (EXTENSIONS, RENDERERS, ReportRow, ReportTable, algorithm_label,
                     parse_formats, render_markdown)
from .simulator import (SimulationConfig, metrics_from_outcomes, metrics_to_dict,
                        mos_timeseries, outcomes_to_csv, replay, simulate, timeseries_to_csv,
                        timeseries_to_dict)
from .trace import (PROFILES, DelayTrace, NetworkProfile, TraceError, export_trace_csv,
                    generate_trace, get_profile, load_profile_config, load_trace_csv,
                    profile_from_mapping, write_text_atomic)

OUT_DIR_ENV = "PLAYOUTSIM_OUT_DIR"
DEFAULT_OUT_DIR = "results"
DEFAULT_N_PACKETS = 10_000
DEFAULT_SEED = 42


class CliError(Exception):
    pass


@dataclass
class TraceSource:
    name: str
    profile: NetworkProfile | None = None
    csv_path: Path | None = None
    n_packets: int = DEFAULT_N_PACKETS
    seed: int = DEFAULT_SEED

    def load(self) -> DelayTrace:
        if self.csv_path is not None:
            return load_trace_csv(self.csv_path)
        return generate_trace(self.profile, self.n_packets, self.seed)

    def describe(self, trace: DelayTrace) -> dict[str, Any]:
        info: dict[str, Any] = {"name": self.name, "packets": len(trace)}
        if self.csv_path is not None:
            info["csv"] = str(self.csv_path)
        else:
            info.update(profile=self.profile.name, base_delay_ms=self.profile.base_delay_ms,
                        seed=self.seed)
        return info


@dataclass
class ExperimentSpec:
    traces: list[TraceSource]
    algorithms: list[SimulationConfig]
    output_dir: Path
    formats: list[str] = field(default_factory=lambda: ["markdown"])

    def __post_init__(self):
        if not self.traces:
            raise CliError("experiment needs at least one trace")
        if not self.algorithms:
            raise CliError("experiment needs at least one algorithm")
        if not self.formats:
            raise CliError("experiment needs at least one output format")


def resolve_trace(text: str, n_packets: int, seed: int) -> TraceSource:
    if text in PROFILES:
        return TraceSource(text, profile=PROFILES[text], n_packets=n_packets, seed=seed)
    path = Path(text)
    if path.suffix.lower() in (".ini", ".cfg", ".conf"):
        profile = load_profile_config(path)
        return TraceSource(profile.name, profile=profile, n_packets=n_packets, seed=seed)
    if path.suffix.lower() == ".csv" or path.exists():
        return TraceSource(path.stem, csv_path=path)
    raise CliError(f"unknown profile {text!r} (expected one of {sorted(PROFILES)} or a file)")


def parse_params(pairs: Sequence[str] | None) -> dict[str, str]:
    params = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise CliError(f"bad --param {pair!r}, expected key=value")
        params[key.strip()] = value.strip()
    return params


def read_config(path: str | None) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    if path and not parser.read(path):
        raise CliError(f"cannot read config {path}")
    return parser


def experiment_from_args(args, config: configparser.ConfigParser) -> ExperimentSpec:
    exp = config["experiment"] if config.has_section("experiment") else {}
    n_packets = args.n_packets or int(exp.get("n_packets", DEFAULT_N_PACKETS))
    seed = args.seed if args.seed is not None else int(exp.get("seed", DEFAULT_SEED))

    traces = []
    if args.traces:
        traces = [resolve_trace(t, n_packets, seed) for t in args.traces]
    else:
        for section in config.sections():
            if not section.startswith("trace:"):
                continue
            values = dict(config[section])
            name = section.split(":", 1)[1]
            t_packets = int(values.pop("n_packets", n_packets))
            t_seed = int(values.pop("seed", seed))
            if "csv" in values:
                traces.append(TraceSource(name, csv_path=Path(values["csv"])))
                continue
            if "profile" in values:
                values["extends"] = values.pop("profile")
            profile = profile_from_mapping(values, name=name) if values else get_profile(name)
            traces.append(TraceSource(name, profile=profile, n_packets=t_packets, seed=t_seed))
    if not traces:
        traces = [TraceSource(name, profile=p, n_packets=n_packets, seed=seed)
                  for name, p in PROFILES.items()]

    window_ms = float(exp.get("window_ms", 5000.0))
    algorithms = []
    if args.algorithms:
        algorithms = [SimulationConfig(a.strip(), window_ms=window_ms)
                      for a in args.algorithms.split(",") if a.strip()]
    else:
        for section in config.sections():
            if section.startswith("algorithm:"):
                values = dict(config[section])
                algorithm_id = values.pop("id", section.split(":", 1)[1])
                algorithms.append(SimulationConfig(algorithm_id, values, window_ms))
    if not algorithms:
        algorithms = [SimulationConfig(a, window_ms=window_ms) for a in ALGORITHMS]

    formats = parse_formats(args.format or exp.get("formats", "markdown"))
    return ExperimentSpec(traces, algorithms, output_dir(args, exp), formats)


def output_dir(args, exp=None) -> Path:
    if args.out_dir:
        return Path(args.out_dir)
    if exp and exp.get("out_dir"):
        return Path(exp["out_dir"])
    return Path(os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR)


def run_experiment(spec: ExperimentSpec) -> list[ReportTable]:
    tables = []
    for source in spec.traces:
        trace = source.load()
        info = source.describe(trace)
        caption = f"Comparison ({source.name}, {len(trace)} packets"
        caption += f", seed {source.seed})" if source.csv_path is None else ")"
        table = ReportTable(caption, info)
        for config in spec.algorithms:
            params = dict(config.algorithm_params)
            row = ReportRow(config.algorithm_id, algorithm_label(config.algorithm_id, params), params)
            try:
                row.metrics, _ = simulate(trace, config)
            except Exception as exc:  # reported per row
                row.error = f"{type(exc).__name__}: {exc}"
            table.rows.append(row)
        tables.append(table)
    return tables


def write_reports(tables: list[ReportTable], spec: ExperimentSpec, stem: str) -> list[Path]:
    written = []
    for fmt in spec.formats:
        path = spec.output_dir / f"{stem}.{EXTENSIONS[fmt]}"
        write_text_atomic(path, RENDERERS[fmt](tables))
        written.append(path)
    return written


def cmd_gen(args) -> int:
    if args.n_packets < 1:
        raise CliError(f"n_packets must be >= 1, got {args.n_packets}")
    if args.profile in PROFILES:
        profile = PROFILES[args.profile]
    elif Path(args.profile).is_file():
        profile = load_profile_config(args.profile)
    else:
        raise CliError(f"unknown profile {args.profile!r} (expected one of {sorted(PROFILES)} "
                       f"or a profile config file)")
    trace = generate_trace(profile, args.n_packets, args.trace_seed)
    export_trace_csv(trace, args.out)
    delays = trace.delays
    print(f"wrote {args.out}: {len(trace)} packets, {len(trace.talkspurts())} talkspurts, "
          f"mean delay {statistics.fmean(delays):.3f} ms, max delay {max(delays):.3f} ms")
    return 0


def cmd_run(args) -> int:
    config = read_config(args.config)
    exp = config["experiment"] if config.has_section("experiment") else {}
    seed = args.seed if args.seed is not None else int(exp.get("seed", DEFAULT_SEED))
    n_packets = args.n_packets or int(exp.get("n_packets", DEFAULT_N_PACKETS))
    source = resolve_trace(args.trace, n_packets, seed)
    trace = source.load()
    params = parse_params(args.param)
    estimator = make_estimator(args.algorithm, params)
    _, outcomes = replay(trace, estimator)
    metrics = metrics_from_outcomes(outcomes)
    series = mos_timeseries(outcomes, args.window_ms, trace.duration_ms)

    row = ReportRow(args.algorithm, algorithm_label(args.algorithm, params), params, metrics)
    table = ReportTable(f"Run ({source.name}, {len(trace)} packets)", source.describe(trace), [row])
    spec = ExperimentSpec([source], [SimulationConfig(args.algorithm, params, args.window_ms)],
                          output_dir(args, exp), parse_formats(args.format or exp.get("formats", "markdown")))
    print(render_markdown([table]), end="")
    for path in write_reports([table], spec, "run"):
        print(f"wrote {path}")
    if "json" in spec.formats:
        doc = {"trace": table.trace, "algorithm_id": args.algorithm, "params": params,
               "metrics": metrics_to_dict(metrics), "timeseries": timeseries_to_dict(series)}
        path = spec.output_dir / "run_detail.json"
        write_text_atomic(path, json.dumps(doc, indent=2) + "\n")
        print(f"wrote {path}")
    if args.packets_out:
        write_text_atomic(args.packets_out, outcomes_to_csv(outcomes))
        print(f"wrote {args.packets_out}")
    return 0


def cmd_compare(args) -> int:
    spec = experiment_from_args(args, read_config(args.config))
    tables = run_experiment(spec)
    print(render_markdown(tables), end="")
    for path in write_reports(tables, spec, "compare"):
        print(f"wrote {path}")
    failed = [(t.caption, r.label, r.error) for t in tables for r in t.rows if r.error]
    for caption, label, error in failed:
        print(f"error: {caption} / {label}: {error}", file=sys.stderr)
    return 1 if failed else 0


def cmd_timeseries(args) -> int:
    if args.window_ms <= 0:
        raise CliError(f"window_ms must be positive, got {args.window_ms}")
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    source = resolve_trace(args.trace, args.n_packets or DEFAULT_N_PACKETS, seed)
    trace = source.load()
    config = SimulationConfig(args.algorithm, parse_params(args.param), args.window_ms)
    _, series = simulate(trace, config)
    write_text_atomic(args.out, timeseries_to_csv(series))
    print(f"wrote {args.out}: {len(series.points)} windows of {args.window_ms:g} ms")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="playoutsim", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, help=f"seed for profile-generated traces (default {DEFAULT_SEED})")
    parser.add_argument("--format", help="comma-separated report formats: markdown,csv,json")
    parser.add_argument("--out-dir", help=f"report directory (default ${OUT_DIR_ENV} or ./{DEFAULT_OUT_DIR})")
    parser.add_argument("--config", help="INI experiment config")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a trace CSV from a network profile")
    p.add_argument("profile", help=f"one of {', '.join(PROFILES)} or a profile INI file")
    p.add_argument("n_packets", type=int)
    p.add_argument("trace_seed", type=int, metavar="seed")
    p.add_argument("out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="replay one trace through one algorithm")
    p.add_argument("trace")
    p.add_argument("algorithm", choices=sorted(ALGORITHMS))
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--n-packets", type=int)
    p.add_argument("--window-ms", type=float, default=5000.0)
    p.add_argument("--packets-out", help="write per-packet playout decisions to this CSV")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="compare algorithms on one or more traces")
    p.add_argument("traces", nargs="*", help="profiles or CSV files (default: all shipped profiles)")
    p.add_argument("--algorithms", help="comma-separated algorithm ids (default: all)")
    p.add_argument("--n-packets", type=int)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("timeseries", help="per-window MOS for one algorithm")
    p.add_argument("trace")
    p.add_argument("algorithm", choices=sorted(ALGORITHMS))
    p.add_argument("window_ms", type=float)
    p.add_argument("out")
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--n-packets", type=int)
    p.set_defaults(func=cmd_timeseries)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, TraceError, ValueError, OSError, configparser.Error) as exc:
        print(f"playoutsim {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

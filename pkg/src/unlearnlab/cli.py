"""Command-line interface: run sweeps, validate configs, regenerate summaries.

Config files are INI key/value sections mirroring ExperimentConfig. Unknown
keys are rejected; missing keys fall back to the paper defaults with a logged
notice. Exit codes: 0 success, 2 configuration problem, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, NumericError
from .harness import (
    ExperimentConfig,
    Model,
    PAPER_ALPHA_GRID,
    PAPER_BETA_GRID,
    RunFailure,
    RunResult,
    RunSpec,
    run_sweep,
    summarize,
    table_row_specs,
)
from .metrics import SummaryRecord, mean_std, overshoot, parameter_shock, recovery_time
from .stream import Environment, StreamConfig

log = logging.getLogger("unlearnlab")

ROUNDS_HEADER = [
    "run_id", "seed", "model", "env", "intervention", "t", "loss", "cum_regret",
    "tracking_error", "trace_A", "cond_A", "cos_state", "cos_update",
]
SUMMARY_HEADER = [
    "model", "environment", "intervention", "n_seeds",
    "recovery_time_mean", "recovery_time_std", "overshoot_mean", "overshoot_std",
    "param_shock_mean", "param_shock_std", "final_regret_mean", "final_regret_std",
    "censored_runs",
]

_SCHEMA: dict[str, dict[str, str]] = {
    "stream": {
        "dimension": "int", "horizon": "int", "target_radius": "float",
        "drift_rate": "float", "noise_std": "float",
    },
    "experiment": {
        "seeds": "int", "seed_list": "intlist", "tau": "int", "deleted_count": "int",
        "models": "strlist", "ogd_environments": "strlist", "ons_environments": "strlist",
        "alpha_grid": "floatlist", "beta_grid": "floatlist", "deletion": "str",
    },
    "ogd": {"eta0": "float", "radius": "float"},
    "ons": {"eta": "float", "lambda": "float", "radius": "float"},
    "metrics": {
        "smoothing_window": "int", "recovery_tolerance": "float", "reference_window": "int",
    },
    "output": {"directory": "str", "format": "str"},
}


class ResolvedConfig:
    """Effective experiment settings after file, defaults, and CLI overrides."""

    def __init__(self) -> None:
        self.experiment = ExperimentConfig()
        self.models: tuple[Model, ...] = (Model.OGD, Model.ONS)
        self.ogd_environments = (Environment.STATIONARY, Environment.DRIFTING)
        self.ons_environments = (Environment.DRIFTING,)
        self.alpha_grid: tuple[float, ...] = PAPER_ALPHA_GRID
        self.beta_grid: tuple[float, ...] = PAPER_BETA_GRID
        self.deletion_enabled: bool = True
        self.out_dir: str | None = None
        self.out_format: str = "csv"

    def row_specs(self) -> list[RunSpec]:
        return table_row_specs(
            seeds=self.experiment.seeds, models=self.models,
            ogd_environments=self.ogd_environments, ons_environments=self.ons_environments,
            alpha_grid=self.alpha_grid, beta_grid=self.beta_grid,
        )

    def echo_lines(self) -> list[str]:
        exp = self.experiment
        st = exp.stream
        return [
            f"stream.dimension = {st.dimension}",
            f"stream.horizon = {st.horizon}",
            f"stream.target_radius = {st.target_radius!r}",
            f"stream.drift_rate = {st.drift_rate!r}",
            f"stream.noise_std = {st.noise_std!r}",
            f"experiment.tau = {exp.tau}",
            f"experiment.deleted_count = {exp.deleted_count}",
            f"experiment.seeds = {','.join(str(s) for s in exp.seeds)}",
            f"experiment.models = {','.join(m.value for m in self.models)}",
            f"experiment.ogd_environments = {','.join(e.value for e in self.ogd_environments)}",
            f"experiment.ons_environments = {','.join(e.value for e in self.ons_environments)}",
            f"experiment.alpha_grid = {','.join(repr(a) for a in self.alpha_grid)}",
            f"experiment.beta_grid = {','.join(repr(b) for b in self.beta_grid)}",
            f"experiment.deletion = {'on' if self.deletion_enabled else 'off'}",
            f"ogd.eta0 = {exp.eta0!r}",
            f"ogd.radius = {exp.ogd_radius!r}",
            f"ons.eta = {exp.eta!r}",
            f"ons.lambda = {exp.lam!r}",
            f"ons.radius = {exp.ons_radius!r}",
            f"metrics.smoothing_window = {exp.smoothing_window}",
            f"metrics.recovery_tolerance = {exp.recovery_tolerance!r}",
            f"metrics.reference_window = {exp.reference_window}",
            f"output.directory = {self.out_dir or ''}",
            f"output.format = {self.out_format}",
        ]


def _parse_list(raw: str, conv):
    raw = raw.strip()
    if not raw:
        return ()
    return tuple(conv(part.strip()) for part in raw.split(","))


def _parse_config_file(path: str) -> ResolvedConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found or unreadable: {path}")
    problems: list[str] = []
    for section in parser.sections():
        if section not in _SCHEMA:
            problems.append(f"unknown section [{section}]")
            continue
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                problems.append(f"unknown key {section}.{key}")
    if problems:
        raise ConfigError("; ".join(problems))

    resolved = ResolvedConfig()
    missing = 0

    def get(section: str, key: str, default, conv):
        nonlocal missing
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            try:
                return conv(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {raw!r} ({exc})") from exc
        missing += 1
        return default

    exp = resolved.experiment
    st = exp.stream
    stream_cfg = StreamConfig(
        dimension=get("stream", "dimension", st.dimension, int),
        horizon=get("stream", "horizon", st.horizon, int),
        environment=st.environment,
        target_radius=get("stream", "target_radius", st.target_radius, float),
        drift_rate=get("stream", "drift_rate", st.drift_rate, float),
        noise_std=get("stream", "noise_std", st.noise_std, float),
    )
    if parser.has_option("experiment", "seed_list"):
        seeds = get("experiment", "seed_list", exp.seeds, lambda r: _parse_list(r, int))
    else:
        n = get("experiment", "seeds", len(exp.seeds), int)
        if n < 1:
            raise ConfigError(f"experiment.seeds must be >= 1, got {n}")
        seeds = tuple(range(1, n + 1))
    resolved.experiment = ExperimentConfig(
        stream=stream_cfg,
        tau=get("experiment", "tau", exp.tau, int),
        deleted_count=get("experiment", "deleted_count", exp.deleted_count, int),
        eta0=get("ogd", "eta0", exp.eta0, float),
        ogd_radius=get("ogd", "radius", exp.ogd_radius, float),
        eta=get("ons", "eta", exp.eta, float),
        lam=get("ons", "lambda", exp.lam, float),
        ons_radius=get("ons", "radius", exp.ons_radius, float),
        seeds=seeds,
        smoothing_window=get("metrics", "smoothing_window", exp.smoothing_window, int),
        recovery_tolerance=get("metrics", "recovery_tolerance", exp.recovery_tolerance, float),
        reference_window=get("metrics", "reference_window", exp.reference_window, int),
    )
    resolved.models = get("experiment", "models", resolved.models,
                          lambda r: tuple(Model(v) for v in _parse_list(r, str)))
    resolved.ogd_environments = get("experiment", "ogd_environments", resolved.ogd_environments,
                                    lambda r: tuple(Environment(v) for v in _parse_list(r, str)))
    resolved.ons_environments = get("experiment", "ons_environments", resolved.ons_environments,
                                    lambda r: tuple(Environment(v) for v in _parse_list(r, str)))
    resolved.alpha_grid = get("experiment", "alpha_grid", resolved.alpha_grid,
                              lambda r: _parse_list(r, float))
    resolved.beta_grid = get("experiment", "beta_grid", resolved.beta_grid,
                             lambda r: _parse_list(r, float))
    deletion = get("experiment", "deletion", "on", str)
    if deletion not in ("on", "off"):
        raise ConfigError(f"experiment.deletion must be on or off, got {deletion!r}")
    resolved.deletion_enabled = deletion == "on"
    resolved.out_dir = get("output", "directory", None, str)
    resolved.out_format = get("output", "format", "csv", str)
    if missing:
        log.info("filled %d missing config keys with paper defaults", missing)
    return resolved


def _apply_overrides(resolved: ResolvedConfig, args: argparse.Namespace) -> ResolvedConfig:
    exp = resolved.experiment
    if getattr(args, "seed_list", None):
        exp = replace(exp, seeds=_parse_list(args.seed_list, int))
    elif getattr(args, "seeds", None):
        exp = replace(exp, seeds=tuple(range(1, args.seeds + 1)))
    resolved.experiment = exp
    if getattr(args, "model", None):
        resolved.models = (Model(args.model),)
    if getattr(args, "env", None):
        env = (Environment(args.env),)
        resolved.ogd_environments = env
        resolved.ons_environments = env
    if getattr(args, "alpha_grid", None) is not None:
        resolved.alpha_grid = _parse_list(args.alpha_grid, float)
    if getattr(args, "beta_grid", None) is not None:
        resolved.beta_grid = _parse_list(args.beta_grid, float)
    if getattr(args, "deletion", None):
        resolved.deletion_enabled = args.deletion == "on"
    if getattr(args, "format", None):
        resolved.out_format = args.format
    if getattr(args, "out", None):
        resolved.out_dir = args.out
    if resolved.out_dir is None:
        resolved.out_dir = os.environ.get("UNLEARN_OUT_DIR")
    return resolved


def _validate_resolved(resolved: ResolvedConfig) -> list[str]:
    problems: list[str] = []
    try:
        resolved.experiment.validate()
    except ConfigError as exc:
        problems.append(str(exc))
    exp = resolved.experiment
    if exp.tau < exp.deleted_count:
        problems.append("deletion set precedes stream start")
    for a in resolved.alpha_grid:
        if not a > 0:
            problems.append(f"alpha must be positive, got {a}")
    for b in resolved.beta_grid:
        if not 0 < b < 1:
            problems.append(f"beta must lie in (0,1), got {b}")
    if resolved.out_format not in ("csv", "json"):
        problems.append(f"format must be csv or json, got {resolved.out_format!r}")
    if not resolved.models:
        problems.append("at least one model is required")
    return problems


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _rounds_rows(results: list[RunResult]) -> list[list[str]]:
    rows = []
    for result in results:
        spec = result.spec
        base = [spec.run_id(), str(spec.seed), spec.model.value,
                spec.environment.value, spec.intervention.label()]
        for rec in result.records:
            rows.append(base + [
                str(rec.t), _fmt(rec.loss), _fmt(rec.cum_regret), _fmt(rec.tracking_error),
                _fmt(rec.trace_A), _fmt(rec.cond_A), _fmt(rec.cos_state), _fmt(rec.cos_update),
            ])
    return rows


def _summary_rows(records: list[SummaryRecord]) -> list[list[str]]:
    rows = []
    for s in records:
        rows.append([
            s.model, s.environment, s.intervention, str(s.n_seeds),
            _fmt(s.recovery_time_mean), _fmt(s.recovery_time_std),
            _fmt(s.overshoot_mean), _fmt(s.overshoot_std),
            _fmt(s.param_shock_mean), _fmt(s.param_shock_std),
            _fmt(s.final_regret_mean), _fmt(s.final_regret_std),
            str(s.censored_runs),
        ])
    return rows


def _write_table(path: Path, header: list[str], rows: list[list[str]], fmt: str) -> None:
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    else:
        records = [dict(zip(header, row)) for row in rows]
        with open(path, "w") as fh:
            json.dump(records, fh, indent=1)
            fh.write("\n")


def cmd_run(args: argparse.Namespace) -> int:
    resolved = _parse_config_file(args.config) if args.config else ResolvedConfig()
    resolved = _apply_overrides(resolved, args)
    problems = _validate_resolved(resolved)
    if problems:
        for p in problems:
            print(f"config error: {p}", file=sys.stderr)
        return 2
    if not resolved.out_dir:
        print("config error: no output directory (--out, [output] directory, or UNLEARN_OUT_DIR)",
              file=sys.stderr)
        return 2
    out_dir = Path(resolved.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    specs = resolved.row_specs()
    results = run_sweep(resolved.experiment, specs, parallelism=args.parallelism,
                        with_event=resolved.deletion_enabled)
    failures = [r for r in results if isinstance(r, RunFailure)]
    ok = [r for r in results if isinstance(r, RunResult)]
    ext = "csv" if resolved.out_format == "csv" else "json"
    if ok:
        _write_table(out_dir / f"rounds.{ext}", ROUNDS_HEADER, _rounds_rows(ok), resolved.out_format)
        _write_table(out_dir / f"summary.{ext}", SUMMARY_HEADER,
                     _summary_rows(summarize(results)), resolved.out_format)
    for f in failures:
        print(f"run failed: {f.spec.run_id()}: {f.error}", file=sys.stderr)
    if failures:
        return 3
    print(f"wrote {out_dir / f'rounds.{ext}'} and {out_dir / f'summary.{ext}'}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        resolved = _parse_config_file(args.config) if args.config else ResolvedConfig()
        resolved = _apply_overrides(resolved, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    problems = _validate_resolved(resolved)
    if problems:
        for p in problems:
            print(f"config error: {p}", file=sys.stderr)
        return 2
    for line in resolved.echo_lines():
        print(line)
    return 0


def _summarize_from_rounds(path: str, exp: ExperimentConfig) -> list[SummaryRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"rounds file is empty: {path}")
        if header != ROUNDS_HEADER:
            unexpected = [c for c in header if c not in ROUNDS_HEADER]
            missing = [c for c in ROUNDS_HEADER if c not in header]
            bad = unexpected or missing
            raise ConfigError(f"rounds schema mismatch on column {bad[0]!r}")
        runs: dict[str, dict] = {}
        order: list[str] = []
        for row in reader:
            if len(row) != len(ROUNDS_HEADER):
                raise ConfigError(f"rounds schema mismatch on column {ROUNDS_HEADER[len(row)]!r}")
            run_id = row[0]
            if run_id not in runs:
                runs[run_id] = {
                    "model": row[2], "env": row[3], "intervention": row[4],
                    "losses": [], "errors": [], "regrets": [],
                }
                order.append(run_id)
            runs[run_id]["losses"].append(float(row[6]))
            runs[run_id]["regrets"].append(float(row[7]))
            runs[run_id]["errors"].append(float(row[8]))
    if not order:
        raise ConfigError(f"rounds file has no data rows: {path}")

    groups: dict[tuple[str, str, str], dict] = {}
    group_order: list[tuple[str, str, str]] = []
    for run_id in order:
        run = runs[run_id]
        rec, censored = recovery_time(
            run["losses"], exp.tau, exp.smoothing_window,
            exp.recovery_tolerance, exp.reference_window,
        )
        over = overshoot(run["losses"], exp.tau, exp.smoothing_window, exp.reference_window)
        shock = parameter_shock(run["errors"], exp.tau)
        key = (run["model"], run["env"], run["intervention"])
        if key not in groups:
            groups[key] = {"rec": [], "over": [], "shock": [], "reg": [], "cens": 0}
            group_order.append(key)
        g = groups[key]
        g["rec"].append(rec)
        g["over"].append(over)
        g["shock"].append(shock)
        g["reg"].append(run["regrets"][-1])
        g["cens"] += int(censored)
    out = []
    for key in group_order:
        g = groups[key]
        rec_m, rec_s = mean_std(g["rec"])
        over_m, over_s = mean_std(g["over"])
        shock_m, shock_s = mean_std(g["shock"])
        reg_m, reg_s = mean_std(g["reg"])
        out.append(SummaryRecord(
            model=key[0], environment=key[1], intervention=key[2], n_seeds=len(g["rec"]),
            recovery_time_mean=rec_m, recovery_time_std=rec_s,
            overshoot_mean=over_m, overshoot_std=over_s,
            param_shock_mean=shock_m, param_shock_std=shock_s,
            final_regret_mean=reg_m, final_regret_std=reg_s,
            censored_runs=g["cens"],
        ))
    return out


def cmd_summarize(args: argparse.Namespace) -> int:
    resolved = _parse_config_file(args.config) if args.config else ResolvedConfig()
    resolved = _apply_overrides(resolved, args)
    out_dir = Path(resolved.out_dir) if resolved.out_dir else Path(args.rounds).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    records = _summarize_from_rounds(args.rounds, resolved.experiment)
    path = out_dir / "summary.csv"
    _write_table(path, SUMMARY_HEADER, _summary_rows(records), "csv")
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unlearnlab",
        description="Twin-run deletion experiments for online learners",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="INI config file")
        p.add_argument("--out", help="output directory (or env UNLEARN_OUT_DIR)")
        p.add_argument("--seeds", type=int, help="use seeds 1..N")
        p.add_argument("--seed-list", help="comma-separated explicit seeds")
        p.add_argument("--model", choices=[m.value for m in Model], help="restrict to one model")
        p.add_argument("--env", choices=[e.value for e in Environment],
                       help="restrict both models to one environment")
        p.add_argument("--alpha-grid", help="comma-separated partial-reset grid (empty to disable)")
        p.add_argument("--beta-grid", help="comma-separated decay grid (empty to disable)")
        p.add_argument("--deletion", choices=["on", "off"],
                       help="fire the deletion event at tau (default on)")
        p.add_argument("--format", choices=["csv", "json"], help="output format (default csv)")
        p.add_argument("--parallelism", type=int, default=1, help="sweep worker processes")

    run_p = sub.add_parser("run", help="execute the sweep and write rounds + summary")
    add_common(run_p)
    run_p.set_defaults(func=cmd_run)

    val_p = sub.add_parser("validate", help="check a config without running")
    add_common(val_p)
    val_p.set_defaults(func=cmd_validate)

    sum_p = sub.add_parser("summarize", help="regenerate summary.csv from rounds.csv")
    sum_p.add_argument("rounds", help="path to rounds.csv")
    add_common(sum_p)
    sum_p.set_defaults(func=cmd_summarize)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, RuntimeError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

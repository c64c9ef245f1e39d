"""Scenario runner CLI.

    simulate <scenario> [--config FILE] [--seed N] [--traj N] [--check]
                        [--out DIR] [--workers N]

Configs are flat ``key = value`` files (# comments allowed; see the README
for the grammar) or, alternatively, a JSON object. Outputs per run:

    timeseries.csv   canonical columns t, p_e_traj, p_e_master, entropy,
                     stderr plus scenario-specific extras (empty where a
                     series does not apply)
    events.jsonl     one JSON record per trajectory
    plotdata.csv     long format (t, series, value)
    markers.csv      jump markers (t, channel) of the displayed trajectory
    waiting_hist.csv inter-jump waiting-time histograms per channel
    report.json      checks, fitted rates, comparisons
    manifest.txt     config hash, seed, code version, timestamp

CSV numbers are full-precision scientific notation with '.' decimal
separator; identical configs and seeds reproduce identical bytes
(the manifest timestamp aside).
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import jump_statistics
from .scenarios import (
    PRESETS,
    SCENARIOS,
    RunConfig,
    ScenarioResult,
    compute_scenario,
    config_errors,
)
from .trajectory import write_records_jsonl

__all__ = ["ConfigError", "validate_config", "run_scenario", "emit_plotdata",
           "main"]

_CANONICAL_COLUMNS = ("t", "p_e_traj", "p_e_master", "entropy", "stderr")

_INT_KEYS = {"n_traj", "master_seed", "n_trunc", "workers", "fock_n"}
_FLOAT_KEYS = {"omega", "kappa_ratio", "kappa_l", "gamma", "delta", "t_end",
               "dt_master", "dt_traj", "sample_every", "pulse_off",
               "fit_start", "fit_stop"}
_STR_KEYS = {"scenario", "out_dir"}
_BOOL_KEYS = {"check"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS | _BOOL_KEYS


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every problem found."""

    def __init__(self, errors: list[str]):
        super().__init__("\n".join(errors))
        self.errors = list(errors)


def _parse_scalar(raw: str, key: str):
    raw = raw.strip()
    if key in _BOOL_KEYS:
        if raw.lower() in ("true", "yes", "on", "1"):
            return True
        if raw.lower() in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"expected a boolean for {key}, got {raw!r}")
    if key in _INT_KEYS:
        return int(raw, 0)
    if key in _FLOAT_KEYS:
        return float(raw)
    if raw and raw[0] in "\"'" and raw[-1] == raw[0] and len(raw) >= 2:
        return raw[1:-1]
    return raw


def _parse_keyvalue(text: str) -> tuple[dict, list[str]]:
    values, errors = {}, []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            errors.append(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
            continue
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if key not in _ALL_KEYS:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        try:
            values[key] = _parse_scalar(raw, key)
        except ValueError as exc:
            errors.append(f"line {lineno}: {exc}")
    return values, errors


def _parse_json(text: str) -> tuple[dict, list[str]]:
    values, errors = {}, []
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        return {}, [f"invalid JSON config: {exc}"]
    if not isinstance(obj, dict):
        return {}, ["JSON config must be an object of key/value pairs"]
    for key, val in obj.items():
        if key not in _ALL_KEYS:
            errors.append(f"unknown key {key!r}")
        else:
            try:
                values[key] = _parse_scalar(str(val), key) \
                    if not isinstance(val, (int, float, bool)) else (
                        bool(val) if key in _BOOL_KEYS else
                        int(val) if key in _INT_KEYS else
                        float(val) if key in _FLOAT_KEYS else val)
            except ValueError as exc:
                errors.append(str(exc))
    return values, errors


def validate_config(path: str | Path | None, scenario: str | None = None,
                    overrides: dict | None = None) -> RunConfig:
    """Parse and constraint-check a config file; every error is reported.

    Precedence: scenario preset < config file < explicit overrides (CLI
    flags). ``path`` may be None to run a preset unchanged.
    """
    errors: list[str] = []
    values: dict = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError([f"config file not found: {p}"])
        text = p.read_text(encoding="utf-8")
        if not text.strip():
            raise ConfigError([f"config file is empty: {p}"])
        if text.lstrip().startswith("{") or p.suffix.lower() == ".json":
            values, errors = _parse_json(text)
        else:
            values, errors = _parse_keyvalue(text)

    name = scenario or values.get("scenario")
    if name is None:
        errors.append("no scenario given (argument or 'scenario =' key)")
    elif name not in SCENARIOS:
        errors.append(f"unknown scenario {name!r}; "
                      f"valid scenarios: {', '.join(SCENARIOS)}")
    if name not in SCENARIOS:
        raise ConfigError(errors)

    merged = dict(PRESETS[name])
    values.pop("scenario", None)
    merged.update(values)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})
    cfg = RunConfig(scenario=name, **merged)

    errors.extend(config_errors(cfg))
    if errors:
        raise ConfigError(errors)
    return cfg


# ---------------------------------------------------------------------------
# output writers

def _fmt(x) -> str:
    return "%.17e" % float(x)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\r\n")
        for row in rows:
            fh.write(",".join(row) + "\r\n")


def _write_timeseries(result: ScenarioResult, out: Path) -> None:
    cols = dict(result.columns)
    t = cols.pop("t")
    extras = [k for k in cols if k not in _CANONICAL_COLUMNS]
    names = [c for c in _CANONICAL_COLUMNS if c != "t"] + extras
    header = ["t"] + names
    rows = []
    for i in range(len(t)):
        row = [_fmt(t[i])]
        for name in names:
            series = cols.get(name)
            if series is None:
                row.append("")
            else:
                v = series[i]
                row.append("" if (isinstance(v, float) and np.isnan(v)) or
                           (hasattr(v, "item") and np.isnan(v)) else _fmt(v))
        rows.append(row)
    _write_csv(out / "timeseries.csv", header, rows)


def emit_plotdata(result: ScenarioResult, out_dir: str | Path) -> list[Path]:
    """Long-format plot data plus the jump-marker table.

    plotdata.csv has one row per (t, series) pair; markers.csv mirrors the
    detection record of the displayed trajectory. Empty results produce
    header-only files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    plot_path = out / "plotdata.csv"
    rows = []
    for name in sorted(result.series):
        t, values = result.series[name]
        for ti, vi in zip(t, values):
            if np.isnan(vi):
                continue
            rows.append([_fmt(ti), name, _fmt(vi)])
    _write_csv(plot_path, ["t", "series", "value"], rows)

    marker_path = out / "markers.csv"
    _write_csv(marker_path, ["t", "channel"],
               [[_fmt(t), ch] for t, ch in result.markers])
    return [plot_path, marker_path]


def _write_waiting_hist(result: ScenarioResult, out: Path, bins: int = 30) -> None:
    rows = []
    if result.records:
        stats = jump_statistics(result.records)
        for ch in sorted(stats.waiting_times, key=lambda c: c.value):
            w = stats.waiting_times[ch]
            if w.size == 0:
                continue
            counts, edges = np.histogram(w, bins=bins)
            for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
                rows.append([ch.value, _fmt(lo), _fmt(hi), str(int(c))])
    _write_csv(out / "waiting_hist.csv",
               ["channel", "bin_left", "bin_right", "count"], rows)


def _public_config(cfg: RunConfig) -> dict:
    # physics configuration only: output path and gating are run plumbing
    d = dataclasses.asdict(cfg)
    d.pop("out_dir", None)
    d.pop("check", None)
    return d


def _config_hash(cfg: RunConfig) -> str:
    canonical = json.dumps(_public_config(cfg), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


def _write_manifest(cfg: RunConfig, result: ScenarioResult, out: Path,
                    elapsed: float) -> None:
    lines = [
        f"scenario = {cfg.scenario}",
        f"config_sha256 = {_config_hash(cfg)}",
        f"master_seed = {cfg.master_seed}",
        f"code_version = {__version__}",
        f"n_traj = {cfg.n_traj}",
        f"workers = {cfg.workers}",
        f"passed = {str(result.passed).lower()}",
        f"elapsed_seconds = {elapsed:.3f}",
        f"written_utc = {time.strftime('%Y-%m-%dT%H:%M:%SZ', time.gmtime())}",
    ]
    (out / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_scenario(cfg: RunConfig) -> int:
    """Execute one scenario and write its output files.

    Returns the process exit status: nonzero when ``cfg.check`` is set and
    any acceptance check failed.
    """
    started = time.monotonic()
    result = compute_scenario(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    _write_timeseries(result, out)
    write_records_jsonl(result.records, out / "events.jsonl")
    emit_plotdata(result, out)
    _write_waiting_hist(result, out)

    report = {
        "scenario": cfg.scenario,
        "config": _public_config(cfg),
        "checks": result.checks,
        "passed": result.passed,
        "results": result.report,
    }
    (out / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_manifest(cfg, result, out, time.monotonic() - started)

    for c in result.checks:
        status = "pass" if c["passed"] else "FAIL"
        print(f"[{status}] {cfg.scenario}: {c['name']} = {c['value']:.6g} "
              f"({c['op']} {c['tolerance']:g})")
    print(f"wrote {out / 'timeseries.csv'}")
    if cfg.check and not result.passed:
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Run a named scenario of the driven-atom simulator.")
    parser.add_argument("scenario", help=f"one of: {', '.join(SCENARIOS)}")
    parser.add_argument("--config", default=None, help="key=value or JSON file")
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--traj", type=int, default=None,
                        help="number of trajectories")
    parser.add_argument("--check", action="store_true",
                        help="exit nonzero unless all scenario checks pass")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker processes (0 = available parallelism)")
    args = parser.parse_args(argv)

    if args.scenario not in SCENARIOS:
        print(f"error: unknown scenario {args.scenario!r}\n"
              f"valid scenarios: {', '.join(SCENARIOS)}", file=sys.stderr)
        return 2

    overrides = {
        "master_seed": args.seed,
        "n_traj": args.traj,
        "out_dir": args.out,
        "workers": args.workers,
        "check": True if args.check else None,
    }
    try:
        cfg = validate_config(args.config, scenario=args.scenario,
                              overrides=overrides)
    except ConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return 2

    return run_scenario(cfg)


if __name__ == "__main__":
    sys.exit(main())

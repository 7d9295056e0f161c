"""Batch command-line front end.

Usage::

    nspradar simulate --config run.cfg --trials 1000 --hrms 1,2,3,4 --out results/

The config file is flat ``key = value`` text (``#`` starts a comment);
command-line flags override file values. Exit status is 0 on success, 1 for
an invalid configuration and 2 for a runtime failure (including any arm
without a single successful trial).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import fields
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, kernels
from .montecarlo import (
    ArmRecord,
    ConfigError,
    ExperimentConfig,
    ExperimentError,
    ExperimentSummary,
    arm_records,
    run_experiment,
    summarize,
)

log = logging.getLogger("nspradar")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

TRIALS_HEADER = ["trial_id", "arm", "h_rms", "theta_true_deg", "theta_hat_deg", "leakage", "nullity", "failed"]
SUMMARY_HEADER = ["arm", "h_rms", "rmse_deg", "bias_deg", "mean_leakage", "n_trials"]
SCATTER_HEADER = ["theta_true_deg", "theta_hat_deg"]

_ALIASES = {
    "h_rms": "h_rms_values",
    "hrms": "h_rms_values",
    "trials": "num_trials",
    "seed": "master_seed",
    "snr": "snr_db",
    "grid_step": "grid_step_deg",
    "l": "num_samples",
}
_FIELDS = {f.name: f for f in fields(ExperimentConfig)}


def _convert(key: str, raw):
    if key == "h_rms_values":
        if isinstance(raw, str):
            parts = [p for p in raw.replace(" ", "").split(",") if p]
            if not parts:
                raise ConfigError(key, "empty sweep list")
            return tuple(float(p) for p in parts)
        return tuple(float(v) for v in raw)
    default = _FIELDS[key].default
    if isinstance(default, bool):
        return str(raw).lower() in ("1", "true", "yes")
    if isinstance(default, int):
        value = float(raw)
        if value != int(value):
            raise ConfigError(key, f"expected an integer, got {raw!r}")
        return int(value)
    if isinstance(default, float):
        return float(raw)
    return str(raw)


def read_config_file(path) -> dict:
    """Parse a flat ``key = value`` file into a raw dict (no validation)."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, value = line.split("=", 1)
            elif ":" in line:
                key, value = line.split(":", 1)
            else:
                raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
            values[key.strip()] = value.strip().strip("'\"")
    return values


def parse_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Build a validated :class:`ExperimentConfig`.

    ``overrides`` (e.g. from command-line flags) win over file values;
    ``None`` entries are ignored. Unknown keys raise :class:`ConfigError`.
    """
    raw = read_config_file(path) if path is not None else {}
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    kwargs = {}
    for key, value in raw.items():
        name = key.strip().lower().replace("-", "_")
        name = _ALIASES.get(name, name)
        if name not in _FIELDS:
            raise ConfigError(key, "unknown configuration key")
        try:
            kwargs[name] = _convert(name, value)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(key, f"cannot parse {value!r}") from None
    return ExperimentConfig(**kwargs)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _h_label(h: float) -> str:
    return format(h, "g")


def emit_results(summary: ExperimentSummary, trials, out_dir, config: ExperimentConfig | None = None,
                 timestamp: str | None = None) -> dict:
    """Write ``trials.csv``, ``summary.csv``, ``scatter_<arm>.csv`` and ``manifest.json``.

    Returns a mapping from output kind to path.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = arm_records(trials)
    paths = {"trials": out / "trials.csv", "summary": out / "summary.csv"}

    with open(paths["trials"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIALS_HEADER)
        for r in records:
            w.writerow([_fmt(getattr(r, k)) for k in TRIALS_HEADER])

    with open(paths["summary"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for row in summary.rows:
            w.writerow([_fmt(getattr(row, k)) for k in SUMMARY_HEADER])

    scatter: dict[str, list[ArmRecord]] = {}
    for row in summary.rows:
        label = row.arm if row.h_rms == 0 and row.arm in ("original", "nsp") else f"{row.arm}_h{_h_label(row.h_rms)}"
        scatter[label] = [r for r in records if r.arm == row.arm and r.h_rms == row.h_rms and not r.failed]
    for label, rows in scatter.items():
        p = out / f"scatter_{label}.csv"
        paths[f"scatter_{label}"] = p
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SCATTER_HEADER)
            for r in rows:
                w.writerow([_fmt(r.theta_true_deg), _fmt(r.theta_hat_deg)])

    manifest = {
        "tool": "nspradar",
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "timestamp": timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "master_seed": config.master_seed if config else None,
        "config": config.to_dict() if config else None,
        "files": {k: p.name for k, p in paths.items()},
    }
    paths["manifest"] = out / "manifest.json"
    with open(paths["manifest"], "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths


def read_trials_csv(path) -> list[ArmRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        ArmRecord(
            trial_id=int(r["trial_id"]),
            arm=r["arm"],
            h_rms=float(r["h_rms"]),
            theta_true_deg=float(r["theta_true_deg"]),
            theta_hat_deg=float(r["theta_hat_deg"]),
            leakage=float(r["leakage"]),
            nullity=int(r["nullity"]),
            failed=bool(int(r["failed"])),
        )
        for r in rows
    ]


def summary_from_trials_csv(path) -> ExperimentSummary:
    """Recompute the summary table from a written ``trials.csv``."""
    return summarize(read_trials_csv(path))


class _Parser(argparse.ArgumentParser):
    # usage errors are validation errors, not runtime failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nspradar", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run the Monte Carlo experiment")
    sim.add_argument("--config", type=Path, help="flat key=value config file")
    sim.add_argument("--trials", type=int, dest="num_trials")
    sim.add_argument("--seed", type=int, dest="master_seed")
    sim.add_argument("--hrms", dest="h_rms_values", help="comma-separated h_rms sweep, e.g. 1,2,3,4")
    sim.add_argument("--snr-db", type=float, dest="snr_db")
    sim.add_argument("--out", type=Path, default=Path("results"))
    sim.add_argument("--projection-target", choices=["perturbed", "stale"], dest="projection_target")
    sim.add_argument("--perturbation-style", choices=["real", "complex"], dest="perturbation_style")
    sim.add_argument("--theta-mode", choices=["random", "sweep"], dest="theta_mode")
    sim.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    return parser


def _simulate(args) -> int:
    overrides = {
        k: getattr(args, k)
        for k in ("num_trials", "master_seed", "h_rms_values", "snr_db", "projection_target",
                  "perturbation_style", "theta_mode")
    }
    try:
        config = parse_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    log.info("running %d trials (backend=%s, workers=%d)", config.num_trials, kernels.BACKEND, args.workers)
    try:
        result = run_experiment(config, workers=max(1, args.workers))
        emit_results(result.summary, result.trials, args.out, config)
    except ExperimentError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"runtime error: cannot write results to {args.out}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    for row in result.summary.rows:
        print(f"{row.arm:>14s} h_rms={_h_label(row.h_rms):>4s}  rmse={row.rmse_deg:8.4f} deg  "
              f"bias={row.bias_deg:+8.4f} deg  leakage={row.mean_leakage:.4g}  n={row.n_trials}")
    empty = [r for r in result.summary.rows if r.n_trials == 0 or math.isnan(r.rmse_deg)]
    if empty:
        print(f"runtime error: {len(empty)} arm(s) without a successful trial", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "simulate":
        return _simulate(args)
    parser.error(f"unknown command {args.command}")  # pragma: no cover
    return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

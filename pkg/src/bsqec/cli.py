"""Command-line interface.

Subcommands:
  run <experiment> --shots N --seed S [--config F] [--improved] [--out F]
  oracle <protocol>
  table --all [--shots N --seed S --config F --out F]
  dump-circuit <experiment> [--out F]
  calibrate-fit <csv>

Exit codes: 0 success, 1 usage error, 2 config error, 3 oracle violation.
"""

from __future__ import annotations

import argparse
import csv
import sys

from .circuits import EXPERIMENT_KINDS, build_experiment
from .config import ConfigError, load_config
from .experiments import (
    ORACLE_PROTOCOLS,
    REGISTRY,
    emit,
    run_all,
    run_experiment,
    run_ft_oracle,
)
from .noise import fit_mean_phonon

COMMANDS = ("run", "oracle", "table", "dump-circuit", "calibrate-fit")


def _usage() -> str:
    return (
        "usage: bsqec <command> [options]\n"
        f"commands: {', '.join(COMMANDS)}\n"
        f"experiments: {', '.join(REGISTRY)}\n"
        f"oracle protocols: {', '.join(ORACLE_PROTOCOLS)}\n"
    )


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--shots", type=int, default=20000)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--config", default=None, help="noise config JSON")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def cmd_run(argv: list[str]) -> int:
    p = argparse.ArgumentParser(prog="bsqec run")
    p.add_argument("experiment", choices=tuple(REGISTRY))
    _add_common(p)
    p.add_argument("--improved", action="store_true",
                   help="apply the improved-hardware transform")
    p.add_argument("--dump-dir", default=None,
                   help="directory for per-shot record dumps")
    a = p.parse_args(argv)
    cfg = load_config(a.config)
    if cfg.filled_defaults and a.config:
        print(f"# defaults filled: {', '.join(cfg.filled_defaults)}", file=sys.stderr)
    table = run_experiment(a.experiment, a.shots, a.seed, config=cfg,
                           improved=a.improved, workers=a.workers,
                           dump_dir=a.dump_dir)
    text = emit(table, a.format, a.out)
    if not a.out:
        sys.stdout.write(text)
    return 0


def cmd_table(argv: list[str]) -> int:
    p = argparse.ArgumentParser(prog="bsqec table")
    p.add_argument("--all", action="store_true", required=True,
                   help="run every registered experiment, SIM and IMP")
    _add_common(p)
    a = p.parse_args(argv)
    cfg = load_config(a.config)
    table = run_all(a.shots, a.seed, config=cfg, workers=a.workers)
    text = emit(table, a.format, a.out)
    if not a.out:
        sys.stdout.write(text)
    return 0


def cmd_oracle(argv: list[str]) -> int:
    p = argparse.ArgumentParser(prog="bsqec oracle")
    p.add_argument("protocol", choices=ORACLE_PROTOCOLS)
    a = p.parse_args(argv)
    report = run_ft_oracle(a.protocol)
    print(report.summary())
    return 3 if report.violations else 0


def cmd_dump_circuit(argv: list[str]) -> int:
    p = argparse.ArgumentParser(prog="bsqec dump-circuit")
    p.add_argument("experiment", choices=EXPERIMENT_KINDS)
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    a = p.parse_args(argv)
    cfg = load_config(a.config)
    circuit = build_experiment(a.experiment, cfg.params.durations)
    text = circuit.dump_jsonl()
    if a.out:
        with open(a.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_calibrate_fit(argv: list[str]) -> int:
    p = argparse.ArgumentParser(prog="bsqec calibrate-fit")
    p.add_argument("csv_path", help="CSV with columns eps_bar,u")
    a = p.parse_args(argv)
    eps, u = [], []
    with open(a.csv_path) as f:
        reader = csv.reader(f)
        header = next(reader)
        try:
            ie, iu = header.index("eps_bar"), header.index("u")
        except ValueError:
            # headerless two-column file
            ie, iu = 0, 1
            eps.append(float(header[0]))
            u.append(float(header[1]))
        for row in reader:
            if not row:
                continue
            eps.append(float(row[ie]))
            u.append(float(row[iu]))
    n_bar, se = fit_mean_phonon(eps, u)
    print(f"n_bar = {n_bar:.6g} +- {se:.3g}")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv or argv[0] in ("-h", "--help"):
        sys.stdout.write(_usage())
        return 0 if argv else 1
    cmd, rest = argv[0], argv[1:]
    if cmd not in COMMANDS:
        sys.stderr.write(f"unknown command {cmd!r}\n{_usage()}")
        return 1
    try:
        if cmd == "run":
            return cmd_run(rest)
        if cmd == "table":
            return cmd_table(rest)
        if cmd == "oracle":
            return cmd_oracle(rest)
        if cmd == "dump-circuit":
            return cmd_dump_circuit(rest)
        return cmd_calibrate_fit(rest)
    except ConfigError as e:
        sys.stderr.write(f"config error: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

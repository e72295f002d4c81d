"""Command-line front end.

Exit codes: 0 success, 1 runtime failure, 2 validation failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .config import ConfigError, load_document, parse_complex, resolve
from .engine import ExperimentConfig, gain_sweep, reproduce_tables
from .theory import CloneReport, analytic_report

log = logging.getLogger("feedback_cloning")

EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION = 0, 1, 2
TABLE_COLUMNS = ["N", "p_N", "n", "p_n_given_N", "fidelity"]


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    return "nan" if math.isnan(x) else f"{x:.17g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return None if not math.isfinite(x) else x
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def report_rows(report: CloneReport, n_from: int = 0) -> list[list[str]]:
    rows = []
    for rec in report.records:
        for n in range(n_from, rec.N + 1):
            rows.append(
                [fmt(rec.N), fmt(rec.p_N), fmt(n), fmt(rec.p_n_given_N[n]), fmt(rec.fidelity)]
            )
    return rows


def write_table(path: Path, header: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_manifest(out: Path, command: str, doc: dict, seed, started: str, outputs: list[Path]) -> Path:
    path = out / "manifest.json"
    manifest = {
        "manifest_version": 1,
        "tool": "feedback-cloning",
        "tool_version": __version__,
        "command": command,
        "config": doc,
        "seed": seed,
        "started": started,
        "finished": _now(),
        "outputs": [str(p) for p in outputs],
    }
    write_json(path, manifest)
    return path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _load(args) -> tuple[ExperimentConfig, dict]:
    try:
        doc = load_document(args.config)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError([("--config", str(exc))]) from exc
    return resolve(doc, seed=args.seed, workers=args.workers)


# ---------------------------------------------------------------------------
# subcommands


def cmd_analytic(args) -> int:
    started = _now()
    if args.config:
        config, doc = _load(args)
        R, n_max = config.R, config.n_max
        doc = {**doc, "integrator": {**doc["integrator"], "kind": "analytic"}}
    else:
        if args.R is None:
            raise ConfigError([("--R", "required without --config")])
        try:
            c_H, c_V = parse_complex(args.c_h), parse_complex(args.c_v)
        except ValueError as exc:
            raise ConfigError([("--c-h/--c-v", str(exc))]) from exc
        raw = {
            "schema_version": 1,
            "experiment": {
                "R": args.R,
                "qubit": {"c_H": [c_H.real, c_H.imag], "c_V": [c_V.real, c_V.imag]},
                "cutoff": args.cutoff if args.cutoff is not None else args.n_max + 2,
                "n_max": args.n_max,
            },
            "integrator": {"kind": "analytic"},
        }
        config, doc = resolve(raw)
        R, n_max = config.R, config.n_max
    report = analytic_report(R, n_max)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = out / "analytic.csv"
    write_table(table, TABLE_COLUMNS, report_rows(report, n_from=1))
    write_manifest(out, "analytic", doc, None, started, [table])
    print(table)
    return EXIT_OK


def cmd_simulate(args) -> int:
    started = _now()
    config, doc = _load(args)
    reports = reproduce_tables(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "report.json"
    write_json(report_path, {"reports": [r.to_dict() for r in reports]})
    rows = []
    for rep in reports:
        method = rep.provenance["method"]
        for rec in rep.records:
            for n in range(rec.N + 1):
                rows.append(
                    [
                        method,
                        fmt(rep.R),
                        fmt(rep.gain),
                        fmt(rec.N),
                        fmt(rec.p_N),
                        fmt(n),
                        fmt(rec.p_n_given_N[n]),
                        fmt(rec.fidelity),
                        fmt(rec.p_N_stderr),
                        fmt(rec.fidelity_stderr),
                    ]
                )
    table = out / "table.csv"
    write_table(
        table,
        ["method", "R", "gain"] + TABLE_COLUMNS + ["p_N_stderr", "fidelity_stderr"],
        rows,
    )
    write_manifest(out, "simulate", doc, config.seed, started, [report_path, table])
    print(report_path)
    return EXIT_OK


def cmd_sweep(args) -> int:
    started = _now()
    config, doc = _load(args)
    if config.gains is None and config.R_values is None:
        raise ConfigError([("sweep", "a gains or R_values list is required")])
    result = gain_sweep(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for p in result.points:
        for N, F in p.fidelity.items():
            se = p.stderr.get(N) if p.stderr else None
            rows.append([fmt(p.gain), fmt(p.R), fmt(N), fmt(F), fmt(se)])
    table = out / "sweep.csv"
    write_table(table, ["gain", "R", "N", "fidelity", "stderr"], rows)
    if result.parameter == "gain":
        summary = "argmax gain: " + ", ".join(f"N={N} g={fmt(g)}" for N, g in result.argmax.items())
    else:
        summary = f"R sweep at optimal gain over {len(result.points)} values"
    summary_path = out / "sweep_summary.json"
    write_json(
        summary_path,
        {
            "parameter": result.parameter,
            "argmax": {str(N): g for N, g in result.argmax.items()},
            "summary": summary,
            "points": [
                {
                    "gain": p.gain,
                    "R": p.R,
                    "fidelity": p.fidelity,
                    "p_N": p.p_N,
                    "fidelity_proxy": p.fidelity_proxy,
                    "stderr": p.stderr,
                }
                for p in result.points
            ],
        },
    )
    write_manifest(out, "sweep", doc, config.seed, started, [table, summary_path])
    print(summary)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="feedback-cloning",
        description="Optimal cloning of photon polarization by heterodyne feedback.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required):
        p.add_argument("--config", required=config_required, help="YAML/JSON config or run manifest")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        p.add_argument("--workers", type=int, default=None, help="worker processes")

    p = sub.add_parser("analytic", help="closed-form clone statistics table")
    common(p, config_required=False)
    p.add_argument("--R", type=float, help="beam splitter reflectivity")
    p.add_argument("--c-h", default="1", help="H amplitude, e.g. 0.6 or 0.6+0.2j")
    p.add_argument("--c-v", default="0", help="V amplitude")
    p.add_argument("--n-max", type=int, default=4)
    p.add_argument("--cutoff", type=int, default=None)
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("simulate", help="accumulate the output state numerically")
    common(p, config_required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="fidelity over a gain or reflectivity list")
    common(p, config_required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ConfigError as exc:
        for path, msg in exc.errors:
            print(f"error: {path}: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        log.debug("run failed", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

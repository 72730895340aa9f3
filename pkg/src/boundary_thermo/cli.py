"""Command-line entry point.

    boundary-thermo run --experiment fig1 --out results/ [--config cfg.json] [--override key=value ...]
    boundary-thermo --selftest

Exit codes: 0 success, 2 invalid configuration, 3 numerical or check failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any

import numpy as np

from .exceptions import ContractError, StructureError
from .experiments import EXPERIMENTS, ConfigError, Outcome, Table, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILED = 3

log = logging.getLogger("boundary_thermo")


def _fmt(x: Any) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else f"{float(x):.12g}"
    if x is None:
        return ""
    return str(x)


def write_table(table: Table, out: Path) -> Path:
    path = out / f"{table.name}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([_fmt(x) for x in row])
    return path


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return None if not math.isfinite(x) else float(x)
    return x


def write_summary(experiment: str, outcome: Outcome, out: Path) -> Path:
    summary = {
        "experiment": experiment,
        "passed": outcome.passed,
        "checks": outcome.checks,
        "metrics": outcome.metrics,
    }
    path = out / "summary.json"
    path.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    return path


def parse_override(text: str) -> tuple[str, Any]:
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"override must look like key=value, got {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def load_config(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def selftest() -> dict[str, bool]:
    """Fast invariant checks on small systems."""
    from .collision import RIConfig, ri_step
    from .densemat import random_density_matrix
    from .lindblad import lindblad_rhs, ness
    from .spin import BathSpec, ChainSpec, thermal_spin
    from .thermo import first_law_residual, thermo_record
    from .twosite import TwoSiteParams, ness_closed_form

    rng = np.random.default_rng(0)
    p = TwoSiteParams(1.0, 1.5, 0.5, 1.0, 0.5, 2.0)
    model = p.model()
    rho = random_density_matrix(4, rng)
    rhs = lindblad_rhs(model, rho)
    rec = thermo_record(model, ness(model).rho)
    exact = ness_closed_form(p)
    collision = RIConfig(ChainSpec((1.5, 0.7), 1.0, 1.0), (BathSpec("L", 0.5, 1.0),), 0.05)
    _, step = ri_step(rho, collision)
    return {
        "thermal_magnetization": abs(thermal_spin(2.0, 1.0).magnetization + math.tanh(1.0)) < 1e-14,
        "trace_preserving": abs(np.trace(rhs)) < 1e-12,
        "hermiticity_preserving": np.linalg.norm(rhs - rhs.conj().T) < 1e-12,
        "first_law": abs(first_law_residual(model, rho)) < 1e-12,
        "two_site_current": abs(rec.j_s - exact.j_s) < 1e-10,
        "second_law": rec.diS_dt >= 0,
        "collision_first_law": abs(step.first_law_residual) < 1e-12,
        "collision_entropy_split": abs(step.diS - step.d_term - step.i_term) < 1e-10,
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boundary-thermo",
        description="Thermodynamics of boundary-driven spin chains.",
    )
    parser.add_argument("--selftest", action="store_true", help="run quick invariant checks and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command")
    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    run.add_argument("--config", help="flat JSON object of parameters")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key; VALUE is parsed as JSON when possible",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s"
    )

    if args.selftest:
        checks = selftest()
        for name, ok in checks.items():
            print(f"{'PASS' if ok else 'FAIL'} {name}")
        return EXIT_OK if all(checks.values()) else EXIT_FAILED
    if args.command != "run":
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG

    try:
        config = load_config(args.config)
        for item in args.override:
            key, value = parse_override(item)
            config[key] = value
        log.info("running %s", args.experiment)
        outcome = run_experiment(args.experiment, config)
    except (ConfigError, StructureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ContractError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAILED

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for table in outcome.tables:
        log.info("wrote %s", write_table(table, out))
    write_summary(args.experiment, outcome, out)
    for name, ok in outcome.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_OK if outcome.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())

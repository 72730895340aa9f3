"""Experiment drivers behind the command line.

Every experiment takes a flat config dict, returns CSV tables and a summary
with named boolean checks.  Numerics are fixed-step and seeded, so reruns with
the same config are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .collision import RIConfig, ri_lindblad_convergence, ri_trajectory
from .densemat import random_density_matrix
from .lindblad import evolve, ness, spin_chain_model
from .spin import BathSpec, ChainSpec, product_thermal_state
from .thermo import (
    classify_regime,
    first_law_residual,
    naive_weak_coupling_rates,
    spin_current,
    thermo_record,
)
from .twosite import TwoSiteParams, ness_closed_form, oracle_vs_engine

MAX_SITES = 8

THERMO_COLUMNS = ["t", "Wdot", "Qdot_L", "Qdot_R", "diS_dt", "S", "E_S"]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)


@dataclass
class Outcome:
    tables: list[Table]
    checks: dict[str, bool]
    metrics: dict[str, Any]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


DEFAULTS: dict[str, dict[str, Any]] = {
    "fig1": {
        "N": 5,
        "h": 1.0,
        "Jx": 1.0,
        "Jy_xx": 1.0,
        "Jy_xy": 2.0,
        "beta_L": 1.0,
        "h_L": 1.0,
        "lambda_L": 1.0,
        "t_final": 80.0,
        "sample_dt": 0.5,
        "dt": None,
        "initial": "mixed",
        "seed": 0,
    },
    "fig2_sweep": {
        "N": 5,
        "h": [3.0, 5.0, 5.0, 5.0, 2.0],
        "Jx": 3.0,
        "Jy": 3.0,
        "beta_L": 0.8,
        "beta_R": 1.2,
        "lambda": 1.0,
        "h_L_min": 0.0,
        "h_L_max": 6.0,
        "h_L_points": 13,
    },
    "twosite": {
        "J": 1.0,
        "h_L": 1.5,
        "h_R": 0.5,
        "lambda": 1.0,
        "beta_L": 0.5,
        "beta_R": 2.0,
        "t_final": 20.0,
        "sample_dt": 0.1,
        "dt": None,
        "initial": "random",
        "seed": 7,
    },
    "convergence": {
        "N": 2,
        "h": [1.5, 0.7],
        "Jx": 1.0,
        "Jy": 1.0,
        "beta_L": 0.5,
        "beta_R": 2.0,
        "lambda": 1.0,
        "t_final": 2.0,
        "taus": [0.1, 0.05, 0.02, 0.01, 0.005],
        "scaling": "scaled",
        "min_slope": 0.45,
        "initial": "random",
        "seed": 1,
    },
    "regime_scan": {
        "J": 1.0,
        "lambda": 1.0,
        "draws": 200,
        "beta_min": 0.2,
        "beta_max": 3.0,
        "h_min": 0.2,
        "h_max": 5.0,
        "seed": 0,
    },
    "ri_trace": {
        "N": 2,
        "h": [1.5, 0.7],
        "Jx": 1.0,
        "Jy": 1.0,
        "beta_L": 0.5,
        "beta_R": 2.0,
        "lambda": 1.0,
        "tau": 0.05,
        "steps": 200,
        "scaling": "scaled",
        "initial": "random",
        "seed": 1,
    },
}

EXPERIMENTS = tuple(DEFAULTS)


def resolve_config(experiment: str, config: dict[str, Any] | None) -> dict[str, Any]:
    """Merge ``config`` over the experiment defaults and validate it."""
    if experiment not in DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    cfg = dict(DEFAULTS[experiment])
    for key, value in (config or {}).items():
        if key in ("experiment", "out"):
            continue
        if key not in cfg:
            raise ConfigError(f"unknown key {key!r} for experiment {experiment!r}")
        cfg[key] = value
    _validate(experiment, cfg)
    return cfg


def _validate(experiment: str, cfg: dict[str, Any]) -> None:
    def positive(*keys):
        for k in keys:
            if k in cfg and cfg[k] is not None and not _num(cfg[k], k) > 0:
                raise ConfigError(f"{k} must be positive, got {cfg[k]!r}")

    def nonneg(*keys):
        for k in keys:
            if k in cfg and not _num(cfg[k], k) >= 0:
                raise ConfigError(f"{k} must be non-negative, got {cfg[k]!r}")

    if "N" in cfg:
        n = cfg["N"]
        if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= MAX_SITES:
            raise ConfigError(f"N must be an integer in [1, {MAX_SITES}], got {n!r}")
        h = cfg.get("h")
        if isinstance(h, list) and len(h) != n:
            raise ConfigError(f"h has {len(h)} entries but N = {n}")
        if experiment == "fig2_sweep" and n < 2:
            raise ConfigError("fig2_sweep needs N >= 2")
    positive("lambda", "lambda_L", "tau", "t_final", "sample_dt", "dt", "J", "draws", "h_L_points")
    nonneg("beta_L", "beta_R", "beta_min")
    if "taus" in cfg:
        taus = cfg["taus"]
        if not isinstance(taus, list) or len(taus) < 2 or any(_num(t, "taus") <= 0 for t in taus):
            raise ConfigError("taus must be a list of at least two positive numbers")
    if "steps" in cfg and (not isinstance(cfg["steps"], int) or cfg["steps"] < 1):
        raise ConfigError("steps must be a positive integer")
    if cfg.get("scaling", "scaled") not in ("scaled", "fixed"):
        raise ConfigError("scaling must be 'scaled' or 'fixed'")
    if cfg.get("initial", "mixed") not in ("mixed", "random", "up", "down"):
        raise ConfigError("initial must be one of mixed, random, up, down")
    for lo, hi in (("beta_min", "beta_max"), ("h_min", "h_max"), ("h_L_min", "h_L_max")):
        if lo in cfg and _num(cfg[lo], lo) >= _num(cfg[hi], hi):
            raise ConfigError(f"{lo} must be below {hi}")


def _num(x, key: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{key} must be a number, got {x!r}")
    if not math.isfinite(x):
        raise ConfigError(f"{key} must be finite")
    return float(x)


def _fields(cfg: dict[str, Any]) -> tuple[float, ...]:
    h = cfg["h"]
    return tuple(float(x) for x in h) if isinstance(h, list) else (float(h),) * cfg["N"]


def _initial_state(cfg: dict[str, Any], n: int) -> np.ndarray:
    dim = 2**n
    kind = cfg.get("initial", "mixed")
    if kind == "mixed":
        return np.eye(dim, dtype=complex) / dim
    if kind == "random":
        return random_density_matrix(dim, np.random.default_rng(cfg.get("seed", 0)))
    rho = np.zeros((dim, dim), dtype=complex)
    rho[(0, 0) if kind == "up" else (dim - 1, dim - 1)] = 1.0
    return rho


def _two_baths(cfg: dict[str, Any]) -> tuple[BathSpec, BathSpec]:
    lam = cfg["lambda"]
    return BathSpec("L", cfg["beta_L"], lam), BathSpec("R", cfg["beta_R"], lam)


def _thermo_row(rec) -> list[float]:
    return [rec.t, rec.wdot, rec.qdot_L, rec.qdot_R, rec.diS_dt, rec.S, rec.E_S]


def run_fig1(cfg: dict[str, Any]) -> Outcome:
    n = cfg["N"]
    bath = BathSpec("L", cfg["beta_L"], cfg["lambda_L"], cfg["h_L"])
    rho0 = _initial_state(cfg, n)
    target = product_thermal_state(n, cfg["beta_L"], cfg["h_L"])
    tables, checks, metrics = [], {}, {}
    for label, jy in (("xx", cfg["Jy_xx"]), ("xy", cfg["Jy_xy"])):
        model = spin_chain_model(ChainSpec(_fields(cfg), cfg["Jx"], jy), [bath])
        traj = evolve(model, rho0, cfg["t_final"], dt=cfg["dt"], sample_dt=cfg["sample_dt"])
        table = Table(f"fig1_{label}", THERMO_COLUMNS)
        min_dis, max_first_law = math.inf, 0.0
        for t, rho in traj:
            rec = thermo_record(model, rho, t)
            table.rows.append(_thermo_row(rec))
            min_dis = min(min_dis, rec.diS_dt)
            max_first_law = max(max_first_law, abs(first_law_residual(model, rho)))
        tables.append(table)
        last = thermo_record(model, traj.final, traj.times[-1])
        checks[f"{label}_second_law"] = min_dis >= -1e-9
        checks[f"{label}_first_law"] = max_first_law < 1e-9
        metrics[f"{label}_final"] = {"Wdot": last.wdot, "Qdot": last.qdot, "diS_dt": last.diS_dt}
        metrics[f"{label}_integrator"] = {
            "dt": traj.dt,
            "max_psd_violation": traj.max_psd_violation,
            "max_trace_drift": traj.max_trace_drift,
            "max_herm_dev": traj.max_herm_dev,
        }
        if label == "xx":
            dist = float(np.linalg.norm(traj.final - target))
            metrics["xx_distance_to_gibbs"] = dist
            checks["xx_rates_decay"] = max(abs(last.wdot), abs(last.qdot), abs(last.diS_dt)) < 1e-6
            checks["xx_reaches_product_gibbs"] = dist < 1e-6
        else:
            steady = ness(model)
            srec = thermo_record(model, steady.rho)
            rel = abs(srec.diS_dt - cfg["beta_L"] * srec.wdot) / abs(srec.diS_dt)
            metrics["xy_ness"] = {"Wdot": srec.wdot, "Qdot": srec.qdot, "diS_dt": srec.diS_dt}
            metrics["xy_distance_to_ness"] = float(np.linalg.norm(traj.final - steady.rho))
            checks["xy_driven_plateau"] = srec.wdot > 0 and srec.diS_dt > 0
            checks["xy_diS_equals_beta_W"] = rel < 1e-8
            checks["xy_work_balances_heat"] = abs(srec.wdot + srec.qdot) < 1e-9
    return Outcome(tables, checks, metrics)


def run_fig2_sweep(cfg: dict[str, Any]) -> Outcome:
    base = ChainSpec(_fields(cfg), cfg["Jx"], cfg["Jy"])
    baths = _two_baths(cfg)
    grid = np.linspace(cfg["h_L_min"], cfg["h_L_max"], int(cfg["h_L_points"]))
    table = Table(
        "fig2_sweep", ["h_L", "Qdot_L", "Qdot_R", "Wdot", "diS_dt", "j_s", "regime", "eta"]
    )
    records, current_spread, unique = [], 0.0, True
    eta_ok = True
    for h_l in grid:
        model = spin_chain_model(base.with_field(0, float(h_l)), baths)
        steady = ness(model)
        unique &= steady.unique
        rec = thermo_record(model, steady.rho)
        if base.is_xx:
            currents = [spin_current(steady.rho, base.jx, j, base.n) for j in range(base.n - 1)]
            current_spread = max(current_spread, max(currents) - min(currents))
        report = classify_regime(rec, model.couplings)
        if report.regime == "engine" and report.efficiency > report.carnot + 1e-9:
            eta_ok = False
        if report.regime == "refrigerator" and report.efficiency > report.carnot + 1e-9:
            eta_ok = False
        eta = report.efficiency if report.efficiency is not None else math.nan
        table.rows.append(
            [h_l, rec.qdot_L, rec.qdot_R, rec.wdot, rec.diS_dt, rec.j_s, report.regime, eta]
        )
        records.append((float(h_l), rec))

    checks = {
        "unique_ness": bool(unique),
        "second_law": all(r.diS_dt >= -1e-9 for _, r in records),
        "efficiency_bounds": eta_ok,
    }
    h_r = baths[1].field_for(base)
    beta_l, beta_r = cfg["beta_L"], cfg["beta_R"]
    for h_l, rec in records:
        if math.isclose(beta_l * h_l, beta_r * h_r, rel_tol=1e-12):
            checks["equilibrium_point_vanishes"] = (
                max(abs(rec.qdot_L), abs(rec.qdot_R), abs(rec.wdot), abs(rec.diS_dt)) < 1e-8
            )
        if math.isclose(h_l, h_r, rel_tol=1e-12):
            checks["non_driven_point"] = (
                abs(rec.wdot) < 1e-8 and abs(rec.qdot_L + rec.qdot_R) < 1e-8
            )
    metrics = {"h_R": h_r, "max_current_spread": current_spread}
    return Outcome([table], checks, metrics)


def run_twosite(cfg: dict[str, Any]) -> Outcome:
    p = TwoSiteParams(
        cfg["J"], cfg["h_L"], cfg["h_R"], cfg["lambda"], cfg["beta_L"], cfg["beta_R"]
    )
    rho0 = _initial_state(cfg, 2)
    report = oracle_vs_engine(p, rho0, cfg["t_final"], dt=cfg["dt"], sample_dt=cfg["sample_dt"])
    table = Table(
        "twosite",
        ["t", "X", "Y", "z1", "z2", "X_engine", "Y_engine", "z1_engine", "z2_engine", "max_dev"],
    )
    for t, o, e in zip(report.times, report.oracle, report.engine):
        table.rows.append([t, *o, *e, float(np.max(np.abs(o - e)))])
    exact = ness_closed_form(p)
    checks = {
        "transient_agreement": report.max_dev < 1e-6,
        "ness_agreement": max(report.ness_dev.values()) < 1e-8,
        "work_split": report.work_split_dev < 1e-8,
    }
    metrics = {
        "max_dev": report.max_dev,
        "ness_dev": report.ness_dev,
        "closed_form": {
            "j_s": exact.j_s,
            "Wdot": exact.wdot,
            "Qdot_L": exact.qdot_L,
            "Qdot_R": exact.qdot_R,
            "diS_dt": exact.diS_dt,
        },
    }
    return Outcome([table], checks, metrics)


def run_convergence(cfg: dict[str, Any]) -> Outcome:
    chain = ChainSpec(_fields(cfg), cfg["Jx"], cfg["Jy"])
    rho0 = _initial_state(cfg, chain.n)
    result = ri_lindblad_convergence(
        rho0, chain, _two_baths(cfg), cfg["t_final"], cfg["taus"], cfg["scaling"]
    )
    table = Table("convergence", ["tau", "error", "slope_running"])
    for tau, err, slope in zip(result.taus, result.errors, result.running_slopes):
        table.rows.append([tau, err, slope])
    if cfg["scaling"] == "scaled":
        checks = {"monotone": result.monotone, "slope": result.slope >= cfg["min_slope"]}
    else:
        checks = {"no_convergence": not result.monotone and result.slope < cfg["min_slope"]}
    return Outcome([table], checks, {"slope": result.slope})


def run_regime_scan(cfg: dict[str, Any]) -> Outcome:
    rng = np.random.default_rng(cfg["seed"])
    table = Table(
        "regime_scan",
        [
            "beta_L",
            "beta_R",
            "h_L",
            "h_R",
            "regime",
            "Wdot",
            "Qdot_L",
            "Qdot_R",
            "diS_dt",
            "eta",
            "eta_carnot",
            "diS_dt_naive",
        ],
    )
    eta_exact, eta_bound, second_law = True, True, True
    min_naive = math.inf
    counts: dict[str, int] = {}
    for _ in range(int(cfg["draws"])):
        b_l, b_r = sorted(rng.uniform(cfg["beta_min"], cfg["beta_max"], size=2))
        h_l, h_r = rng.uniform(cfg["h_min"], cfg["h_max"], size=2)
        p = TwoSiteParams(cfg["J"], h_l, h_r, cfg["lambda"], b_l, b_r)
        model = p.model()
        steady = ness(model)
        rec = thermo_record(model, steady.rho)
        report = classify_regime(rec, model.couplings)
        naive = naive_weak_coupling_rates(model, steady.rho).diS_dt
        min_naive = min(min_naive, naive)
        counts[report.regime] = counts.get(report.regime, 0) + 1
        second_law &= rec.diS_dt >= -1e-9
        if report.regime == "engine":
            eta_exact &= abs(report.efficiency - (1 - h_r / h_l)) < 1e-8
            eta_bound &= report.efficiency <= report.carnot + 1e-9
        elif report.regime == "refrigerator":
            eta_exact &= abs(report.efficiency - 1 / (h_l / h_r - 1)) < 1e-8
            eta_bound &= report.efficiency <= report.carnot + 1e-9
        table.rows.append(
            [
                b_l,
                b_r,
                h_l,
                h_r,
                report.regime,
                rec.wdot,
                rec.qdot_L,
                rec.qdot_R,
                rec.diS_dt,
                report.efficiency if report.efficiency is not None else math.nan,
                report.carnot if report.carnot is not None else math.nan,
                naive,
            ]
        )
    checks = {
        "second_law": bool(second_law),
        "efficiency_formula": bool(eta_exact),
        "carnot_bounds": bool(eta_bound),
    }
    metrics = {"regime_counts": counts, "min_naive_diS_dt": min_naive}
    return Outcome([table], checks, metrics)


def run_ri_trace(cfg: dict[str, Any]) -> Outcome:
    chain = ChainSpec(_fields(cfg), cfg["Jx"], cfg["Jy"])
    config = RIConfig(chain, _two_baths(cfg), cfg["tau"], cfg["steps"], cfg["scaling"])
    traj = ri_trajectory(_initial_state(cfg, chain.n), config)
    tau = config.tau
    table = Table("ri_trace", THERMO_COLUMNS)
    first_law, min_parts, max_switch = 0.0, math.inf, 0.0
    for t, rec in zip(traj.times, traj.records):
        table.rows.append(
            [
                t,
                sum(rec.work.values()) / tau,
                rec.heat.get("L", 0.0) / tau,
                rec.heat.get("R", 0.0) / tau,
                rec.diS / tau,
                rec.S,
                rec.E_S,
            ]
        )
        scale = max(1.0, abs(rec.dE_S), *(abs(x) for x in rec.work.values()))
        first_law = max(first_law, abs(rec.first_law_residual) / scale)
        min_parts = min(min_parts, rec.diS, rec.d_term, rec.i_term)
        max_switch = max(max_switch, *(abs(x) for x in rec.switch_work.values()))
    balance = traj.entropy_balance_residual()
    checks = {
        "first_law": first_law < 1e-10,
        "entropy_production_nonnegative": min_parts >= -1e-10,
        "entropy_balance": abs(balance) < 1e-8,
        "switch_work_vanishes": max_switch < 1e-12,
    }
    metrics = {
        "max_first_law_residual": first_law,
        "entropy_balance_residual": balance,
        "total_work": float(traj.cumulative_work()[-1]),
    }
    return Outcome([table], checks, metrics)


RUNNERS: dict[str, Callable[[dict[str, Any]], Outcome]] = {
    "fig1": run_fig1,
    "fig2_sweep": run_fig2_sweep,
    "twosite": run_twosite,
    "convergence": run_convergence,
    "regime_scan": run_regime_scan,
    "ri_trace": run_ri_trace,
}


def run_experiment(experiment: str, config: dict[str, Any] | None = None) -> Outcome:
    cfg = resolve_config(experiment, config)
    outcome = RUNNERS[experiment](cfg)
    outcome.metrics["config"] = cfg
    return outcome

"""Acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line (also collected in the terminal
summary) and then asserts the same condition.
"""

import itertools
import math
import time

import numpy as np

from boundary_thermo.collision import RIConfig, ri_lindblad_convergence, ri_step
from boundary_thermo.densemat import random_density_matrix
from boundary_thermo.experiments import run_experiment
from boundary_thermo.lindblad import (
    dissipator_from_coupling,
    evolve,
    ness,
    spin_bath_coupling,
    spin_bath_dissipator,
    spin_chain_model,
)
from boundary_thermo.spin import BathSpec, ChainSpec, product_thermal_state
from boundary_thermo.thermo import classify_regime, entropy_production_rate, thermo_record
from boundary_thermo.twosite import TwoSiteParams, oracle_vs_engine

# closed form at lam = J = 1, h_L = h_R = 1, beta_L = 0.5, beta_R = 2:
# M = -tanh(beta h / 2), j_s = 16 (M_R - M_L) / 32, diS = (beta_L - beta_R) j_s
REF_J_S = -0.25833774677602783
REF_QDOT_L = 0.25833774677602783
REF_DIS = 0.38750662016404175


def test_criterion_1_two_site_closed_form(acceptance_line):
    start = time.perf_counter()
    model = TwoSiteParams(1.0, 1.0, 1.0, 1.0, 0.5, 2.0).model()
    rec = thermo_record(model, ness(model).rho)
    elapsed = time.perf_counter() - start
    errs = {
        "j_s": abs(rec.j_s - REF_J_S),
        "Qdot_L": abs(rec.qdot_L - REF_QDOT_L),
        "Wdot": abs(rec.wdot),
        "diS_dt": abs(rec.diS_dt - REF_DIS),
    }
    ok = max(errs.values()) < 1e-8 and elapsed < 1.0
    acceptance_line(
        1, ok, f"j_s={rec.j_s:.9f} max_err={max(errs.values()):.1e} time={elapsed:.2f}s"
    )
    assert ok, errs


def test_criterion_2_oracle_equivalence(acceptance_line):
    start = time.perf_counter()
    p = TwoSiteParams(1.0, 1.5, 0.5, 1.0, 0.5, 2.0)
    rho0 = random_density_matrix(4, np.random.default_rng(2))
    report = oracle_vs_engine(p, rho0, 20.0)
    elapsed = time.perf_counter() - start
    ness_err = max(report.ness_dev.values())
    ok = ness_err < 1e-8 and report.max_dev < 1e-6 and elapsed < 5.0
    acceptance_line(
        2,
        ok,
        f"transient={report.max_dev:.1e} ness={ness_err:.1e} time={elapsed:.2f}s",
    )
    assert ok


def test_criterion_3_fig2_special_points(acceptance_line):
    start = time.perf_counter()
    outcome = run_experiment("fig2_sweep")
    elapsed = time.perf_counter() - start
    rows = {r[0]: r for r in outcome.tables[0].rows}
    _, q_l3, q_r3, w3, s3, *_ = rows[3.0]
    _, q_l2, q_r2, w2, *_ = rows[2.0]
    at3 = max(abs(q_l3), abs(q_r3), abs(w3), abs(s3))
    at2 = max(abs(w2), abs(q_l2 + q_r2))
    ok = at3 < 1e-8 and at2 < 1e-8 and elapsed < 30.0
    acceptance_line(
        3, ok, f"h_L=3 max={at3:.1e} h_L=2 max={at2:.1e} points={len(rows)} time={elapsed:.1f}s"
    )
    assert ok


def test_criterion_4_fig1_decay_and_plateau(acceptance_line):
    start = time.perf_counter()
    n, beta, h = 5, 1.0, 1.0
    bath = BathSpec("L", beta, 1.0, h)
    rho0 = np.eye(2**n) / 2**n

    xx = spin_chain_model(ChainSpec.uniform(n, h, 1.0), [bath])
    xx_final = evolve(xx, rho0, 50.0, sample_dt=0.5).final
    rec = thermo_record(xx, xx_final, 50.0)
    xx_rates = max(abs(rec.wdot), abs(rec.qdot), abs(rec.diS_dt))
    xx_state = float(np.linalg.norm(xx_final - product_thermal_state(n, beta, h)))

    xy = spin_chain_model(ChainSpec.uniform(n, h, 1.0, 2.0), [bath])
    plateau = thermo_record(xy, evolve(xy, rho0, 80.0, sample_dt=0.5).final, 80.0)
    xy_rel = abs(plateau.diS_dt - beta * plateau.wdot) / abs(plateau.diS_dt)
    elapsed = time.perf_counter() - start

    ok_xx = xx_rates < 1e-6 and xx_state < 1e-6
    ok_xy = plateau.diS_dt > 0 and plateau.wdot > 0 and xy_rel < 1e-8
    ok = ok_xx and ok_xy and elapsed < 120.0
    acceptance_line(
        4,
        ok,
        f"XX@t=50 rates={xx_rates:.2e} state={xx_state:.2e} (limit 1e-6); "
        f"XY diS/dt={plateau.diS_dt:.6f} rel={xy_rel:.1e}; time={elapsed:.1f}s",
    )
    assert ok_xy, "XY plateau relation"
    assert ok_xx, f"XX decay at t=50: rates {xx_rates:.3e}, state distance {xx_state:.3e}"
    assert elapsed < 120.0


def test_criterion_5_second_law_grid(acceptance_line):
    start = time.perf_counter()
    betas = [0.5, 1.0, 1.5, 2.0, 3.0]
    fields = [0.5, 1.0, 1.5, 2.0, 3.0]
    worst, worst_eq, n_eq = math.inf, 0.0, 0
    for b_l, b_r, h_l, h_r in itertools.product(betas, betas, fields, fields):
        model = TwoSiteParams(1.0, h_l, h_r, 1.0, b_l, b_r).model()
        dis = entropy_production_rate(model, ness(model).rho)
        worst = min(worst, dis)
        if b_l * h_l == b_r * h_r:
            n_eq += 1
            worst_eq = max(worst_eq, abs(dis))
    elapsed = time.perf_counter() - start
    ok = worst >= -1e-9 and worst_eq < 1e-9 and n_eq > 0 and elapsed < 60.0
    acceptance_line(
        5,
        ok,
        f"min diS/dt={worst:.1e} max |diS/dt| on {n_eq} equilibrium points={worst_eq:.1e} "
        f"time={elapsed:.1f}s",
    )
    assert ok


def _random_config(rng):
    n = int(rng.integers(1, 4))
    chain = ChainSpec(tuple(rng.uniform(-2, 2, n)), rng.uniform(-2, 2), rng.uniform(-2, 2))
    sides = [("L",), ("R",), ("L", "R")][int(rng.integers(3))]
    baths = tuple(
        BathSpec(s, rng.uniform(0, 3), rng.uniform(0.1, 2), h=rng.uniform(-2, 2)) for s in sides
    )
    scaling = "scaled" if rng.random() < 0.5 else "fixed"
    return RIConfig(chain, baths, rng.uniform(0.01, 1.0), scaling=scaling), n


def test_criterion_6_collision_first_law(acceptance_line):
    start = time.perf_counter()
    rng = np.random.default_rng(6)
    first_law, split, min_part = 0.0, 0.0, math.inf
    for _ in range(1000):
        config, n = _random_config(rng)
        _, rec = ri_step(random_density_matrix(2**n, rng), config)
        scale = max(1.0, abs(rec.dE_S), *(abs(w) for w in rec.work.values()))
        first_law = max(first_law, abs(rec.first_law_residual) / scale)
        split = max(split, abs(rec.diS - rec.d_term - rec.i_term))
        min_part = min(min_part, rec.d_term, rec.i_term)
    elapsed = time.perf_counter() - start
    ok = first_law < 1e-10 and split < 1e-10 and min_part >= -1e-10 and elapsed < 120.0
    acceptance_line(
        6,
        ok,
        f"first law={first_law:.1e} D+I split={split:.1e} min(D,I)={min_part:.1e} "
        f"time={elapsed:.1f}s",
    )
    assert ok


def test_criterion_7_collision_to_lindblad(acceptance_line):
    start = time.perf_counter()
    chain = ChainSpec((1.5, 0.7), 1.0, 1.0)
    baths = (BathSpec("L", 0.5, 1.0), BathSpec("R", 2.0, 1.0))
    rho0 = random_density_matrix(4, np.random.default_rng(1))
    taus = [0.1, 0.05, 0.02, 0.01, 0.005]
    scaled = ri_lindblad_convergence(rho0, chain, baths, 2.0, taus, "scaled")
    fixed = ri_lindblad_convergence(rho0, chain, baths, 2.0, taus, "fixed")
    elapsed = time.perf_counter() - start
    no_conv = not fixed.monotone and fixed.slope < 0.45 and fixed.errors.min() > 0.1
    ok = scaled.monotone and scaled.slope >= 0.45 and no_conv and elapsed < 300.0
    acceptance_line(
        7,
        ok,
        f"scaled slope={scaled.slope:.3f} errors {scaled.errors[0]:.1e}->{scaled.errors[-1]:.1e}; "
        f"fixed slope={fixed.slope:.3f}; time={elapsed:.1f}s",
    )
    assert ok


def test_criterion_8_efficiency_bounds(acceptance_line):
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    eta_err, excess, count = 0.0, -math.inf, {"engine": 0, "refrigerator": 0}
    for regime in ("engine", "refrigerator"):
        for _ in range(200):
            b_l, b_r = sorted(rng.uniform(0.1, 3.0, size=2))
            h_l = rng.uniform(0.5, 5.0)
            lo, hi = (b_l / b_r, 1.0) if regime == "engine" else (0.0, b_l / b_r)
            h_r = h_l * rng.uniform(lo + 1e-6 * (hi - lo), hi - 1e-6 * (hi - lo))
            model = TwoSiteParams(1.0, h_l, h_r, 1.0, b_l, b_r).model()
            rec = thermo_record(model, ness(model).rho)
            report = classify_regime(rec, model.couplings)
            if report.regime != regime:
                count[regime] -= 10_000
                continue
            count[regime] += 1
            expected = 1 - h_r / h_l if regime == "engine" else 1 / (h_l / h_r - 1)
            eta_err = max(eta_err, abs(report.efficiency - expected))
            excess = max(excess, report.efficiency - report.carnot)
    elapsed = time.perf_counter() - start
    ok = (
        count == {"engine": 200, "refrigerator": 200}
        and eta_err < 1e-8
        and excess <= 1e-9
        and elapsed < 60.0
    )
    acceptance_line(
        8,
        ok,
        f"draws={count} max|eta-formula|={eta_err:.1e} max(eta-carnot)={excess:.2e} "
        f"time={elapsed:.1f}s",
    )
    assert ok


def test_criterion_9_dissipator_equivalence(acceptance_line):
    start = time.perf_counter()
    chain = ChainSpec((0.9, 0.4), 1.0, 1.0)
    sup_err, ratio_err = 0.0, 0.0
    for beta, h, lam in itertools.product(
        [0.0, 0.3, 1.0, 2.5], [-2.0, -0.5, 0.0, 0.7, 3.0], [0.2, 1.0, 2.5]
    ):
        for side in ("L", "R"):
            bath = BathSpec(side, beta, lam, h=h)
            explicit = spin_bath_dissipator(chain, bath)
            micro = dissipator_from_coupling(spin_bath_coupling(chain, bath))
            sup_err = max(sup_err, float(np.max(np.abs(micro.superoperator() - explicit.superoperator()))))
            plus, minus = explicit.channels
            ratio_err = max(ratio_err, abs(plus.rate / minus.rate - math.exp(-beta * h)))
    elapsed = time.perf_counter() - start
    ok = sup_err < 1e-12 and ratio_err < 1e-12 and elapsed < 10.0
    acceptance_line(
        9, ok, f"superoperator={sup_err:.1e} rate ratio={ratio_err:.1e} time={elapsed:.2f}s"
    )
    assert ok

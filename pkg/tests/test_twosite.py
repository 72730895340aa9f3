import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boundary_thermo.densemat import random_density_matrix
from boundary_thermo.lindblad import lindblad_rhs, ness
from boundary_thermo.thermo import thermo_record
from boundary_thermo.twosite import (
    CorrelatorState,
    TwoSiteParams,
    _correlator_ops,
    correlator_rhs,
    integrate_correlators,
    ness_closed_form,
    oracle_vs_engine,
)

# -tanh(beta h / 2) evaluated by hand at beta_L h_L = 0.5 and beta_R h_R = 2
M_L = -0.24491866240370913
M_R = -0.7615941559557649
# 16 lam J^2 (M_R - M_L) / (16 J^2 + 16 lam^2) with lam = J = 1
J_S = (M_R - M_L) / 2

params = st.builds(
    TwoSiteParams,
    J=st.floats(0.1, 3.0),
    h_L=st.floats(-4.0, 4.0),
    h_R=st.floats(-4.0, 4.0),
    lam=st.floats(0.1, 3.0),
    beta_L=st.floats(0.0, 3.0),
    beta_R=st.floats(0.0, 3.0),
)


def test_correlator_state_roundtrip():
    s = CorrelatorState(0.1, -0.2, 0.3, -0.4)
    assert CorrelatorState.from_array(s.as_array()) == s
    assert s.Y == -0.2j


def test_equilibrium_fixed_point_is_stationary():
    p = TwoSiteParams(1.3, 0.9, 0.9, 0.7, 1.1, 1.1)
    s = CorrelatorState(0.0, 0.0, p.M_L, p.M_R)
    assert np.allclose(correlator_rhs(s, p).as_array(), 0.0, atol=1e-15)


def test_decoupled_sites_relax_exponentially():
    p = TwoSiteParams(0.0, 1.0, 2.0, 0.6, 0.5, 1.5)
    times, traj = integrate_correlators(CorrelatorState(0.0, 0.0, 1.0, -1.0), p, 2.0, 1e-3, 0.5)
    decay = np.exp(-4 * p.lam * times)
    assert np.allclose(traj[:, 2], p.M_L + (1.0 - p.M_L) * decay, atol=1e-10)
    assert np.allclose(traj[:, 3], p.M_R + (-1.0 - p.M_R) * decay, atol=1e-10)


@given(params, st.integers(0, 2**32 - 1))
def test_rhs_matches_lindblad_expectations(p, seed):
    rho = random_density_matrix(4, np.random.default_rng(seed))
    drho = lindblad_rhs(p.model(), rho)
    engine = [np.trace(op @ drho).real for op in _correlator_ops()]
    oracle = correlator_rhs(CorrelatorState.from_density_matrix(rho), p).as_array()
    assert np.allclose(oracle, engine, atol=1e-10, rtol=0)


def test_closed_form_reference_point():
    p = TwoSiteParams(1.0, 1.0, 1.0, 1.0, 0.5, 2.0)
    assert abs(p.M_L - M_L) < 1e-15 and abs(p.M_R - M_R) < 1e-15
    exact = ness_closed_form(p)
    assert abs(exact.j_s - J_S) < 1e-14
    assert exact.wdot == 0.0
    assert abs(exact.qdot_L + J_S) < 1e-14
    assert abs(exact.qdot_R - J_S) < 1e-14
    assert abs(exact.diS_dt - (0.5 - 2.0) * J_S) < 1e-14


def test_no_gradient_no_current():
    exact = ness_closed_form(TwoSiteParams(1.0, 2.0, 1.0, 1.0, 0.5, 1.0))
    assert abs(exact.j_s) < 1e-16
    assert max(abs(exact.wdot), abs(exact.qdot_L), abs(exact.qdot_R), abs(exact.diS_dt)) < 1e-16


def test_equal_fields_carry_current_without_work():
    exact = ness_closed_form(TwoSiteParams(1.0, 1.5, 1.5, 1.0, 0.2, 1.0))
    assert exact.wdot == 0.0
    assert abs(exact.j_s) > 1e-2


def test_closed_form_requires_positive_rate():
    with pytest.raises(ValueError):
        ness_closed_form(TwoSiteParams(1.0, 1.0, 1.0, 0.0, 1.0, 1.0))


@given(params)
def test_closed_form_correlators_are_stationary(p):
    exact = ness_closed_form(p)
    assert np.allclose(correlator_rhs(exact.correlators, p).as_array(), 0.0, atol=1e-12)


@given(params)
def test_current_follows_magnetization_difference(p):
    exact = ness_closed_form(p)
    assert exact.j_s * (p.M_R - p.M_L) >= 0
    assert exact.diS_dt >= -1e-15


def test_entropy_production_vanishes_only_on_equilibrium_surface():
    grid = [0.25, 0.5, 1.0, 2.0]
    for b_l in grid:
        for b_r in grid:
            for h_l in grid:
                for h_r in grid:
                    dis = ness_closed_form(TwoSiteParams(1.0, h_l, h_r, 1.0, b_l, b_r)).diS_dt
                    if b_l * h_l == b_r * h_r:
                        assert dis == 0.0
                    else:
                        assert dis > 0


def test_oracle_matches_engine(rng):
    p = TwoSiteParams(1.0, 1.5, 0.5, 1.0, 0.5, 2.0)
    report = oracle_vs_engine(p, random_density_matrix(4, rng), 20.0)
    assert report.passed
    assert report.max_dev < 1e-8
    assert report.ness_dev["j_s"] < 1e-8
    assert report.work_split_dev < 1e-12


def test_work_split_equals_exchange_correlator(rng):
    p = TwoSiteParams(0.8, 2.0, 0.3, 0.6, 0.4, 1.7)
    model = p.model()
    rho = random_density_matrix(4, rng)
    rec = thermo_record(model, rho)
    x = CorrelatorState.from_density_matrix(rho).X
    assert math.isclose(rec.wdot_L, 2 * p.lam * p.J * x, abs_tol=1e-13)
    assert math.isclose(rec.wdot_R, rec.wdot_L, abs_tol=1e-13)


def test_engine_ness_reproduces_reference_point():
    p = TwoSiteParams(1.0, 1.0, 1.0, 1.0, 0.5, 2.0)
    model = p.model()
    rec = thermo_record(model, ness(model).rho)
    assert abs(rec.j_s - J_S) < 1e-10
    assert abs(rec.diS_dt - (0.5 - 2.0) * J_S) < 1e-10

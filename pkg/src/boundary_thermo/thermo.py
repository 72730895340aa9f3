"""Heat, work and entropy production for boundary-driven chains.

Rates per bath ``r`` come from the functional

    D_r(A) = Tr[(v_r A v_r - 1/2 {v_r^2, A}) rho (x) w_r]

as ``Wdot_r = D_r(H_S + H_r)`` and ``Qdot_r = -D_r(H_r)``.  The weak-coupling
(Spohn-style) bookkeeping, which uses ``Tr(H_S D_r(rho))`` as heat, is kept
apart in :func:`naive_weak_coupling_rates` and is only meant for comparison.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .densemat import TensorSpace, anticommutator, herm_eig
from .entropy import EIG_FLOOR, log_density, von_neumann_entropy
from .exceptions import ContractError, StructureError
from .lindblad import BathCoupling, LindbladModel, lindblad_rhs, total_dissipator
from .spin import site_op

REGIME_RTOL = 1e-9
RATE_ATOL = 1e-12


class RankDeficientWarning(UserWarning):
    """Entropy functional evaluated on a state with eigenvalues below the log floor."""


@dataclass(frozen=True)
class ThermoRecord:
    t: float
    wdot_L: float
    wdot_R: float
    qdot_L: float
    qdot_R: float
    S: float
    dS_dt: float
    diS_dt: float
    E_S: float
    j_s: float | None = None

    @property
    def wdot(self) -> float:
        return self.wdot_L + self.wdot_R

    @property
    def qdot(self) -> float:
        return self.qdot_L + self.qdot_R


def d_functional(coupling: BathCoupling, rho_s: np.ndarray, op: np.ndarray) -> float:
    """``D_r(A)`` for an operator ``A`` on the system (x) copy space."""
    v = coupling.v
    gen = v @ op @ v - 0.5 * anticommutator(v @ v, op)
    return float(np.trace(gen @ coupling.joint_state(rho_s)).real)


def boundary_rates(model: LindbladModel, rho: np.ndarray) -> dict[str, tuple[float, float]]:
    """``{side: (Wdot_r, Qdot_r)}`` from the ``D_r`` functional."""
    out = {}
    for c in model.couplings:
        h_r = c.copy_hamiltonian
        wdot = d_functional(c, rho, c.lift(model.hamiltonian) + h_r)
        qdot = -d_functional(c, rho, h_r)
        out[c.side] = (wdot, qdot)
    return out


def boundary_rates_spin(model: LindbladModel, rho: np.ndarray) -> dict[str, tuple[float, float]]:
    """Closed-form spin-chain rates, ``{side: (Wdot_r, Qdot_r)}``.

    ``Qdot_r = 2 h_r lam_r (M_r - <Z_b>)`` and
    ``Wdot_r = 2 lam_r <Jx X_b X_n + Jy Y_b Y_n>`` with ``b`` the boundary site
    and ``n`` its neighbour.  Each side uses its own ``lam_r``; with equal
    rates this is the textbook pair of formulas.
    """
    chain = model.chain
    if chain is None:
        raise StructureError("closed-form rates need a spin-chain model")
    space = TensorSpace.qubits(chain.n)
    out = {}
    for c in model.couplings:
        b = 0 if c.side == "L" else chain.n - 1
        z_b = np.trace(site_op(space, b, "z") @ rho).real
        qdot = 2 * c.copy_field * c.lam * (c.magnetization - z_b)
        wdot = 0.0
        if chain.n > 1:
            nb = 1 if c.side == "L" else chain.n - 2
            bond = chain.jx * site_op(space, b, "x") @ site_op(space, nb, "x") + chain.jy * site_op(
                space, b, "y"
            ) @ site_op(space, nb, "y")
            wdot = 2 * c.lam * np.trace(bond @ rho).real
        out[c.side] = (float(wdot), float(qdot))
    return out


def _check_rank(rho: np.ndarray) -> None:
    if herm_eig(rho)[0][0] < EIG_FLOOR:
        warnings.warn(
            "state has eigenvalues below the log floor; entropy rates are approximate",
            RankDeficientWarning,
            stacklevel=3,
        )


def entropy_rate(model: LindbladModel, rho: np.ndarray) -> float:
    """``dS/dt = -Tr(D(rho) ln rho)`` (the commutator term drops out)."""
    _check_rank(rho)
    return float(-np.trace(total_dissipator(model, rho) @ log_density(rho)).real)


def entropy_production_rate(
    model: LindbladModel, rho: np.ndarray, qdot: dict[str, float] | None = None
) -> float:
    """``d_iS/dt = -Tr(D(rho) ln rho) - sum_r beta_r Qdot_r``.

    Warns with :class:`RankDeficientWarning` when ``rho`` is not full rank.
    """
    if qdot is None:
        qdot = {side: q for side, (_, q) in boundary_rates(model, rho).items()}
    flow = sum(c.beta * qdot[c.side] for c in model.couplings)
    return entropy_rate(model, rho) - flow


def spin_current(rho: np.ndarray, j: float, bond: int, n_sites: int) -> float:
    """Spin current ``i J Y`` on bond ``(bond, bond + 1)``.

    ``Y = i <Y_a X_b - X_a Y_b>``, so the current is ``-J <Y_a X_b - X_a Y_b>``.
    """
    if not 0 <= bond < n_sites - 1:
        raise StructureError(f"bond {bond} not inside a chain of {n_sites} sites")
    space = TensorSpace.qubits(n_sites)
    a, b = bond, bond + 1
    op = site_op(space, a, "y") @ site_op(space, b, "x") - site_op(space, a, "x") @ site_op(
        space, b, "y"
    )
    value = np.trace(op @ rho)
    if abs(value.imag) > 1e-9:
        raise ContractError(f"spin current has imaginary part {value.imag:.3e}")
    return float(-j * value.real)


def thermo_record(
    model: LindbladModel, rho: np.ndarray, t: float = 0.0, closed_form: bool = False
) -> ThermoRecord:
    """Snapshot of rates, entropy and energy for the state ``rho``.

    ``closed_form=True`` takes heat and work from :func:`boundary_rates_spin`
    instead of the ``D_r`` functional.
    """
    rates = boundary_rates_spin(model, rho) if closed_form else boundary_rates(model, rho)
    qdot = {side: q for side, (_, q) in rates.items()}
    ds_dt = entropy_rate(model, rho)
    dis_dt = ds_dt - sum(c.beta * qdot[c.side] for c in model.couplings)
    chain = model.chain
    j_s = None
    if chain is not None and chain.n > 1 and chain.is_xx:
        j_s = spin_current(rho, chain.jx, 0, chain.n)
    return ThermoRecord(
        t=float(t),
        wdot_L=rates.get("L", (0.0, 0.0))[0],
        wdot_R=rates.get("R", (0.0, 0.0))[0],
        qdot_L=rates.get("L", (0.0, 0.0))[1],
        qdot_R=rates.get("R", (0.0, 0.0))[1],
        S=von_neumann_entropy(rho),
        dS_dt=ds_dt,
        diS_dt=dis_dt,
        E_S=float(np.trace(model.hamiltonian @ rho).real),
        j_s=j_s,
    )


def first_law_residual(model: LindbladModel, rho: np.ndarray) -> float:
    """``sum_r (Qdot_r + Wdot_r) - Tr(H_S rhs(rho))`` evaluated at ``rho``."""
    rates = boundary_rates(model, rho)
    du = np.trace(model.hamiltonian @ lindblad_rhs(model, rho)).real
    return float(sum(w + q for w, q in rates.values()) - du)


@dataclass(frozen=True)
class NaiveRates:
    qdot: dict
    diS_dt: float


def naive_weak_coupling_rates(model: LindbladModel, rho: np.ndarray) -> NaiveRates:
    """Weak-coupling bookkeeping, for diagnostics only.

    Heat is ``Tr(H_S D_r(rho))`` and entropy production is
    ``-sum_r Tr(D_r(rho)(ln rho - ln exp(-beta_r H_S)/Z_r))``.  For boundary
    couplings this disagrees with :func:`boundary_rates` and its entropy
    production can turn negative.
    """
    hs = model.hamiltonian
    log_rho = log_density(rho)
    qdot = {}
    dis = 0.0
    for c in model.couplings:
        d_rho = model.dissipator(c.side)(rho)
        qdot[c.side] = float(np.trace(hs @ d_rho).real)
        evals, evecs = herm_eig(hs)
        scaled = -c.beta * evals
        log_gibbs = (evecs * (scaled - _logsumexp(scaled))) @ evecs.conj().T
        dis -= float(np.trace(d_rho @ (log_rho - log_gibbs)).real)
    return NaiveRates(qdot, dis)


def _logsumexp(x: np.ndarray) -> float:
    m = float(np.max(x))
    return m + math.log(float(np.sum(np.exp(x - m))))


@dataclass(frozen=True)
class RegimeReport:
    regime: str
    efficiency: float | None = None
    carnot: float | None = None
    swapped: bool = False
    note: str = ""


def classify_regime(record: ThermoRecord, couplings: Sequence[BathCoupling]) -> RegimeReport:
    """Operating regime of a two-bath steady state.

    Sides are relabelled so that the left bath is the hotter one.  With
    ``b = beta_L/beta_R`` and ``r = h_R/h_L``: engine for ``b < r < 1``,
    refrigerator for ``r < b < 1``, heater for ``r > 1``.  Equal temperatures
    with ``r < 1`` only dissipate work and are reported as a heater.
    """
    by_side = {c.side: c for c in couplings}
    if set(by_side) != {"L", "R"}:
        raise StructureError("regime classification needs one left and one right bath")
    left, right = by_side["L"], by_side["R"]
    wdot, q_l, q_r = record.wdot, record.qdot_L, record.qdot_R
    swapped = left.beta > right.beta
    if swapped:
        left, right = right, left
        q_l, q_r = q_r, q_l
    b_l, b_r = left.beta, right.beta
    h_l, h_r = left.copy_field, right.copy_field

    scale = max(abs(b_l * h_l), abs(b_r * h_r), 1e-300)
    if abs(b_l * h_l - b_r * h_r) <= REGIME_RTOL * scale:
        return RegimeReport("equilibrium", swapped=swapped)
    if abs(h_l - h_r) <= REGIME_RTOL * max(abs(h_l), abs(h_r)):
        return RegimeReport("non-driven", swapped=swapped)
    if max(abs(wdot), abs(q_l), abs(q_r)) < RATE_ATOL:
        return RegimeReport(
            "equilibrium" if abs(wdot) < RATE_ATOL else "non-driven",
            swapped=swapped,
            note="rates below numerical resolution",
        )

    ratio_t = b_l / b_r if b_r > 0 else math.inf
    ratio_h = h_r / h_l if h_l != 0 else math.inf
    if ratio_h > 1:
        return RegimeReport("heater", swapped=swapped)
    if ratio_t < ratio_h < 1:
        return RegimeReport("engine", -wdot / q_l, 1 - ratio_t, swapped)
    if ratio_h < ratio_t < 1:
        return RegimeReport("refrigerator", q_r / wdot, 1 / (1 / ratio_t - 1), swapped)
    return RegimeReport("heater", swapped=swapped, note="equal temperatures")

"""Repeated-interaction (collision) model with exact per-collision bookkeeping.

Each interval of length ``tau`` couples the chain to a fresh thermal copy on
each attached side through one joint unitary

    U = exp(-i tau (H_S + H_L + H_R + V_L + V_R)),

after which the copies are traced out and discarded.  Work is booked when the
couplings are switched, heat is minus the energy change of the copies, and
the entropy production of an interval is ``D(rho_tot' || rho_S' (x) rho_n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Sequence

import numpy as np

from .densemat import dag, expm_unitary, kron, partial_trace
from .entropy import relative_entropy, von_neumann_entropy
from .exceptions import ContractError, StructureError
from .lindblad import evolve, spin_chain_model
from .spin import (
    BathSpec,
    ChainLayout,
    ChainSpec,
    bath_hamiltonian,
    boundary_coupling,
    chain_hamiltonian,
    thermal_spin,
)

Scaling = Literal["scaled", "fixed"]
SWITCH_TOL = 1e-12


@dataclass(frozen=True)
class RIConfig:
    """Collision-model parameters.

    ``scaling="scaled"`` sets the copy coupling to ``J_r = sqrt(lam_r / tau)``
    so that the dynamics approaches the Lindblad limit as ``tau -> 0``;
    ``"fixed"`` keeps ``J_r = sqrt(lam_r)`` independent of ``tau``.
    """

    chain: ChainSpec
    baths: tuple[BathSpec, ...]
    tau: float
    steps: int = 1
    scaling: Scaling = "scaled"

    def __post_init__(self):
        object.__setattr__(self, "baths", tuple(self.baths))
        if not self.tau > 0:
            raise ContractError(f"tau must be positive, got {self.tau}")
        if self.steps < 0:
            raise ContractError("steps must be non-negative")
        if self.scaling not in ("scaled", "fixed"):
            raise ValueError(f"unknown scaling {self.scaling!r}")
        sides = [b.side for b in self.baths]
        if len(set(sides)) != len(sides):
            raise StructureError("at most one bath per side")

    def strength(self, bath: BathSpec) -> float:
        if self.scaling == "scaled":
            return math.sqrt(bath.lam / self.tau)
        return math.sqrt(bath.lam)


@dataclass
class CollisionRecord:
    n: int
    rho: np.ndarray = field(repr=False)
    work: dict[str, float]
    heat: dict[str, float]
    diS: float
    d_term: float
    i_term: float
    E_S: float
    S: float
    dE_S: float
    switch_work: dict[str, float]
    copies: np.ndarray = field(default=None, repr=False)

    @property
    def first_law_residual(self) -> float:
        return self.dE_S - sum(self.work.values()) - sum(self.heat.values())


class _Compiled:
    """Operators of one configuration on the global [L] (x) chain (x) [R] space."""

    def __init__(self, config: RIConfig):
        chain = config.chain
        sides = {b.side for b in config.baths}
        layout = ChainLayout(chain.n, left_copy="L" in sides, right_copy="R" in sides)
        self.layout = layout
        self.space = layout.space
        self.system_factors = layout.system_factors
        self.copy_factors = layout.copy_factors
        self.h_s_small = chain_hamiltonian(chain)
        self.h_s = chain_hamiltonian(chain, layout)
        self.copies = {}
        self.h_copy = {}
        self.coupling = {}
        self.beta = {}
        for b in config.baths:
            h_r = b.field_for(chain)
            self.copies[b.side] = thermal_spin(b.beta, h_r).matrix
            self.h_copy[b.side] = bath_hamiltonian(layout, b.side, h_r)
            self.coupling[b.side] = boundary_coupling(layout, b.side, config.strength(b))
            self.beta[b.side] = b.beta
        h_tot = self.h_s + sum(self.h_copy.values()) + sum(self.coupling.values())
        self.unitary = expm_unitary(h_tot, config.tau)
        self.copy_state = kron(*(self.copies[s] for s in ("L", "R") if s in self.copies))

        # Tr_r(V_r (anything (x) w_r)) = 0 is what lets work split per side
        for side, v in self.coupling.items():
            probe = layout.product_state(np.eye(2**chain.n), self.copies)
            first = partial_trace(v @ probe, self.space, self.system_factors)
            if np.linalg.norm(first) > SWITCH_TOL * max(1.0, np.linalg.norm(v)):
                raise ContractError(f"{side} coupling has a non-zero first moment in the copy state")

    def joint(self, rho_s: np.ndarray) -> np.ndarray:
        return self.layout.product_state(rho_s, self.copies)


@lru_cache(maxsize=64)
def _compile(config: RIConfig) -> _Compiled:
    return _Compiled(config)


def ri_step(rho: np.ndarray, config: RIConfig, n: int = 1) -> tuple[np.ndarray, CollisionRecord]:
    """One collision: couple to fresh copies for ``tau``, then trace them out."""
    c = _compile(config)
    joint = c.joint(rho)
    evolved = c.unitary @ joint @ dag(c.unitary)
    rho_next = partial_trace(evolved, c.space, c.system_factors)
    copies_next = partial_trace(evolved, c.space, c.copy_factors)

    work = {s: -float(np.trace(v @ evolved).real) for s, v in c.coupling.items()}
    heat = {s: float(np.trace(h @ (joint - evolved)).real) for s, h in c.h_copy.items()}

    d_term = relative_entropy(copies_next, c.copy_state)
    s_next = von_neumann_entropy(rho_next)
    i_term = s_next + von_neumann_entropy(copies_next) - von_neumann_entropy(evolved)
    dis = relative_entropy(evolved, c.joint(rho_next))

    # coupling to the next fresh copy; vanishes because Tr_r(V_r w_r) = 0
    fresh = c.joint(rho_next)
    switch = {s: float(np.trace(v @ fresh).real) for s, v in c.coupling.items()}

    e_before = float(np.trace(c.h_s_small @ rho).real)
    e_after = float(np.trace(c.h_s_small @ rho_next).real)
    record = CollisionRecord(
        n=n,
        rho=rho_next,
        work=work,
        heat=heat,
        diS=dis,
        d_term=d_term,
        i_term=i_term,
        E_S=e_after,
        S=s_next,
        dE_S=e_after - e_before,
        switch_work=switch,
        copies=copies_next,
    )
    return rho_next, record


@dataclass
class RITrajectory:
    records: list[CollisionRecord]
    tau: float
    S0: float
    betas: dict[str, float]

    @property
    def times(self) -> np.ndarray:
        return self.tau * np.array([r.n for r in self.records], dtype=float)

    def cumulative_work(self) -> np.ndarray:
        return np.cumsum([sum(r.work.values()) for r in self.records])

    def cumulative_heat(self, side: str) -> np.ndarray:
        return np.cumsum([r.heat[side] for r in self.records])

    def cumulative_entropy_production(self) -> np.ndarray:
        return np.cumsum([r.diS for r in self.records])

    def entropy_balance_residual(self) -> float:
        """``Delta S - sum_r beta_r Q_r - sum Delta_i S`` over the whole run."""
        if not self.records:
            return 0.0
        ds = self.records[-1].S - self.S0
        flow = sum(b * self.cumulative_heat(s)[-1] for s, b in self.betas.items())
        return float(ds - flow - self.cumulative_entropy_production()[-1])


def ri_trajectory(rho0: np.ndarray, config: RIConfig) -> RITrajectory:
    rho = np.asarray(rho0, dtype=complex)
    records = []
    for n in range(1, config.steps + 1):
        rho, rec = ri_step(rho, config, n)
        records.append(rec)
    return RITrajectory(
        records, config.tau, von_neumann_entropy(rho0), {b.side: b.beta for b in config.baths}
    )


@dataclass
class ConvergenceResult:
    taus: np.ndarray
    errors: np.ndarray
    slope: float

    @property
    def running_slopes(self) -> np.ndarray:
        out = np.full(len(self.taus), np.nan)
        lt, le = np.log(self.taus), np.log(self.errors)
        out[1:] = np.diff(le) / np.diff(lt)
        return out

    @property
    def monotone(self) -> bool:
        order = np.argsort(self.taus)[::-1]
        return bool(np.all(np.diff(self.errors[order]) < 0))


def ri_lindblad_convergence(
    rho0: np.ndarray,
    chain: ChainSpec,
    baths: Sequence[BathSpec],
    t_final: float,
    taus: Sequence[float],
    scaling: Scaling = "scaled",
) -> ConvergenceResult:
    """Distance between the collision model and the Lindblad limit at ``t_final``.

    The slope is the least-squares fit of ``log error`` against ``log tau``.
    """
    reference = evolve(
        spin_chain_model(chain, baths), rho0, t_final, sample_dt=t_final
    ).final
    errors = []
    for tau in taus:
        steps = round(t_final / tau)
        if abs(steps * tau - t_final) > 1e-9 * t_final:
            raise ValueError(f"t_final={t_final} is not a multiple of tau={tau}")
        traj = ri_trajectory(rho0, RIConfig(chain, tuple(baths), tau, steps, scaling))
        errors.append(float(np.linalg.norm(traj.records[-1].rho - reference)))
    taus_a = np.asarray(taus, dtype=float)
    errors_a = np.asarray(errors)
    slope = float(np.polyfit(np.log(taus_a), np.log(errors_a), 1)[0])
    return ConvergenceResult(taus_a, errors_a, slope)

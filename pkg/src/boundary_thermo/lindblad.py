"""Boundary-driven Lindblad dynamics for spin chains.

Dissipators follow the convention with the explicit factor 2,

    D(rho) = sum_mu gamma_mu (2 L_mu rho L_mu^dag - {L_mu^dag L_mu, rho}),

so that a boundary spin coupled to a bath of magnetization M relaxes as
``d<Z>/dt = 4 lam (M - <Z>)``.  Vectorization stacks columns:
``vec(A X B) = (B^T (x) A) vec(X)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterator, NamedTuple, Sequence

import numpy as np

from .densemat import (
    TOL_NULL,
    anticommutator,
    dag,
    hermitize,
    null_vector,
    partial_trace,
)
from .exceptions import ContractError, PositivityError, StructureError
from .spin import (
    BathSpec,
    ChainLayout,
    ChainSpec,
    Side,
    ThermalSpinState,
    bath_hamiltonian,
    boundary_coupling,
    chain_hamiltonian,
    site_op,
    thermal_spin,
)

TOL_PSD = 1e-8
STEADY_RHS_TOL = 1e-10


def vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v).reshape(-1)
    dim = dim or math.isqrt(v.size)
    return v.reshape(dim, dim, order="F")


@dataclass(frozen=True)
class Channel:
    rate: float
    op: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class Dissipator:
    """Explicit channel form ``sum gamma (2 L rho L^dag - {L^dag L, rho})``."""

    side: str
    channels: tuple[Channel, ...]
    convention: str = "factor-2"

    def __post_init__(self):
        for ch in self.channels:
            if ch.rate < 0:
                raise ContractError(f"negative channel rate {ch.rate}")

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho, dtype=complex)
        for ch in self.channels:
            ldl = dag(ch.op) @ ch.op
            out += ch.rate * (2 * ch.op @ rho @ dag(ch.op) - anticommutator(ldl, rho))
        return out

    def superoperator(self) -> np.ndarray:
        dim = self.channels[0].op.shape[0]
        eye = np.eye(dim)
        out = np.zeros((dim * dim, dim * dim), dtype=complex)
        for ch in self.channels:
            ldl = dag(ch.op) @ ch.op
            out += ch.rate * (
                2 * np.kron(ch.op.conj(), ch.op) - np.kron(eye, ldl) - np.kron(ldl.T, eye)
            )
        return out


@dataclass(frozen=True)
class BathCoupling:
    """A bath copy and its coupling generator ``v`` on the system (x) copy space.

    The copy sits to the left of the chain for ``side == "L"`` and to the
    right for ``side == "R"``, matching the global factor order.
    """

    bath: BathSpec
    copy_field: float
    thermal: ThermalSpinState
    layout: ChainLayout
    v: np.ndarray = field(repr=False)
    copy_hamiltonian: np.ndarray = field(repr=False)

    @property
    def side(self) -> Side:
        return self.bath.side

    @property
    def beta(self) -> float:
        return self.bath.beta

    @property
    def lam(self) -> float:
        return self.bath.lam

    @property
    def magnetization(self) -> float:
        return self.thermal.magnetization

    def joint_state(self, rho_s: np.ndarray) -> np.ndarray:
        return self.layout.product_state(rho_s, {self.side: self.thermal.matrix})

    def lift(self, op_s: np.ndarray) -> np.ndarray:
        return self.layout.lift_system(op_s)

    def trace_copy(self, op: np.ndarray) -> np.ndarray:
        return partial_trace(op, self.layout.space, self.layout.system_factors)


def spin_bath_coupling(chain: ChainSpec, bath: BathSpec) -> BathCoupling:
    """``v_r = sqrt(lam_r) (X_r X_b + Y_r Y_b)`` with ``b`` the boundary site."""
    layout = ChainLayout(chain.n, left_copy=bath.side == "L", right_copy=bath.side == "R")
    h_r = bath.field_for(chain)
    return BathCoupling(
        bath=bath,
        copy_field=h_r,
        thermal=thermal_spin(bath.beta, h_r),
        layout=layout,
        v=boundary_coupling(layout, bath.side, math.sqrt(bath.lam)),
        copy_hamiltonian=bath_hamiltonian(layout, bath.side, h_r),
    )


class CouplingDissipator:
    """``Tr_r[v (rho (x) w) v] - 1/2 Tr_r{v^2, rho (x) w}`` for one bath coupling."""

    def __init__(self, coupling: BathCoupling, tol: float = 1e-12):
        self.coupling = coupling
        self.side = coupling.side
        v = coupling.v
        dim_s = 2**coupling.layout.n_sites
        first_moment = coupling.trace_copy(v @ coupling.joint_state(np.eye(dim_s)))
        if np.linalg.norm(first_moment) > tol * max(1.0, np.linalg.norm(v)):
            raise ContractError(
                "coupling has a non-zero first moment in the bath state: "
                f"||Tr_r(v w)|| = {np.linalg.norm(first_moment):.3e}"
            )
        self._v2 = v @ v

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        c = self.coupling
        joint = c.joint_state(rho)
        return c.trace_copy(c.v @ joint @ c.v - 0.5 * anticommutator(self._v2, joint))

    def superoperator(self) -> np.ndarray:
        return _superoperator_by_columns(self, 2**self.coupling.layout.n_sites)


def dissipator_from_coupling(coupling: BathCoupling) -> CouplingDissipator:
    return CouplingDissipator(coupling)


def spin_bath_dissipator(chain: ChainSpec, bath: BathSpec) -> Dissipator:
    """Explicit form: ``gamma_pm = lam (1 pm M)``, ``L_pm = sigma^pm`` on the boundary site."""
    n = chain.n
    site = 0 if bath.side == "L" else n - 1
    layout = ChainLayout(n)
    m = thermal_spin(bath.beta, bath.field_for(chain)).magnetization
    return Dissipator(
        side=bath.side,
        channels=(
            Channel(bath.lam * (1 + m), site_op(layout.space, site, "+")),
            Channel(bath.lam * (1 - m), site_op(layout.space, site, "-")),
        ),
    )


@dataclass(frozen=True)
class LindbladModel:
    hamiltonian: np.ndarray = field(repr=False)
    dissipators: tuple = ()
    couplings: tuple[BathCoupling, ...] = ()
    chain: ChainSpec | None = None

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def baths(self) -> tuple[BathSpec, ...]:
        return tuple(c.bath for c in self.couplings)

    def coupling(self, side: Side) -> BathCoupling:
        for c in self.couplings:
            if c.side == side:
                return c
        raise StructureError(f"model has no {side} bath")

    def dissipator(self, side: Side):
        for d in self.dissipators:
            if d.side == side:
                return d
        raise StructureError(f"model has no {side} dissipator")

    @cached_property
    def _kernel(self):
        # rhs = -i(H_eff rho - rho H_eff^dag) + sum_k A_k rho A_k^dag + generic terms
        h_eff = self.hamiltonian.astype(complex)
        jumps = []
        generic = []
        for d in self.dissipators:
            if isinstance(d, Dissipator):
                for ch in d.channels:
                    h_eff = h_eff - 1j * ch.rate * (dag(ch.op) @ ch.op)
                    jumps.append(math.sqrt(2 * ch.rate) * ch.op)
            else:
                generic.append(d)
        return h_eff, dag(h_eff), tuple(jumps), tuple((a, dag(a)) for a in jumps), tuple(generic)

    @cached_property
    def default_dt(self) -> float:
        rate = max((c.lam for c in self.couplings), default=0.0)
        for d in self.dissipators:
            if isinstance(d, Dissipator):
                rate = max([rate, *(ch.rate for ch in d.channels)])
        scale = max(rate, float(np.linalg.norm(self.hamiltonian, 2)))
        return 0.01 / scale if scale > 0 else 0.01


def spin_chain_model(
    chain: ChainSpec, baths: Sequence[BathSpec], form: str = "explicit"
) -> LindbladModel:
    """Lindblad model of an XY chain with boundary spin baths.

    ``form="explicit"`` uses the gamma/sigma^pm channels; ``"microscopic"``
    evaluates the partial traces over the bath copy directly.
    """
    sides = [b.side for b in baths]
    if len(set(sides)) != len(sides):
        raise StructureError("at most one bath per side")
    couplings = tuple(spin_bath_coupling(chain, b) for b in baths)
    if form == "explicit":
        dissipators = tuple(spin_bath_dissipator(chain, b) for b in baths)
    elif form == "microscopic":
        dissipators = tuple(CouplingDissipator(c) for c in couplings)
    else:
        raise ValueError(f"unknown dissipator form {form!r}")
    return LindbladModel(chain_hamiltonian(chain), dissipators, couplings, chain)


def total_dissipator(model: LindbladModel, rho: np.ndarray) -> np.ndarray:
    out = np.zeros_like(rho, dtype=complex)
    for d in model.dissipators:
        out += d(rho)
    return out


def lindblad_rhs(model: LindbladModel, rho: np.ndarray) -> np.ndarray:
    h_eff, h_eff_dag, _, jumps, generic = model._kernel
    out = -1j * (h_eff @ rho - rho @ h_eff_dag)
    for a, a_dag in jumps:
        out += a @ rho @ a_dag
    for d in generic:
        out += d(rho)
    return out


def _superoperator_by_columns(func: Callable[[np.ndarray], np.ndarray], dim: int) -> np.ndarray:
    out = np.empty((dim * dim, dim * dim), dtype=complex)
    basis = np.zeros((dim, dim), dtype=complex)
    for col in range(dim * dim):
        a, b = col % dim, col // dim
        basis[a, b] = 1.0
        out[:, col] = vec(func(basis))
        basis[a, b] = 0.0
    return out


def liouvillian_matrix(model: LindbladModel) -> np.ndarray:
    """Matrix ``L`` with ``L vec(rho) = vec(lindblad_rhs(model, rho))`` (column stacking)."""
    dim = model.dim
    eye = np.eye(dim)
    h = model.hamiltonian
    out = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for d in model.dissipators:
        if hasattr(d, "superoperator"):
            out += d.superoperator()
        else:
            out += _superoperator_by_columns(d, dim)
    return out


def rk4_step(f: Callable, y, h: float):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass
class Trajectory:
    """Sampled states of a Lindblad integration plus integrator diagnostics."""

    times: np.ndarray
    states: list[np.ndarray]
    dt: float
    max_psd_violation: float = 0.0
    max_trace_drift: float = 0.0
    max_herm_dev: float = 0.0
    halvings: int = 0

    def __iter__(self) -> Iterator[tuple[float, np.ndarray]]:
        return iter(zip(self.times, self.states))

    def __len__(self) -> int:
        return len(self.states)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _integrate(model: LindbladModel, rho: np.ndarray, duration: float, dt: float) -> np.ndarray:
    steps = max(1, math.ceil(duration / dt - 1e-9))
    h = duration / steps
    f = lambda r: lindblad_rhs(model, r)  # noqa: E731
    for _ in range(steps):
        rho = rk4_step(f, rho, h)
    return rho


def evolve(
    model: LindbladModel,
    rho0: np.ndarray,
    t_final: float,
    dt: float | None = None,
    sample_dt: float | None = None,
    tol_psd: float = TOL_PSD,
    max_halvings: int = 4,
) -> Trajectory:
    """Fixed-step RK4 integration of the Lindblad equation.

    States are stored every ``sample_dt`` (default ``t_final / 100``); each
    stored state is re-Hermitized and renormalized to unit trace before the
    integration continues from it.  If a stored state has an eigenvalue below
    ``-tol_psd`` the segment is redone with half the step, up to
    ``max_halvings`` times.

    Raises
    ------
    PositivityError
        If positivity cannot be restored by step halving.
    """
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    dt = model.default_dt if dt is None else float(dt)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if sample_dt is None:
        sample_dt = t_final / 100 if t_final > 0 else 1.0
    n_seg = max(1, math.ceil(t_final / sample_dt - 1e-9)) if t_final > 0 else 0
    times = np.linspace(0.0, t_final, n_seg + 1)

    rho = hermitize(np.asarray(rho0, dtype=complex))
    rho = rho / np.trace(rho).real
    traj = Trajectory(times=times, states=[rho.copy()], dt=dt)
    for k in range(n_seg):
        seg = times[k + 1] - times[k]
        step = dt
        for attempt in range(max_halvings + 1):
            raw = _integrate(model, rho, seg, step)
            herm_dev = float(np.linalg.norm(raw - dag(raw)))
            trace = np.trace(raw).real
            clean = hermitize(raw) / trace
            min_eig = float(np.linalg.eigvalsh(clean)[0])
            if min_eig >= -tol_psd:
                break
            if attempt == max_halvings:
                raise PositivityError(
                    f"min eigenvalue {min_eig:.3e} at t={times[k + 1]:.6g} "
                    f"after {max_halvings} step halvings"
                )
            step /= 2
            traj.halvings += 1
        traj.max_herm_dev = max(traj.max_herm_dev, herm_dev)
        traj.max_trace_drift = max(traj.max_trace_drift, abs(trace - 1.0))
        traj.max_psd_violation = max(traj.max_psd_violation, max(0.0, -min_eig))
        rho = clean
        traj.states.append(rho.copy())
    return traj


class SteadyState(NamedTuple):
    rho: np.ndarray
    residual: float
    multiplicity: int
    rhs_norm: float
    crosscheck: float | None = None

    @property
    def unique(self) -> bool:
        return self.multiplicity <= 1


def ness(
    model: LindbladModel,
    crosscheck_time: float | None = None,
    tol: float = TOL_NULL,
) -> SteadyState:
    """Stationary state from the kernel of the vectorized Liouvillian.

    ``multiplicity > 1`` signals a degenerate kernel; the returned state is
    then one arbitrary element of it.  With ``crosscheck_time`` the maximally
    mixed state is integrated for that long and ``||rho_ness - rho(t)||_F`` is
    reported as ``crosscheck``.
    """
    dim = model.dim
    kernel = null_vector(liouvillian_matrix(model), tol)
    rho = unvec(kernel.vector, dim)
    rho = hermitize(rho / np.trace(rho))
    rho = rho / np.trace(rho).real
    rhs_norm = float(np.linalg.norm(lindblad_rhs(model, rho)))
    cross = None
    if crosscheck_time is not None:
        late = evolve(model, np.eye(dim) / dim, crosscheck_time, sample_dt=crosscheck_time).final
        cross = float(np.linalg.norm(rho - late))
    return SteadyState(rho, kernel.residual, kernel.multiplicity, rhs_norm, cross)

"""Spin-1/2 operators, XY chain Hamiltonians and thermal bath copies.

Basis convention: ``|0>`` is the sigma^z = +1 ("up") state, so
``sigma^+ = |0><1|`` raises down to up.  Units hbar = k_B = 1.
Sites are indexed from 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .densemat import TensorSpace, embed, kron
from .exceptions import ContractError, StructureError

Side = Literal["L", "R"]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = 0.5 * (SIGMA_X + 1j * SIGMA_Y)
SIGMA_MINUS = 0.5 * (SIGMA_X - 1j * SIGMA_Y)

PAULI = {
    "x": SIGMA_X,
    "y": SIGMA_Y,
    "z": SIGMA_Z,
    "+": SIGMA_PLUS,
    "-": SIGMA_MINUS,
    "i": np.eye(2, dtype=complex),
}


@dataclass(frozen=True)
class ChainSpec:
    """XY chain: local fields ``h`` (one per site) and exchange couplings."""

    h: tuple[float, ...]
    jx: float
    jy: float

    def __post_init__(self):
        h = tuple(float(x) for x in np.atleast_1d(self.h))
        if len(h) < 1:
            raise StructureError("a chain needs at least one site")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "jx", float(self.jx))
        object.__setattr__(self, "jy", float(self.jy))

    @classmethod
    def uniform(cls, n: int, h: float, jx: float, jy: float | None = None) -> "ChainSpec":
        return cls((h,) * n, jx, jx if jy is None else jy)

    @property
    def n(self) -> int:
        return len(self.h)

    @property
    def is_xx(self) -> bool:
        return self.jx == self.jy

    def with_field(self, site: int, value: float) -> "ChainSpec":
        h = list(self.h)
        h[site] = value
        return ChainSpec(tuple(h), self.jx, self.jy)


@dataclass(frozen=True)
class BathSpec:
    """One family of bath copies attached to the left or right end.

    ``h`` is the field of a copy; ``None`` ties it to the boundary site's field
    (h_L = h_0, h_R = h_{N-1}).
    """

    side: Side
    beta: float
    lam: float
    h: float | None = None

    def __post_init__(self):
        if self.side not in ("L", "R"):
            raise StructureError(f"side must be 'L' or 'R', got {self.side!r}")
        if not self.lam > 0:
            raise ContractError(f"coupling rate must be positive, got {self.lam}")
        if self.beta < 0:
            raise ContractError(f"inverse temperature must be non-negative, got {self.beta}")

    def field_for(self, chain: ChainSpec) -> float:
        if self.h is not None:
            return float(self.h)
        return chain.h[0] if self.side == "L" else chain.h[-1]


@dataclass(frozen=True)
class ThermalSpinState:
    beta: float
    h: float
    matrix: np.ndarray = field(repr=False)
    magnetization: float
    partition: float


def thermal_spin(beta: float, h: float) -> ThermalSpinState:
    """Gibbs state of ``h sigma^z / 2`` at inverse temperature ``beta``."""
    x = 0.5 * beta * h
    # normalize by the larger weight to stay finite at large beta*h
    shift = abs(x)
    weights = np.array([np.exp(-x - shift), np.exp(x - shift)])
    z = float(weights.sum())
    return ThermalSpinState(
        beta=float(beta),
        h=float(h),
        matrix=np.diag(weights / z).astype(complex),
        magnetization=float(-np.tanh(x)),
        partition=z * math.exp(shift) if shift < 700 else math.inf,
    )


def site_op(space: TensorSpace, site: int, pauli) -> np.ndarray:
    """Single-factor operator on ``site`` of ``space`` (identity elsewhere).

    ``pauli`` is one of ``"x", "y", "z", "+", "-"`` or an explicit 2x2 matrix.
    """
    op = PAULI[pauli] if isinstance(pauli, str) else np.asarray(pauli, dtype=complex)
    if not 0 <= site < space.n_factors:
        raise StructureError(f"site {site} outside a space of {space.n_factors} factors")
    return embed(op, space, [site])


@dataclass(frozen=True)
class ChainLayout:
    """Factor positions for a chain with optional left/right bath copies."""

    n_sites: int
    left_copy: bool = False
    right_copy: bool = False

    @property
    def space(self) -> TensorSpace:
        return TensorSpace.qubits(self.n_sites + self.left_copy + self.right_copy)

    def site(self, j: int) -> int:
        if not 0 <= j < self.n_sites:
            raise StructureError(f"site {j} outside a chain of {self.n_sites}")
        return j + int(self.left_copy)

    @property
    def system_factors(self) -> list[int]:
        return [self.site(j) for j in range(self.n_sites)]

    def copy(self, side: Side) -> int:
        if side == "L" and self.left_copy:
            return 0
        if side == "R" and self.right_copy:
            return self.n_sites + int(self.left_copy)
        raise StructureError(f"layout has no {side} bath copy")

    @property
    def copy_factors(self) -> list[int]:
        return [self.copy(s) for s, on in (("L", self.left_copy), ("R", self.right_copy)) if on]

    def boundary_site(self, side: Side) -> int:
        return 0 if side == "L" else self.n_sites - 1

    def lift_system(self, op: np.ndarray) -> np.ndarray:
        """Embed a system-space operator into the full layout space."""
        return embed(op, self.space, self.system_factors)

    def product_state(self, rho_s: np.ndarray, copies: dict[str, np.ndarray]) -> np.ndarray:
        """``[copy_L] (x) rho_s (x) [copy_R]`` in layout order."""
        parts = []
        if self.left_copy:
            parts.append(copies["L"])
        parts.append(rho_s)
        if self.right_copy:
            parts.append(copies["R"])
        return kron(*parts)


def chain_hamiltonian(spec: ChainSpec, layout: ChainLayout | None = None) -> np.ndarray:
    """``1/2 sum_j h_j Z_j - sum_j (Jx X_j X_{j+1} + Jy Y_j Y_{j+1})``."""
    layout = layout or ChainLayout(spec.n)
    if layout.n_sites != spec.n:
        raise StructureError("layout and chain disagree on the number of sites")
    space = layout.space
    ham = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    for j, hj in enumerate(spec.h):
        ham += 0.5 * hj * site_op(space, layout.site(j), "z")
    for j in range(spec.n - 1):
        a, b = layout.site(j), layout.site(j + 1)
        ham -= spec.jx * site_op(space, a, "x") @ site_op(space, b, "x")
        ham -= spec.jy * site_op(space, a, "y") @ site_op(space, b, "y")
    return ham


def uniform_field_generator(n: int, h: float) -> np.ndarray:
    """``H_0 = (h/2) sum_j Z_j``, conserved by XX chains in a uniform field."""
    space = TensorSpace.qubits(n)
    return 0.5 * h * sum(site_op(space, j, "z") for j in range(n))


def exchange(layout: ChainLayout, a: int, b: int) -> np.ndarray:
    """``X_a X_b + Y_a Y_b`` on factors ``a`` and ``b``."""
    space = layout.space
    return site_op(space, a, "x") @ site_op(space, b, "x") + site_op(space, a, "y") @ site_op(
        space, b, "y"
    )


def boundary_coupling(layout: ChainLayout, side: Side, strength: float) -> np.ndarray:
    """Exchange coupling between a bath copy and its boundary spin."""
    return strength * exchange(layout, layout.copy(side), layout.site(layout.boundary_site(side)))


def bath_hamiltonian(layout: ChainLayout, side: Side, h: float) -> np.ndarray:
    return 0.5 * h * site_op(layout.space, layout.copy(side), "z")


def product_thermal_state(n: int, beta: float, h: float | Sequence[float]) -> np.ndarray:
    """``(x)_j omega_beta(h_j Z_j / 2)``; a scalar ``h`` is used on every site."""
    fields = np.broadcast_to(np.asarray(h, dtype=float), (n,))
    return kron(*(thermal_spin(beta, hj).matrix for hj in fields))

"""Von Neumann entropy, relative entropy and mutual information (natural log, k_B = 1)."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .densemat import TensorSpace, dag, herm_eig, partial_trace

EIG_FLOOR = 1e-14


def von_neumann_entropy(rho: np.ndarray) -> float:
    """``-Tr(rho ln rho)`` with the convention ``0 ln 0 = 0``."""
    p = herm_eig(rho)[0]
    p = p[p > EIG_FLOOR]
    return float(-np.sum(p * np.log(p)))


def log_density(rho: np.ndarray, floor: float = EIG_FLOOR) -> np.ndarray:
    """Matrix logarithm of a density matrix with eigenvalues clipped at ``floor``."""
    p, v = herm_eig(rho)
    return (v * np.log(np.maximum(p, floor))) @ dag(v)


def relative_entropy(a: np.ndarray, b: np.ndarray, floor: float = EIG_FLOOR) -> float:
    """``D(a||b) = Tr(a ln a) - Tr(a ln b)``.

    Eigenvalues of ``b`` are floored at ``floor`` so the result stays finite
    when the support of ``a`` leaks outside that of ``b`` at round-off level.
    """
    return float(-von_neumann_entropy(a) - np.trace(a @ log_density(b, floor)).real)


def mutual_information(rho: np.ndarray, space: TensorSpace, part: Iterable[int]) -> float:
    """``S(A) + S(B) - S(AB)`` for the bipartition ``part`` | complement."""
    part = sorted(set(part))
    rest = [k for k in range(space.n_factors) if k not in part]
    return (
        von_neumann_entropy(partial_trace(rho, space, part))
        + von_neumann_entropy(partial_trace(rho, space, rest))
        - von_neumann_entropy(rho)
    )

"""Dense complex linear algebra on small tensor-product Hilbert spaces.

Matrices are plain ``numpy`` arrays of dtype ``complex128`` (row-major,
interleaved real/imaginary parts).  Tensor factors are ordered with the
leftmost factor as the slowest-varying index, which is what ``np.kron``
produces.  For a spin chain with bath copies the global order is::

    [left copy] (x) [site 0] (x) ... (x) [site N-1] (x) [right copy]
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .exceptions import ContractError, StructureError

TOL_HERM = 1e-10  # relative to ||H||_F
TOL_EIG = 1e-10
TOL_NULL = 1e-8

I2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class TensorSpace:
    """Ordered list of local dimensions of a tensor-product space."""

    factor_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims or any(d < 1 for d in dims):
            raise StructureError(f"invalid factor dimensions {self.factor_dims!r}")
        object.__setattr__(self, "factor_dims", dims)

    @classmethod
    def qubits(cls, n: int) -> "TensorSpace":
        return cls((2,) * n)

    @property
    def n_factors(self) -> int:
        return len(self.factor_dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.factor_dims))

    def subspace(self, keep: Iterable[int]) -> "TensorSpace":
        return TensorSpace(tuple(self.factor_dims[k] for k in sorted(set(keep))))


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise StructureError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ContractError("matrix has non-finite entries")
    return m


def dag(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def kron(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices, left factor slowest."""
    if not ops:
        raise StructureError("kron needs at least one operand")
    return reduce(np.kron, (np.asarray(o, dtype=complex) for o in ops))


def embed(op: np.ndarray, space: TensorSpace, factors: Sequence[int]) -> np.ndarray:
    """Place ``op`` on the (contiguous, increasing) ``factors`` of ``space``.

    Identity acts on all other factors.
    """
    factors = list(factors)
    if not factors or factors != list(range(factors[0], factors[0] + len(factors))):
        raise StructureError(f"factors must be contiguous and increasing, got {factors}")
    if factors[0] < 0 or factors[-1] >= space.n_factors:
        raise StructureError(f"factors {factors} out of range for {space.n_factors} factors")
    block = int(np.prod([space.factor_dims[k] for k in factors]))
    op = as_matrix(op)
    if op.shape != (block, block):
        raise StructureError(f"operator shape {op.shape} does not match factors of dim {block}")
    left = int(np.prod(space.factor_dims[: factors[0]]))
    right = int(np.prod(space.factor_dims[factors[-1] + 1 :]))
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def partial_trace(op: np.ndarray, space: TensorSpace, keep: Iterable[int]) -> np.ndarray:
    """Trace out every factor of ``space`` not listed in ``keep``.

    The kept factors retain their relative order.
    """
    keep = sorted(set(int(k) for k in keep))
    op = as_matrix(op)
    n = space.n_factors
    if not keep:
        raise StructureError("keep must name at least one factor")
    if keep[0] < 0 or keep[-1] >= n:
        raise StructureError(f"keep {keep} out of range for {n} factors")
    if op.shape != (space.total_dim, space.total_dim):
        raise StructureError(
            f"operator shape {op.shape} does not match space dimension {space.total_dim}"
        )
    if len(keep) == n:
        return op.copy()

    letters = string.ascii_letters
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for k in range(n):
        if k not in keep:
            col[k] = row[k]
    out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    tensor = op.reshape(space.factor_dims * 2)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, tensor)
    d = int(np.prod([space.factor_dims[k] for k in keep]))
    return reduced.reshape(d, d)


def check_hermitian(h: np.ndarray, rtol: float = TOL_HERM) -> None:
    norm = np.linalg.norm(h)
    if np.linalg.norm(h - dag(h)) > rtol * norm:
        raise ContractError(
            f"matrix is not Hermitian: ||H - H^dag||_F = {np.linalg.norm(h - dag(h)):.3e}"
        )


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dag(a))


def herm_eig(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix.

    Raises
    ------
    ContractError
        If ``h`` deviates from Hermiticity by more than ``TOL_HERM * ||h||_F``.
    """
    h = as_matrix(h)
    if h.shape[0] != h.shape[1]:
        raise StructureError(f"matrix must be square, got {h.shape}")
    check_hermitian(h)
    return np.linalg.eigh(hermitize(h))


def expm_unitary(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i h t)`` for Hermitian ``h``, assembled from its eigenbasis."""
    evals, evecs = herm_eig(h)
    return (evecs * np.exp(-1j * t * evals)) @ dag(evecs)


def funm_hermitian(h: np.ndarray, func) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum."""
    evals, evecs = herm_eig(h)
    return (evecs * func(evals)) @ dag(evecs)


class NullVector(NamedTuple):
    vector: np.ndarray
    residual: float
    multiplicity: int


def null_vector(m: np.ndarray, tol: float = TOL_NULL) -> NullVector:
    """Approximate kernel vector of a square matrix.

    Returns the eigenvector of ``M^dag M`` with the smallest eigenvalue, that
    eigenvalue as ``residual``, and how many eigenvalues of ``M^dag M`` fall
    below ``tol``.  The eigenpairs are taken from the SVD of ``M`` (right
    singular vectors, squared singular values), which avoids squaring the
    condition number.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise StructureError(f"matrix must be square, got {m.shape}")
    _, s, vh = np.linalg.svd(m)
    gram = s**2
    vec = vh[-1].conj().reshape(-1, 1)
    return NullVector(vec, float(gram[-1]), int(np.count_nonzero(gram < tol)))


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return hermitize(a)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random full-rank (or given-rank) density matrix from a Ginibre matrix."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ dag(g)
    return hermitize(rho / np.trace(rho).real)

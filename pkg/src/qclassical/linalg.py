"""Dense complex linear algebra shared by every other module.

Conventions fixed here once and tested as contracts:

* tensor products put the *system* (or qubit A) in the leftmost factor, so a
  joint index reads ``i_system * dim_env + i_env``;
* ``vec`` stacks matrix columns, so the map ``rho -> A rho B`` has the
  superoperator matrix ``B.T (x) A``;
* all eigenvalue work on Hermitian matrices goes through ``eigvalsh``.

Dimensions are desk scale: the largest supported (joint) dimension is
``MAX_DIM``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

# Largest supported joint Hilbert-space dimension.
MAX_DIM = 64

# Entrywise tolerance for Hermiticity / trace / idempotence checks.
ATOL = 1e-10

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def as_matrix(obj) -> np.ndarray:
    """Return the underlying complex matrix of a state object or array."""
    matrix = getattr(obj, "matrix", obj)
    out = np.asarray(matrix, dtype=complex)
    if out.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {out.shape}")
    return out


def ket(index: int, dim: int) -> np.ndarray:
    """Computational basis column vector |index> in the given dimension."""
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(vector: np.ndarray) -> np.ndarray:
    """Rank-1 projector |v><v| / <v|v>."""
    v = np.asarray(vector, dtype=complex).reshape(-1)
    return np.outer(v, v.conj()) / np.vdot(v, v).real


def dagger(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).conj().T


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    return np.asarray(m, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Inverse of :func:`vec`; assumes a square matrix unless told otherwise."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    if shape is None:
        dim = round(np.sqrt(v.size))
        if dim * dim != v.size:
            raise DimensionError(f"vector of length {v.size} is not a square matrix")
        shape = (dim, dim)
    return v.reshape(shape, order="F")


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the left factor acting on the first subsystem.

    Index contract: ``(a (x) b)[i*rb + k, j*cb + l] = a[i, j] * b[k, l]``.
    """
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace(m, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Trace out one factor of a bipartite operator.

    ``dims = (d_left, d_right)`` with the left factor first (system
    convention), ``keep`` is 0 for the left factor and 1 for the right.
    The full trace is preserved.
    """
    d_a, d_b = dims
    matrix = as_matrix(m)
    if matrix.shape != (d_a * d_b, d_a * d_b):
        raise DimensionError(
            f"matrix shape {matrix.shape} does not match subsystem dims {dims}"
        )
    if keep not in (0, 1):
        raise ValueError("keep must be 0 (left factor) or 1 (right factor)")
    four = matrix.reshape(d_a, d_b, d_a, d_b)
    if keep == 0:
        return np.einsum("ikjk->ij", four)
    return np.einsum("ikil->kl", four)


def is_hermitian(m: np.ndarray, atol: float = ATOL) -> bool:
    matrix = as_matrix(m)
    return bool(np.max(np.abs(matrix - matrix.conj().T)) <= atol)


def min_eigenvalue(m: np.ndarray) -> float:
    """Smallest eigenvalue of (the Hermitian part of) a matrix."""
    matrix = as_matrix(m)
    sym = (matrix + matrix.conj().T) / 2.0
    if sym.shape == (2, 2):
        # Closed form; the checkers validate every evaluated state, so the
        # LAPACK call overhead is worth skipping at qubit size.
        half_tr = 0.5 * (sym[0, 0].real + sym[1, 1].real)
        radius = np.hypot(0.5 * (sym[0, 0].real - sym[1, 1].real), abs(sym[0, 1]))
        return float(half_tr - radius)
    return float(np.linalg.eigvalsh(sym)[0])


def trace_distance(a, b) -> float:
    """Half the sum of absolute eigenvalues of the difference.

    Symmetric, zero iff the operators are equal, and satisfies the triangle
    inequality; accepts state wrappers or bare matrices of equal dimension.
    """
    ma, mb = as_matrix(a), as_matrix(b)
    if ma.shape != mb.shape:
        raise DimensionError(f"dimension mismatch: {ma.shape} vs {mb.shape}")
    eigs = np.linalg.eigvalsh(ma - mb)
    return float(0.5 * np.sum(np.abs(eigs)))


def _check_state_matrix(matrix: np.ndarray, name: str) -> None:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {matrix.shape}")
    if matrix.shape[0] < 1 or matrix.shape[0] > MAX_DIM:
        raise DimensionError(
            f"{name} dimension {matrix.shape[0]} outside supported range 1..{MAX_DIM}"
        )
    if not np.all(np.isfinite(matrix)):
        raise ValueError(f"{name} contains non-finite entries")
    if not is_hermitian(matrix):
        raise ValueError(f"{name} is not Hermitian within {ATOL}")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Positive unit-trace operator; validated on construction."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", matrix)
        _check_state_matrix(matrix, "density matrix")
        if abs(np.trace(matrix).real - 1.0) > ATOL:
            raise ValueError(f"trace {np.trace(matrix).real!r} is not 1 within {ATOL}")
        if min_eigenvalue(matrix) < -ATOL:
            raise ValueError(
                f"minimum eigenvalue {min_eigenvalue(matrix):.3e} below -{ATOL}"
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class SubnormalizedState:
    """Positive operator with trace in [0, 1]; trace = probability weight."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", matrix)
        _check_state_matrix(matrix, "subnormalized state")
        tr = np.trace(matrix).real
        if tr < -ATOL or tr > 1.0 + ATOL:
            raise ValueError(f"trace {tr!r} outside [0, 1] within {ATOL}")
        if min_eigenvalue(matrix) < -ATOL:
            raise ValueError(
                f"minimum eigenvalue {min_eigenvalue(matrix):.3e} below -{ATOL}"
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def norm(self) -> float:
        """Trace of the state: the probability of the conditioning events."""
        return float(np.trace(self.matrix).real)


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.eye(dim, dtype=complex) / dim)


def pure_state(vector: np.ndarray) -> DensityMatrix:
    return DensityMatrix(projector(vector))


def bloch_vector(rho) -> tuple[float, float, float]:
    """(x, y, z) expectation values of the Pauli matrices for a qubit state."""
    m = as_matrix(rho)
    if m.shape != (2, 2):
        raise DimensionError("Bloch vector is defined for qubits only")
    return (
        float(np.trace(SIGMA_X @ m).real),
        float(np.trace(SIGMA_Y @ m).real),
        float(np.trace(SIGMA_Z @ m).real),
    )


def state_from_bloch(x: float, y: float, z: float) -> np.ndarray:
    """Qubit density matrix (I + x X + y Y + z Z) / 2 as a bare matrix."""
    return 0.5 * (np.eye(2, dtype=complex) + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z)

"""Superoperators, projective observables and the interventions built from them.

A superoperator is stored as a ``dim_out**2 x dim_in**2`` matrix acting on
column-stacked operators, so ``rho -> A rho B`` has matrix ``B.T (x) A``.
That convention is a tested contract: ``apply(unitary_channel(U), rho)``
equals ``U rho U†`` entrywise.

The CP and TP fields are metadata claims.  Factory functions in this module
set them truthfully; ``validate_superoperator`` checks a claim against the
matrix (Choi positivity for CP, trace preservation for TP).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    DegenerateObservableError,
    DimensionError,
    NotInvertibleError,
    NotUnitaryError,
)
from .linalg import ATOL, as_matrix, dagger, ket, unvec, vec

# Condition-number ceiling separating exactly-singular maps from float noise.
MAX_CONDITION_NUMBER = 1e8

# Floor for the minimum Choi eigenvalue of a map claiming complete positivity.
CHOI_EIG_FLOOR = -1e-9


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Linear map on operators in matrix form, with CP/TP metadata."""

    matrix: np.ndarray
    cp: bool = False
    tp: bool = False

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", matrix)
        d_out = round(np.sqrt(matrix.shape[0]))
        d_in = round(np.sqrt(matrix.shape[1]))
        if (d_out * d_out, d_in * d_in) != matrix.shape:
            raise DimensionError(
                f"superoperator shape {matrix.shape} is not (d_out^2, d_in^2)"
            )

    @property
    def dim_in(self) -> int:
        return round(np.sqrt(self.matrix.shape[1]))

    @property
    def dim_out(self) -> int:
        return round(np.sqrt(self.matrix.shape[0]))


def apply(superop: Superoperator, rho) -> np.ndarray:
    """Apply a superoperator to an operator, returning a bare matrix."""
    matrix = as_matrix(rho)
    if matrix.shape[0] != superop.dim_in:
        raise DimensionError(
            f"state dim {matrix.shape[0]} does not match map input dim {superop.dim_in}"
        )
    return unvec(superop.matrix @ vec(matrix), (superop.dim_out, superop.dim_out))


def choi_matrix(superop: Superoperator) -> np.ndarray:
    """Block matrix whose (i, j) block is the image of the matrix unit E_ij.

    Positive semidefinite iff the map is completely positive; the partial
    trace over the output factor equals the identity iff trace preserving.
    """
    d_in, d_out = superop.dim_in, superop.dim_out
    choi = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for i in range(d_in):
        for j in range(d_in):
            unit = np.zeros((d_in, d_in), dtype=complex)
            unit[i, j] = 1.0
            block = apply(superop, unit)
            choi[i * d_out:(i + 1) * d_out, j * d_out:(j + 1) * d_out] = block
    return choi


def is_trace_preserving(superop: Superoperator, atol: float = ATOL) -> bool:
    """True iff trace(map(rho)) = trace(rho) for every rho.

    Equivalent to the adjoint fixing the vectorized identity; checked on the
    matrix directly so it is exact up to the tolerance.
    """
    d_in, d_out = superop.dim_in, superop.dim_out
    lhs = dagger(superop.matrix) @ vec(np.eye(d_out))
    return bool(np.max(np.abs(lhs - vec(np.eye(d_in)))) <= atol)


def is_completely_positive(superop: Superoperator, floor: float = CHOI_EIG_FLOOR) -> bool:
    choi = choi_matrix(superop)
    eigs = np.linalg.eigvalsh((choi + dagger(choi)) / 2.0)
    return bool(eigs[0] >= floor)


def validate_superoperator(superop: Superoperator, atol: float = ATOL) -> None:
    """Raise if a claimed CP or TP flag is not backed by the matrix."""
    if superop.tp and not is_trace_preserving(superop, atol):
        raise ValueError("map claims trace preservation but is not TP")
    if superop.cp and not is_completely_positive(superop):
        raise ValueError("map claims complete positivity but its Choi matrix is not PSD")


def kraus_channel(operators, tp: bool = True) -> Superoperator:
    """Channel sum_k K rho K† from Kraus operators (column-stacking form)."""
    ops = [np.asarray(k, dtype=complex) for k in operators]
    matrix = sum(np.kron(k.conj(), k) for k in ops)
    out = Superoperator(matrix, cp=True, tp=tp)
    if tp:
        validate_superoperator(out)
    return out


@lru_cache(maxsize=None)
def identity_superop(dim: int) -> Superoperator:
    return Superoperator(np.eye(dim * dim, dtype=complex), cp=True, tp=True)


def unitary_channel(u: np.ndarray) -> Superoperator:
    """CPTP map rho -> U rho U† for a unitary U."""
    matrix = as_matrix(u)
    if matrix.shape[0] != matrix.shape[1]:
        raise NotUnitaryError(f"matrix of shape {matrix.shape} is not square")
    residual = np.max(np.abs(dagger(matrix) @ matrix - np.eye(matrix.shape[0])))
    if residual > ATOL:
        raise NotUnitaryError(f"unitarity residual {residual:.3e} exceeds {ATOL}")
    return Superoperator(np.kron(matrix.conj(), matrix), cp=True, tp=True)


def reset_channel(state) -> Superoperator:
    """CPTP map rho -> trace(rho) * sigma that discards the input."""
    sigma = as_matrix(state)
    dim = sigma.shape[0]
    matrix = np.outer(vec(sigma), vec(np.eye(dim)).conj())
    return Superoperator(matrix, cp=True, tp=True)


def compose(a: Superoperator, b: Superoperator) -> Superoperator:
    """Map applying b first, then a; CP/TP flags conjoin."""
    if b.dim_out != a.dim_in:
        raise DimensionError(
            f"cannot compose: inner dims {b.dim_out} (out of b) vs {a.dim_in} (in of a)"
        )
    return Superoperator(a.matrix @ b.matrix, cp=a.cp and b.cp, tp=a.tp and b.tp)


def invert(a: Superoperator) -> Superoperator:
    """Linear inverse of a superoperator.

    Raises NotInvertibleError for singular or ill-conditioned matrices; the
    inverse of a TP map is again TP, but complete positivity is generally
    lost, so the CP flag is cleared.
    """
    if a.dim_in != a.dim_out:
        raise NotInvertibleError("only square superoperators can be inverted")
    cond = np.linalg.cond(a.matrix)
    if not np.isfinite(cond) or cond > MAX_CONDITION_NUMBER:
        raise NotInvertibleError(
            f"condition number {cond:.3e} exceeds {MAX_CONDITION_NUMBER:.0e}"
        )
    return Superoperator(np.linalg.inv(a.matrix), cp=False, tp=a.tp)


# --------------------------------------------------------------------------
# Observables and the interventions derived from them
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Observable:
    """Projective decomposition: an ordered list of (eigenvalue, projector).

    Projectors must be Hermitian, idempotent, mutually orthogonal and sum to
    the identity.  The observable is non-degenerate iff every projector has
    rank 1.
    """

    outcomes: tuple[tuple[float, np.ndarray], ...]

    def __post_init__(self):
        outcomes = tuple(
            (float(value), np.asarray(proj, dtype=complex)) for value, proj in self.outcomes
        )
        object.__setattr__(self, "outcomes", outcomes)
        if not outcomes:
            raise ValueError("observable needs at least one outcome")
        dim = outcomes[0][1].shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for _, proj in outcomes:
            if proj.shape != (dim, dim):
                raise DimensionError("projectors have inconsistent dimensions")
            if np.max(np.abs(proj - dagger(proj))) > ATOL:
                raise ValueError("projector is not Hermitian")
            if np.max(np.abs(proj @ proj - proj)) > ATOL:
                raise ValueError("projector is not idempotent")
            total += proj
        for i, (_, p) in enumerate(outcomes):
            for _, q in outcomes[i + 1:]:
                if np.max(np.abs(p @ q)) > ATOL:
                    raise ValueError("projectors are not mutually orthogonal")
        if np.max(np.abs(total - np.eye(dim))) > ATOL:
            raise ValueError("projectors do not sum to the identity")

    @property
    def dim(self) -> int:
        return self.outcomes[0][1].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.outcomes)

    def rank(self, r: int) -> int:
        return round(np.trace(self.outcomes[r][1]).real)

    @property
    def is_degenerate(self) -> bool:
        return any(self.rank(r) > 1 for r in range(self.n_outcomes))


def observable_from_eigenbasis(eigenvalues, vectors) -> Observable:
    """Non-degenerate observable from eigenvalues and orthonormal vectors."""
    pairs = []
    for value, v in zip(eigenvalues, vectors):
        v = np.asarray(v, dtype=complex).reshape(-1)
        pairs.append((float(value), np.outer(v, v.conj())))
    return Observable(tuple(pairs))


def sigma_z_observable() -> Observable:
    """Qubit sigma_z: outcome index 0 is up (+1), index 1 is down (-1)."""
    return observable_from_eigenbasis([1.0, -1.0], [ket(0, 2), ket(1, 2)])


def sigma_x_observable() -> Observable:
    """Qubit sigma_x: outcome index 0 is |+> (+1), index 1 is |-> (-1)."""
    plus = (ket(0, 2) + ket(1, 2)) / np.sqrt(2.0)
    minus = (ket(0, 2) - ket(1, 2)) / np.sqrt(2.0)
    return observable_from_eigenbasis([1.0, -1.0], [plus, minus])


def embed_left(observable: Observable, dim_right: int) -> Observable:
    """Extend an observable to act on the left factor of a larger system.

    Each projector becomes P (x) I, so any observable with dim_right > 1
    turns degenerate: coherence can hide in the untouched factor.
    """
    eye = np.eye(dim_right, dtype=complex)
    pairs = tuple(
        (value, np.kron(proj, eye)) for value, proj in observable.outcomes
    )
    return Observable(pairs)


# Observables hash by identity and are long-lived relative to the superops
# built from them, so a bounded cache avoids rebuilding Kronecker products in
# the checkers' inner loops.
@lru_cache(maxsize=4096)
def projector_superop(observable: Observable, r: int) -> Superoperator:
    """CP trace-nonincreasing map rho -> P_r rho P_r for outcome index r."""
    if not 0 <= r < observable.n_outcomes:
        raise IndexError(f"outcome index {r} out of range 0..{observable.n_outcomes - 1}")
    proj = observable.outcomes[r][1]
    return Superoperator(np.kron(proj.conj(), proj), cp=True, tp=False)


@lru_cache(maxsize=4096)
def dephasing_channel(observable: Observable) -> Superoperator:
    """CPTP map summing the projection superoperators of an observable."""
    matrix = sum(
        projector_superop(observable, r).matrix for r in range(observable.n_outcomes)
    )
    return Superoperator(matrix, cp=True, tp=True)


def _sorted_rank1_vectors(observable: Observable) -> list[np.ndarray]:
    """Eigenvectors of a non-degenerate observable, ascending eigenvalue.

    Ties are broken by construction order (stable sort), matching the fixed
    population ordering of the block decomposition.
    """
    if observable.is_degenerate:
        raise DegenerateObservableError(
            "block decomposition is defined for rank-1 projectors only"
        )
    order = sorted(range(observable.n_outcomes), key=lambda r: observable.outcomes[r][0])
    vectors = []
    for r in order:
        proj = observable.outcomes[r][1]
        eigvals, eigvecs = np.linalg.eigh(proj)
        vectors.append(eigvecs[:, -1])
    return vectors


def ordered_basis_matrix(
    a: Superoperator, obs_in: Observable, obs_out: Observable
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Blocks of a map in the populations-then-coherences operator basis.

    The operator basis of the input (output) space lists |r><r| sorted by
    ascending eigenvalue of obs_in (obs_out), then the coherences |r><r'|
    with r != r' in lexicographic order of the sorted indices.  Returns the
    four blocks (A, B, C, D) with A mapping populations to populations; A is
    real for any Hermiticity-preserving map and column stochastic whenever B
    vanishes for a CPTP map.
    """
    if obs_in.dim != a.dim_in or obs_out.dim != a.dim_out:
        raise DimensionError("observable dimensions do not match the map")

    def basis(vectors):
        d = len(vectors)
        cols = [vec(np.outer(vectors[r], vectors[r].conj())) for r in range(d)]
        for r in range(d):
            for s in range(d):
                if r != s:
                    cols.append(vec(np.outer(vectors[r], vectors[s].conj())))
        return np.column_stack(cols)

    v_in = basis(_sorted_rank1_vectors(obs_in))
    v_out = basis(_sorted_rank1_vectors(obs_out))
    m = dagger(v_out) @ a.matrix @ v_in
    d_in, d_out = obs_in.dim, obs_out.dim
    block_a = m[:d_out, :d_in]
    return (
        block_a.real.copy(),
        m[:d_out, d_in:].copy(),
        m[d_out:, :d_in].copy(),
        m[d_out:, d_in:].copy(),
    )


# --------------------------------------------------------------------------
# Interventions
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Outcome:
    """Projective measurement result: apply P_r . P_r for the given outcome."""

    observable: Observable
    outcome: int

    def __post_init__(self):
        if not 0 <= self.outcome < self.observable.n_outcomes:
            raise IndexError(
                f"outcome index {self.outcome} out of range for the observable"
            )


@dataclass(frozen=True, eq=False)
class Dephase:
    """Erase coherences in the eigenbasis of the given observable."""

    observable: Observable


@dataclass(frozen=True)
class Identity:
    """Do nothing."""


@dataclass(frozen=True, eq=False)
class CPMap:
    """An arbitrary CP map applied as an intervention."""

    superoperator: Superoperator


Intervention = Outcome | Dephase | Identity | CPMap


def intervention_matrix(intervention: Intervention, dim: int) -> np.ndarray:
    """Superoperator matrix of an intervention on a system of this dimension."""
    if isinstance(intervention, Identity):
        return np.eye(dim * dim, dtype=complex)
    if isinstance(intervention, Outcome):
        if intervention.observable.dim != dim:
            raise DimensionError("observable dimension does not match the system")
        return projector_superop(intervention.observable, intervention.outcome).matrix
    if isinstance(intervention, Dephase):
        if intervention.observable.dim != dim:
            raise DimensionError("observable dimension does not match the system")
        return dephasing_channel(intervention.observable).matrix
    if isinstance(intervention, CPMap):
        s = intervention.superoperator
        if s.dim_in != dim or s.dim_out != dim:
            raise DimensionError("CP map dimension does not match the system")
        return s.matrix
    raise TypeError(f"unknown intervention {intervention!r}")

"""Seeded random generators for processes, channels and observables.

Channels are drawn by Stinespring dilation with a Haar-random unitary on
system (x) ancilla, ancilla dimension equal to the system's.  The
block-structured family (vanishing coherence-to-population block in a given
eigenbasis) is sampled directly through a Kraus construction in which, for
each output index, the Kraus columns of distinct inputs are orthogonal; that
property is exactly what kills the coherence-to-population block, while the
column norms produce the stochastic population block.
"""

from __future__ import annotations

import numpy as np

from .channels import (
    Observable,
    Superoperator,
    kraus_channel,
    observable_from_eigenbasis,
    unitary_channel,
)
from .linalg import DensityMatrix, partial_trace, tensor_product, vec
from .process import DilatedProcess, MarkovProcess, TimeGrid


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases[None, :]


def random_density_matrix(dim: int, rng: np.random.Generator) -> DensityMatrix:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_observable(dim: int, rng: np.random.Generator) -> Observable:
    """Non-degenerate observable with a Haar-random eigenbasis."""
    u = haar_unitary(dim, rng)
    return observable_from_eigenbasis(
        [float(k) for k in range(dim)], [u[:, k] for k in range(dim)]
    )


def random_cptp(dim: int, rng: np.random.Generator) -> Superoperator:
    """Random channel: Haar unitary on system (x) ancilla, ancilla traced out."""
    u = haar_unitary(dim * dim, rng)
    anc = np.zeros((dim, dim), dtype=complex)
    anc[0, 0] = 1.0
    columns = []
    for j in range(dim):
        for i in range(dim):
            unit = np.zeros((dim, dim), dtype=complex)
            unit[i, j] = 1.0
            joint = u @ tensor_product(unit, anc) @ u.conj().T
            columns.append(vec(partial_trace(joint, (dim, dim), keep=0)))
    return Superoperator(np.column_stack(columns), cp=True, tp=True)


def block_triangular_channel(
    rng: np.random.Generator,
    observable: Observable | None = None,
    dim: int = 2,
    max_condition: float = 1e3,
    max_tries: int = 100,
) -> Superoperator:
    """Random invertible CPTP map with no coherence-to-population block.

    Kraus entries K_m[s, r] = alpha[s, r] * V_s[m, r] with unitary V_s per
    output index and a column-stochastic alpha**2; outputs of distinct input
    populations stay orthogonal in Kraus space, so dephased outputs depend
    only on dephased inputs.  Resamples until the map is comfortably
    invertible.
    """
    if observable is not None:
        dim = observable.dim
        if observable.is_degenerate:
            raise ValueError("the block construction needs a rank-1 observable")
    for _ in range(max_tries):
        alpha = np.sqrt(rng.dirichlet(np.ones(dim), size=dim).T)  # alpha[s, r]
        vs = [haar_unitary(dim, rng) for _ in range(dim)]
        kraus = []
        for m in range(dim):
            k = np.zeros((dim, dim), dtype=complex)
            for s in range(dim):
                for r in range(dim):
                    k[s, r] = alpha[s, r] * vs[s][m, r]
            kraus.append(k)
        if observable is not None:
            w = np.column_stack(
                [_unit_eigenvector(observable, r) for r in range(dim)]
            )
            kraus = [w @ k @ w.conj().T for k in kraus]
        channel = kraus_channel(kraus)
        cond = np.linalg.cond(channel.matrix)
        if np.isfinite(cond) and cond <= max_condition:
            return channel
    raise RuntimeError("failed to sample a well-conditioned block channel")


def _unit_eigenvector(observable: Observable, r: int) -> np.ndarray:
    proj = observable.outcomes[r][1]
    eigvals, eigvecs = np.linalg.eigh(proj)
    return eigvecs[:, -1]


def measure_prepare_channel(
    rng: np.random.Generator, dim: int = 2
) -> Superoperator:
    """Fully classical channel: measure populations, prepare populations."""
    a = rng.dirichlet(np.ones(dim), size=dim).T  # column stochastic
    kraus = []
    for s in range(dim):
        for r in range(dim):
            k = np.zeros((dim, dim), dtype=complex)
            k[s, r] = np.sqrt(a[s, r])
            kraus.append(k)
    return kraus_channel(kraus)


def _grid(n_steps: int) -> TimeGrid:
    return TimeGrid(tuple(float(k) for k in range(n_steps + 1)))


def random_markov_process(
    rng: np.random.Generator,
    dim: int = 2,
    n_steps: int = 2,
    kind: str = "generic",
    observable: Observable | None = None,
) -> MarkovProcess:
    """Random Markov model; ``kind`` picks the interval-map family:
    generic Stinespring channels, block-triangular channels, classical
    measure-and-prepare channels, or Haar unitaries."""
    makers = {
        "generic": lambda: random_cptp(dim, rng),
        "block": lambda: block_triangular_channel(rng, observable, dim),
        "classical": lambda: measure_prepare_channel(rng, dim),
        "unitary": lambda: unitary_channel(haar_unitary(dim, rng)),
        "phase": lambda: unitary_channel(
            np.diag(np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=dim)))
        ),
    }
    maps = tuple(makers[kind]() for _ in range(n_steps))
    return MarkovProcess(
        dim_s=dim,
        maps=maps,
        initial_s=random_density_matrix(dim, rng),
        times=_grid(n_steps),
    )


def random_dilated_process(
    rng: np.random.Generator,
    dim_s: int = 2,
    dim_e: int = 2,
    n_steps: int = 2,
) -> DilatedProcess:
    """Random dilation with a product initial state and Haar joint unitaries."""
    rho = tensor_product(
        random_density_matrix(dim_s, rng).matrix,
        random_density_matrix(dim_e, rng).matrix,
    )
    unitaries = tuple(haar_unitary(dim_s * dim_e, rng) for _ in range(n_steps))
    return DilatedProcess(
        dim_s=dim_s,
        dim_e=dim_e,
        initial_se=DensityMatrix(rho),
        unitaries=unitaries,
        times=_grid(n_steps),
    )

"""Process tensors: evaluate intervention sequences on multi-time processes.

A process is represented behaviorally, as an evaluator mapping an
intervention sequence to a subnormalized output state whose trace is the
probability of the realized outcomes.  Two concrete backings are provided:

* ``DilatedProcess``: a system-environment dilation evolved by explicit
  joint unitaries, with interventions acting on the system factor;
* ``MarkovProcess``: a family of dynamical maps applied directly to the
  system, which is what operational CP divisibility asserts.

``markov_from_dilation`` derives a map family from a dilation by process
tomography.  The derived family reproduces the unmeasured reduced dynamics
but not necessarily the dynamics after an intervention, so it is flagged
``derived`` and checkers treat it as reduced-dynamics divisibility rather
than certified operational divisibility.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channels import (
    CPMap,
    Identity,
    Intervention,
    Observable,
    Outcome,
    Superoperator,
    compose,
    identity_superop,
    intervention_matrix,
    invert,
    is_trace_preserving,
)
from .errors import (
    DimensionError,
    NotDerivableError,
    NotUnitaryError,
    SequenceError,
)
from .linalg import (
    ATOL,
    MAX_DIM,
    DensityMatrix,
    SubnormalizedState,
    dagger,
    partial_trace,
    tensor_product,
    unvec,
    vec,
)

# Checkers enumerate exponentially many sequences; cap the grid size.
MAX_TIMES = 8


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing time labels t_0 < t_1 < ... < t_n."""

    times: tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        object.__setattr__(self, "times", times)
        if len(times) < 1:
            raise ValueError("time grid needs at least the preparation time t_0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"time labels must be strictly increasing: {times}")
        if len(times) - 1 > MAX_TIMES:
            raise ValueError(
                f"{len(times) - 1} steps exceed the enumeration cap of {MAX_TIMES}"
            )

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    def interval(self, k: int) -> float:
        """Length of the k-th interval t_k - t_{k-1}, 1-based."""
        return self.times[k] - self.times[k - 1]

    def prefix(self, n: int) -> "TimeGrid":
        return TimeGrid(self.times[: n + 1])


def _check_preparation(preparation: Intervention) -> None:
    if isinstance(preparation, Identity):
        return
    if isinstance(preparation, CPMap):
        if not preparation.superoperator.tp:
            raise SequenceError("preparations must be trace preserving")
        return
    raise SequenceError(
        "the preparation slot accepts only Identity or a trace-preserving CPMap"
    )


@dataclass(frozen=True, eq=False)
class InterventionSequence:
    """One preparation for the t_0 slot plus one intervention per time."""

    preparation: Intervention
    steps: tuple[Intervention, ...]

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        _check_preparation(self.preparation)

    @property
    def n_steps(self) -> int:
        return len(self.steps)


def identity_sequence(n_steps: int) -> InterventionSequence:
    return InterventionSequence(Identity(), tuple(Identity() for _ in range(n_steps)))


def _apply_to_left_factor(
    superop_matrix: np.ndarray, rho: np.ndarray, dim_s: int, dim_e: int
) -> np.ndarray:
    """Apply a system superoperator to the left factor of a joint state.

    The four-index view of a column-stacking superoperator has axes
    (out-col, out-row, in-col, in-row).
    """
    four = superop_matrix.reshape(dim_s, dim_s, dim_s, dim_s)
    joint = rho.reshape(dim_s, dim_e, dim_s, dim_e)
    out = np.einsum("BAba,aebf->AeBf", four, joint)
    return out.reshape(dim_s * dim_e, dim_s * dim_e)


@dataclass(frozen=True, eq=False)
class DilatedProcess:
    """Joint unitary dilation: initial SE state plus one unitary per interval."""

    dim_s: int
    dim_e: int
    initial_se: DensityMatrix
    unitaries: tuple[np.ndarray, ...]
    times: TimeGrid
    observables: tuple[Observable, ...] = ()

    def __post_init__(self):
        unitaries = tuple(np.asarray(u, dtype=complex) for u in self.unitaries)
        object.__setattr__(self, "unitaries", unitaries)
        object.__setattr__(self, "observables", tuple(self.observables))
        d = self.dim_s * self.dim_e
        if d > MAX_DIM:
            raise DimensionError(f"joint dimension {d} exceeds {MAX_DIM}")
        if self.initial_se.dim != d:
            raise DimensionError("initial state dimension does not match dim_s * dim_e")
        if len(unitaries) != self.times.n_steps:
            raise SequenceError(
                f"{len(unitaries)} unitaries for {self.times.n_steps} intervals"
            )
        for u in unitaries:
            if u.shape != (d, d):
                raise DimensionError("joint unitary has wrong shape")
            if np.max(np.abs(dagger(u) @ u - np.eye(d))) > ATOL:
                raise NotUnitaryError("interval propagator is not unitary")

    @property
    def n_steps(self) -> int:
        return self.times.n_steps

    @property
    def initial_system_matrix(self) -> np.ndarray:
        return partial_trace(self.initial_se.matrix, (self.dim_s, self.dim_e), keep=0)

    def prefix(self, n: int) -> "DilatedProcess":
        return replace(self, unitaries=self.unitaries[:n], times=self.times.prefix(n))

    def evaluate(self, sequence: InterventionSequence) -> SubnormalizedState:
        if sequence.n_steps != self.n_steps:
            raise SequenceError(
                f"sequence has {sequence.n_steps} steps, process has {self.n_steps}"
            )
        rho = self.initial_se.matrix
        prep = intervention_matrix(sequence.preparation, self.dim_s)
        rho = _apply_to_left_factor(prep, rho, self.dim_s, self.dim_e)
        for k, step in enumerate(sequence.steps):
            u = self.unitaries[k]
            rho = u @ rho @ dagger(u)
            step_matrix = intervention_matrix(step, self.dim_s)
            rho = _apply_to_left_factor(step_matrix, rho, self.dim_s, self.dim_e)
        reduced = partial_trace(rho, (self.dim_s, self.dim_e), keep=0)
        return SubnormalizedState(reduced)

    def product_split(self) -> tuple[np.ndarray, np.ndarray]:
        """Split the initial state as rho_S (x) rho_E or refuse."""
        rho = self.initial_se.matrix
        rho_s = partial_trace(rho, (self.dim_s, self.dim_e), keep=0)
        rho_e = partial_trace(rho, (self.dim_s, self.dim_e), keep=1)
        residual = np.max(np.abs(rho - tensor_product(rho_s, rho_e)))
        if residual > 1e-9:
            raise NotDerivableError(
                f"initial state is correlated (product residual {residual:.3e})"
            )
        return rho_s, rho_e

    def reduced_propagator(self, k: int) -> Superoperator:
        """Map from t_0 to t_k of the unmeasured reduced dynamics.

        Obtained by process tomography over the matrix units, exact by
        linearity at these dimensions.  Requires a product initial state.
        """
        _, rho_e = self.product_split()
        d = self.dim_s
        columns = []
        for j in range(d):
            for i in range(d):
                unit = np.zeros((d, d), dtype=complex)
                unit[i, j] = 1.0
                joint = tensor_product(unit, rho_e)
                for u in self.unitaries[:k]:
                    joint = u @ joint @ dagger(u)
                columns.append(vec(partial_trace(joint, (d, self.dim_e), keep=0)))
        return Superoperator(np.column_stack(columns), cp=True, tp=True)


@dataclass(frozen=True, eq=False)
class MarkovProcess:
    """Operationally CP-divisible process: one CPTP map per interval.

    A ``derived`` family (from :func:`markov_from_dilation`) keeps trace
    preservation but drops the CP requirement, since reduced maps between
    intermediate times of a non-Markovian dilation need not be CP.
    """

    dim_s: int
    maps: tuple[Superoperator, ...]
    initial_s: DensityMatrix
    times: TimeGrid
    observables: tuple[Observable, ...] = ()
    derived: bool = False

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "observables", tuple(self.observables))
        if self.initial_s.dim != self.dim_s:
            raise DimensionError("initial state dimension does not match dim_s")
        if len(self.maps) != self.times.n_steps:
            raise SequenceError(
                f"{len(self.maps)} maps for {self.times.n_steps} intervals"
            )
        tp_tol = 1e-8 if self.derived else ATOL
        for m in self.maps:
            if m.dim_in != self.dim_s or m.dim_out != self.dim_s:
                raise DimensionError("map dimension does not match dim_s")
            if not is_trace_preserving(m, tp_tol):
                raise ValueError("interval map is not trace preserving")
            if not self.derived and not m.cp:
                raise ValueError("interval maps of a Markov process must be flagged CP")

    @property
    def n_steps(self) -> int:
        return self.times.n_steps

    @property
    def initial_system_matrix(self) -> np.ndarray:
        return self.initial_s.matrix

    def prefix(self, n: int) -> "MarkovProcess":
        return replace(self, maps=self.maps[:n], times=self.times.prefix(n))

    def propagator(self, j: int, k: int) -> Superoperator:
        """Composed map from t_j to t_k (0 <= j <= k <= n)."""
        if not 0 <= j <= k <= self.n_steps:
            raise IndexError(f"invalid propagator indices ({j}, {k})")
        out = identity_superop(self.dim_s)
        for m in self.maps[j:k]:
            out = compose(m, out)
        return out

    def evaluate(self, sequence: InterventionSequence) -> SubnormalizedState:
        if sequence.n_steps != self.n_steps:
            raise SequenceError(
                f"sequence has {sequence.n_steps} steps, process has {self.n_steps}"
            )
        v = vec(self.initial_s.matrix)
        v = intervention_matrix(sequence.preparation, self.dim_s) @ v
        for k, step in enumerate(sequence.steps):
            v = self.maps[k].matrix @ v
            v = intervention_matrix(step, self.dim_s) @ v
        return SubnormalizedState(unvec(v, (self.dim_s, self.dim_s)))


Process = DilatedProcess | MarkovProcess


def evaluate(process, sequence: InterventionSequence) -> SubnormalizedState:
    """Evaluate the process tensor on an intervention sequence."""
    return process.evaluate(sequence)


def joint_probability(
    process,
    preparation: Intervention,
    outcomes: list[tuple[int, int]],
    observable: Observable | None = None,
) -> float:
    """Probability of outcomes at selected times, unmeasured times left alone.

    ``outcomes`` is a list of (time index, outcome index) pairs with 1-based,
    strictly increasing time indices; the observable defaults to the single
    observable registered on the process.
    """
    if observable is None:
        if len(process.observables) != 1:
            raise ValueError(
                "pass an observable explicitly unless the process registers exactly one"
            )
        observable = process.observables[0]
    times = [t for t, _ in outcomes]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise SequenceError("measurement time indices must be strictly increasing")
    if times and (times[0] < 1 or times[-1] > process.n_steps):
        raise SequenceError("measurement time index out of range")
    steps: list[Intervention] = [Identity() for _ in range(process.n_steps)]
    for t, r in outcomes:
        steps[t - 1] = Outcome(observable, r)
    out = process.evaluate(InterventionSequence(preparation, tuple(steps)))
    return out.norm


def markov_from_dilation(process) -> MarkovProcess:
    """Derive the dynamical-map family of a dilation by tomography.

    Computes the start-to-time maps of the unmeasured reduced dynamics and
    chains their inverses into interval maps.  The result reproduces the
    free evolution exactly, but for a non-Markovian dilation it does not
    describe the dynamics after an intervention; it is therefore flagged
    ``derived``.
    """
    lambdas = [identity_superop(process.dim_s)]
    lambdas += [process.reduced_propagator(k) for k in range(1, process.n_steps + 1)]
    step_maps = []
    for k in range(1, process.n_steps + 1):
        step_maps.append(compose(lambdas[k], invert(lambdas[k - 1])))
    rho_s, _ = process.product_split()
    return MarkovProcess(
        dim_s=process.dim_s,
        maps=tuple(step_maps),
        initial_s=DensityMatrix(rho_s),
        times=process.times,
        observables=process.observables,
        derived=True,
    )

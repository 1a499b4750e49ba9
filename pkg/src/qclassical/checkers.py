"""Decision procedures for classicality, incoherence, NCGD and invertibility.

Every checker returns a ``Verdict`` carrying the tolerance it used and, on
failure, a witness: the lexicographically first violating pattern in a fixed
enumeration order, together with both compared values and the violation
magnitude.  Counterexample reproduction is a first-class feature, so the
witness always contains enough to replay the violation.

Quantifying over "all preparations" is operationalized by a spanning set of
preparations: the compared outputs are linear in the prepared state, so
equality on a basis of the operator space decides equality for every
preparation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .channels import (
    CPMap,
    Dephase,
    Identity,
    Intervention,
    Observable,
    Superoperator,
    dephasing_channel,
    identity_superop,
    intervention_matrix,
    invert,
    projector_superop,
    reset_channel,
)
from .errors import NotInvertibleError
from .linalg import DensityMatrix, ket, projector, trace_distance, vec
from .process import (
    InterventionSequence,
    MarkovProcess,
    joint_probability,
)

DEFAULT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Witness:
    """First violating comparison: the pattern, both values, the magnitude."""

    pattern: dict
    lhs: object
    rhs: object
    distance: float


@dataclass(frozen=True)
class Verdict:
    check: str
    holds: bool
    tolerance: float
    witness: Witness | None = None

    def __post_init__(self):
        if self.holds and self.witness is not None:
            raise ValueError("a holding verdict must not carry a witness")
        if not self.holds and self.witness is None:
            raise ValueError("a failing verdict must carry a witness")


# --------------------------------------------------------------------------
# Preparation sets
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Single:
    """One fixed preparation."""

    preparation: Intervention


@dataclass(frozen=True, eq=False)
class BasisSpanning:
    """Preparations whose prepared states span the full operator space."""

    preparations: tuple[Intervention, ...]

    def __post_init__(self):
        object.__setattr__(self, "preparations", tuple(self.preparations))


@dataclass(frozen=True, eq=False)
class AllDiagonal:
    """All preparations whose state at t_1 is diagonal for this observable."""

    observable: Observable


PreparationSet = Single | BasisSpanning | AllDiagonal


def tomography_states(dim: int) -> list[np.ndarray]:
    """dim**2 pure states spanning the operator space.

    Basis states |a><a| plus, for each pair a < b, the two superposition
    states completing the off-diagonal matrix units.
    """
    states = [projector(ket(a, dim)) for a in range(dim)]
    for a in range(dim):
        for b in range(a + 1, dim):
            states.append(projector(ket(a, dim) + ket(b, dim)))
            states.append(projector(ket(a, dim) + 1j * ket(b, dim)))
    return states


def spanning_preparations(dim: int) -> BasisSpanning:
    """Replace-with-state channels over a tomography basis of states."""
    return BasisSpanning(
        tuple(CPMap(reset_channel(s)) for s in tomography_states(dim))
    )


def _eigenspace_basis(observable: Observable, r: int) -> np.ndarray:
    proj = observable.outcomes[r][1]
    eigvals, eigvecs = np.linalg.eigh(proj)
    return eigvecs[:, eigvals > 0.5]


def diagonal_states(observable: Observable) -> list[np.ndarray]:
    """States spanning the subspace left invariant by the dephasing operation.

    For a rank-1 observable these are the eigenbasis states; degenerate
    eigenspaces get the in-block tomography completion.
    """
    states = []
    for r in range(observable.n_outcomes):
        basis = _eigenspace_basis(observable, r)
        vectors = [basis[:, i] for i in range(basis.shape[1])]
        states.extend(projector(v) for v in vectors)
        for i in range(len(vectors)):
            for j in range(i + 1, len(vectors)):
                states.append(projector(vectors[i] + vectors[j]))
                states.append(projector(vectors[i] + 1j * vectors[j]))
    return states


def _diagonal_contexts(process, observable: Observable):
    """Evaluation contexts realizing each spanning diagonal state at t_1.

    Only a dynamical-map family lets one prescribe the system state at t_1
    directly (replace the first map); for a dilation the notion is not
    operational, so AllDiagonal demands a MarkovProcess.
    """
    if not isinstance(process, MarkovProcess):
        raise TypeError(
            "AllDiagonal preparation sets require a MarkovProcess "
            "(derive one first for a dilation)"
        )
    contexts = []
    for i, state in enumerate(diagonal_states(observable)):
        variant = replace(
            process,
            initial_s=DensityMatrix(state),
            maps=(identity_superop(process.dim_s),) + process.maps[1:],
        )
        contexts.append((f"diagonal[{i}]", variant, Identity()))
    return contexts


def preparation_contexts(process, prep_set: PreparationSet, observable: Observable):
    """Resolve a preparation set into (label, process, preparation) triples."""
    if isinstance(prep_set, Single):
        return [("preparation[0]", process, prep_set.preparation)]
    if isinstance(prep_set, BasisSpanning):
        prepared = []
        rho0 = process.initial_system_matrix
        for prep in prep_set.preparations:
            matrix = intervention_matrix(prep, process.dim_s)
            prepared.append(matrix @ vec(rho0))
        rank = np.linalg.matrix_rank(np.column_stack(prepared), tol=1e-10)
        if rank < process.dim_s**2:
            raise ValueError(
                f"preparations span rank {rank} < {process.dim_s ** 2}: not a basis"
            )
        return [
            (f"preparation[{i}]", process, prep)
            for i, prep in enumerate(prep_set.preparations)
        ]
    if isinstance(prep_set, AllDiagonal):
        return _diagonal_contexts(process, prep_set.observable)
    raise TypeError(f"unknown preparation set {prep_set!r}")


# --------------------------------------------------------------------------
# Classicality (Kolmogorov consistency of the measured statistics)
# --------------------------------------------------------------------------


def _subsets(times: tuple[int, ...]):
    """All nonempty subsets, by ascending bitmask: the fixed witness order."""
    for mask in range(1, 2 ** len(times)):
        yield tuple(t for i, t in enumerate(times) if mask >> i & 1)


def check_classicality(
    process,
    observable: Observable,
    preparation: Intervention = Identity(),
    times: tuple[int, ...] | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> Verdict:
    """Do the statistics marginalize consistently at every measured time?

    For every subset of the measured times and every time in that subset,
    the outcome-summed probabilities are compared against the probabilities
    obtained by not measuring at that time at all.  Single-time statistics
    hold trivially; the verdict fails on the largest discrepancy found, with
    the first violating pattern as witness.
    """
    if times is None:
        times = tuple(range(1, process.n_steps + 1))
    times = tuple(sorted(set(int(t) for t in times)))
    if times and (times[0] < 1 or times[-1] > process.n_steps):
        raise ValueError(f"measurement times {times} outside 1..{process.n_steps}")

    n_out = observable.n_outcomes
    cache: dict[tuple, float] = {}

    def prob(fixed: list[tuple[int, int]]) -> float:
        key = tuple(fixed)
        if key not in cache:
            cache[key] = joint_probability(process, preparation, fixed, observable)
        return cache[key]

    for subset in _subsets(times):
        for k in subset:
            rest = tuple(t for t in subset if t != k)
            for assignment in itertools.product(range(n_out), repeat=len(rest)):
                fixed = list(zip(rest, assignment))
                rhs = prob(fixed)
                lhs = sum(prob(sorted(fixed + [(k, r_k)])) for r_k in range(n_out))
                gap = abs(lhs - rhs)
                if gap > tolerance:
                    witness = Witness(
                        pattern={
                            "measured": {str(t): r for t, r in fixed},
                            "marginalized": k,
                        },
                        lhs=lhs,
                        rhs=rhs,
                        distance=gap,
                    )
                    return Verdict("classical", False, tolerance, witness)
    return Verdict("classical", True, tolerance)


def check_classicality_set(
    process,
    observable: Observable,
    prep_set: PreparationSet,
    times: tuple[int, ...] | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> Verdict:
    """Classicality for every preparation in the set (conjunction)."""
    for label, proc, prep in preparation_contexts(process, prep_set, observable):
        verdict = check_classicality(proc, observable, prep, times, tolerance)
        if not verdict.holds:
            pattern = dict(verdict.witness.pattern)
            pattern["preparation"] = label
            return Verdict(
                "classical",
                False,
                tolerance,
                replace(verdict.witness, pattern=pattern),
            )
    return Verdict("classical", True, tolerance)


# --------------------------------------------------------------------------
# Incoherence
# --------------------------------------------------------------------------


def _pattern_labels(flags: tuple[bool, ...]) -> list[str]:
    return ["dephase" if f else "identity" for f in flags] + ["dephase"]


def check_incoherence(
    process,
    observable: Observable,
    prep_set: PreparationSet,
    ell: int | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> Verdict:
    """Are dephased outputs insensitive to earlier dephasing choices?

    For each target time, all 2**(ell-1) dephase-or-nothing patterns at the
    earlier times are evaluated with a final dephasing fixed at the target;
    the verdict holds iff all outputs coincide in trace distance, for every
    preparation in the set.  With ``ell=None`` the conjunction over every
    target time is checked.
    """
    ells = range(1, process.n_steps + 1) if ell is None else [int(ell)]
    for label, proc, prep in preparation_contexts(process, prep_set, observable):
        for l in ells:
            if not 1 <= l <= proc.n_steps:
                raise ValueError(f"target time {l} outside 1..{proc.n_steps}")
            prefix = proc.prefix(l)
            patterns = list(itertools.product((False, True), repeat=l - 1))
            outputs = []
            for flags in patterns:
                steps = tuple(
                    Dephase(observable) if f else Identity() for f in flags
                ) + (Dephase(observable),)
                seq = InterventionSequence(prep, steps)
                outputs.append(prefix.evaluate(seq).matrix)
            for i in range(len(outputs)):
                for j in range(i + 1, len(outputs)):
                    gap = trace_distance(outputs[i], outputs[j])
                    if gap > tolerance:
                        witness = Witness(
                            pattern={
                                "preparation": label,
                                "ell": l,
                                "lhs_pattern": _pattern_labels(patterns[i]),
                                "rhs_pattern": _pattern_labels(patterns[j]),
                            },
                            lhs=outputs[i],
                            rhs=outputs[j],
                            distance=gap,
                        )
                        return Verdict("incoherent", False, tolerance, witness)
    return Verdict("incoherent", True, tolerance)


# --------------------------------------------------------------------------
# NCGD, invertibility, and the superoperator identity
# --------------------------------------------------------------------------


def check_ncgd(
    markov: MarkovProcess,
    observable: Observable,
    tolerance: float = DEFAULT_TOLERANCE,
) -> Verdict:
    """Dephased-sandwiched propagation insensitive to a middle dephasing.

    Verifies D L(k,l) D L(j,k) D = D L(j,l) D as superoperator matrices for
    all grid triples j <= k <= l; needs a dynamical-map family (native or
    derived).
    """
    if not isinstance(markov, MarkovProcess):
        raise TypeError("check_ncgd needs a MarkovProcess (derive one for a dilation)")
    deph = dephasing_channel(observable).matrix
    n = markov.n_steps
    props = {}
    for j in range(1, n + 1):
        for k in range(j, n + 1):
            props[(j, k)] = markov.propagator(j, k).matrix
    for j in range(1, n + 1):
        for k in range(j, n + 1):
            for l in range(k, n + 1):
                lhs = deph @ props[(k, l)] @ deph @ props[(j, k)] @ deph
                rhs = deph @ props[(j, l)] @ deph
                gap = float(np.max(np.abs(lhs - rhs)))
                if gap > tolerance:
                    witness = Witness(
                        pattern={"triple": [j, k, l]},
                        lhs=lhs,
                        rhs=rhs,
                        distance=gap,
                    )
                    return Verdict("ncgd", False, tolerance, witness)
    return Verdict("ncgd", True, tolerance)


def check_invertibility(markov: MarkovProcess) -> Verdict:
    """Does every start-to-time map of the family have a linear inverse?"""
    if not isinstance(markov, MarkovProcess):
        raise TypeError(
            "invertibility is defined for a dynamical-map family; "
            "derive a MarkovProcess first"
        )
    for k in range(1, markov.n_steps + 1):
        try:
            invert(markov.propagator(0, k))
        except NotInvertibleError as exc:
            return Verdict(
                "invertible",
                False,
                0.0,
                Witness(
                    pattern={"time_index": k, "reason": str(exc)},
                    lhs=None,
                    rhs=None,
                    distance=float("inf"),
                ),
            )
    return Verdict("invertible", True, 0.0)


def check_eq12_identity(
    superop: Superoperator,
    obs_in: Observable,
    obs_out: Observable,
    tolerance: float = DEFAULT_TOLERANCE,
) -> Verdict:
    """Projecting after the map absorbs a prior dephasing, outcome by outcome.

    Holds iff summing the map over input projections reproduces the bare map
    once an output projection is applied; for rank-1 observables this is
    equivalent to a vanishing coherence-to-population block in the ordered
    operator basis.
    """
    deph_in = dephasing_channel(obs_in).matrix
    for r in range(obs_out.n_outcomes):
        proj = projector_superop(obs_out, r).matrix
        lhs = proj @ superop.matrix @ deph_in
        rhs = proj @ superop.matrix
        gap = float(np.max(np.abs(lhs - rhs)))
        if gap > tolerance:
            witness = Witness(
                pattern={"outcome": r},
                lhs=lhs,
                rhs=rhs,
                distance=gap,
            )
            return Verdict("eq12", False, tolerance, witness)
    return Verdict("eq12", True, tolerance)


# --------------------------------------------------------------------------
# Theorem pipeline
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Implication:
    name: str
    applicable: bool
    premise: bool | None = None
    conclusion: bool | None = None

    @property
    def violated(self) -> bool:
        return bool(self.applicable and self.premise and not self.conclusion)


@dataclass(frozen=True)
class PipelineReport:
    """All checker verdicts on one instance plus the theorem implications.

    A violated implication is a bug-level failure: it contradicts a theorem
    on a concrete instance, so either a checker or the instance constructor
    is wrong.
    """

    markov: bool
    spanning: bool
    classical: tuple[Verdict, ...]
    incoherent: tuple[Verdict, ...]
    invertible: Verdict | None
    ncgd: Verdict | None
    diagonal_incoherent: Verdict | None
    implications: tuple[Implication, ...]

    @property
    def consistent(self) -> bool:
        return not any(i.violated for i in self.implications)


def check_theorem_pipeline(
    process,
    observable: Observable,
    prep_set: PreparationSet,
    tolerance: float = DEFAULT_TOLERANCE,
) -> PipelineReport:
    """Run every checker and assert the proven implications on this instance.

    Asserted, where applicable: classicality implies incoherence for rank-1
    observables, preparation by preparation; an invertible map family that
    is incoherent for a spanning set is classical for each preparation and
    NCGD; an NCGD map family is incoherent for diagonal-state preparations.
    """
    contexts = preparation_contexts(process, prep_set, observable)
    markov = isinstance(process, MarkovProcess) and not process.derived
    spanning = isinstance(prep_set, BasisSpanning)

    classical = tuple(
        check_classicality(proc, observable, prep, tolerance=tolerance)
        for _, proc, prep in contexts
    )
    incoherent = tuple(
        check_incoherence(proc, observable, Single(prep), tolerance=tolerance)
        for _, proc, prep in contexts
    )
    invertible = (
        check_invertibility(process) if isinstance(process, MarkovProcess) else None
    )
    ncgd = (
        check_ncgd(process, observable, tolerance)
        if isinstance(process, MarkovProcess)
        else None
    )
    diagonal_incoherent = (
        check_incoherence(
            process, observable, AllDiagonal(observable), tolerance=tolerance
        )
        if isinstance(process, MarkovProcess)
        else None
    )

    incoherent_all = spanning and all(v.holds for v in incoherent)
    implications = []

    rank1 = not observable.is_degenerate
    per_prep_violated = any(
        c.holds and not i.holds for c, i in zip(classical, incoherent)
    )
    implications.append(
        Implication(
            "classical_implies_incoherent",
            applicable=rank1,
            premise=any(c.holds for c in classical) if rank1 else None,
            conclusion=not per_prep_violated if rank1 else None,
        )
    )

    strong = markov and invertible is not None and invertible.holds and spanning
    implications.append(
        Implication(
            "markov_invertible_incoherent_implies_classical",
            applicable=strong,
            premise=incoherent_all if strong else None,
            conclusion=all(c.holds for c in classical) if strong else None,
        )
    )
    implications.append(
        Implication(
            "markov_invertible_incoherent_implies_ncgd",
            applicable=strong,
            premise=incoherent_all if strong else None,
            conclusion=(ncgd is not None and ncgd.holds) if strong else None,
        )
    )
    implications.append(
        Implication(
            "markov_ncgd_implies_diagonal_incoherence",
            applicable=markov,
            premise=(ncgd is not None and ncgd.holds) if markov else None,
            conclusion=(
                diagonal_incoherent is not None and diagonal_incoherent.holds
            )
            if markov
            else None,
        )
    )

    return PipelineReport(
        markov=markov,
        spanning=spanning,
        classical=classical,
        incoherent=incoherent,
        invertible=invertible,
        ncgd=ncgd,
        diagonal_incoherent=diagonal_incoherent,
        implications=tuple(implications),
    )

"""Randomized verification of the proven implications between checkers.

Each fuzz class draws seeded random instances from families chosen so the
implication's premise is actually reached (a purely generic ensemble almost
never produces a classical or incoherent instance, which would make the
implication vacuously true).  Any violated implication is reported with the
instance index and enough detail to reproduce it from the seed.

Instance seeds are spawned from one root seed, so results are byte-identical
for a fixed (seed, count) regardless of the worker-thread count, which is
capped by the QCLASSICAL_THREADS environment variable.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channels import CPMap, reset_channel, sigma_z_observable
from .checkers import (
    AllDiagonal,
    Single,
    check_classicality,
    check_eq12_identity,
    check_incoherence,
    check_invertibility,
    check_ncgd,
    check_theorem_pipeline,
    spanning_preparations,
)
from .random import (
    random_cptp,
    random_density_matrix,
    random_dilated_process,
    random_markov_process,
    random_observable,
)

DEFAULT_TOLERANCE = 1e-9


def default_threads() -> int:
    raw = os.environ.get("QCLASSICAL_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class FuzzResult:
    name: str
    count: int
    seed: int
    violations: tuple[dict, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def _run_instances(name, fn, count, seed, threads) -> FuzzResult:
    children = np.random.SeedSequence(seed).spawn(count)

    def job(i: int):
        return fn(i, np.random.default_rng(children[i]))

    if threads is None:
        threads = default_threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, range(count)))
    else:
        results = [job(i) for i in range(count)]
    violations = tuple(r for r in results if r is not None)
    return FuzzResult(name=name, count=count, seed=seed, violations=violations)


def _random_single_preparation(rng, dim):
    return CPMap(reset_channel(random_density_matrix(dim, rng).matrix))


def fuzz_classical_implies_incoherent(
    count: int, seed: int, tolerance: float = DEFAULT_TOLERANCE, threads: int | None = None
) -> FuzzResult:
    """Classical statistics must come from incoherent dynamics (rank-1 case).

    Alternates generic dilations (rarely classical) with block-triangular
    map families (always classical), each checked against one random
    preparation.
    """

    def instance(i: int, rng: np.random.Generator):
        if i % 2 == 0:
            process = random_dilated_process(rng, n_steps=2)
            observable = random_observable(2, rng)
        else:
            observable = sigma_z_observable()
            process = random_markov_process(
                rng, n_steps=2 + (i % 4 == 3), kind="block"
            )
        prep = _random_single_preparation(rng, 2)
        classical = check_classicality(process, observable, prep, tolerance=tolerance)
        if not classical.holds:
            return None
        incoherent = check_incoherence(
            process, observable, Single(prep), tolerance=tolerance
        )
        if incoherent.holds:
            return None
        return {
            "instance": i,
            "kind": "dilated" if i % 2 == 0 else "block",
            "detail": "classical instance produced a coherence witness",
            "distance": incoherent.witness.distance,
        }

    return _run_instances(
        "classical_implies_incoherent", instance, count, seed, threads
    )


def fuzz_block_markov_classicality(
    count: int, seed: int, tolerance: float = DEFAULT_TOLERANCE, threads: int | None = None
) -> FuzzResult:
    """Invertible block-triangular map families are classical for every
    basis preparation."""

    observable = sigma_z_observable()
    preparations = spanning_preparations(2).preparations

    def instance(i: int, rng: np.random.Generator):
        process = random_markov_process(rng, n_steps=2 + i % 2, kind="block")
        invertible = check_invertibility(process)
        if not invertible.holds:
            return {"instance": i, "detail": "sampler produced a singular family"}
        for p_index, prep in enumerate(preparations):
            verdict = check_classicality(
                process, observable, prep, tolerance=tolerance
            )
            if not verdict.holds:
                return {
                    "instance": i,
                    "preparation": p_index,
                    "detail": "block family gave non-classical statistics",
                    "distance": verdict.witness.distance,
                }
        return None

    return _run_instances("block_markov_classicality", instance, count, seed, threads)


def fuzz_incoherence_implies_ncgd(
    count: int, seed: int, tolerance: float = DEFAULT_TOLERANCE, threads: int | None = None
) -> FuzzResult:
    """Invertible map families incoherent for a spanning set must be NCGD."""

    observable = sigma_z_observable()
    kinds = ("block", "generic", "unitary")

    def instance(i: int, rng: np.random.Generator):
        process = random_markov_process(rng, n_steps=2, kind=kinds[i % 3])
        invertible = check_invertibility(process)
        if not invertible.holds:
            return None
        incoherent = check_incoherence(
            process, observable, spanning_preparations(2), tolerance=tolerance
        )
        if not incoherent.holds:
            return None
        ncgd = check_ncgd(process, observable, tolerance)
        if ncgd.holds:
            return None
        return {
            "instance": i,
            "kind": kinds[i % 3],
            "detail": "incoherent-for-all family is not NCGD",
            "distance": ncgd.witness.distance,
        }

    return _run_instances("incoherence_implies_ncgd", instance, count, seed, threads)


def fuzz_ncgd_implies_diagonal_incoherence(
    count: int, seed: int, tolerance: float = DEFAULT_TOLERANCE, threads: int | None = None
) -> FuzzResult:
    """NCGD map families must be incoherent for diagonal-state preparations."""

    observable = sigma_z_observable()
    kinds = ("block", "phase", "generic")

    def instance(i: int, rng: np.random.Generator):
        process = random_markov_process(rng, n_steps=2, kind=kinds[i % 3])
        ncgd = check_ncgd(process, observable, tolerance)
        if not ncgd.holds:
            return None
        diag = check_incoherence(
            process, observable, AllDiagonal(observable), tolerance=tolerance
        )
        if diag.holds:
            return None
        return {
            "instance": i,
            "kind": kinds[i % 3],
            "detail": "NCGD family not incoherent for a diagonal preparation",
            "distance": diag.witness.distance,
        }

    return _run_instances(
        "ncgd_implies_diagonal_incoherence", instance, count, seed, threads
    )


def fuzz_eq12_block_equivalence(
    count: int, seed: int, tolerance: float = 1e-10, threads: int | None = None
) -> FuzzResult:
    """The outcome-wise identity and the vanishing block must agree.

    Each instance checks one satisfying map (block construction) and one
    violating map (generic channel) with both the superoperator identity
    and the ordered-basis block criterion.
    """
    from .channels import ordered_basis_matrix
    from .random import block_triangular_channel

    observable = sigma_z_observable()

    def block_zero(channel):
        _, b, _, _ = ordered_basis_matrix(channel, observable, observable)
        return float(np.max(np.abs(b)))

    def instance(i: int, rng: np.random.Generator):
        satisfying = block_triangular_channel(rng, dim=2)
        violating = random_cptp(2, rng)
        for label, channel in (("satisfying", satisfying), ("violating", violating)):
            identity = check_eq12_identity(
                channel, observable, observable, tolerance=tolerance
            )
            block = block_zero(channel) <= tolerance
            if identity.holds != block:
                return {
                    "instance": i,
                    "channel": label,
                    "detail": "identity check and block check disagree",
                    "identity_holds": identity.holds,
                    "block_zero": block,
                }
        return None

    return _run_instances("eq12_block_equivalence", instance, count, seed, threads)


def fuzz_pipeline(
    count: int, seed: int, tolerance: float = DEFAULT_TOLERANCE, threads: int | None = None
) -> FuzzResult:
    """Full pipeline over a mixed ensemble: no implication may be violated."""

    observable = sigma_z_observable()
    kinds = ("block", "generic", "unitary", "classical")

    def instance(i: int, rng: np.random.Generator):
        slot = i % 5
        if slot == 4:
            process = random_dilated_process(rng, n_steps=2)
        else:
            process = random_markov_process(rng, n_steps=2, kind=kinds[slot])
        report = check_theorem_pipeline(
            process, observable, spanning_preparations(2), tolerance=tolerance
        )
        violated = [imp.name for imp in report.implications if imp.violated]
        if not violated:
            return None
        return {"instance": i, "violated": violated}

    return _run_instances("pipeline", instance, count, seed, threads)


FUZZ_CLASSES = {
    "pipeline": fuzz_pipeline,
    "incoherent": fuzz_classical_implies_incoherent,
    "classical": fuzz_block_markov_classicality,
    "ncgd": fuzz_incoherence_implies_ncgd,
    "diagonal": fuzz_ncgd_implies_diagonal_incoherence,
    "eq12": fuzz_eq12_block_equivalence,
}

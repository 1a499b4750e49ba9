"""JSON wire formats for processes, channels, verdicts and check documents.

Complex numbers are encoded as [re, im] pairs and matrices as nested
row-major arrays of such pairs.  Floats round-trip bit-exactly through the
shortest-repr encoding used by the json module, and report lines are emitted
with sorted keys and fixed separators, so identical inputs produce
byte-identical reports.

Interventions on the wire reference observables by index into the process's
observable list; the in-memory objects hold the observables directly.
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .channels import (
    CPMap,
    Dephase,
    Identity,
    Intervention,
    Observable,
    Outcome,
    Superoperator,
    reset_channel,
    validate_superoperator,
)
from .checkers import (
    AllDiagonal,
    BasisSpanning,
    PreparationSet,
    Single,
    Verdict,
    spanning_preparations,
)
from .linalg import DensityMatrix
from .process import DilatedProcess, MarkovProcess, TimeGrid


def matrix_to_json(matrix: np.ndarray) -> list:
    m = np.asarray(matrix, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(doc) -> np.ndarray:
    return np.array(
        [[complex(entry[0], entry[1]) for entry in row] for row in doc],
        dtype=complex,
    )


def superop_to_json(s: Superoperator) -> dict:
    return {"matrix": matrix_to_json(s.matrix), "cp": s.cp, "tp": s.tp}


def superop_from_json(doc) -> Superoperator:
    s = Superoperator(
        matrix_from_json(doc["matrix"]),
        cp=bool(doc.get("cp", False)),
        tp=bool(doc.get("tp", False)),
    )
    validate_superoperator(s)
    return s


def observable_to_json(obs: Observable) -> dict:
    return {
        "outcomes": [
            {"eigenvalue": float(value), "projector": matrix_to_json(proj)}
            for value, proj in obs.outcomes
        ]
    }


def observable_from_json(doc) -> Observable:
    return Observable(
        tuple(
            (entry["eigenvalue"], matrix_from_json(entry["projector"]))
            for entry in doc["outcomes"]
        )
    )


def intervention_to_json(iv: Intervention, observables: tuple[Observable, ...]) -> dict:
    def index_of(observable):
        for i, obs in enumerate(observables):
            if obs is observable:
                return i
        raise ValueError("intervention references an unregistered observable")

    if isinstance(iv, Identity):
        return {"type": "identity"}
    if isinstance(iv, Outcome):
        return {
            "type": "outcome",
            "observable": index_of(iv.observable),
            "outcome": iv.outcome,
        }
    if isinstance(iv, Dephase):
        return {"type": "dephase", "observable": index_of(iv.observable)}
    if isinstance(iv, CPMap):
        return {"type": "cpmap", "superoperator": superop_to_json(iv.superoperator)}
    raise TypeError(f"unknown intervention {iv!r}")


def intervention_from_json(doc, observables: tuple[Observable, ...]) -> Intervention:
    kind = doc["type"]
    if kind == "identity":
        return Identity()
    if kind == "outcome":
        return Outcome(observables[doc["observable"]], doc["outcome"])
    if kind == "dephase":
        return Dephase(observables[doc["observable"]])
    if kind == "cpmap":
        return CPMap(superop_from_json(doc["superoperator"]))
    if kind == "prepare":
        return CPMap(reset_channel(matrix_from_json(doc["state"])))
    raise ValueError(f"unknown intervention type {kind!r}")


def process_to_json(process) -> dict:
    common = {
        "times": list(process.times.times),
        "observables": [observable_to_json(o) for o in process.observables],
    }
    if isinstance(process, MarkovProcess):
        return {
            "type": "markov",
            "dim_system": process.dim_s,
            "initial_state": matrix_to_json(process.initial_s.matrix),
            "maps": [superop_to_json(m) for m in process.maps],
            "derived": process.derived,
            **common,
        }
    if isinstance(process, DilatedProcess):
        return {
            "type": "dilated",
            "dim_system": process.dim_s,
            "dim_environment": process.dim_e,
            "initial_state": matrix_to_json(process.initial_se.matrix),
            "unitaries": [matrix_to_json(u) for u in process.unitaries],
            **common,
        }
    raise TypeError(f"cannot serialize process of type {type(process).__name__}")


def process_from_json(doc):
    observables = tuple(
        observable_from_json(o) for o in doc.get("observables", [])
    )
    times = TimeGrid(tuple(doc["times"]))
    if doc["type"] == "markov":
        return MarkovProcess(
            dim_s=doc["dim_system"],
            maps=tuple(superop_from_json(m) for m in doc["maps"]),
            initial_s=DensityMatrix(matrix_from_json(doc["initial_state"])),
            times=times,
            observables=observables,
            derived=bool(doc.get("derived", False)),
        )
    if doc["type"] == "dilated":
        return DilatedProcess(
            dim_s=doc["dim_system"],
            dim_e=doc["dim_environment"],
            initial_se=DensityMatrix(matrix_from_json(doc["initial_state"])),
            unitaries=tuple(matrix_from_json(u) for u in doc["unitaries"]),
            times=times,
            observables=observables,
        )
    raise ValueError(f"unknown process type {doc['type']!r}")


def preparations_from_json(doc, observables, dim: int) -> PreparationSet:
    kind = doc["type"]
    if kind == "single":
        return Single(intervention_from_json(doc["preparation"], observables))
    if kind == "spanning":
        if "preparations" in doc:
            return BasisSpanning(
                tuple(
                    intervention_from_json(p, observables)
                    for p in doc["preparations"]
                )
            )
        return spanning_preparations(dim)
    if kind == "diagonal":
        return AllDiagonal(observables[doc.get("observable", 0)])
    raise ValueError(f"unknown preparation-set type {kind!r}")


def _value_to_json(value):
    if value is None:
        return None
    if isinstance(value, np.ndarray):
        return matrix_to_json(value)
    if isinstance(value, (float, int)):
        return float(value)
    return value


def verdict_to_json(verdict: Verdict) -> dict:
    doc = {
        "check": verdict.check,
        "holds": verdict.holds,
        "tolerance": verdict.tolerance,
    }
    if verdict.witness is not None:
        distance = verdict.witness.distance
        doc["witness"] = {
            "pattern": verdict.witness.pattern,
            "lhs": _value_to_json(verdict.witness.lhs),
            "rhs": _value_to_json(verdict.witness.rhs),
            # Structural failures (a refused inversion, say) have no finite
            # violation magnitude; encode those as null.
            "distance": distance if np.isfinite(distance) else None,
        }
    return doc


def json_line(doc) -> str:
    """One deterministic report line: sorted keys, fixed separators."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


def load_schema() -> dict:
    text = resources.files("qclassical.schemas").joinpath(
        "check_input.schema.json"
    ).read_text(encoding="utf-8")
    return json.loads(text)


def validate_check_document(doc) -> None:
    """Validate an input document against the shipped JSON schema."""
    import jsonschema

    jsonschema.validate(doc, load_schema())


def load_check_document(doc):
    """Parse a validated check document into checker inputs.

    Returns (process, observable, preparation set, expected dict, checks).
    """
    validate_check_document(doc)
    process = process_from_json(doc["process"])
    if not process.observables:
        raise ValueError("the process document must register at least one observable")
    observable = process.observables[doc.get("observable", 0)]
    prep_doc = doc.get("preparations", {"type": "single", "preparation": {"type": "identity"}})
    preparations = preparations_from_json(prep_doc, process.observables, process.dim_s)
    expected = {k: bool(v) for k, v in doc.get("expected", {}).items()}
    checks = list(doc.get("checks", []))
    return process, observable, preparations, expected, checks

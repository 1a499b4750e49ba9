import pytest

from qclassical.fuzz import (
    FUZZ_CLASSES,
    default_threads,
    fuzz_block_markov_classicality,
    fuzz_classical_implies_incoherent,
    fuzz_eq12_block_equivalence,
    fuzz_incoherence_implies_ncgd,
    fuzz_ncgd_implies_diagonal_incoherence,
    fuzz_pipeline,
)


@pytest.mark.parametrize(
    "fn",
    [
        fuzz_classical_implies_incoherent,
        fuzz_block_markov_classicality,
        fuzz_incoherence_implies_ncgd,
        fuzz_ncgd_implies_diagonal_incoherence,
        fuzz_eq12_block_equivalence,
        fuzz_pipeline,
    ],
)
def test_smoke_no_violations(fn):
    result = fn(150, 2024)
    assert result.count == 150
    assert result.passed, result.violations


def test_seed_reproducibility():
    a = fuzz_pipeline(60, 5)
    b = fuzz_pipeline(60, 5)
    assert a.violations == b.violations


def test_thread_count_is_immaterial():
    a = fuzz_block_markov_classicality(60, 5, threads=1)
    b = fuzz_block_markov_classicality(60, 5, threads=3)
    assert a.violations == b.violations


def test_registry_names():
    assert set(FUZZ_CLASSES) == {
        "pipeline", "classical", "incoherent", "ncgd", "diagonal", "eq12",
    }


def test_default_threads_env(monkeypatch):
    monkeypatch.setenv("QCLASSICAL_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.setenv("QCLASSICAL_THREADS", "junk")
    assert default_threads() == 1
    monkeypatch.delenv("QCLASSICAL_THREADS")
    assert default_threads() == 1

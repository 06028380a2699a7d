from __future__ import annotations

import random

import pytest

from abmdx import defaults
from abmdx.domain import (
    DIAGNOSES,
    Diagnosis,
    Solution,
    Symptom,
    SymptomCatalog,
    SymptomVector,
)


@pytest.fixture(scope="session")
def catalog():
    return defaults.default_catalog()


@pytest.fixture(scope="session")
def rulebase(catalog):
    return defaults.default_rulebase(catalog)


@pytest.fixture(scope="session")
def table(catalog):
    return defaults.default_table(catalog)


@pytest.fixture
def tiny_catalog():
    return SymptomCatalog(
        tuple(Symptom(i, n) for i, n in enumerate(["fever", "rash", "cough", "headache"]))
    )


def random_vector(rng: random.Random, size: int) -> SymptomVector:
    return SymptomVector(tuple(rng.random() < 0.5 for _ in range(size)))


def random_solution(rng: random.Random, *, allow_empty: bool = False) -> Solution:
    if allow_empty and rng.random() < 0.1:
        return Solution()
    picks = rng.sample(DIAGNOSES, rng.randint(1, 3))
    return Solution(picks[0], tuple(picks[1:]))


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)

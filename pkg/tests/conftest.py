"""
Shared pytest fixtures: seeded randomness, random problem factories and the
named fixture problems written out as problem files.
"""

from collections.abc import Callable
import json
from pathlib import Path
from typing import Protocol

import numpy as np
import pytest

from pcsplit.fixtures import FIXTURES
from pcsplit.problem import Block, ProblemInstance, Quadratic, problem_to_json


@pytest.fixture
def rng() -> np.random.Generator:
    """A fresh generator with a fixed seed for every test."""
    return np.random.default_rng(20240611)


def random_full_rank(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """A random rows×cols matrix with full column rank and modest condition number."""
    while True:
        A = rng.standard_normal((rows, cols))
        s = np.linalg.svd(A, compute_uv=False)
        if s[-1] > 0.2 and s[0] / s[-1] < 50.0:
            return A


def random_orthonormal_columns(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """A rows×cols matrix whose columns are orthonormal."""
    Q, _ = np.linalg.qr(rng.standard_normal((rows, cols)))
    return Q[:, :cols]


def random_quadratic(rng: np.random.Generator, n: int) -> Quadratic:
    """½xᵀPx + qᵀx with P symmetric positive definite."""
    R = rng.standard_normal((n, n))
    return Quadratic(R.T @ R + 0.5 * np.eye(n), rng.standard_normal(n))


class ProblemFactory(Protocol):
    def __call__(self, p: int, m: int, n: int | None = None) -> ProblemInstance: ...


@pytest.fixture
def random_problem(rng: np.random.Generator) -> ProblemFactory:
    """
    Factory for random all-quadratic equality problems with p blocks in ℝⁿ
    coupled through m rows; every Aᵢ has full column rank.
    """
    def make(p: int, m: int, n: int | None = None) -> ProblemInstance:
        n = m if n is None else n
        blocks = tuple(Block(random_quadratic(rng, n), random_full_rank(rng, m, n)) for _ in range(p))
        return ProblemInstance(blocks, rng.standard_normal(m))
    return make


@pytest.fixture
def problem_file(tmp_path: Path) -> Callable[[str], Path]:
    """Write a named fixture problem to a JSON file and return its path."""
    def write(name: str) -> Path:
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(problem_to_json(FIXTURES[name].problem)))
        return path
    return write


@pytest.fixture
def full_rank(rng: np.random.Generator) -> Callable[[int, int], np.ndarray]:
    """`random_full_rank` bound to the seeded generator."""
    return lambda rows, cols: random_full_rank(rng, rows, cols)


@pytest.fixture
def orthonormal(rng: np.random.Generator) -> Callable[[int, int], np.ndarray]:
    """`random_orthonormal_columns` bound to the seeded generator."""
    return lambda rows, cols: random_orthonormal_columns(rng, rows, cols)

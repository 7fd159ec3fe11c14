"""Shared generators for randomised tests."""

from __future__ import annotations

import numpy as np

from thermologic.logic import DiscreteDistribution, LogicalOperation
from thermologic.thermo import Scenario, StateThermo


def random_distribution(rng: np.random.Generator, n: int, floor: float = 0.02) -> DiscreteDistribution:
    p = rng.dirichlet(np.ones(n) * 2.0)
    p = np.clip(p, floor, None)
    return DiscreteDistribution(p / p.sum())


def random_operation(rng: np.random.Generator, n_in: int, n_out: int) -> LogicalOperation:
    rows = rng.dirichlet(np.ones(n_out), size=n_in)
    return LogicalOperation(rows)


def random_thermo(rng: np.random.Generator, n: int) -> tuple[StateThermo, ...]:
    return tuple(
        StateThermo(
            energy=rng.uniform(-1.0, 1.0),
            entropy=rng.uniform(0.0, 2.0),
            temperature=rng.uniform(0.5, 2.0),
        )
        for _ in range(n)
    )


def random_scenario(
    rng: np.random.Generator, max_states: int = 5, square: bool = False
) -> Scenario:
    n_in = int(rng.integers(2, max_states + 1))
    n_out = n_in if square else int(rng.integers(2, max_states + 1))
    return Scenario(
        input_dist=random_distribution(rng, n_in),
        op=random_operation(rng, n_in, n_out),
        input_thermo=random_thermo(rng, n_in),
        output_thermo=random_thermo(rng, n_out),
        reference_temperature=float(rng.uniform(0.5, 2.0)),
    )


def permutation_operation(perm: tuple[int, ...]) -> LogicalOperation:
    n = len(perm)
    m = np.zeros((n, n))
    for i, j in enumerate(perm):
        m[i, j] = 1.0
    return LogicalOperation(m)

from __future__ import annotations

import numpy as np
import pytest

from calculators.quantum_core import born_table, chained_family, entangled_state
from core.table import ConditionalTable, axis


def local_table(rng: np.random.Generator, n: int, c_card: int = 1, z_card: int = 2, hidden: int = 6) -> ConditionalTable:
    """Random mixture of deterministic local strategies over chain labels.

    Every such table is non-signalling. Inputs (A, B, C), outputs (X, Y, Z).
    """
    weights = rng.dirichlet(np.ones(hidden))
    p = np.zeros((n, n, c_card, 2, 2, z_card))
    for w in weights:
        fx = rng.integers(0, 2, size=n)
        fy = rng.integers(0, 2, size=n)
        fz = rng.integers(0, z_card, size=c_card)
        for a in range(n):
            for b in range(n):
                for c in range(c_card):
                    p[a, b, c, fx[a], fy[b], fz[c]] += w
    return ConditionalTable.from_array(
        [axis("A", range(0, 2 * n, 2)), axis("B", range(1, 2 * n, 2)), axis("C", range(c_card))],
        [axis("X", (1, -1)), axis("Y", (1, -1)), axis("Z", range(z_card))],
        p,
    )


def chained_pr_box(n: int) -> np.ndarray:
    """x uniform, y = x except on the wrap-around pair (0, 2N-1), where y = -x. I_N = 0 for N > 1."""
    p = np.zeros((n, n, 2, 2))
    for a in range(n):
        for b in range(n):
            flip = int(a == 0 and b == n - 1)
            for x in range(2):
                p[a, b, x, x ^ flip] = 0.5
    return p


def nonlocal_table(rng: np.random.Generator, n: int, c_card: int = 1, z_card: int = 2, hidden: int = 4) -> ConditionalTable:
    """Random mixture of a chained PR box, a Werner table, white noise and local strategies.

    Z reports a relabelling (chosen per C) of the component drawn, so it is
    correlated with X while the table stays non-signalling.
    """
    werner = born_table(entangled_state(float(rng.uniform())), chained_family(n)).probabilities
    components = [chained_pr_box(n), np.asarray(werner), np.full((n, n, 2, 2), 0.25)]
    for _ in range(hidden):
        fx = rng.integers(0, 2, size=n)
        fy = rng.integers(0, 2, size=n)
        d = np.zeros((n, n, 2, 2))
        for a in range(n):
            for b in range(n):
                d[a, b, fx[a], fy[b]] = 1.0
        components.append(d)
    weights = rng.dirichlet(np.ones(len(components)))
    p = np.zeros((n, n, c_card, 2, 2, z_card))
    for c in range(c_card):
        relabel = rng.integers(0, z_card, size=len(components))
        for w, box, z in zip(weights, components, relabel):
            p[:, :, c, :, :, z] += w * box
    return ConditionalTable.from_array(
        [axis("A", range(0, 2 * n, 2)), axis("B", range(1, 2 * n, 2)), axis("C", range(c_card))],
        [axis("X", (1, -1)), axis("Y", (1, -1)), axis("Z", range(z_card))],
        p,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240521)


@pytest.fixture
def make_local_table():
    return local_table


@pytest.fixture
def make_nonlocal_table():
    return nonlocal_table

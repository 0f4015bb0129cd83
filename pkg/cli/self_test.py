"""Smoke subset of the invariant suite, run by ``chained-bell check --self-test``."""
from __future__ import annotations

import logging
import math
from typing import Callable, Dict, List, Tuple

import numpy as np

from calculators.analysis import optimal_n
from calculators.experiment import estimate, simulate
from calculators.lp_adversary import max_prediction_distance
from calculators.nonlocality import (
    check_nonsignalling,
    flatten,
    free_choice_implies_ns,
    i_n_of_table,
    lemma2_distance_bound,
)
from calculators.quantum_core import born_table, chained_family, entangled_state, i_n_analytic

logger = logging.getLogger(__name__)

SELF_TEST_SEED = 20240521


def _chsh_value() -> bool:
    table = born_table(entangled_state(1.0), chained_family(2))
    return abs(i_n_of_table(table) - (2 - math.sqrt(2))) <= 1e-10


def _born_matches_closed_form() -> bool:
    return all(
        abs(i_n_of_table(born_table(entangled_state(v), chained_family(n))) - i_n_analytic(n, v)) <= 1e-10
        for n in (1, 2, 5, 8)
        for v in (0.0, 0.5, 0.98, 1.0)
    )


def _quantum_tables_nonsignalling() -> bool:
    return all(
        check_nonsignalling(born_table(entangled_state(v), chained_family(n)), 1e-12).holds
        for n in (1, 2, 4)
        for v in (0.0, 0.7, 1.0)
    )


def _optimal_chain_length() -> bool:
    n_star, i_min = optimal_n(0.98, 256)
    return n_star == 8 and abs(i_min - i_n_analytic(8, 0.98)) <= 1e-12


def _adversary_within_bound() -> bool:
    q = born_table(entangled_state(1.0), chained_family(2))
    result = max_prediction_distance(q, 0, 1)
    return result.prediction_distance <= i_n_of_table(q) + 1e-7 and result.certificate.duality_gap <= 1e-7


def _marginal_distance_bound() -> bool:
    rng = np.random.default_rng(SELF_TEST_SEED)
    for _ in range(200):
        k = int(rng.integers(2, 9))
        joint = rng.dirichlet(np.ones(k * k)).reshape(k, k)
        d, p_neq = lemma2_distance_bound(joint)
        if d > p_neq + 1e-12:
            return False
    return True


def _flattening() -> bool:
    rng = np.random.default_rng(SELF_TEST_SEED)
    return all(
        flatten(rng.dirichlet(np.ones(4)), eps).distance_to_flat() <= eps
        for _ in range(10)
        for eps in (0.1, 0.01)
    )


def _free_choice() -> bool:
    q = born_table(entangled_state(0.9), chained_family(3))
    return bool(free_choice_implies_ns(q, np.full(3, 1 / 3)))


def _sharded_simulation() -> bool:
    sequential = simulate(2, 1.0, 2000, SELF_TEST_SEED)
    sharded = simulate(2, 1.0, 2000, SELF_TEST_SEED, workers=4)
    est = estimate(sequential, 0.95)
    return sequential == sharded and est.confidence_low <= est.i_n_hat <= est.confidence_high


CHECKS: List[Tuple[str, Callable[[], bool]]] = [
    ("chsh_value", _chsh_value),
    ("born_matches_closed_form", _born_matches_closed_form),
    ("quantum_tables_nonsignalling", _quantum_tables_nonsignalling),
    ("optimal_chain_length", _optimal_chain_length),
    ("adversary_within_bound", _adversary_within_bound),
    ("marginal_distance_bound", _marginal_distance_bound),
    ("flattening", _flattening),
    ("free_choice", _free_choice),
    ("sharded_simulation", _sharded_simulation),
]


def run_self_test() -> Dict[str, bool]:
    results: Dict[str, bool] = {}
    for name, check in CHECKS:
        ok = bool(check())
        logger.info("self-test %s: %s", name, "ok" if ok else "FAILED")
        results[name] = ok
    return results

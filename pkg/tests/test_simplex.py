from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import linprog

from core.errors import (
    DatasetParseError,
    InfeasibleError,
    InvalidParameterError,
    IterationLimitError,
    UnboundedError,
)
from core.simplex import (
    LinearProgram,
    SimplexOptions,
    check_certificate,
    dump_lp,
    load_lp,
    solve,
    write_lp,
)


def test_one_constraint_lp():
    lp = LinearProgram.from_dense([1.0, 0.0], [[1.0, 1.0]], [1.0])
    x, cert = solve(lp)
    assert np.allclose(x, [1.0, 0.0])
    assert cert.primal_objective == pytest.approx(1.0)
    assert cert.dual_objective == pytest.approx(1.0)
    assert check_certificate(lp, x, cert)


def test_redundant_rows_give_same_optimum():
    c = [3.0, 2.0, 0.0, 0.0]
    A = [[1.0, 1.0, 1.0, 0.0], [1.0, 3.0, 0.0, 1.0]]
    b = [4.0, 6.0]
    base_x, base = solve(LinearProgram.from_dense(c, A, b))
    # duplicate row and a sum of both rows
    redundant = LinearProgram.from_dense(c, A + [A[0], list(np.add(A[0], A[1]))], b + [b[0], b[0] + b[1]])
    x, cert = solve(redundant)
    assert cert.primal_objective == pytest.approx(base.primal_objective)
    assert len(cert.dropped_rows) == 2
    assert check_certificate(redundant, x, cert)
    assert base.primal_objective == pytest.approx(12.0)


def test_negative_rhs_rows():
    # x1 - x2 = -1 forces x2 >= 1
    lp = LinearProgram.from_dense([-1.0, -1.0], [[1.0, -1.0]], [-1.0])
    x, cert = solve(lp)
    assert np.allclose(x, [0.0, 1.0])
    assert cert.primal_objective == pytest.approx(-1.0)


def test_infeasible():
    lp = LinearProgram.from_dense([1.0, 1.0], [[1.0, 1.0], [1.0, 1.0]], [1.0, 2.0])
    with pytest.raises(InfeasibleError):
        solve(lp)


def test_unbounded():
    lp = LinearProgram.from_dense([1.0, 0.0], [[1.0, -1.0]], [0.0])
    with pytest.raises(UnboundedError):
        solve(lp)


def test_iteration_cap():
    c = [3.0, 2.0, 0.0, 0.0]
    A = [[1.0, 1.0, 1.0, 0.0], [1.0, 3.0, 0.0, 1.0]]
    with pytest.raises(IterationLimitError):
        solve(LinearProgram.from_dense(c, A, [4.0, 6.0]), SimplexOptions(max_iterations=1))


def test_shape_validation():
    with pytest.raises(InvalidParameterError, match="objective"):
        LinearProgram.from_dense([1.0], [[1.0, 1.0]], [1.0])
    with pytest.raises(InvalidParameterError, match="rhs"):
        LinearProgram.from_dense([1.0, 1.0], [[1.0, 1.0]], [1.0, 2.0])


def test_matches_highs_on_random_feasible_lps(rng):
    for _ in range(30):
        m = int(rng.integers(2, 7))
        n = int(rng.integers(m + 1, 13))
        A = rng.normal(size=(m, n))
        x0 = rng.uniform(0.0, 1.0, size=n)
        b = A @ x0
        # a bounding row keeps every instance bounded
        A = np.vstack([A, np.ones(n)])
        b = np.append(b, x0.sum())
        A = np.hstack([A, np.zeros((m + 1, 1))])
        A[-1, -1] = 1.0
        b[-1] += 1.0
        c = rng.normal(size=n + 1)
        lp = LinearProgram.from_dense(c, A, b)
        x, cert = solve(lp)
        ref = linprog(-c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
        assert ref.status == 0
        assert cert.primal_objective == pytest.approx(-ref.fun, abs=1e-7)
        check = check_certificate(lp, x, cert)
        assert check.valid, check


def test_certificate_checker_rejects_tampered_duals():
    lp = LinearProgram.from_dense([1.0, 0.0], [[1.0, 1.0]], [1.0])
    x, cert = solve(lp)
    bad = replace(cert, dual_values=np.array([0.5]))
    check = check_certificate(lp, x, bad)
    assert not check
    assert check.dual_infeasibility == pytest.approx(0.5)


def test_dump_and_load(tmp_path):
    lp = LinearProgram.from_dense([1.0, -0.1, 0.0], [[1.0, 1.0, 0.0], [0.0, 2.5, 1.0]], [1.0, 3.0])
    text = dump_lp(lp)
    assert text.splitlines()[1] == "# variables 3 rows 2 nonzeros 4"
    assert text.splitlines()[4] == "0 0 1"
    back = load_lp(text)
    assert np.array_equal(back.objective, lp.objective)
    assert np.array_equal(back.equality_rhs, lp.equality_rhs)
    assert (back.equality_matrix != lp.equality_matrix).nnz == 0

    path = tmp_path / "lp.txt"
    write_lp(lp, path)
    assert path.read_text() == text


def test_load_lp_reports_line():
    with pytest.raises(DatasetParseError) as info:
        load_lp("objective 1 2\nrhs 1\n0 0\n")
    assert info.value.line == 3

import logging

import numpy as np
import pytest
import scipy.sparse as sp

from src import sdp_core
from src.errors import ModelError
from src.sdp_core import SdpProblem, SolverSettings, SolverStatus


def _min_eig_problem(c, duplicate=False):
    """min <C, X> s.t. tr X = 1, X >= 0; the optimum is lambda_min(C)."""
    n = c.shape[0]
    constraints = [([np.eye(n)], 1.0)]
    if duplicate:
        constraints.append(([np.eye(n)], 1.0))
    return SdpProblem.from_dense([n], [c], constraints, label="min-eig")


def test_min_eigenvalue_sdp():
    c = np.array([[2.0, 1.0], [1.0, 3.0]])
    sol = sdp_core.solve(_min_eig_problem(c))
    expected = (5 - np.sqrt(5)) / 2
    assert sol.status is SolverStatus.OPTIMAL
    assert sol.primal_value == pytest.approx(expected, abs=1e-7)
    assert sol.dual_value == pytest.approx(expected, abs=1e-7)
    assert np.linalg.eigvalsh(sol.x[0])[0] >= -1e-9
    assert np.linalg.eigvalsh(sol.s[0])[0] >= -1e-9
    assert max(sol.residuals) <= 1e-7


def test_linear_program_block():
    # min x1 + 2 x2 s.t. x1 + x2 = 1, x >= 0
    problem = SdpProblem((-2,), (np.array([1.0, 2.0]),), (sp.csr_matrix([[1.0], [1.0]]),), np.array([1.0]))
    sol = sdp_core.solve(problem)
    assert sol.optimal
    assert sol.primal_value == pytest.approx(1.0, abs=1e-7)
    np.testing.assert_allclose(sol.x[0], [1.0, 0.0], atol=1e-6)


def test_free_variables():
    # x1 + u = 2, x2 - u = 0: every feasible point has x1 + x2 = 2
    problem = SdpProblem(
        (-2,),
        (np.array([1.0, 1.0]),),
        (sp.csr_matrix(np.eye(2)),),
        np.array([2.0, 0.0]),
        free_a=sp.csr_matrix([[1.0], [-1.0]]),
        free_c=np.array([0.0]),
    )
    sol = sdp_core.solve(problem)
    assert sol.optimal
    assert sol.primal_value == pytest.approx(2.0, abs=1e-7)
    assert sol.dual_value == pytest.approx(2.0, abs=1e-7)
    assert sol.u.shape == (1,)
    np.testing.assert_allclose(problem.apply_a(sol.x, sol.u), problem.b, atol=1e-7)


def test_dependent_constraint_dropped(caplog):
    c = np.diag([1.0, 4.0])
    with caplog.at_level(logging.WARNING, logger="src.sdp_core"):
        sol = sdp_core.solve(_min_eig_problem(c, duplicate=True))
    assert sol.optimal
    assert len(sol.dropped) == 1
    assert sol.y[sol.dropped[0]] == 0.0
    assert sol.primal_value == pytest.approx(1.0, abs=1e-7)
    assert "linearly dependent" in caplog.text


def test_infeasible_problem_is_not_optimal():
    # x = -1 with x >= 0
    problem = SdpProblem((-1,), (np.array([1.0]),), (sp.csr_matrix([[1.0]]),), np.array([-1.0]))
    sol = sdp_core.solve(problem, SolverSettings(max_iter=60))
    assert not sol.optimal
    assert sol.status in (SolverStatus.INFEASIBLE, SolverStatus.MAX_ITER, SolverStatus.NUMERICAL_FAILURE)


def test_iteration_log(caplog):
    with caplog.at_level(logging.DEBUG, logger="src.sdp_core"):
        sol = sdp_core.solve(_min_eig_problem(np.eye(3)))
    assert "alpha_p" in caplog.text
    assert len(sol.stats) == sol.iterations + 1
    assert set(sol.stats[0]) == {"iter", "pobj", "dobj", "pres", "dres", "gap", "mu", "alpha_p", "alpha_d"}


def test_problem_validation():
    with pytest.raises(ModelError):
        SdpProblem.from_dense([2], [np.array([[0.0, 1.0], [0.0, 0.0]])], [([np.eye(2)], 1.0)])
    with pytest.raises(ModelError):
        SdpProblem((2,), (np.eye(2),), (sp.csr_matrix((3, 1)),), np.array([1.0]))
    with pytest.raises(ModelError):
        SdpProblem.from_dense([2], [np.eye(2)], [])


@pytest.mark.parametrize("kwargs", [
    {"tol_gap": 0.0},
    {"tol_feas": -1e-8},
    {"max_iter": 0},
    {"step_fraction": 1.0},
])
def test_settings_validation(kwargs):
    with pytest.raises(ValueError):
        SolverSettings(**kwargs)


def test_independent_rows():
    gram = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 2.0]])
    keep = sdp_core.independent_rows(gram)
    assert keep.size == 2
    assert 2 in keep


def test_write_sparse(tmp_path):
    problem = SdpProblem(
        (2, -1),
        (np.eye(2), np.array([0.5])),
        (sp.csr_matrix(np.array([[1.0], [0.0], [0.0], [1.0]])), sp.csr_matrix([[1.0]])),
        np.array([1.0]),
        free_a=sp.csr_matrix([[2.0]]),
        free_c=np.array([0.0]),
        label="dump",
    )
    path = tmp_path / "dump.dat-s"
    sdp_core.write_sparse(problem, path)
    lines = path.read_text().splitlines()
    assert lines[0] == '"dump"'
    assert lines[1] == "1"
    assert lines[2] == "3"
    assert lines[3] == "2 -1 -2"
    assert float(lines[4]) == 1.0
    assert "0 1 1 1 -1" in lines
    assert "1 3 1 1 2" in lines
    assert "1 3 2 2 -2" in lines


def test_eigenvalue_oracle_on_random_instances():
    rng = np.random.default_rng(2024)
    settings = SolverSettings(tol_gap=1e-10, tol_feas=1e-10)
    for _ in range(50):
        g = rng.standard_normal((4, 4))
        c = (g + g.T) / 2
        sol = sdp_core.solve(_min_eig_problem(c), settings)
        assert sol.optimal
        assert sol.dual_value == pytest.approx(np.linalg.eigvalsh(c)[0], abs=1e-8)
        assert sol.residuals.gap <= 1e-10

import numpy as np
import pytest
from scipy import optimize

from pointgames.core import Boundary, l1_norm, transpose
from pointgames.gamefile import builtin, search_config_for
from pointgames.profile import GridSpec, kernel_matrix
from pointgames.search import (SearchConfig, match_objective, profile_match, project_valid,
                               residual_decompose, run_search)
from pointgames.validity import DENSE_LAMBDAS, SELF_TOL, check_v_valid

S3 = (0.0, 1.0, 2.0)
T3 = (0.5, 1.0, 2.0)


def test_residual_decompose_zero():
    p, q = residual_decompose(np.zeros((3, 3)), S3, T3)
    assert not p.any() and not q.any()


def test_residual_decompose_diagonal_term():
    W = np.linalg.svd(kernel_matrix(S3, T3))[2].T
    t = np.outer(W[:, 0], W[:, 0])
    p, q = residual_decompose(t, S3, T3)
    np.testing.assert_allclose(p, t / 2, atol=1e-15)
    np.testing.assert_allclose(q, t / 2, atol=1e-15)


def test_residual_decompose_symmetric_input():
    rng = np.random.default_rng(0)
    M = rng.normal(size=(3, 3))
    t = M + M.T
    p, q = residual_decompose(t, S3, T3)
    np.testing.assert_allclose(p + q, t, atol=1e-13)
    np.testing.assert_allclose(q, p.T, atol=1e-13)


def test_projection_fixed_point():
    grid = GridSpec(S3, T3, 1.0)
    V = np.zeros((3, 3))
    V[1] = [-0.5, 1.0, -0.5]  # a merge on the line x = 1
    X, _ = project_valid(V, grid)
    np.testing.assert_allclose(X, V, atol=1e-12)


def test_projection_of_reverse_split_matches_generic_solver():
    grid = GridSpec(S3, T3, 1.0)
    V = np.zeros((3, 3))
    V[1] = [0.5, -1.0, 0.5]
    X, _ = project_valid(V, grid, dense_refine=False)
    K = kernel_matrix(S3, T3)
    S = np.array(S3)
    cons = [{"type": "ineq", "fun": lambda r: K @ r}, {"type": "ineq", "fun": lambda r: S @ r},
            {"type": "eq", "fun": lambda r: r.sum()}]
    ref = optimize.minimize(lambda r: 0.5 * np.sum((r - V[1]) ** 2), V[1], constraints=cons,
                            method="SLSQP", options={"ftol": 1e-15, "maxiter": 500}).x
    np.testing.assert_allclose(X[1], ref, atol=1e-7)
    assert np.linalg.norm(X) <= np.linalg.norm(V)
    assert (K @ X[1] >= -1e-12).all()


def test_dense_refinement_removes_sweep_violations():
    grid = GridSpec((0.3, 1.0, 3.0), (1.0,), 1.0)
    V = np.zeros((3, 3))
    V[0] = [1.0, -1.5, 0.5]
    X, info = project_valid(V, grid)
    prof = kernel_matrix(grid.S, DENSE_LAMBDAS) @ X.T
    assert prof.min() >= -1e-12 * max(1, np.abs(X).sum())
    assert info["refine_rounds"] >= 0


def test_degenerate_grid():
    cfg = SearchConfig(GridSpec((1.0, 1.5, 2.0), T3, 1.0, truncation=0), Boundary(1.0, final=1.5))
    g = run_search(cfg)
    assert g.diagnostics["rank"] == 0
    # nothing fitted in Step 2; Steps 3-4 still recover part of e - s
    assert g.eps_approx <= l1_norm(cfg.boundary.target()) == 2
    assert g.h_star == transpose(g.v_star)
    assert check_v_valid(g.v_star, tol=SELF_TOL).is_valid


def test_profile_match_golden1_grid(golden1):
    cfg = search_config_for(golden1)
    m = profile_match(cfg)
    assert m.rank == 6
    assert m.objective == pytest.approx(match_objective(m.h, cfg))
    K = kernel_matrix(cfg.grid.S, cfg.grid.T)
    assert (K @ m.h >= -1e-9).all()  # rows of h are columns of the array
    np.testing.assert_allclose(m.h.sum(axis=0), 0, atol=1e-12)


def test_search_penTIPG2(searched2):
    g = searched2
    assert g.final_point == (1.505, 1.505)
    assert g.point_count <= 64
    assert g.diagnostics["dense_valid"]
    assert g.diagnostics["step3_residual"] <= 1e-12
    assert g.h_star == transpose(g.v_star)
    assert g.eps_approx == pytest.approx(l1_norm(g.h_star + g.v_star - Boundary(1.0, final=1.505).target()))


def test_search_is_deterministic(golden2, searched2):
    again = run_search(search_config_for(golden2))
    assert again.v_star == searched2.v_star


@pytest.mark.parametrize("name", ["penTIPG1", "penTIPG3"])
def test_search_other_grids_valid(name):
    g = run_search(search_config_for(builtin(name)))
    assert g.diagnostics["validity"] == "valid"
    assert g.point_count <= 64


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(GridSpec((1.0, 2.0), T3, 1.0), Boundary(2.0, final=2.5))
    with pytest.raises(ValueError):
        SearchConfig(GridSpec((1.0, 2.0), T3, 1.0), Boundary(1.0, final=1.5))
    with pytest.raises(ValueError):
        SearchConfig(GridSpec((1.0, 1.5, 2.0), T3, 1.0), Boundary(1.0, final=1.5), weight_bound=0)

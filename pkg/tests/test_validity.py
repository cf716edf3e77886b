from fractions import Fraction

import numpy as np
import pytest

from oracle import exact_valid
from pointgames.core import Configuration, Move, transpose
from pointgames.validity import (DENSE_LAMBDAS, GOLDEN_TOL, SELF_TOL, check_eta_valid, check_h_valid,
                                 check_transition, check_transpose_duality, check_v_valid,
                                 check_valid_1d, is_valid, merge_point, split_feasible, sweep_lambdas)

MERGE = {1.0: 1.0, 0.0: -0.5, 2.0: -0.5}
REVERSE_SPLIT = {1.0: -1.0, 0.0: 0.5, 2.0: 0.5}


def _fractions(f):
    return {Fraction(x): Fraction(w) for x, w in f.items()}


def test_tiers():
    assert GOLDEN_TOL == 5e-6
    assert SELF_TOL == 1e-10
    assert len(DENSE_LAMBDAS) == 601
    assert DENSE_LAMBDAS[0] == pytest.approx(1e-6) and DENSE_LAMBDAS[-1] == pytest.approx(1e6)


def test_zero_move_valid():
    assert is_valid({})
    assert check_valid_1d({}).worst_value == 0


def test_merge_valid():
    assert exact_valid(_fractions(MERGE))
    assert is_valid(MERGE)


def test_reverse_split_fails_on_profile():
    assert not exact_valid(_fractions(REVERSE_SPLIT))
    r = check_valid_1d(REVERSE_SPLIT, "grid", [1.0])
    assert not r.is_valid
    assert r.worst_value == pytest.approx(-1 / 6)
    assert "profile" in r.failure()
    assert r.sum_residual == 0


def test_nonzero_sum_reported_first():
    r = check_valid_1d({1.0: 1.0})
    assert not r.is_valid
    assert "sum" in r.failure()


def test_first_moment_needed():
    # profile sampled on a finite grid can miss a negative first moment
    f = {1.0: 1.0, 2.0: -1.0}
    r = check_valid_1d(f, "grid", [1e-9])
    assert not r.is_valid
    assert "first moment" in r.failure()


def test_raise_valid_and_lowering_invalid():
    assert is_valid({1.0: -1.0, 2.0: 1.0})
    assert not is_valid({1.0: 1.0, 2.0: -1.0})


def test_array_input():
    assert is_valid(([0.0, 1.0, 2.0], [-0.5, 1.0, -0.5]))


def test_default_tolerance_scales_with_norm():
    r = check_valid_1d({1.0: 1e6, 2.0: -1e6 + 1e-7})
    assert r.tol == pytest.approx(2e-6)
    # the 1e-7 sum residue is absorbed; the lowering itself is caught
    assert abs(r.sum_residual) <= r.tol
    assert "profile" in r.failure()


def test_sweep_modes():
    assert sweep_lambdas("dense") is DENSE_LAMBDAS
    np.testing.assert_array_equal(sweep_lambdas("grid", [-1, 0, 2]), [2.0])
    with pytest.raises(ValueError):
        sweep_lambdas("grid")
    with pytest.raises(ValueError):
        sweep_lambdas("bogus")


def test_line_validity():
    m = Move({(0, 5): -0.5, (1, 5): 1.0, (2, 5): -0.5})
    assert check_h_valid(m).is_valid
    assert not check_v_valid(m).is_valid
    assert check_v_valid(transpose(m)).is_valid
    assert check_transpose_duality(m)
    bad = Move({(1, 1): -1.0, (0, 1): 0.5, (2, 1): 0.5, (4, 2): 1.0, (5, 2): -1.0})
    lines = check_h_valid(bad)
    assert {r.line for r in lines.failures()} == {1.0, 2.0}
    assert not lines.worst.is_valid


def test_eta_validity():
    eta = 0.1
    assert check_eta_valid(MERGE, eta)
    assert check_eta_valid({1.0: -eta / 2}, eta)
    assert not is_valid({1.0: -eta / 2})
    assert not check_eta_valid({1.0: -2 * eta}, eta)
    with pytest.raises(ValueError):
        check_eta_valid(MERGE, 0)


def test_transition_identity():
    g = Configuration({(1, 2): 1.0})
    assert check_transition(g, g, "horizontal").is_valid


def test_transition_merge_and_raise():
    g = Configuration({(1, 3): 0.25, (3, 3): 0.75})
    h = Configuration({(2.5, 3): 1.0})
    assert check_transition(g, h, "horizontal").is_valid
    assert not check_transition(g, h, "vertical").is_valid
    up = Configuration({(1, 4): 0.25, (3, 3): 0.75})
    assert check_transition(g, up, "vertical").is_valid
    assert not check_transition(up, g, "vertical").is_valid
    with pytest.raises(ValueError):
        check_transition(g, h, "diagonal")


def test_split_feasibility():
    assert split_feasible(1.0, [(2 / 3, 0.5), (2.0, 0.5)])
    assert split_feasible(1.0, [(1.0, 1.0)])
    assert not split_feasible(1.0, [(0.5, 0.5), (2.0, 0.5)])
    with pytest.raises(ValueError):
        split_feasible(1.0, [(2.0, 0.5)])


def test_split_feasibility_matches_validity():
    # splitting z into fractions is valid iff sum frac/x <= 1/z
    for z, targets in [(1.0, [(2 / 3, 0.5), (2.0, 0.5)]), (1.0, [(0.5, 0.5), (2.0, 0.5)]),
                       (2.0, [(1.5, 0.3), (3.0, 0.7)])]:
        f = {z: -1.0}
        for x, w in targets:
            f[x] = f.get(x, 0.0) + w
        assert split_feasible(z, targets) == is_valid(f, tol=1e-12)


def test_merge_point():
    assert merge_point([(1.0, 0.25), (3.0, 0.75)]) == (2.5, 1.0)

import math

import mpmath
import pytest

from pointgames import baselines as B


def test_sr_zero_penalty_closed_form():
    r = B.sr_solve(0.0)
    assert r.bias == pytest.approx(1 / math.sqrt(2) - 0.5, abs=1e-9)
    assert (r.rounds, r.qubits) == (8, 6)


@pytest.mark.parametrize("lam", [0.0, 1.0, 6.0])
def test_sr_optimum_against_fine_scan(lam):
    r = B.sr_solve(lam)
    w, v = lam + 1, lam
    best = math.inf
    for i in range(1, 20000):
        p = 0.5 * i / 20000
        z2 = B._sr_z2(p, w, v)
        z1 = (v / 2 + (0.5 - p) * z2) / (1 - p)
        best = min(best, max(z1, (1 - p) * w + p * v))
    assert r.reward <= best + 1e-12
    assert r.reward == pytest.approx(best, abs=1e-4)  # scan spacing times slope


@pytest.mark.parametrize("lam", [0.0, 2.0, 6.0])
def test_sr_chain_valid_and_tight(lam):
    r = B.sr_solve(lam)
    reports = B.sr_verify(r.aux["p"], r.aux["z2"], lam)
    assert all(rep.is_valid for rep in reports)
    frames = B.sr_chain(r.aux["p"], r.aux["z2"], lam)
    assert all(f.total() == pytest.approx(1.0) for f in frames)
    assert frames[-1] == B.Configuration({(r.aux["z1"], r.aux["y"]): 1.0})


def test_sr_bias_decreases_with_penalty():
    biases = [B.sr_solve(lam).bias for lam in (0, 1, 3, 6, 20)]
    assert all(a > b for a, b in zip(biases, biases[1:]))


def test_sr_rejects_negative_penalty():
    with pytest.raises(B.BaselineError):
        B.sr_solve(-1)


def test_ddb_bracket_signs():
    lam = 3.0
    # H(0+) = lam^2 and H -> 0 at infinity
    assert B.ddb_residual(1e-12, lam) == pytest.approx(lam**2 - lam**3 / (lam + 1), rel=1e-9)
    assert B.ddb_residual(1e9, lam) == pytest.approx(-lam**3 / (lam + 1), rel=1e-6)


@pytest.mark.parametrize("lam", [0.5, 1.0, 10.0, 1e3])
def test_ddb_root_matches_high_precision(lam):
    z = B.ddb_reward(lam)
    zz = B.ddb_reward(lam, dps=50)
    assert z == pytest.approx(float(zz), rel=1e-13)
    assert abs(B.ddb_residual(z, lam)) <= 1e-12 * max(1, lam**2)


def test_ddb_series_accuracy_at_1e6():
    lam = 1e6
    with mpmath.workdps(60):
        gap = abs(B.ddb_reward(lam, dps=60) - B.ddb_asymptotic(lam, 2, dps=60))
    bound = 10 * math.log(lam) ** 3 / lam**3
    assert float(gap) <= bound


def test_ddb_bias_decreasing():
    biases = [B.ddb_reward(10.0**k) - 0.5 for k in range(1, 9)]
    assert all(a > b > 0 for a, b in zip(biases, biases[1:]))


def test_ddb_series_orders_differ_slowly():
    d = [abs(B.ddb_asymptotic(L, 2) - B.ddb_asymptotic(L, 1)) * L / math.log(L) for L in (1e3, 1e5, 1e7)]
    assert max(d) < 1


def test_ddb_domain():
    with pytest.raises(B.BaselineError):
        B.ddb_reward(0.0)
    with pytest.raises(B.BaselineError):
        B.ddb_asymptotic(1.0)
    with pytest.raises(ValueError):
        B.ddb_asymptotic(10.0, 3)
    r = B.ddb_result(5.0)
    assert r.convention == B.ORIGINAL
    assert math.isinf(r.rounds) and math.isinf(r.qubits)


def test_abdr():
    assert B.abdr_reward(4).bias == 0.5
    assert B.abdr_reward(100).bias == 0.1
    assert B.abdr_reward(1e12).bias == pytest.approx(1e-6)
    with pytest.raises(B.BaselineError):
        B.abdr_reward(3.9)


def test_compare_table():
    rows = B.compare_table([6.0])
    assert [r.protocol for r in rows] == ["SR", "DDB", "ABDR"]
    assert [r.protocol for r in B.compare_table([0.0])] == ["SR"]
    assert [r.protocol for r in B.compare_table([1.0])] == ["SR", "DDB"]


def test_compare_table_with_game(toy):
    from pointgames import convert as C

    g = toy.game()
    rep = C.conversion_report(g, C.conversion_params(C.decompose_boundary(g), delta=1e-4))
    rows = B.compare_table([], [("toy", g, rep)])
    assert rows[0].as_tuple() == ("toy", 1.0, rep.protocol_bias, rep.rc, rep.sc)

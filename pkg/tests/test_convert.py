import math

import pytest

from pointgames import convert as C
from pointgames.core import Boundary, Configuration, Move, l1_norm
from pointgames.search import PenTipg


@pytest.fixture(scope="module")
def displaced():
    """Game whose negative part carries 1% of its mass off the ideal start."""
    b = Boundary(1.0, final=2.0)
    s = b.start * 0.99 + Configuration({(3.0, 3.0): 0.01})
    return PenTipg.from_moves(b.end - s, Move(), b)


def test_exact_game_has_no_error_parts(toy):
    d = C.decompose_boundary(toy.game())
    assert d.eps1 == 0 and d.eps2 == 0
    assert len(d.s_error) == 0 and len(d.e_error) == 0
    assert d.s == d.s_ideal


def test_golden_error_parts_small(golden1):
    d = C.decompose_boundary(golden1.game())
    assert d.eps1 <= 5e-6 and d.eps2 <= 5e-6


def test_displaced_start_mass(displaced):
    d = C.decompose_boundary(displaced)
    assert d.eps1 == pytest.approx(0.01, abs=1e-15)
    assert l1_norm(d.s_error) == pytest.approx(1.0)
    assert dict(d.s_error) == {(3.0, 3.0): pytest.approx(1.0)}
    assert d.eps2 == 0


def test_inconsistent_game():
    b = Boundary(1.0, final=2.0)
    g = PenTipg(Move({(2.0, 2.0): 1.0, (1.0, 2.0): -1.0}), Move(), 1.0, 0.0, (2.0, 2.0), 1.0, 2)
    with pytest.raises(C.InconsistentGameError):
        C.decompose_boundary(g)
    with pytest.raises(C.ConversionError):
        C.decompose_boundary(PenTipg.from_moves(Move(), Move(), b))


def test_admissible_c1():
    lo, hi = C.admissible_c1(0.3, 1.0)
    assert lo == 0 and hi == pytest.approx(0.045)
    assert C.admissible_c1(2.0, 2.0)[1] == pytest.approx(2 / 3)
    with pytest.raises(C.ConversionError):
        C.admissible_c1(0.3, 0.0)
    assert C.default_c1(0.3, 1.0) == pytest.approx(0.999 * 0.045)
    assert C.default_c1(5.0, 1.0) == pytest.approx(0.999)


def test_delta_min():
    assert C.delta_min(0.0, 0.0, 0.5) == 0
    assert C.delta_min(0.0, 0.1, 0.5) == pytest.approx(0.1)
    c1, e1, e2 = 0.2, 0.01, 0.003
    c3 = 1 / c1 - 1
    assert C.delta_min(e1, e2, c1) == pytest.approx((c3 * e1 + e2) / (1 + c3 * e1))


def test_catalyst_at_zero_error():
    c1, delta, hn = 0.24, 1e-3, 1.7
    d_clyst, d_sfix, eta1, eta2, eta3 = C.catalyst_parameters(0.0, 0.0, c1, delta, hn)
    assert d_clyst == pytest.approx(delta, rel=1e-12)
    assert eta2 == pytest.approx(delta * c1 / (hn * (1 - delta)), rel=1e-12)
    assert d_sfix == 0
    assert 1 - delta == pytest.approx((1 - eta1) * 1)
    assert eta3 == pytest.approx(1 - (1 - eta1) * (1 + eta2 * hn))


def test_catalyst_identity_with_errors():
    e1, e2, c1, hn = 0.02, 0.01, 0.3, 1.5
    delta = C.delta_min(e1, e2, c1) + 0.05
    _, _, eta1, eta2, _ = C.catalyst_parameters(e1, e2, c1, delta, hn)
    assert 1 - delta == pytest.approx((1 - eta1) * (1 - e2), rel=1e-13)
    assert C.delta_from_eta1(e2, eta1) == pytest.approx(delta, rel=1e-13)
    assert C.delta_for_eta2(e1, e2, c1, eta2, hn) == pytest.approx(delta, rel=1e-13)


def test_printed_w1_limit():
    w_minus, w_plus = C.printed_w1(1e-12, 0.7, 1.0)
    assert abs(w_minus) < 1e-9
    assert w_plus == pytest.approx(0.7 / (2 * 2 * (0.7 - 1)) * 2, rel=1e-6)


def test_split_weight_and_capacity():
    assert C.split_weight(1.0, 2.0, 5.0) == 1.0
    assert C.split_weight(3.0, 1.0, 3.0) == 0.0
    # splitting 2 into 1 and 4 reaches 1 with weight 1/3
    assert C.split_weight(2.0, 1.0, 4.0) == pytest.approx(1 / 3)
    m = C.split_m2(0.7, 1.0, 0.2)
    assert C.c1_capacity(0.7, 1.0, m) >= 0.2
    assert C.c1_capacity(0.7, 1.0, m * (1 - 1e-9)) < 0.2
    with pytest.raises(C.ConversionError):
        C.split_m2(0.7, 1.0, 0.9)


def test_select_m1_rules(golden1):
    d = C.decompose_boundary(golden1.game())
    assert C.select_m1(d, "lemma") == 0.7
    assert C.select_m1(d, "dominating") == 0.3
    assert C.select_m1(d, "theorem") <= C.select_m1(d, "lemma")
    with pytest.raises(ValueError):
        C.select_m1(d, "widest")


def test_params_errors(golden1):
    d = C.decompose_boundary(golden1.game())
    with pytest.raises(C.DeltaOutOfRange) as exc:
        C.conversion_params(d, delta=0.0)
    assert exc.value.delta_min == 0.0
    with pytest.raises(C.ConversionError):
        C.conversion_params(d, c1=0.5, delta_offset=1e-5)
    with pytest.raises(ValueError):
        C.conversion_params(d, delta=0.1, delta_offset=0.1)
    with pytest.raises(ValueError):
        C.conversion_params(d, delta=0.1, m2_rule="tallest")


def test_params_defaults(golden1):
    d = C.decompose_boundary(golden1.game())
    p = C.conversion_params(d, delta_offset=1e-5)
    assert p.m1 == 0.7
    assert p.c1 == pytest.approx(0.999 * 0.49 / 2)
    assert p.delta == pytest.approx(1e-5)
    assert p.m2 >= d.max_coordinate()
    assert "m1 < lam" in p.review[0]


def test_integral_snapping(golden1):
    d = C.decompose_boundary(golden1.game())
    p = C.conversion_params(d, delta_offset=1e-3, integral=True)
    n = 1 / p.eta2
    assert abs(n - round(n)) < 1e-6
    assert p.delta <= 1e-3


def test_qubits():
    assert C.qubits_for(64) == 24
    for mu in range(1, 3000):
        assert C.qubits_for(mu) == 3 * math.ceil(math.log2(2 * mu + 1))


def test_report_penTIPG1(golden1):
    g = golden1.game()
    d = C.decompose_boundary(g)
    r = C.conversion_report(g, C.conversion_params(d, delta_offset=1e-5))
    assert r.mu == 57 and r.sc == 21  # printed zeros shrink the support
    assert r.err == pytest.approx(math.sqrt(1e-5 * (r.m2 - 1.500005) ** 2))
    assert r.rc == 2 * math.ceil(r.n_steps)
    assert r.protocol_bias == pytest.approx(1.500005 + r.err - 1.5)
    assert r.delta_max(r.err) == pytest.approx(r.delta)
    assert set(r.as_dict()) >= {"err", "rc", "sc", "protocol_bias"}


def test_err_vanishes_with_delta(toy):
    g = toy.game()
    d = C.decompose_boundary(g)
    errs = [C.conversion_report(g, C.conversion_params(d, delta=x)).err for x in (1e-2, 1e-6, 1e-12)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-5


def test_tradeoff(golden1):
    g = golden1.game()
    rows = C.tradeoff_curve(g, None, [1e-3, 1e-5, 1e-4])
    assert [r.delta for r in rows] == [1e-5, 1e-4, 1e-3]
    assert rows[0].rc > rows[1].rc > rows[2].rc
    assert rows[0].err < rows[2].err
    assert len(C.tradeoff_curve(g, None, [1e-4])) == 1
    threaded = C.tradeoff_curve(g, None, [1e-3, 1e-5, 1e-4], workers=3)
    assert threaded == rows


def test_expand_toy_all(toy):
    g = toy.game()
    d = C.decompose_boundary(g)
    p = C.conversion_params(d, delta=0.1, m1_rule="dominating", m2_rule="split", integral=True)
    ex = C.expand_tdpg(g, p, materialize="all")
    assert ex.all_valid
    assert len(ex.transitions) == ex.n_transitions
    assert ex.max_support <= ex.support_bound
    assert ex.max_mass_error <= 1e-10
    assert ex.final_offset() <= 1e-10
    assert ex.expected_final == pytest.approx((2 + ex.err, 2 + ex.err))
    assert [t.axis for t in ex.transitions[:4]] == ["horizontal", "vertical"] * 2


def test_expand_threaded_matches(toy):
    g = toy.game()
    p = C.conversion_params(C.decompose_boundary(g), delta=0.1, m1_rule="dominating",
                            m2_rule="split", integral=True)
    a = C.expand_tdpg(g, p, workers=1)
    b = C.expand_tdpg(g, p, workers=4)
    assert [t.report for t in a.transitions] == [t.report for t in b.transitions]
    assert a.sampled == (0, 1, a.loop.iterations - 1)


def test_expand_needs_dominating_m1(golden1):
    g = golden1.game()
    p = C.conversion_params(C.decompose_boundary(g), delta_offset=1e-3)
    with pytest.raises(C.ExpansionError, match="dominating"):
        C.expand_tdpg(g, p)


def test_expand_cap(toy):
    g = toy.game()
    p = C.conversion_params(C.decompose_boundary(g), delta=0.1, m1_rule="dominating", m2_rule="split")
    with pytest.raises(C.ExpansionError, match="cap"):
        C.expand_tdpg(g, p, materialize="all", cap=3)


def test_loop_frames_conserve_mass(toy):
    g = toy.game()
    p = C.conversion_params(C.decompose_boundary(g), delta=0.1, m1_rule="dominating",
                            m2_rule="split", integral=True)
    loop = C.expand_tdpg(g, p).loop
    for k in range(loop.iterations + 1):
        assert loop.frame(k).total() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(IndexError):
        loop.frame(loop.iterations + 1)


def test_expand_searched_penTIPG2(searched2):
    d = C.decompose_boundary(searched2)
    c1 = C.expansion_c1(d, C.select_m1(d, "dominating"))
    p = C.conversion_params(d, c1, delta_offset=1e-3, m1_rule="dominating", m2_rule="split",
                            integral=True)
    ex = C.expand_tdpg(searched2, p)
    assert ex.all_valid
    assert ex.max_support <= ex.support_bound <= 64
    assert ex.final_offset() <= 1e-10

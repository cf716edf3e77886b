"""From an approximate time-independent game to a time-dependent one.

The pipeline has three layers:

* :func:`decompose_boundary` splits ``h + v`` into start and end parts and
  measures how far each is from the ideal boundary (``eps1``, ``eps2``).
* :func:`conversion_params` and :func:`conversion_report` evaluate the
  closed-form parameters (``delta_min``, ``eta2``, ``m2``, ...) and the
  resulting resources: final-point error, rounds and qubits.
* :func:`expand_tdpg` builds the frame sequence explicitly and checks every
  materialised transition with the validity oracle.  The catalysed loop is
  kept symbolic: frame ``k`` is an affine function of ``k``.

The expansion diverts mass from the start points, splits it down to a
common point ``(m1, m1)`` (the far halves go to ``(m2, m2)``), raises it
onto the error part of the start and a catalyst copy of ``h^-``, runs the
loop, raises everything left over to ``(m2, m2)`` and finishes with a
three-step merge onto ``(beta + err, alpha + err)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from scipy import optimize

from .core import (Boundary, Configuration, Move, joint_support, l1_norm, max_coordinate,
                   split_signs)
from .search import PenTipg
from .validity import SELF_TOL, ValidityReport, check_transition

ZERO_EPS = 1e-14
M1_RULES = ("lemma", "theorem", "dominating")
M2_RULES = ("closed-form", "split")


class ConversionError(ValueError):
    """Parameters outside the region where the conversion applies."""


class InconsistentGameError(ConversionError):
    pass


class DeltaOutOfRange(ConversionError):
    def __init__(self, delta: float, delta_min: float):
        super().__init__(f"delta={delta!r} must lie in (delta_min, 1) with delta_min={delta_min!r}")
        self.delta = delta
        self.delta_min = delta_min


class ExpansionError(RuntimeError):
    def __init__(self, step: str, message: str, report: ValidityReport | None = None):
        super().__init__(f"{step}: {message}")
        self.step = step
        self.report = report


# ---------------------------------------------------------------------------
# boundary decomposition


@dataclass(frozen=True)
class BoundaryDecomposition:
    """Normalised sign parts of ``h + v`` measured against the ideal boundary.

    ``s = (1 - eps1) s_ideal + eps1 s_error`` and
    ``e = (1 - eps2) e_ideal + eps2 e_error``; all moves are divided by
    ``scale = ||s||_1`` so that ``s`` has unit mass.
    """

    lam: float
    eps1: float
    eps2: float
    s_error: Configuration
    e_error: Configuration
    alpha: float
    beta: float
    scale: float
    h: Move
    v: Move
    s: Configuration
    e: Configuration

    @property
    def s_ideal(self) -> Configuration:
        return Boundary(self.lam).start

    @property
    def e_ideal(self) -> Configuration:
        return Configuration({(self.beta, self.alpha): 1.0})

    @property
    def h_minus(self) -> Configuration:
        return split_signs(self.h)[1]

    @property
    def h_minus_norm(self) -> float:
        return l1_norm(self.h_minus)

    def max_coordinate(self) -> float:
        return max(max_coordinate(self.h), max_coordinate(self.v))


def _error_part(part: Configuration, ideal: Configuration, tol: float):
    """``1 - eps`` is the largest multiple of ``ideal`` that fits under ``part``."""
    ratio = min(part.get(p, 0.0) / w for p, w in ideal.items())
    keep = min(1.0, ratio)
    eps = 1.0 - keep
    if eps < tol:
        return 0.0, Configuration()
    rest = Configuration.of(part - ideal * keep, tol=1e-12)
    return eps, rest / l1_norm(rest)


def decompose_boundary(game: PenTipg, tol: float = ZERO_EPS) -> BoundaryDecomposition:
    if not game.eps_approx < 1:
        raise ConversionError(f"eps_approx={game.eps_approx:.3g} must be below 1")
    beta, alpha = game.final_point
    total = game.h_star + game.v_star
    e_raw, s_raw = split_signs(total)
    ideal_s = Boundary(game.lam).start
    # the ideal points may carry at most eps_approx less than required
    missing = [w - s_raw.get(p, 0.0) for p, w in ideal_s.items()]
    missing.append(1.0 - e_raw.get((beta, alpha), 0.0))
    worst = max(missing)
    if worst > game.eps_approx + 1e-9:
        raise InconsistentGameError(
            f"ideal boundary short by {worst:.3e}, more than eps_approx={game.eps_approx:.3e}")
    scale = l1_norm(s_raw)
    if scale == 0:
        raise InconsistentGameError("h + v has no negative part")
    s = s_raw / scale
    e = e_raw / scale
    eps1, s_err = _error_part(s, ideal_s, tol)
    eps2, e_err = _error_part(e, Configuration({(beta, alpha): 1.0}), tol)
    return BoundaryDecomposition(game.lam, eps1, eps2, s_err, e_err, alpha, beta, scale,
                                 game.h_star / scale, game.v_star / scale, s, e)


# ---------------------------------------------------------------------------
# parameters


def admissible_c1(m1: float, lam: float) -> tuple[float, float]:
    """Open interval of admissible ``c1``: ``(0, m1^2 / ((lam + 1) lam))``."""
    if not m1 > 0:
        raise ConversionError("m1 must be positive")
    if not lam > 0:
        raise ConversionError("the conversion needs a positive penalty (lam = 0 is excluded)")
    return 0.0, m1 * m1 / ((lam + 1) * lam)


def default_c1(m1: float, lam: float) -> float:
    """``0.999`` of the supremum, capped below 1 (``c1`` is a product of two fractions)."""
    return 0.999 * min(admissible_c1(m1, lam)[1], 1.0)


def expansion_c1(decomp: "BoundaryDecomposition", m1: float) -> float:
    """``c1`` whose splits fit under the largest coordinate of the game.

    ``0.999`` of the capacity at that coordinate when it is positive, else
    half the admissible supremum (the far point then moves outward).
    """
    cap = c1_capacity(m1, decomp.lam, decomp.max_coordinate())
    if cap > 0:
        return 0.999 * min(cap, admissible_c1(m1, decomp.lam)[1])
    return 0.5 * min(admissible_c1(m1, decomp.lam)[1], 1.0)


def select_m1(decomp: BoundaryDecomposition, rule: str = "lemma") -> float:
    if rule == "theorem":
        pts = list(decomp.h) + list(decomp.v)
        return min(max(x, y) for x, y in pts)
    pts = list(decomp.h_minus) + list(decomp.s_error)
    if not pts:
        raise ConversionError("h has no negative part")
    if rule == "lemma":
        return min(max(x, y) for x, y in pts)
    if rule == "dominating":
        return min(min(x, y) for x, y in pts)
    raise ValueError(f"unknown m1 rule {rule!r}; choose from {M1_RULES}")


def split_weight(z: float, m1: float, m: float) -> float:
    """Largest fraction of a unit at ``z`` that a valid split can send to ``m1`` (rest to ``m``)."""
    if m1 >= z:
        return 1.0
    if m <= z:
        return 0.0
    return (1 / z - 1 / m) / (1 / m1 - 1 / m)


def c1_capacity(m1: float, lam: float, m: float) -> float:
    """Largest ``c1 = w1 w2`` reachable by splits whose far points sit at ``m``."""
    return split_weight(lam + 1, m1, m) * split_weight(lam, m1, m)


def split_m2(m1: float, lam: float, c1: float) -> float:
    """Smallest far point ``m`` with ``c1_capacity(m) >= c1``."""
    lo = lam + 1
    if c1_capacity(m1, lam, math.inf) < c1:
        raise ConversionError(f"c1={c1!r} exceeds what any split can reach")
    if c1_capacity(m1, lam, lo * (1 + 1e-15)) >= c1:
        return lo
    hi = 2 * lo
    while c1_capacity(m1, lam, hi) < c1:
        hi *= 2
        if hi > 1e300:
            raise ConversionError("no finite far point reaches c1")
    m = optimize.brentq(lambda m: c1_capacity(m1, lam, m) - c1, lo, hi, xtol=1e-15, rtol=1e-15,
                        maxiter=500)
    return m * (1 + 1e-13)  # stay on the feasible side of the root


def printed_w1(c1: float, m1: float, lam: float) -> tuple[float, float]:
    L = lam
    disc = (8 * c1 * L**2 * (L + 1) ** 2 + m1**2 * (8 * c1 * L * (L + 1) + 1)
            - 8 * c1 * L * (2 * L**2 + 3 * L + 1) * m1)
    den = 2 * (L + 1) * (m1 - L)
    if disc < 0 or den == 0:
        return math.nan, math.nan
    r = math.sqrt(disc)
    return (r - m1) / den, (r + m1) / den


def printed_m2_tilde(c1: float, m1: float, lam: float) -> tuple[float, float]:
    """``(m2_tilde, w1)`` with the absolute-value form of the minimum."""
    best = (math.inf, math.nan)
    for w in printed_w1(c1, m1, lam):
        if not math.isfinite(w):
            continue
        den = 1 / (lam + 1) - w / m1
        if den == 0:
            continue
        val = abs((1 - w) / den)
        if val < best[0]:
            best = (val, w)
    return best if math.isfinite(best[0]) else (math.nan, math.nan)


@dataclass(frozen=True)
class ConversionParams:
    lam: float
    c1: float
    c3: float
    m1: float
    delta: float
    delta_min: float
    w1_minus: float
    w1_plus: float
    m2_tilde: float
    m2: float
    w1: float
    w2: float
    delta_clyst: float
    delta_sfix: float
    eta1: float
    eta2: float
    eta3: float
    eps1: float
    eps2: float
    h_minus_norm: float
    m1_rule: str = "lemma"
    m2_rule: str = "closed-form"
    review: tuple[str, ...] = ()

    @property
    def gamma(self) -> float:
        return self.eta2


def delta_min(eps1: float, eps2: float, c1: float) -> float:
    c3 = 1 / c1 - 1
    return (1 - eps2) * c3 * eps1 / (1 + c3 * eps1) + eps2


def catalyst_parameters(eps1: float, eps2: float, c1: float, delta: float, h_minus_norm: float):
    """``(delta_clyst, delta_sfix, eta1, eta2, eta3)`` for a given ``delta``."""
    q = c1 * (1 - eps1) + eps1
    d_clyst = 1 - ((1 - eps1) + eps1 / c1) * (1 - delta) / (1 - eps2)
    eta2 = d_clyst / h_minus_norm * q / (1 - d_clyst)
    d_sfix = eps1 * (1 - d_clyst) / q if eps1 else 0.0
    eta1 = 1 - c1 * (1 - d_clyst) / q
    eta3 = 1 - (1 - eta1) * (1 + eta2 * h_minus_norm)
    return d_clyst, d_sfix, eta1, eta2, eta3


def delta_for_eta2(eps1: float, eps2: float, c1: float, eta2: float, h_minus_norm: float) -> float:
    """Inverse of ``delta -> eta2``."""
    q = c1 * (1 - eps1) + eps1
    r = eta2 * h_minus_norm / q
    d_clyst = r / (1 + r)
    return 1 - (1 - d_clyst) * (1 - eps2) / ((1 - eps1) + eps1 / c1)


def delta_from_eta1(eps2: float, eta1: float) -> float:
    return (1 - eps2) * eta1 + eps2


def conversion_params(decomp: BoundaryDecomposition, c1: float | None = None,
                      delta: float | None = None, *, delta_offset: float | None = None,
                      m1_rule: str = "lemma", m2_rule: str = "closed-form",
                      integral: bool = False) -> ConversionParams:
    """Evaluate the conversion parameters.

    Give either ``delta`` or ``delta_offset`` (``delta = delta_min + offset``).
    ``c1=None`` picks :func:`default_c1`.  With ``m2_rule="split"`` the far
    point is the smallest ``m`` whose splits reach ``c1`` (never below the
    largest coordinate of ``h``); ``"closed-form"`` uses the closed form.  With
    ``integral=True`` delta is lowered so that ``1/eta2`` is an integer.
    """
    lam = decomp.lam
    m1 = select_m1(decomp, m1_rule)
    lo, hi = admissible_c1(m1, lam)
    if c1 is None:
        c1 = default_c1(m1, lam)
    if not lo < c1 < hi or c1 > 1:
        raise ConversionError(f"c1={c1!r} outside the admissible interval ({lo}, {min(hi, 1.0)!r})")
    if m2_rule not in M2_RULES:
        raise ValueError(f"unknown m2 rule {m2_rule!r}; choose from {M2_RULES}")
    eps1, eps2 = decomp.eps1, decomp.eps2
    dmin = delta_min(eps1, eps2, c1)
    if (delta is None) == (delta_offset is None):
        raise ValueError("give exactly one of delta and delta_offset")
    if delta is None:
        delta = dmin + delta_offset
    if not dmin < delta < 1:
        raise DeltaOutOfRange(delta, dmin)
    hn = decomp.h_minus_norm
    if integral:
        eta2 = catalyst_parameters(eps1, eps2, c1, delta, hn)[3]
        n = math.ceil(1 / eta2 - 1e-9)
        delta = delta_for_eta2(eps1, eps2, c1, 1 / n, hn)
        if not dmin < delta < 1:
            raise DeltaOutOfRange(delta, dmin)

    review = []
    if m1 < lam:
        review.append("m1 < lam: w1 denominator is negative, absolute-value form used")
    elif m1 == lam:
        review.append("m1 = lam: w1 denominator vanishes")
    w_minus, w_plus = printed_w1(c1, m1, lam)
    m2_tilde, w1_star = printed_m2_tilde(c1, m1, lam)
    top = decomp.max_coordinate()
    if m2_rule == "closed-form":
        if math.isnan(m2_tilde):
            raise ConversionError("closed-form m2 is undefined here (" + "; ".join(review)
                                  + "); use m2_rule='split'")
        m2 = max(top, m2_tilde)
        w1 = w1_star
        w2 = 2 * c1 / w1
    else:
        m2 = max(top, split_m2(m1, lam, c1))
        w1 = split_weight(lam + 1, m1, m2)
        w2 = c1 / w1
    d_clyst, d_sfix, eta1, eta2, eta3 = catalyst_parameters(eps1, eps2, c1, delta, hn)
    if not (eta2 > 0 and 0 < d_clyst < 1):
        raise DeltaOutOfRange(delta, dmin)
    return ConversionParams(lam, c1, 1 / c1 - 1, m1, delta, dmin, w_minus, w_plus, m2_tilde, m2,
                            w1, w2, d_clyst, d_sfix, eta1, eta2, eta3, eps1, eps2, hn,
                            m1_rule, m2_rule, tuple(review))


# ---------------------------------------------------------------------------
# resources


def qubits_for(mu: int) -> int:
    """``3 * ceil(log2(2 mu + 1))``."""
    return 3 * (2 * int(mu)).bit_length()


@dataclass(frozen=True)
class ConversionReport:
    err: float
    n_steps: float
    rc: int
    mu: int
    sc: int
    protocol_bias: float
    m2: float
    alpha: float
    beta: float
    delta: float
    lam: float

    def delta_max(self, eps: float) -> float:
        """Largest ``delta`` whose final merge stays within ``eps``."""
        return eps * eps / ((self.m2 - self.alpha) * (self.m2 - self.beta))

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def final_error(delta: float, m2: float, alpha: float, beta: float) -> float:
    return math.sqrt(delta * (m2 - alpha) * (m2 - beta))


def conversion_report(game: PenTipg, params: ConversionParams) -> ConversionReport:
    beta, alpha = game.final_point
    err = final_error(params.delta, params.m2, alpha, beta)
    n = 10 + 2 / params.eta2
    rc = 2 * math.ceil(n)
    mu = len(joint_support(game.h_star, game.v_star))
    bias = max(alpha, beta) + err - game.lam - 0.5
    return ConversionReport(err, n, rc, mu, qubits_for(mu), bias, params.m2, alpha, beta,
                            params.delta, game.lam)


@dataclass(frozen=True)
class TradeoffRow:
    delta: float
    err: float
    rc: int
    bias: float


def tradeoff_curve(game: PenTipg, c1: float | None, deltas: Iterable[float], *,
                   m1_rule: str = "lemma", m2_rule: str = "closed-form",
                   workers: int = 1) -> list[TradeoffRow]:
    """One report per ``delta``, sorted by ``delta``."""
    decomp = decompose_boundary(game)
    deltas = sorted(float(d) for d in deltas)

    def row(d):
        p = conversion_params(decomp, c1, d, m1_rule=m1_rule, m2_rule=m2_rule)
        r = conversion_report(game, p)
        return TradeoffRow(d, r.err, r.rc, r.protocol_bias)

    if workers > 1 and len(deltas) > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(row, deltas))
    return [row(d) for d in deltas]


# ---------------------------------------------------------------------------
# explicit expansion


@dataclass(frozen=True)
class Transition:
    label: str
    axis: str
    before: Configuration = field(repr=False)
    after: Configuration = field(repr=False)
    report: ValidityReport
    k: int | None = None

    @property
    def is_valid(self) -> bool:
        return self.report.is_valid


@dataclass(frozen=True)
class LoopTemplate:
    """Catalysed loop: iteration ``k`` adds ``g_k h`` then ``g_k v``.

    Frame ``k`` is ``(1-eta1)[(1 - k gamma) s + k gamma e + gamma h^-] + eta3 (m2, m2)``.
    """

    gamma: float
    iterations: int
    last_step: float
    scale: float = field(repr=False)  # 1 - eta1
    eta3: float = field(repr=False)
    m2: float = field(repr=False)
    s: Configuration = field(repr=False)
    e: Configuration = field(repr=False)
    h: Move = field(repr=False)
    v: Move = field(repr=False)

    def step(self, k: int) -> float:
        return self.last_step if k == self.iterations - 1 else self.gamma

    def frame(self, k: int) -> Configuration:
        """Frame before iteration ``k`` (``k = iterations`` is the loop's end)."""
        if not 0 <= k <= self.iterations:
            raise IndexError(k)
        done = min(k * self.gamma, 1.0) if k < self.iterations else 1.0
        hm = split_signs(self.h)[1]
        body = self.s * (1 - done) + self.e * done + hm * self.gamma
        return _config(body * self.scale + Move.point(self.m2, self.m2, self.eta3), f"loop frame {k}")

    def middle(self, k: int) -> Configuration:
        return _config(self.frame(k) + self.h * (self.scale * self.step(k)), f"loop frame {k}+h")


@dataclass(frozen=True)
class TdpgExpansion:
    params: ConversionParams
    err: float
    prologue_frames: list[Configuration] = field(repr=False)
    loop: LoopTemplate = field(repr=False)
    epilogue_frames: list[Configuration] = field(repr=False)
    transitions: list[Transition] = field(repr=False)
    sampled: tuple[int, ...]
    expected_final: tuple[float, float]
    support_bound: int
    max_support: int
    max_mass_error: float

    @property
    def final_frame(self) -> Configuration:
        return self.epilogue_frames[-1]

    @property
    def all_valid(self) -> bool:
        return all(t.is_valid for t in self.transitions)

    @property
    def n_transitions(self) -> int:
        """Transitions in the full sequence, materialised or not."""
        return 4 + 2 * self.loop.iterations + 2 + 3

    def final_offset(self) -> float:
        """Distance from the last frame's point to the expected final point."""
        (pt, w), = self.final_frame.items()
        bx, ay = self.expected_final
        return max(abs(pt[0] - bx), abs(pt[1] - ay), abs(w - 1.0))

    def failures(self) -> list[Transition]:
        return [t for t in self.transitions if not t.is_valid]


def _config(m: Move, where: str) -> Configuration:
    try:
        return Configuration.of(m, tol=1e-12)
    except ValueError as exc:
        raise ExpansionError(where, f"frame has negative weight ({exc})") from None


def _move_points(frame: Move, moves: Sequence[tuple[tuple[float, float], tuple[float, float], float]]):
    """Apply ``[(from, to, weight)]`` relocations."""
    items = list(frame.items())
    for src, dst, w in moves:
        items.append((src, -w))
        items.append((dst, w))
    return Move(items)


def _parse_sample(sample, iterations: int) -> list[int]:
    out = set()
    for k in sample:
        if k == "last":
            k = iterations - 1
        k = int(k)
        if k < 0:
            k += iterations
        if 0 <= k < iterations:
            out.add(k)
    return sorted(out)


def expand_tdpg(game: PenTipg, params: ConversionParams, materialize: str = "sampled",
                sample: Sequence[int | str] = (0, 1, "last"), cap: int = 100_000,
                tol: float = SELF_TOL, workers: int = 1) -> TdpgExpansion:
    """Build the frame sequence and check every materialised transition.

    ``materialize="all"`` walks every loop iteration (at most ``cap``);
    ``"sampled"`` checks the iterations in ``sample`` (``"last"`` allowed).
    Every other iteration differs from a checked one only by a nonnegative
    background, so its transitions are the same moves.  Raises
    :class:`ExpansionError` on the first invalid transition.
    """
    decomp = decompose_boundary(game)
    lam = game.lam
    L, U = lam, lam + 1
    m1, m2, c1 = params.m1, params.m2, params.c1
    beta, alpha = game.final_point

    # preconditions of the construction
    targets_cfg = (decomp.s_error * (params.delta_sfix * c1)
                   + decomp.h_minus * (params.delta_clyst * c1 / decomp.h_minus_norm))
    targets = Configuration.of(targets_cfg, tol=1e-15)
    low = min(min(x, y) for x, y in targets)
    if m1 > low * (1 + 1e-12):
        raise ExpansionError("prologue", f"m1={m1:g} exceeds the smallest target coordinate {low:g}; "
                             "use m1_rule='dominating'")
    if m2 < decomp.max_coordinate():
        raise ExpansionError("epilogue", f"m2={m2:g} is below the largest coordinate of h")
    w1 = split_weight(U, m1, m2)
    w2 = c1 / w1 if w1 > 0 else math.inf
    if w2 > split_weight(L, m1, m2) * (1 + 1e-12):
        raise ExpansionError("prologue", f"c1={c1:g} needs far point beyond m2={m2:g}; use m2_rule='split'")
    w2 = min(w2, 1.0)

    frames_checked: list[Transition] = []
    pending: list[tuple[str, str, Configuration, Configuration, int | None]] = []

    def step(label, axis, before, after, k=None):
        pending.append((label, axis, before, after, k))

    # prologue: split to m1/m2, raise onto the targets
    d = params.delta_sfix + params.delta_clyst
    F0 = decomp.s_ideal
    F1 = _config(_move_points(F0, [
        ((U, L), (m1, L), d / 2 * w1), ((U, L), (m2, L), d / 2 * (1 - w1)),
        ((L, U), (m1, U), d / 2 * w2), ((L, U), (m2, U), d / 2 * (1 - w2)),
    ]), "prologue 1")
    F2 = _config(_move_points(F1, [
        ((m1, L), (m1, m1), d / 2 * w1 * w2), ((m1, L), (m1, m2), d / 2 * w1 * (1 - w2)),
        ((m1, U), (m1, m1), d / 2 * w2 * w1), ((m1, U), (m1, m2), d / 2 * w2 * (1 - w1)),
        ((m2, L), (m2, m2), d / 2 * (1 - w1)), ((m2, U), (m2, m2), d / 2 * (1 - w2)),
    ]), "prologue 2")
    at_m1 = F2.get((m1, m1), 0.0)
    xt: dict[float, float] = {}
    for (x, y), w in targets.items():
        xt[x] = xt.get(x, 0.0) + w
    scale_t = at_m1 / targets.total() if targets.total() else 0.0
    F3 = _config(_move_points(F2, [((m1, m1), (x, m1), w * scale_t) for x, w in xt.items()]
                              + [((m1, m2), (m2, m2), F2.get((m1, m2), 0.0))]), "prologue 3")
    F4 = _config(_move_points(F3, [((x, m1), (x, y), w * scale_t) for (x, y), w in targets.items()]),
                 "prologue 4")
    prologue = [F0, F1, F2, F3, F4]
    for i in range(4):
        step(f"prologue {i + 1}", ("horizontal", "vertical")[i % 2], prologue[i], prologue[i + 1])

    # catalysed loop
    gamma = params.eta2
    ratio = 1 / gamma
    if abs(ratio - round(ratio)) <= 1e-9 * max(1.0, ratio):
        iterations = max(1, int(round(ratio)))
        last = gamma
    else:
        full = int(math.floor(ratio))
        iterations = full + 1
        last = 1 - full * gamma
    loop = LoopTemplate(gamma, iterations, last, 1 - params.eta1, params.eta3, m2,
                        decomp.s, decomp.e, decomp.h, decomp.v)
    join = l1_norm(F4 - loop.frame(0))
    if join > 1e-9:
        raise ExpansionError("prologue", f"last prologue frame misses the loop start by {join:.3e}")
    if materialize == "all":
        if iterations > cap:
            raise ExpansionError("loop", f"{iterations} iterations exceed the cap {cap}")
        ks = list(range(iterations))
    elif materialize == "sampled":
        ks = _parse_sample(sample, iterations)
    else:
        raise ValueError("materialize must be 'all' or 'sampled'")
    for k in ks:
        a, b = loop.frame(k), loop.middle(k)
        c = loop.frame(k + 1)
        step("loop h", "horizontal", a, b, k)
        step("loop v", "vertical", b, c, k)

    # epilogue: raise leftovers to (m2, m2), then merge onto the final point
    Fe = loop.frame(iterations)
    rest = Configuration.of(
        (decomp.e_error * decomp.eps2 + decomp.h_minus * gamma) * loop.scale, tol=1e-15)
    E1 = _config(_move_points(Fe, [((x, y), (m2, y), w) for (x, y), w in rest.items()]), "epilogue 1")
    ys: dict[float, float] = {}
    for (x, y), w in rest.items():
        ys[y] = ys.get(y, 0.0) + w
    E2 = _config(_move_points(E1, [((m2, y), (m2, m2), w) for y, w in ys.items()]), "epilogue 2")
    delta = params.delta
    err = final_error(delta, m2, alpha, beta)
    low_w = E2.get((beta, alpha), 0.0)
    high_w = E2.get((m2, m2), 0.0)
    d_prime = high_w * (m2 - alpha - err) / err
    M1 = _config(_move_points(E2, [((beta, alpha), (m2, alpha), d_prime)]), "merge 1")
    y_top = (d_prime * alpha + high_w * m2) / (d_prime + high_w)
    M2 = _config(_move_points(M1, [((m2, alpha), (m2, y_top), d_prime), ((m2, m2), (m2, y_top), high_w),
                                   ((beta, alpha), (beta, y_top), low_w - d_prime)]), "merge 2")
    upper = d_prime + high_w
    x_fin = ((low_w - d_prime) * beta + upper * m2) / (low_w + high_w)
    M3 = _config(_move_points(M2, [((beta, y_top), (x_fin, y_top), low_w - d_prime),
                                   ((m2, y_top), (x_fin, y_top), upper)]), "merge 3")
    epilogue = [Fe, E1, E2, M1, M2, M3]
    axes = ("horizontal", "vertical", "horizontal", "vertical", "horizontal")
    labels = ("raise x", "raise y", "merge 1", "merge 2", "merge 3")
    for i in range(5):
        step(f"epilogue {labels[i]}", axes[i], epilogue[i], epilogue[i + 1])

    def check(item):
        label, axis, before, after, k = item
        return Transition(label, axis, before, after,
                          check_transition(before, after, axis, "dense", tol=tol), k)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            frames_checked = list(ex.map(check, pending))
    else:
        frames_checked = [check(p) for p in pending]
    for t in frames_checked:
        if not t.is_valid:
            where = t.label if t.k is None else f"{t.label} (iteration {t.k})"
            raise ExpansionError(where, t.report.failure() or "invalid", t.report)

    frames = prologue + [f for t in frames_checked for f in (t.before, t.after)] + epilogue
    mass = max(abs(f.total() - 1.0) for f in frames)
    support = max(len(f) for f in frames)
    bound = len(joint_support(game.h_star, game.v_star))
    return TdpgExpansion(params, err, prologue, loop, epilogue, frames_checked, tuple(ks),
                         (beta + err, alpha + err), bound, support, mass)

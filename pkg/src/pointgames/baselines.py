"""Reference protocols for comparison: Spekkens-Rudolph, Dip-Dip-Boom and ABDR.

Scores use the translated convention (win ``lam + 1``, lose ``lam``, caught
0) where bias is ``reward - lam - 1/2``.  Dip-Dip-Boom is reported in its
original convention (win 1, lose 0, caught ``-lam``), where bias is
``reward - 1/2``; the ``convention`` field says which one applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from scipy import optimize

from .core import Configuration
from .validity import SELF_TOL, check_transition

TRANSLATED = "translated"
ORIGINAL = "win=1/lose=0/caught=-lam"


class BaselineError(ValueError):
    pass


@dataclass(frozen=True)
class BaselineResult:
    name: str
    lam: float
    bias: float
    reward: float
    rounds: float
    qubits: float
    convention: str = TRANSLATED
    aux: dict = field(default_factory=dict, compare=False)


# ---------------------------------------------------------------------------
# Spekkens-Rudolph


def _sr_z2(p: float, w: float, v: float) -> float:
    """Far split point making ``p/z1 + (1/2 - p)/z2 = 1/(2w)`` tight."""
    q = 0.5 - p

    def gap(z2):
        z1 = (v / 2 + q * z2) / (1 - p)
        return p / z1 + q / z2 - 1 / (2 * w)

    lo = 1e-300 if v > 0 else 1e-12
    hi = 2 * w
    while gap(hi) > 0:
        hi *= 2
        if hi > 1e200:
            raise BaselineError("split cannot be made tight")
    lo = max(lo, w * 1e-12)
    while gap(lo) < 0:
        lo /= 2
    return optimize.brentq(gap, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)


def sr_chain(p: float, z2: float, lam: float) -> list[Configuration]:
    """Frames of the four-step game: split, raise, merge, merge."""
    w, v = lam + 1, lam
    q = 0.5 - p
    z1 = (v / 2 + q * z2) / (1 - p)
    y = (1 - p) * w + p * v
    return [
        Configuration({(v, w): 0.5, (w, v): 0.5}),
        Configuration([((v, w), 0.5), ((z1, v), p), ((z2, v), q)]),
        Configuration([((v, w), 0.5), ((z1, v), p), ((z2, w), q)]),
        Configuration([((z1, w), 1 - p), ((z1, v), p)]),
        Configuration({(z1, y): 1.0}),
    ]


def sr_verify(p: float, z2: float, lam: float, tol: float = SELF_TOL) -> list:
    """Validity reports of the four transitions."""
    frames = sr_chain(p, z2, lam)
    axes = ("horizontal", "vertical", "horizontal", "vertical")
    return [check_transition(a, b, ax, "dense", tol=tol) for a, b, ax in zip(frames, frames[1:], axes)]


def sr_solve(lam: float) -> BaselineResult:
    """Optimal cheat-penalised Spekkens-Rudolph game.

    For each split fraction ``p`` the split is made tight, which leaves the
    final point ``(z1, (1-p) w + p v)``; the reward is its larger coordinate,
    minimised over ``p``.
    """
    if lam < 0:
        raise BaselineError("penalty must be nonnegative")
    w, v = lam + 1, lam

    def coords(p):
        z2 = _sr_z2(p, w, v)
        z1 = (v / 2 + (0.5 - p) * z2) / (1 - p)
        return z1, (1 - p) * w + p * v, z2

    def reward(p):
        z1, y, _ = coords(p)
        return max(z1, y)

    grid = [i / 400 * 0.5 for i in range(1, 400)]
    vals = [reward(p) for p in grid]
    i = min(range(len(vals)), key=vals.__getitem__)
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    # the optimum sits where the two coordinates cross
    gap = lambda p: coords(p)[0] - coords(p)[1]  # noqa: E731
    if gap(lo) * gap(hi) < 0:
        p = optimize.brentq(gap, lo, hi, xtol=1e-15, rtol=1e-15)
    else:
        p = optimize.minimize_scalar(reward, bounds=(lo, hi), method="bounded",
                                     options={"xatol": 1e-13}).x
    z1, y, z2 = coords(p)
    best = max(z1, y)
    reports = sr_verify(p, z2, lam)
    if not all(r.is_valid for r in reports):
        bad = next(r for r in reports if not r.is_valid)
        raise BaselineError(f"optimal chain fails validity: {bad.failure()}")
    return BaselineResult("SR", lam, best - lam - 0.5, best, 8, 6,
                          aux={"p": p, "z1": z1, "z2": z2, "y": y})


# ---------------------------------------------------------------------------
# Dip-Dip-Boom


def _ddb_gap(z: float, lam: float) -> float:
    """``(H(z) - lam^3/(lam+1)) / (-lam)`` with ``H(z) = lam(lam - 2z) + 2 z^2 log(1 + lam/z)``."""
    return 2 * z - 2 * z * z * math.log1p(lam / z) / lam - lam / (lam + 1)


def ddb_reward(lam: float, dps: int | None = None):
    """Cheating reward of Dip-Dip-Boom: the root of ``H(z) = lam^3 / (lam + 1)``.

    With ``dps`` the root is computed in ``mpmath`` at that many digits and
    returned as an ``mpf``; otherwise Brent's method in double precision.
    """
    if not lam > 0:
        raise BaselineError("Dip-Dip-Boom needs a positive penalty")
    if dps is not None:
        import mpmath

        with mpmath.workdps(dps):
            L = mpmath.mpf(lam)
            f = lambda z: 2 * z - 2 * z * z * mpmath.log1p(L / z) / L - L / (L + 1)  # noqa: E731
            lo, hi = mpmath.mpf("1e-30"), L * L + 1
            if f(lo) * f(hi) > 0:
                raise BaselineError("root not bracketed")
            guess = float(ddb_asymptotic(lam, 2)) if lam > 1 else 0.5
            try:
                root = mpmath.findroot(f, mpmath.mpf(guess), tol=mpmath.mpf(10) ** (-dps + 5))
            except (ValueError, ZeroDivisionError):
                root = mpmath.findroot(f, (lo, hi), solver="anderson")
            return +root
    lo, hi = 1e-300, 2.0 * max(lam, 1.0)
    while _ddb_gap(hi, lam) <= 0 and hi < lam * lam + 1:
        hi *= 2
    if _ddb_gap(lo, lam) * _ddb_gap(hi, lam) > 0:
        raise BaselineError("root not bracketed")
    return optimize.brentq(_ddb_gap, lo, hi, args=(lam,), xtol=1e-300, rtol=1e-15, maxiter=1000)


def ddb_residual(z: float, lam: float) -> float:
    """``H(z) - lam^3 / (lam + 1)``."""
    return lam * (lam - 2 * z) + 2 * z * z * math.log1p(lam / z) - lam**3 / (lam + 1)


def ddb_asymptotic(lam: float, order: int = 2, dps: int | None = None):
    """Large-penalty series of the Dip-Dip-Boom reward to first or second order."""
    if not lam > 1:
        raise BaselineError("the series needs lam > 1")
    if dps is not None:
        import mpmath

        with mpmath.workdps(dps):
            return +_series(mpmath.mpf(lam), order, mpmath.log)
    return float(_series(lam, order, math.log))


def _series(lam, order, log):
    if order == 1:
        return 0.5 + log(lam) / (4 * lam)
    if order == 2:
        t = log(2 * lam)
        return 0.5 + (t / 4 - 0.5) / lam + (t * t / 4 - 5 * t / 8 + 7 / 8) / lam**2
    raise ValueError("order must be 1 or 2")


def ddb_result(lam: float) -> BaselineResult:
    r = ddb_reward(lam)
    return BaselineResult("DDB", lam, r - 0.5, r, math.inf, math.inf, ORIGINAL,
                          aux={"residual": ddb_residual(r, lam)})


# ---------------------------------------------------------------------------
# ABDR


def abdr_reward(lam: float) -> BaselineResult:
    """Three-message protocol with reward ``1/2 + 1/sqrt(lam)``, defined for ``lam >= 4``."""
    if lam < 4:
        raise BaselineError("ABDR needs lam >= 4")
    bias = 1 / math.sqrt(lam)
    return BaselineResult("ABDR", lam, bias, 0.5 + bias, 3, 4)


# ---------------------------------------------------------------------------
# comparison


@dataclass(frozen=True)
class CompareRow:
    protocol: str
    lam: float
    bias: float
    rc: float
    sc: float

    def as_tuple(self):
        return (self.protocol, self.lam, self.bias, self.rc, self.sc)


def compare_table(lambdas: Iterable[float], games: Sequence[tuple[str, object, object]] = ()) -> list[CompareRow]:
    """Baseline rows for each penalty followed by one row per ``(name, game, report)``.

    ABDR is skipped below its domain ``lam >= 4``.  ``report`` is a
    :class:`~pointgames.convert.ConversionReport`.
    """
    rows = []
    for lam in lambdas:
        sr = sr_solve(lam)
        rows.append(CompareRow("SR", lam, sr.bias, sr.rounds, sr.qubits))
        if lam > 0:
            ddb = ddb_result(lam)
            rows.append(CompareRow("DDB", lam, ddb.bias, ddb.rounds, ddb.qubits))
        if lam >= 4:
            ab = abdr_reward(lam)
            rows.append(CompareRow("ABDR", lam, ab.bias, ab.rounds, ab.qubits))
    for name, game, report in games:
        rows.append(CompareRow(name, game.lam, report.protocol_bias, report.rc, report.sc))
    return rows

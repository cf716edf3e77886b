"""Validity of one-dimensional functions, line-wise validity of moves, and transitions.

A function ``f`` on finitely many coordinates is valid when it sums to zero,
its profile ``sum f(x) lam x/(lam+x)`` is nonnegative for every ``lam > 0``
and its first moment ``sum x f(x)`` (the ``lam -> inf`` limit) is
nonnegative.  Checks are numerical: the profile is sampled either on a
user-supplied parameter set ``T`` ("grid") or on a fixed logarithmic sweep
("dense").  Invalid input yields a failing report, never an exception.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import Configuration, Move, transpose
from .profile import kernel_matrix

DENSE_LAMBDAS = np.logspace(-6, 6, 601)

GOLDEN_TOL = 5e-6
SELF_TOL = 1e-10


@dataclass(frozen=True)
class ValidityReport:
    is_valid: bool
    worst_lambda: float
    worst_value: float
    sum_residual: float
    first_moment: float
    tol: float
    line: float | None = None

    def failure(self) -> str | None:
        """Short reason for failure, or None."""
        if self.is_valid:
            return None
        where = "" if self.line is None else f"line {self.line:g}: "
        if abs(self.sum_residual) > self.tol:
            return f"{where}weights sum to {self.sum_residual:.3e}"
        if self.worst_value < -self.tol:
            return f"{where}profile {self.worst_value:.3e} at lambda={self.worst_lambda:.6g}"
        return f"{where}first moment {self.first_moment:.3e}"


def _arrays(f) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(f, Mapping):
        xs = np.fromiter(f.keys(), float, len(f))
        ws = np.fromiter(f.values(), float, len(f))
        return xs, ws
    xs, ws = f
    return np.asarray(xs, float), np.asarray(ws, float)


def sweep_lambdas(mode: str, lambdas: Sequence[float] | None = None) -> np.ndarray:
    if mode == "dense":
        return DENSE_LAMBDAS if lambdas is None else np.asarray(lambdas, float)
    if mode == "grid":
        if lambdas is None:
            raise ValueError("grid mode needs the parameter set T")
        lam = np.asarray(lambdas, float)
        return lam[lam > 0]
    raise ValueError(f"unknown mode {mode!r}")


def check_valid_1d(f, mode: str = "dense", lambdas: Sequence[float] | None = None,
                   tol: float | None = None, line: float | None = None) -> ValidityReport:
    """Check zero sum, nonnegative profile on the sweep, and nonnegative first moment.

    ``f`` is a mapping ``{x: w}`` or a pair of arrays ``(xs, ws)``.  The
    default ``tol`` is ``1e-12 * max(1, ||f||_1)``.
    """
    xs, ws = _arrays(f)
    lam = sweep_lambdas(mode, lambdas)
    if tol is None:
        tol = 1e-12 * max(1.0, float(np.abs(ws).sum()))
    if len(xs) == 0 or len(lam) == 0:
        prof = np.zeros(max(len(lam), 1))
        lam_eff = lam if len(lam) else np.array([np.nan])
    else:
        prof = kernel_matrix(xs, lam) @ ws
        lam_eff = lam
    i = int(np.argmin(prof))
    worst = float(prof[i])
    total = float(ws.sum())
    moment = float(xs @ ws) if len(xs) else 0.0
    ok = worst >= -tol and abs(total) <= tol and moment >= -tol
    return ValidityReport(ok, float(lam_eff[i]), worst, total, moment, float(tol), line)


def is_valid(f, **kw) -> bool:
    return check_valid_1d(f, **kw).is_valid


@dataclass(frozen=True)
class LineValidity:
    """Per-line reports of a bivariate move (rows for horizontal, columns for vertical)."""

    axis: str
    lines: dict[float, ValidityReport] = field(repr=False)

    @property
    def is_valid(self) -> bool:
        return all(r.is_valid for r in self.lines.values())

    @property
    def worst(self) -> ValidityReport | None:
        if not self.lines:
            return None
        return min(self.lines.values(), key=lambda r: (r.is_valid, r.worst_value))

    def failures(self) -> list[ValidityReport]:
        return [r for r in self.lines.values() if not r.is_valid]


def _check_lines(lines: dict[float, dict[float, float]], axis: str, mode, lambdas, tol) -> LineValidity:
    return LineValidity(axis, {c: check_valid_1d(f, mode, lambdas, tol, line=c)
                               for c, f in sorted(lines.items())})


def check_h_valid(m: Move, mode: str = "dense", lambdas=None, tol=None) -> LineValidity:
    """Every row (fixed ``y``) valid."""
    return _check_lines(m.rows(), "horizontal", mode, lambdas, tol)


def check_v_valid(m: Move, mode: str = "dense", lambdas=None, tol=None) -> LineValidity:
    """Every column (fixed ``x``) valid."""
    return _check_lines(m.columns(), "vertical", mode, lambdas, tol)


def check_eta_valid(f, eta: float, lambdas: Sequence[float] | None = None) -> bool:
    """``sum f + eta >= 0`` and ``profile + eta >= 0`` across the sweep."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    xs, ws = _arrays(f)
    lam = DENSE_LAMBDAS if lambdas is None else np.asarray(lambdas, float)
    if ws.sum() + eta < 0:
        return False
    if len(xs) == 0:
        return True
    return bool((kernel_matrix(xs, lam) @ ws + eta >= 0).all())


def check_transition(g: Configuration, h: Configuration, axis: str, mode: str = "dense",
                     lambdas=None, tol=None) -> ValidityReport:
    """Validity of ``g -> h`` along ``axis`` ("horizontal" or "vertical").

    Returns the report of the worst line; ``is_valid`` is the conjunction
    over all lines.  An unchanged frame is trivially valid.
    """
    t = h - g
    if axis == "horizontal":
        lines = check_h_valid(t, mode, lambdas, tol)
    elif axis == "vertical":
        lines = check_v_valid(t, mode, lambdas, tol)
    else:
        raise ValueError(f"unknown axis {axis!r}")
    worst = lines.worst
    if worst is None:
        return ValidityReport(True, float("nan"), 0.0, 0.0, 0.0, 0.0 if tol is None else tol)
    if lines.is_valid != worst.is_valid:
        worst = lines.failures()[0]
    return worst


def check_transpose_duality(m: Move, **kw) -> bool:
    return check_h_valid(m, **kw).is_valid == check_v_valid(transpose(m), **kw).is_valid


def split_feasible(z: float, targets: Sequence[tuple[float, float]], rtol: float = 1e-12) -> bool:
    """Whether mass at ``z`` may split into ``targets = [(x_i, frac_i)]``.

    The condition is ``sum frac_i / x_i <= 1/z``; fractions must be positive
    and sum to one.
    """
    fr = np.array([w for _, w in targets], float)
    xs = np.array([x for x, _ in targets], float)
    if (fr <= 0).any() or abs(fr.sum() - 1) > 1e-12:
        raise ValueError("split fractions must be positive and sum to 1")
    if z == 0:
        return True
    if (xs == 0).any():
        return False
    lhs = float((fr / xs).sum())
    return lhs <= (1.0 / z) * (1 + rtol)


def merge_point(points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Weighted-average coordinate and total weight of ``[(x_i, w_i)]``."""
    w = sum(p[1] for p in points)
    return sum(x * p for x, p in points) / w, w

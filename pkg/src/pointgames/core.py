"""Weighted point sets in the nonnegative quadrant.

A ``Move`` is a finitely supported signed function on pairs ``(x, y)``; a
``Configuration`` is a move whose weights are all nonnegative.  Both are
immutable and canonical: weights whose magnitude falls below the zero
tolerance (relative to the largest weight) are dropped, so support counts are
not inflated by rounding residue.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np

ZERO_TOL = 1e-15

Point = tuple[float, float]


class PointMass(NamedTuple):
    x: float
    y: float
    w: float


class EmptySupportError(ValueError):
    pass


def _canonical(items: Iterable[tuple[Point, float]], zero_tol: float) -> dict[Point, float]:
    acc: dict[Point, float] = {}
    for (x, y), w in items:
        x, y, w = float(x), float(y), float(w)
        if x < 0 or y < 0:
            raise ValueError(f"coordinates must be nonnegative, got ({x}, {y})")
        key = (x, y)
        acc[key] = acc.get(key, 0.0) + w
    if not acc:
        return {}
    scale = max(abs(w) for w in acc.values())
    cut = zero_tol * scale
    return {k: acc[k] for k in sorted(acc) if abs(acc[k]) > cut}


class Move(Mapping[Point, float]):
    """Signed weights on finitely many points ``(x, y)``."""

    __slots__ = ("_w", "_hash")

    def __init__(self, weights: Mapping[Point, float] | Iterable[tuple[Point, float]] = (),
                 *, zero_tol: float = ZERO_TOL):
        items = weights.items() if isinstance(weights, Mapping) else weights
        self._w = _canonical(items, zero_tol)
        self._hash = None
        self._check()

    def _check(self) -> None:
        pass

    @classmethod
    def point(cls, x: float, y: float, w: float = 1.0):
        return cls({(x, y): w})

    @classmethod
    def from_points(cls, points: Iterable[PointMass]):
        return cls(((p.x, p.y), p.w) for p in points)

    @classmethod
    def from_matrix(cls, S, matrix, orientation: str = "row=x"):
        """Build a move from a dense ``|S| x |S|`` array.

        With ``orientation="row=x"`` entry ``[i][j]`` is the weight at
        ``(S[i], S[j])``; with ``"row=y"`` it is the weight at ``(S[j], S[i])``.
        """
        S = [float(s) for s in S]
        M = np.asarray(matrix, dtype=float)
        if M.shape != (len(S), len(S)):
            raise ValueError(f"matrix shape {M.shape} does not match |S|={len(S)}")
        if orientation == "row=y":
            M = M.T
        elif orientation != "row=x":
            raise ValueError(f"unknown orientation {orientation!r}")
        return cls(((S[i], S[j]), M[i, j]) for i in range(len(S)) for j in range(len(S)))

    def to_matrix(self, S, orientation: str = "row=x") -> np.ndarray:
        index = {float(s): i for i, s in enumerate(S)}
        M = np.zeros((len(S), len(S)))
        for (x, y), w in self._w.items():
            try:
                M[index[x], index[y]] = w
            except KeyError:
                raise ValueError(f"point ({x}, {y}) is not on the grid") from None
        return M.T if orientation == "row=y" else M

    # Mapping protocol
    def __getitem__(self, key: Point) -> float:
        return self._w[key]

    def get(self, key, default=0.0):
        return self._w.get(key, default)

    def __iter__(self) -> Iterator[Point]:
        return iter(self._w)

    def __len__(self) -> int:
        return len(self._w)

    def __eq__(self, other) -> bool:
        if isinstance(other, Move):
            return self._w == other._w
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._w.items()))
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join(f"{w:g}[{x:g},{y:g}]" for (x, y), w in self._w.items())
        return f"{type(self).__name__}({body})"

    def points(self) -> list[PointMass]:
        return [PointMass(x, y, w) for (x, y), w in self._w.items()]

    def total(self) -> float:
        return float(sum(self._w.values()))

    def xs(self) -> list[float]:
        return sorted({x for x, _ in self._w})

    def ys(self) -> list[float]:
        return sorted({y for _, y in self._w})

    def rows(self) -> dict[float, dict[float, float]]:
        """Horizontal lines: ``{y: {x: w}}``."""
        out: dict[float, dict[float, float]] = {}
        for (x, y), w in self._w.items():
            out.setdefault(y, {})[x] = w
        return out

    def columns(self) -> dict[float, dict[float, float]]:
        """Vertical lines: ``{x: {y: w}}``."""
        out: dict[float, dict[float, float]] = {}
        for (x, y), w in self._w.items():
            out.setdefault(x, {})[y] = w
        return out

    # Arithmetic always yields a plain Move; use Configuration.of to re-check signs.
    def __add__(self, other: "Move") -> "Move":
        if not isinstance(other, Move):
            return NotImplemented
        return Move(list(self._w.items()) + list(other._w.items()))

    def __sub__(self, other: "Move") -> "Move":
        if not isinstance(other, Move):
            return NotImplemented
        return Move(list(self._w.items()) + [(k, -w) for k, w in other._w.items()])

    def __neg__(self) -> "Move":
        return Move({k: -w for k, w in self._w.items()})

    def __mul__(self, c: float) -> "Move":
        c = float(c)
        return Move({k: c * w for k, w in self._w.items()})

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> "Move":
        return self * (1.0 / float(c))


class Configuration(Move):
    """A move with nonnegative weights (a frame of a point game)."""

    __slots__ = ()

    def _check(self) -> None:
        for key, w in self._w.items():
            if w < 0:
                raise ValueError(f"negative weight {w!r} at {key} in a configuration")

    @classmethod
    def of(cls, m: Move, tol: float = 0.0) -> "Configuration":
        """Reinterpret ``m`` as a configuration, clipping negatives no larger than ``tol``."""
        items = []
        for key, w in m.items():
            if w < 0:
                if w < -tol:
                    raise ValueError(f"negative weight {w!r} at {key} in a configuration")
                continue
            items.append((key, w))
        return cls(items)

    def __add__(self, other):
        out = Move.__add__(self, other)
        if isinstance(other, Configuration) and out is not NotImplemented:
            return Configuration(out)
        return out

    def __mul__(self, c):
        out = Move.__mul__(self, c)
        return Configuration(out) if c >= 0 else out

    __rmul__ = __mul__


def l1_norm(m: Move) -> float:
    return float(sum(abs(w) for w in m.values()))


def transpose(m: Move) -> Move:
    cls = Configuration if isinstance(m, Configuration) else Move
    return cls({(y, x): w for (x, y), w in m.items()})


def symmetrize(m: Move) -> Move:
    """``m + transpose(m)``."""
    return m + transpose(m)


def split_signs(m: Move) -> tuple[Configuration, Configuration]:
    pos = Configuration({k: w for k, w in m.items() if w > 0})
    neg = Configuration({k: -w for k, w in m.items() if w < 0})
    return pos, neg


def min_coordinate(m: Move) -> float:
    """Smallest value of ``max(x, y)`` over the support."""
    if not len(m):
        raise EmptySupportError("min_coordinate of an empty move")
    return min(max(x, y) for x, y in m)


def max_coordinate(m: Move) -> float:
    """Largest coordinate (either axis) appearing in the support."""
    if not len(m):
        raise EmptySupportError("max_coordinate of an empty move")
    return max(max(x, y) for x, y in m)


def support_count(m: Move) -> int:
    return len(m)


def joint_support(*moves: Move) -> set[Point]:
    out: set[Point] = set()
    for m in moves:
        out.update(m.keys())
    return out


@dataclass(frozen=True)
class Boundary:
    """Ideal start and end configurations of a symmetric cheat-penalised game.

    ``final`` pins the end coordinate to an exact grid key; when omitted it is
    ``lam + 0.5 + epsilon``.  Supplying ``final`` recomputes ``epsilon``.
    """

    lam: float
    epsilon: float = 0.0
    final: float | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("penalty must be nonnegative")
        if self.final is None:
            if self.epsilon < 0:
                raise ValueError("final-point offset must be nonnegative")
            object.__setattr__(self, "final", self.lam + 0.5 + self.epsilon)
        else:
            eps = float(self.final) - self.lam - 0.5
            if eps < -1e-12:
                raise ValueError("final coordinate lies below lam + 1/2")
            object.__setattr__(self, "final", float(self.final))
            object.__setattr__(self, "epsilon", max(eps, 0.0))

    @property
    def final_point(self) -> Point:
        return (self.final, self.final)

    @property
    def start(self) -> Configuration:
        L = self.lam
        return Configuration({(L, L + 1): 0.5, (L + 1, L): 0.5})

    @property
    def end(self) -> Configuration:
        return Configuration({self.final_point: 1.0})

    def target(self) -> Move:
        """``end - start``, the right-hand side of the point-game equation."""
        return self.end - self.start

    def coordinates(self) -> list[float]:
        return sorted({self.lam, self.lam + 1, self.final})

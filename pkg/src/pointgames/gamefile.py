"""GameFile: canonical JSON storage for point games and search configurations.

Layout::

    {
      "schema_version": 1,
      "lambda": 1.0,
      "S": [...], "T": [...],
      "truncation": 6,            # or "delta": 1e-12
      "orientation": "row=x",     # entry [i][j] is v*(S[i], S[j]); "row=y" swaps
      "final": 1.505,             # optional, end coordinate (inferred if absent)
      "v_star": [[...], ...],
      "h_star": [[...], ...],     # optional, defaults to the transpose of v_star
      "provenance": {...}         # optional
    }

Serialization is canonical (sorted keys, shortest round-trip floats, one
trailing newline) and writes are atomic.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

import numpy as np

from .core import Boundary, Move, transpose
from .profile import GridSpec
from .qp import QpSettings
from .search import PenTipg, SearchConfig

SCHEMA_VERSION = 1
GOLDEN = ("penTIPG1", "penTIPG2", "penTIPG3")
BUILTIN = GOLDEN + ("toy",)


class GameFileError(ValueError):
    """Malformed game file content."""


@dataclass(frozen=True)
class GameFile:
    lam: float
    S: tuple[float, ...]
    T: tuple[float, ...]
    v_star: tuple[tuple[float, ...], ...]
    orientation: str = "row=x"
    truncation: int | None = None
    delta: float | None = None
    final: float | None = None
    h_star: tuple[tuple[float, ...], ...] | None = None
    provenance: dict[str, Any] = field(default_factory=dict, compare=False)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        n = len(self.S)
        if any(b <= a for a, b in zip(self.S, self.S[1:])):
            raise GameFileError("S must be strictly increasing")
        for name in ("v_star", "h_star"):
            M = getattr(self, name)
            if M is None:
                continue
            if len(M) != n or any(len(r) != n for r in M):
                raise GameFileError(f"{name} must be a {n}x{n} matrix")
        if self.orientation not in ("row=x", "row=y"):
            raise GameFileError(f"orientation must be 'row=x' or 'row=y', got {self.orientation!r}")
        if self.truncation is None and self.delta is None:
            raise GameFileError("need 'truncation' or 'delta'")

    # conversions
    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.S, self.T, self.lam, delta=self.delta or 1e-12, truncation=self.truncation)

    def v_move(self) -> Move:
        return Move.from_matrix(self.S, self.v_star, self.orientation)

    def h_move(self) -> Move:
        if self.h_star is None:
            return transpose(self.v_move())
        return Move.from_matrix(self.S, self.h_star, self.orientation)

    def final_coordinate(self) -> float:
        if self.final is not None:
            return float(self.final)
        if not any(any(r) for r in self.v_star):
            return self.lam + 0.5
        total = self.h_move() + self.v_move()
        diag = [(total.get((s, s), 0.0), s) for s in self.S]
        return max(diag)[1]

    @property
    def boundary(self) -> Boundary:
        return Boundary(self.lam, final=self.final_coordinate())

    @property
    def is_golden(self) -> bool:
        return self.provenance.get("source") == "golden"

    def game(self) -> PenTipg:
        return PenTipg.from_moves(self.h_move(), self.v_move(), self.boundary, provenance=self.provenance)

    @classmethod
    def from_game(cls, game: PenTipg, grid: GridSpec, provenance: dict | None = None) -> "GameFile":
        S = grid.S
        v = game.v_star.to_matrix(S)
        h = game.h_star.to_matrix(S)
        h_field = None if np.array_equal(h, v.T) else _rows(h)
        return cls(lam=game.lam, S=S, T=grid.T, v_star=_rows(v), truncation=grid.truncation,
                   delta=None if grid.truncation is not None else grid.delta,
                   final=game.final_point[0], h_star=h_field, provenance=dict(provenance or {}))

    # serialization
    def to_dict(self) -> dict:
        d = {
            "schema_version": self.schema_version,
            "lambda": self.lam,
            "S": list(self.S),
            "T": list(self.T),
            "orientation": self.orientation,
            "v_star": [list(r) for r in self.v_star],
        }
        if self.truncation is not None:
            d["truncation"] = self.truncation
        if self.delta is not None:
            d["delta"] = self.delta
        if self.final is not None:
            d["final"] = self.final
        if self.h_star is not None:
            d["h_star"] = [list(r) for r in self.h_star]
        if self.provenance:
            d["provenance"] = self.provenance
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GameFile":
        if not isinstance(d, dict):
            raise GameFileError("top level must be an object")
        version = d.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise GameFileError(f"unsupported schema_version {version!r}")
        known = {"schema_version", "lambda", "S", "T", "orientation", "v_star", "truncation",
                 "delta", "final", "h_star", "provenance"}
        unknown = sorted(set(d) - known)
        if unknown:
            raise GameFileError(f"unknown field(s): {', '.join(unknown)}")
        for key in ("lambda", "S", "T", "v_star"):
            if key not in d:
                raise GameFileError(f"missing field {key!r}")
        try:
            return cls(
                lam=_num(d["lambda"], "lambda"),
                S=tuple(_num(x, "S") for x in d["S"]),
                T=tuple(_num(x, "T") for x in d["T"]),
                v_star=_matrix(d["v_star"], "v_star"),
                orientation=d.get("orientation", "row=x"),
                truncation=None if d.get("truncation") is None else int(d["truncation"]),
                delta=None if d.get("delta") is None else _num(d["delta"], "delta"),
                final=None if d.get("final") is None else _num(d["final"], "final"),
                h_star=None if d.get("h_star") is None else _matrix(d["h_star"], "h_star"),
                provenance=dict(d.get("provenance") or {}),
                schema_version=version,
            )
        except TypeError as exc:
            raise GameFileError(str(exc)) from exc


def _num(x, name) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise GameFileError(f"field {name!r}: expected a number, got {x!r}")
    return float(x)


def _matrix(rows, name):
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise GameFileError(f"field {name!r}: expected a list of rows")
    return tuple(tuple(_num(x, name) for x in r) for r in rows)


def _rows(M) -> tuple[tuple[float, ...], ...]:
    return tuple(tuple(float(x) + 0.0 for x in r) for r in np.asarray(M))


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, shortest round-trip floats, trailing newline."""
    if isinstance(obj, GameFile):
        obj = obj.to_dict()
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n"


def atomic_write(path: str | os.PathLike, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save(gf: GameFile, path) -> None:
    atomic_write(path, dumps(gf))


def loads(text: str) -> GameFile:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameFileError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return GameFile.from_dict(d)


def load(path) -> GameFile:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def golden(name: str) -> GameFile:
    """One of the shipped reference games: ``penTIPG1``, ``penTIPG2`` or ``penTIPG3``."""
    if name not in GOLDEN:
        raise KeyError(f"unknown golden game {name!r}; choose from {GOLDEN}")
    text = resources.files("pointgames.data").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return loads(text)


def golden_path(name: str) -> str:
    return str(resources.files("pointgames.data").joinpath(f"{name}.json"))


def toy_game(t: float = 0.0) -> GameFile:
    """Exact symmetric game with penalty 1 on the grid ``{1, 2, 3}``, final point ``(2, 2)``.

    Row ``y = 2`` of ``h`` merges ``(1, 2)`` and ``(3, 2)`` into ``(2, 2)``;
    rows ``y = 1`` and ``y = 3`` are raises.  Valid for ``-1/4 < t <= 0``.
    """
    if not -0.25 < t <= 0:
        raise ValueError("t must lie in (-1/4, 0]")
    r = 0.25 + t
    S = (1.0, 2.0, 3.0)
    h = Move({(2.0, 1.0): -r, (3.0, 1.0): r,
              (1.0, 2.0): t - 0.25, (2.0, 2.0): 0.5, (3.0, 2.0): -r,
              (1.0, 3.0): -r, (2.0, 3.0): r})
    v = transpose(h)
    return GameFile(lam=1.0, S=S, T=(0.5, 1.0, 2.0, 4.0), v_star=_rows(v.to_matrix(S)), truncation=2,
                    final=2.0, provenance={"source": "toy", "t": t})


def builtin(name: str) -> GameFile:
    """Shipped games: the three reference games and ``toy``."""
    if name == "toy":
        return toy_game()
    return golden(name)


def load_game(spec: str) -> GameFile:
    """A path, or ``builtin:NAME`` for a shipped game."""
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        try:
            return builtin(name)
        except KeyError as exc:
            raise GameFileError(f"unknown builtin game {name!r}; choose from {BUILTIN}") from exc
    return load(spec)


# search configurations

SEARCH_FIELDS = {"lambda", "S", "T", "truncation", "delta", "final", "ridge", "weight_bound",
                 "dense_refine", "refine_rounds", "qp_method"}


def search_config_from_dict(d: dict) -> SearchConfig:
    """Build a :class:`SearchConfig` from a JSON object.

    Required: ``lambda``, ``S``, ``T``, ``final`` and one of ``truncation`` /
    ``delta``.  Optional: ``ridge``, ``weight_bound``, ``dense_refine``,
    ``refine_rounds``, ``qp_method``.
    """
    if not isinstance(d, dict):
        raise GameFileError("top level must be an object")
    unknown = sorted(set(d) - SEARCH_FIELDS)
    if unknown:
        raise GameFileError(f"unknown field(s): {', '.join(unknown)}")
    for key in ("lambda", "S", "T", "final"):
        if key not in d:
            raise GameFileError(f"missing field {key!r}")
    if d.get("truncation") is None and d.get("delta") is None:
        raise GameFileError("need 'truncation' or 'delta'")
    for key in ("S", "T"):
        if not isinstance(d[key], list):
            raise GameFileError(f"field {key!r}: expected a list")
    lam = _num(d["lambda"], "lambda")
    extra = {}
    if d.get("ridge") is not None:
        extra["ridge"] = _num(d["ridge"], "ridge")
    if d.get("weight_bound") is not None:
        extra["weight_bound"] = _num(d["weight_bound"], "weight_bound")
    if "dense_refine" in d:
        if not isinstance(d["dense_refine"], bool):
            raise GameFileError("field 'dense_refine': expected true or false")
        extra["dense_refine"] = d["dense_refine"]
    if d.get("refine_rounds") is not None:
        extra["refine_rounds"] = int(_num(d["refine_rounds"], "refine_rounds"))
    try:
        grid = GridSpec(tuple(_num(x, "S") for x in d["S"]), tuple(_num(x, "T") for x in d["T"]), lam,
                        delta=1e-12 if d.get("delta") is None else _num(d["delta"], "delta"),
                        truncation=None if d.get("truncation") is None else int(d["truncation"]))
        qp = QpSettings(method=d.get("qp_method", "active-set"))
        return SearchConfig(grid, Boundary(lam, final=_num(d["final"], "final")), qp=qp, **extra)
    except ValueError as exc:
        raise GameFileError(str(exc)) from exc


def search_config_for(gf: GameFile, **options) -> SearchConfig:
    """Search configuration on the grid of an existing game."""
    return SearchConfig(gf.grid, gf.boundary, **options)


def load_search_config(spec: str) -> SearchConfig:
    """A JSON config path, or ``builtin:NAME`` to reuse a shipped game's grid."""
    if spec.startswith("builtin:"):
        return search_config_for(load_game(spec))
    with open(spec, encoding="utf-8") as fh:
        text = fh.read()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameFileError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return search_config_from_dict(d)

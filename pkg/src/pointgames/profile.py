"""Profile functions and the finite linear maps used by the search.

The kernel is ``P_x(lam) = lam*x/(lam+x)`` for ``lam > 0``.  Every
``P_x`` equals 1 at nonpositive ``lam`` (``P_0`` only for ``lam < 0``), so
a profile evaluated at ``lam = -1`` returns the total weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import Boundary, Move


def kernel(x: float, lam: float) -> float:
    if x < 0:
        raise ValueError("kernel is defined for x >= 0")
    if x == 0:
        return 0.0 if lam >= 0 else 1.0
    if lam <= 0:
        return 1.0
    return lam * x / (lam + x)


def kernel_matrix(xs, lams) -> np.ndarray:
    """``K[t, i] = kernel(xs[i], lams[t])`` for arrays of coordinates and parameters."""
    x = np.asarray(xs, dtype=float)[None, :]
    t = np.asarray(lams, dtype=float)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        K = np.where(t > 0, t * x / (t + x), 1.0)
    K = np.where((x == 0) & (t >= 0), 0.0, K)
    return K


def profile_1d(f: Mapping[float, float], lam: float) -> float:
    return float(sum(w * kernel(x, lam) for x, w in f.items()))


def profile_2d(m: Move, a: float, b: float) -> float:
    return float(sum(w * kernel(x, a) * kernel(y, b) for (x, y), w in m.items()))


def diff_operator(S: Sequence[float] | int) -> np.ndarray:
    """Matrix of ``D``: functions on ``S`` minus its last point to zero-sum functions on ``S``.

    ``D f (s_1) = f(s_1)``, ``D f (s_j) = f(s_j) - f(s_{j-1})``,
    ``D f (s_l) = -f(s_{l-1})``.
    """
    n = S if isinstance(S, int) else len(S)
    if n < 2:
        raise ValueError("D needs at least two coordinates")
    D = np.zeros((n, n - 1))
    idx = np.arange(n - 1)
    D[idx, idx] = 1.0
    D[idx + 1, idx] = -1.0
    return D


def profile_matrix(S: Sequence[float], T: Sequence[float]) -> np.ndarray:
    """``H[t, x] = kernel(x, t)``; maps functions on ``S`` to profiles on ``T``."""
    return kernel_matrix(S, T)


@dataclass(frozen=True)
class GridSpec:
    """Search discretisation: coordinates ``S``, profile parameters ``T``, SVD truncation."""

    S: tuple[float, ...]
    T: tuple[float, ...]
    lam: float
    delta: float = 1e-12
    truncation: int | None = None

    def __post_init__(self):
        S = tuple(float(s) for s in self.S)
        T = tuple(float(t) for t in self.T)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "T", T)
        if any(s < 0 for s in S):
            raise ValueError("grid coordinates must be nonnegative")
        if any(b <= a for a, b in zip(S, S[1:])):
            raise ValueError("S must be strictly increasing (no duplicates)")
        if len(set(T)) != len(T):
            raise ValueError("T contains duplicates")
        if not self.delta > 0:
            raise ValueError("SVD threshold delta must be positive")
        if self.truncation is not None and not 0 <= self.truncation <= max(len(S) - 1, 0):
            raise ValueError(f"truncation must lie in [0, {len(S) - 1}]")

    def check_boundary(self, boundary: Boundary) -> None:
        grid = set(self.S)
        missing = [c for c in boundary.coordinates() if c not in grid]
        if missing:
            raise ValueError(f"boundary coordinates {missing} are not in S")

    @property
    def H(self) -> np.ndarray:
        return profile_matrix(self.S, self.T)


@dataclass(frozen=True)
class PrimedSvd:
    singular_values: np.ndarray
    right_vectors: np.ndarray  # columns are right singular vectors, domain R^(|S|-1)
    rank: int
    D: np.ndarray = field(repr=False)

    @property
    def V(self) -> np.ndarray:
        """Basis (columns) of the retained subspace."""
        return self.right_vectors[:, : self.rank]

    @property
    def row_basis(self) -> np.ndarray:
        """``D V``: zero-sum functions on ``S`` spanning the admissible rows."""
        return self.D @ self.V


def svd_primed(S: Sequence[float], T: Sequence[float], delta: float | None = None,
               truncation: int | None = None) -> PrimedSvd:
    """SVD of ``H' = H D`` and the retained rank.

    The rank is ``truncation`` when given, otherwise the number of singular
    values ``>= delta`` (ties included).
    """
    D = diff_operator(S)
    Hp = profile_matrix(S, T) @ D
    _, c, Vt = np.linalg.svd(Hp, full_matrices=True)
    n = D.shape[1]
    sv = np.zeros(n)
    sv[: len(c)] = c
    if truncation is not None:
        k = int(truncation)
        if not 0 <= k <= n:
            raise ValueError(f"truncation {k} outside [0, {n}]")
    else:
        if delta is None or not delta > 0:
            raise ValueError("need a positive delta or an explicit truncation")
        k = int(np.count_nonzero(sv >= delta))
    return PrimedSvd(singular_values=sv, right_vectors=Vt.T, rank=k, D=D)

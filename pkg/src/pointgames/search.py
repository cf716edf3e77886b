"""Four-step search for approximate cheat-penalised point games.

1. Truncated SVD of ``H' = H D`` picks a subspace ``D(V)`` for the rows of h.
2. ``profile_match`` fits ``h`` (rows in ``D(V)``, each row valid on ``T``)
   so that the profile of ``h + h^T`` matches that of ``e - s`` on ``T x T``.
3. ``residual_decompose`` splits the leftover ``t = (e - s) - (h + v)`` into
   ``p + q`` with ``q = p^T`` along the right singular vectors of ``H``; the
   sums ``h' = h + p`` and ``v' = v + q`` reproduce ``e - s`` exactly.
4. ``project_valid`` replaces ``v'`` by the nearest move whose columns are
   valid; ``h*`` is its transpose.

Matrices use the layout ``X[i, j] = X(S[i], S[j])``.  Rows of ``h`` are
therefore the columns of this array and columns of ``v`` are its rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import Boundary, Move, joint_support, l1_norm, transpose
from .profile import GridSpec, kernel_matrix, svd_primed
from .qp import QpError, QpSettings, qp_solve
from .validity import DENSE_LAMBDAS, SELF_TOL, check_h_valid, check_v_valid


class SearchError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class SearchConfig:
    grid: GridSpec
    boundary: Boundary
    qp: QpSettings = field(default_factory=QpSettings)
    weight_bound: float | None = None
    dense_refine: bool = True
    refine_rounds: int = 20
    ridge: float = 1e-3

    def __post_init__(self):
        if self.grid.lam != self.boundary.lam:
            raise ValueError("grid and boundary disagree on the penalty")
        self.grid.check_boundary(self.boundary)
        if self.weight_bound is not None and not self.weight_bound > 0:
            raise ValueError("weight bound must be positive")

    def target_matrix(self) -> np.ndarray:
        return self.boundary.target().to_matrix(self.grid.S)


@dataclass(frozen=True)
class PenTipg:
    h_star: Move
    v_star: Move
    lam: float
    eps_approx: float
    final_point: tuple[float, float]
    norm: float
    point_count: int
    provenance: Any = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def boundary(self) -> Boundary:
        beta, alpha = self.final_point
        if beta != alpha:
            raise ValueError("asymmetric final point")
        return Boundary(self.lam, final=beta)

    @classmethod
    def from_moves(cls, h: Move, v: Move, boundary: Boundary, provenance=None, **diag) -> "PenTipg":
        resid = (h + v) - boundary.target()
        return cls(h_star=h, v_star=v, lam=boundary.lam, eps_approx=l1_norm(resid),
                   final_point=boundary.final_point, norm=max(l1_norm(h), l1_norm(v)),
                   point_count=len(joint_support(h, v)), provenance=provenance, diagnostics=diag)

    @classmethod
    def from_v(cls, v: Move, boundary: Boundary, provenance=None, **diag) -> "PenTipg":
        return cls.from_moves(transpose(v), v, boundary, provenance, **diag)


@dataclass(frozen=True)
class MatchResult:
    h: np.ndarray
    objective: float
    coefficients: np.ndarray
    rank: int


def _match_operator(K: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Matrix of ``a -> vec(K B A K^T + (K B A K^T)^T)``, ``a = vec(A)`` column-major."""
    nT = K.shape[0]
    L = np.kron(K, K @ B)
    perm = np.arange(nT * nT).reshape(nT, nT).T.ravel(order="F")
    return L + L[perm]


def profile_match(cfg: SearchConfig) -> MatchResult:
    """Step 2: least-squares profile matching of ``h + h^T`` against ``e - s``."""
    g = cfg.grid
    S, T = g.S, g.T
    n = len(S)
    svd = svd_primed(S, T, g.delta, g.truncation)
    k = svd.rank
    if k == 0:
        return MatchResult(np.zeros((n, n)), _match_residual(np.zeros((n, n)), cfg), np.zeros((0, n)), 0)
    K = kernel_matrix(S, T)
    B = svd.row_basis
    R = cfg.target_matrix()
    G = K @ R @ K.T
    L = _match_operator(K, B)
    P = 2 * L.T @ L
    P += cfg.ridge * np.trace(P) / len(P) * np.eye(len(P))
    qv = -2 * L.T @ G.ravel(order="F")
    # T-validity of every row of h: K (B a_y) >= 0
    blocks = [np.kron(np.eye(n), K @ B)]
    lo = [np.zeros(n * len(T))]
    hi = [np.full(n * len(T), np.inf)]
    if cfg.weight_bound is not None:
        blocks.append(np.kron(np.eye(n), B))
        lo.append(np.full(n * n, -cfg.weight_bound))
        hi.append(np.full(n * n, cfg.weight_bound))
    try:
        res = qp_solve(qv, np.vstack(blocks), np.concatenate(lo), np.concatenate(hi), P=P, settings=cfg.qp)
    except QpError as exc:
        raise SearchError("profile_match", str(exc)) from exc
    A = res.x.reshape(k, n, order="F")
    H = B @ A
    return MatchResult(H, _match_residual(H, cfg), A, k)


def _match_residual(H: np.ndarray, cfg: SearchConfig, T=None) -> float:
    K = kernel_matrix(cfg.grid.S, cfg.grid.T if T is None else T)
    prof = K @ H @ K.T
    return float(np.linalg.norm(prof + prof.T - K @ cfg.target_matrix() @ K.T))


def match_objective(H: np.ndarray, cfg: SearchConfig, T=None) -> float:
    """``||(h^ + v^) - (e^ - s^)||`` on ``T x T`` for ``h`` given as a matrix."""
    return _match_residual(H, cfg, T)


def residual_decompose(t: np.ndarray, S, T) -> tuple[np.ndarray, np.ndarray]:
    """Step 3: split ``t`` into ``p + q`` along the right singular vectors of ``H``.

    ``p`` takes the terms ``w_j (x) w_k`` with ``j > k`` plus half the diagonal;
    ``q`` the rest.  Rows of ``p`` then have small profiles.
    """
    t = np.asarray(t, float)
    W = np.linalg.svd(kernel_matrix(S, T), full_matrices=True)[2].T
    C = W.T @ t @ W
    half = 0.5 * np.diag(np.diag(C))
    p = W @ (np.tril(C, -1) + half) @ W.T
    q = W @ (np.triu(C, 1) + half) @ W.T
    return p, q


def _column_constraints(n: int, rows: list[np.ndarray]):
    """Stack per-column inequality rows ``r @ X[i, :] >= 0`` into a map on ``X.ravel()``."""
    blocks = []
    for i, r in enumerate(rows):
        if len(r) == 0:
            continue
        blk = np.zeros((len(r), n * n))
        blk[:, i * n:(i + 1) * n] = r
        blocks.append(blk)
    return np.vstack(blocks) if blocks else np.zeros((0, n * n))


def project_valid(v_prime: np.ndarray, grid: GridSpec, settings: QpSettings | None = None,
                  dense_refine: bool = True, rounds: int = 20, tol: float = SELF_TOL * 1e-2):
    """Step 4: nearest matrix (Frobenius) whose columns of ``v`` are valid.

    A column of ``v`` is the line ``x = S[i]``, i.e. row ``i`` of the array.
    Constraints: profile on ``T`` nonnegative, zero sum, nonnegative first
    moment.  With ``dense_refine`` the dense-sweep parameters where a column
    dips below ``-tol`` are added as extra cuts and the projection re-solved.
    Returns ``(v_star, info)``.
    """
    V = np.asarray(v_prime, float)
    n = V.shape[0]
    S = np.asarray(grid.S)
    T = np.asarray(grid.T)
    K = kernel_matrix(S, T[T > 0])
    extra: list[list[float]] = [[] for _ in range(n)]
    eq = np.kron(np.eye(n), np.ones((1, n)))
    info = {"refine_rounds": 0, "cuts": 0}
    X = V
    for rnd in range(rounds + 1):
        rows = []
        for i in range(n):
            r = [K, S[None, :]]
            if extra[i]:
                r.append(kernel_matrix(S, extra[i]))
            rows.append(np.vstack(r))
        A_in = _column_constraints(n, rows)
        A = np.vstack([A_in, eq])
        lo = np.zeros(len(A))
        hi = np.concatenate([np.full(len(A_in), np.inf), np.zeros(n)])
        try:
            res = qp_solve(-V.ravel(), A, lo, hi, settings=settings)
        except QpError as exc:
            raise SearchError("project_valid", str(exc)) from exc
        X = res.x.reshape(n, n)
        info["qp_iterations"] = res.iterations
        info["qp_polished"] = res.polished
        if not dense_refine:
            break
        prof = kernel_matrix(S, DENSE_LAMBDAS) @ X.T  # column i = line x = S[i]
        added = 0
        for i in range(n):
            scale = max(1.0, float(np.abs(X[i]).sum()))
            bad = prof[:, i] < -tol * scale
            if bad.any():
                j = int(np.argmin(prof[:, i]))
                cand = {DENSE_LAMBDAS[j]}
                # also cut at local minima below tolerance
                pi = prof[:, i]
                loc = np.flatnonzero(bad[1:-1] & (pi[1:-1] <= pi[:-2]) & (pi[1:-1] <= pi[2:])) + 1
                cand.update(DENSE_LAMBDAS[loc])
                new = [c for c in sorted(cand) if c not in extra[i]]
                extra[i].extend(new)
                added += len(new)
        if not added:
            break
        info["refine_rounds"] = rnd + 1
        info["cuts"] += added
    return X, info


def run_search(cfg: SearchConfig) -> PenTipg:
    g = cfg.grid
    S = g.S
    R = cfg.target_matrix()
    match = profile_match(cfg)
    H = match.h
    t = R - (H + H.T)
    p, q = residual_decompose(t, S, g.T)
    h1 = H + p
    v1 = H.T + q
    step3 = float(np.abs(h1 + v1 - R).max())
    Vs, info = project_valid(v1, g, cfg.qp, cfg.dense_refine, cfg.refine_rounds)
    v_star = Move.from_matrix(S, Vs)
    h_star = transpose(v_star)
    dense = check_v_valid(v_star, "dense", tol=SELF_TOL)
    grid_ok = check_v_valid(v_star, "grid", g.T, tol=SELF_TOL)
    return PenTipg.from_v(
        v_star, cfg.boundary, provenance=cfg,
        rank=match.rank, step2_objective=match.objective, step3_residual=step3,
        approx_norm=float(np.abs(v1).sum()), t_valid=grid_ok.is_valid,
        dense_valid=dense.is_valid, validity="valid" if dense.is_valid else
        ("T-valid only" if grid_ok.is_valid else "invalid"), **info)

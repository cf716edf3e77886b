"""Small dense convex quadratic programs.

Solves ``min 1/2 x'Px + q'x  s.t.  l <= Ax <= u``.  Two engines:

* ``"active-set"`` (default): the Goldfarb-Idnani dual method from
  ``quadprog``.  Needs ``P`` positive definite; exact up to rounding.
* ``"admm"``: an operator-splitting iteration in the style of OSQP, followed
  by an active-set polish that solves the KKT system of the identified
  active constraints.  Works with semidefinite ``P`` but converges slowly on
  badly conditioned problems.

``P=None`` means the identity.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg


@dataclass(frozen=True)
class QpSettings:
    max_iter: int = 100_000
    eps_abs: float = 1e-12
    eps_rel: float = 1e-12
    rho: float = 0.1
    sigma: float = 1e-6
    alpha: float = 1.6
    check_interval: int = 25
    adaptive_rho: bool = True
    polish: bool = True
    polish_trigger: float = 1e-5
    polish_iter: int = 200
    method: str = "active-set"

    def __post_init__(self):
        if self.eps_abs <= 0 or self.eps_rel < 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.method not in ("active-set", "admm"):
            raise ValueError(f"unknown QP method {self.method!r}")


@dataclass
class QpResult:
    x: np.ndarray
    y: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    polished: bool
    status: str = "solved"
    active: np.ndarray = field(default=None, repr=False)


class QpError(RuntimeError):
    def __init__(self, message: str, last: QpResult | None = None):
        super().__init__(message)
        self.last = last


def _residuals(P, q, A, x, y, l, u):
    Ax = A @ x
    viol = np.maximum(l - Ax, 0) + np.maximum(Ax - u, 0)
    rp = float(np.max(viol, initial=0.0))
    rd = float(np.max(np.abs(P @ x + q + A.T @ y), initial=0.0))
    return rp, rd


def _objective(P, q, x):
    return float(0.5 * x @ P @ x + q @ x)


def _kkt_solve(K, rhs):
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        try:
            sol = linalg.solve(K, rhs, assume_a="sym", check_finite=False)
            sol = sol + linalg.solve(K, rhs - K @ sol, assume_a="sym", check_finite=False)
            ok = np.all(np.isfinite(sol)) and np.linalg.norm(K @ sol - rhs) <= 1e-9 * (1 + np.linalg.norm(rhs))
        except (linalg.LinAlgError, ValueError):
            ok = False
    if not ok:
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    return sol


def _polish(P, q, A, l, u, x, y, settings: QpSettings):
    """Primal-dual active-set iteration started from an approximate solution."""
    n, m = len(q), len(l)
    eq = l == u
    scale_x = max(1.0, float(np.max(np.abs(x), initial=0.0)))
    tol_act = 1e-7 * scale_x
    Ax = A @ x
    lo_ok, hi_ok = np.isfinite(l), np.isfinite(u)
    lower = lo_ok & (eq | (y < 0) | ((Ax - l) < tol_act))
    upper = hi_ok & ~eq & ((y > 0) | ((u - Ax) < tol_act)) & ~lower
    best = None
    for _ in range(settings.polish_iter):
        act = np.flatnonzero(lower | upper)
        Aw = A[act]
        bw = np.where(lower[act], l[act], u[act])
        K = np.block([[P, Aw.T], [Aw, np.zeros((len(act), len(act)))]])
        rhs = np.concatenate([-q, bw])
        sol = _kkt_solve(K, rhs)
        xs = sol[:n]
        yw = sol[n:]
        ys = np.zeros(m)
        ys[act] = yw
        Axs = A @ xs
        tol = settings.eps_abs * 10 + settings.eps_rel * max(1.0, float(np.max(np.abs(Axs), initial=0)))
        viol_lo = (l - Axs) > tol
        viol_hi = (Axs - u) > tol
        bad_lo = lower & ~eq & (ys > tol)
        bad_hi = upper & (ys < -tol)
        rp, rd = _residuals(P, q, A, xs, ys, l, u)
        cand = (rp + rd, xs, ys)
        if best is None or cand[0] < best[0]:
            best = cand
        if not (viol_lo.any() or viol_hi.any() or bad_lo.any() or bad_hi.any()):
            return xs, ys, True
        # drop wrong-sign multipliers, add violated constraints
        lower &= ~bad_lo
        upper &= ~bad_hi
        lower |= viol_lo
        upper |= viol_hi & ~lower
    return best[1], best[2], False


def _active_set(P, q, A, l, u):
    """Goldfarb-Idnani dual active-set solve (requires P positive definite)."""
    import quadprog

    eq = l == u
    lo = ~eq & np.isfinite(l)
    hi = ~eq & np.isfinite(u)
    C = np.vstack([A[eq], A[lo], -A[hi]])
    b = np.concatenate([l[eq], l[lo], -u[hi]])
    # unit rows keep the dual steps well scaled
    norms = np.linalg.norm(C, axis=1)
    norms[norms == 0] = 1.0
    C = C / norms[:, None]
    b = b / norms
    x, _, _, _, lag, _ = quadprog.solve_qp(np.ascontiguousarray(P), -q, np.ascontiguousarray(C.T), b,
                                           int(eq.sum()))
    lag = lag / norms
    y = np.zeros(len(l))
    ne, nl = int(eq.sum()), int(lo.sum())
    y[eq] = -lag[:ne]
    y[lo] = -lag[ne:ne + nl]
    y[hi] = lag[ne + nl:]
    return x, y


def qp_solve(q, A=None, l=None, u=None, P=None, settings: QpSettings | None = None,
             x0=None, y0=None) -> QpResult:
    """Minimise ``1/2 x'Px + q'x`` subject to ``l <= Ax <= u``.

    Raises :class:`QpError` carrying the last iterate if the tolerances are
    not met within ``settings.max_iter`` iterations.
    """
    s = settings or QpSettings()
    q = np.asarray(q, float)
    n = len(q)
    P = np.eye(n) if P is None else np.asarray(P, float)
    if A is None:
        A = np.zeros((0, n))
        l = np.zeros(0)
        u = np.zeros(0)
    A = np.asarray(A, float).reshape(-1, n)
    m = A.shape[0]
    l = np.full(m, -np.inf) if l is None else np.asarray(l, float)
    u = np.full(m, np.inf) if u is None else np.asarray(u, float)
    if np.any(l > u):
        raise ValueError("infeasible bounds: l > u")

    if m == 0:
        x = np.linalg.lstsq(P, -q, rcond=None)[0]
        rp, rd = _residuals(P, q, A, x, np.zeros(0), l, u)
        return QpResult(x, np.zeros(0), _objective(P, q, x), rp, rd, 0, False)

    if s.method == "active-set":
        try:
            x, y = _active_set(P, q, A, l, u)
        except ValueError as exc:
            raise QpError(f"active-set QP failed: {exc}") from exc
        rp, rd = _residuals(P, q, A, x, y, l, u)
        return QpResult(x, y, _objective(P, q, x), rp, rd, 0, True, active=np.flatnonzero(y))

    eq = l == u
    rho = np.where(eq, 1e3 * s.rho, s.rho)
    x = np.zeros(n) if x0 is None else np.asarray(x0, float).copy()
    z = np.clip(A @ x, l, u)
    y = np.zeros(m) if y0 is None else np.asarray(y0, float).copy()

    def factor(rho):
        M = P + s.sigma * np.eye(n) + A.T @ (rho[:, None] * A)
        return linalg.cho_factor(M)

    F = factor(rho)
    last_polish = np.inf
    it = 0
    rp = rd = np.inf
    for it in range(1, s.max_iter + 1):
        rhs = s.sigma * x - q + A.T @ (rho * z - y)
        xt = linalg.cho_solve(F, rhs)
        zt = A @ xt
        x = s.alpha * xt + (1 - s.alpha) * x
        zr = s.alpha * zt + (1 - s.alpha) * z
        znew = np.clip(zr + y / rho, l, u)
        y = y + rho * (zr - znew)
        z = znew
        if it % s.check_interval:
            continue
        Ax = A @ x
        rp = float(np.max(np.abs(Ax - z)))
        rd = float(np.max(np.abs(P @ x + q + A.T @ y)))
        sp = max(float(np.max(np.abs(Ax))), float(np.max(np.abs(z))))
        sd = max(float(np.max(np.abs(P @ x))), float(np.max(np.abs(A.T @ y))), float(np.max(np.abs(q), initial=0)))
        tol_p = s.eps_abs + s.eps_rel * sp
        tol_d = s.eps_abs + s.eps_rel * sd
        if rp <= tol_p and rd <= tol_d:
            break
        if s.polish and max(rp / max(1, sp), rd / max(1, sd)) < min(s.polish_trigger, last_polish / 100):
            last_polish = max(rp / max(1, sp), rd / max(1, sd))
            xp, yp, ok = _polish(P, q, A, l, u, x, y, s)
            if ok:
                rpp, rdp = _residuals(P, q, A, xp, yp, l, u)
                return QpResult(xp, yp, _objective(P, q, xp), rpp, rdp, it, True,
                                active=np.flatnonzero(yp != 0))
        if s.adaptive_rho and it % (s.check_interval * 4) == 0:
            ratio = np.sqrt((rp / max(sp, 1e-30)) / max(rd / max(sd, 1e-30), 1e-30))
            if ratio > 5 or ratio < 0.2:
                rho = np.clip(rho * ratio, 1e-6, 1e8)
                F = factor(rho)
    else:
        last = QpResult(x, y, _objective(P, q, x), rp, rd, it, False, status="max_iter")
        if s.polish:
            xp, yp, ok = _polish(P, q, A, l, u, x, y, s)
            if ok:
                rpp, rdp = _residuals(P, q, A, xp, yp, l, u)
                return QpResult(xp, yp, _objective(P, q, xp), rpp, rdp, it, True)
        raise QpError(f"QP did not converge in {s.max_iter} iterations "
                      f"(primal {rp:.2e}, dual {rd:.2e})", last)

    if s.polish:
        xp, yp, ok = _polish(P, q, A, l, u, x, y, s)
        if ok:
            rpp, rdp = _residuals(P, q, A, xp, yp, l, u)
            return QpResult(xp, yp, _objective(P, q, xp), rpp, rdp, it, True)
    rp, rd = _residuals(P, q, A, x, y, l, u)
    return QpResult(x, y, _objective(P, q, x), rp, rd, it, False)

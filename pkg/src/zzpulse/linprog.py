"""Small dense linear programming by a primal-dual interior-point method.

Solves  min c.x  subject to  A x <= b  with free variables, which is the
shape of the max-min step subproblem: a few hundred variables against a
few thousand inequality rows.  Mehrotra predictor-corrector steps on the
slack/multiplier pair with dense normal equations; the system matrix
A' diag(y/s) A is symmetric positive definite whenever A has full column
rank, which the step subproblem guarantees by its trust-region box rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla


class LPError(RuntimeError):
    """Interior-point iteration failed to converge or went singular."""


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    multipliers: np.ndarray
    objective: float
    iterations: int
    gap: float


def solve_lp(c, A, b, tol: float = 1e-9, max_iter: int = 100) -> LPResult:
    """Minimize ``c.x`` over ``A x <= b``.

    The feasible region must have nonempty interior and the objective must
    be bounded below on it; both hold for the trust-region step subproblem
    by construction (the zero step is strictly interior).
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError("inconsistent LP dimensions")

    x = np.zeros(n)
    s = np.maximum(b - A @ x, 1.0)
    y = np.ones(m)
    scale = 1.0 + max(np.abs(c).max(initial=0.0), np.abs(b).max(initial=0.0))

    for it in range(1, max_iter + 1):
        r_d = -c - A.T @ y            # dual residual: A'y + c = 0 target
        r_p = b - A @ x - s           # primal residual
        mu = (s @ y) / m

        if (
            np.abs(r_d).max(initial=0.0) < tol * scale
            and np.abs(r_p).max(initial=0.0) < tol * scale
            and mu < tol * scale
        ):
            return LPResult(x=x, multipliers=y, objective=float(c @ x),
                            iterations=it - 1, gap=float(mu))

        d = y / s                     # diag of the normal-equations weight
        M = (A.T * d) @ A
        # predictor (affine) direction
        rc_aff = -s * y
        rhs_x = r_d + A.T @ (d * (r_p - rc_aff / y))
        try:
            L = sla.cho_factor(M, check_finite=False)
        except sla.LinAlgError:
            M = M + 1e-12 * scale * np.eye(n)
            L = sla.cho_factor(M, check_finite=False)
        dx_aff = sla.cho_solve(L, rhs_x, check_finite=False)
        dy_aff = d * (A @ dx_aff - r_p + rc_aff / y)
        ds_aff = (rc_aff - s * dy_aff) / y

        a_p = _max_step(s, ds_aff)
        a_d = _max_step(y, dy_aff)
        mu_aff = ((s + a_p * ds_aff) @ (y + a_d * dy_aff)) / m
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0

        # corrector
        rc = sigma * mu - s * y - ds_aff * dy_aff
        rhs_x = r_d + A.T @ (d * (r_p - rc / y))
        dx = sla.cho_solve(L, rhs_x, check_finite=False)
        dy = d * (A @ dx - r_p + rc / y)
        ds = (rc - s * dy) / y

        a_p = min(1.0, 0.995 * _max_step(s, ds))
        a_d = min(1.0, 0.995 * _max_step(y, dy))
        x = x + a_p * dx
        s = s + a_p * ds
        y = y + a_d * dy

    raise LPError(f"interior point did not converge in {max_iter} iterations")


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not neg.any():
        return 1.0
    return float(min(1.0, (-v[neg] / dv[neg]).min()))


def minimax_step(gradients: np.ndarray, lower: np.ndarray,
                 upper: np.ndarray) -> tuple[np.ndarray, float]:
    """Best first-order max-min step within a coordinate box.

    Maximizes t subject to g_i . step >= t for every gradient row and
    lower <= step <= upper (elementwise, with lower <= 0 <= upper so the
    zero step is always feasible).  Returns (step, t).
    """
    G = np.atleast_2d(np.asarray(gradients, dtype=float))
    m, n = G.shape
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if (lower > 0).any() or (upper < 0).any():
        raise ValueError("box must contain the zero step")

    # variables: [step (n), t]; rows: -G.step + t <= 0, step <= upper,
    # -step <= -lower
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A = np.zeros((m + 2 * n, n + 1))
    A[:m, :n] = -G
    A[:m, n] = 1.0
    A[m : m + n, :n] = np.eye(n)
    A[m + n :, :n] = -np.eye(n)
    b = np.concatenate([np.zeros(m), upper, -lower])
    res = solve_lp(c, A, b)
    return res.x[:n], float(res.x[n])

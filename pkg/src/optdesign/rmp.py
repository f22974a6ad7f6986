"""Restricted master solver: log-barrier Newton method on the weight simplex.

Maximizes log det(sum_i u_i x_i x_i') over probability vectors supported on
a given subset of points.  A logarithmic barrier keeps iterates strictly
interior; equality-constrained Newton steps with Armijo backtracking drive
each barrier subproblem, and the barrier weight shrinks geometrically once
the Newton decrement falls below sqrt(mu).  Termination is certified: the
solver stops only when the duality gap of the truncated, renormalized
candidate weights is below ``gap_tol`` on the whole subset, so the reported
solution carries its own optimality certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from optdesign.core import DesignMatrix, DesignWeights, EllipsoidMatrix, chol_spd
from optdesign.errors import NewtonStalled, SubsetRankDeficient
from optdesign import _kernels

__all__ = ["RmpConfig", "RmpSolution", "solve_restricted", "extract_support"]

_ARMIJO_SLOPE = 1e-4
_ARMIJO_FACTOR = 0.5
_WARM_CLAMP = 1e-6


@dataclass
class RmpConfig:
    """Tolerances and caps for the restricted master solver.

    Parameters
    ----------
    gap_tol : float
        Certified duality gap required on the subset before returning.
    max_newton : int
        Total Newton iteration cap across all barrier stages.
    barrier_shrink : float
        Multiplicative decrease of the barrier weight between stages.
    min_weight : float
        Weights at or below this are truncated; the survivors are
        renormalized and define the support.
    """

    gap_tol: float = 1e-9
    max_newton: int = 200
    barrier_shrink: float = 0.2
    min_weight: float = 1e-9

    def __post_init__(self):
        if not 0.0 < self.barrier_shrink < 1.0:
            raise ValueError("barrier_shrink must lie in (0, 1)")
        if self.gap_tol <= 0.0 or self.min_weight <= 0.0:
            raise ValueError("tolerances must be positive")


@dataclass
class RmpSolution:
    """Optimal weights on a subset with the matching ellipsoid and gap."""

    weights: DesignWeights
    ellipsoid: EllipsoidMatrix
    gap: float
    newton_iters: int
    extras: dict = field(default_factory=dict)


def _barrier_value(Xs, u, mu):
    """Barrier objective log det(M(u)) + mu * sum(log u), or -inf."""
    M = (Xs * u) @ Xs.T
    try:
        L = np.linalg.cholesky(0.5 * (M + M.T))
    except np.linalg.LinAlgError:
        return -np.inf
    return 2.0 * float(np.sum(np.log(np.diag(L)))) + mu * float(np.sum(np.log(u)))


def _candidate(X, subset, u, min_weight):
    """Truncate small weights, renormalize, certify over the whole subset.

    Returns (weights, ellipsoid, gap) or None when the kept support is
    rank deficient (possible mid-run only).
    """
    keep = u > min_weight
    if not np.any(keep):
        keep = u > 0.0
    vals = u[keep]
    vals = vals / vals.sum()
    Xk = X.data[:, subset[keep]]
    M = (Xk * vals) @ Xk.T
    try:
        E = EllipsoidMatrix.from_information(0.5 * (M + M.T))
    except Exception:
        return None
    kappa = _kernels.quad_forms(X.columns(subset), E.H)
    n = X.n
    gap = n * math.log(max(float(np.max(kappa)), float(n)) / n)
    weights = DesignWeights(subset[keep], vals, X.m)
    return weights, E, gap


def solve_restricted(
    X: DesignMatrix,
    subset,
    warm_start: DesignWeights | None = None,
    cfg: RmpConfig | None = None,
) -> RmpSolution:
    """Solve the D-optimal weight problem restricted to ``subset``.

    Parameters
    ----------
    X : DesignMatrix
    subset : array-like of int
        Indices of the admissible points; must span R^n.
    warm_start : DesignWeights, optional
        Previous weights; entries for subset points are clamped to at
        least 1e-6 and renormalized, and the initial barrier weight is
        scaled to the warm gap.
    cfg : RmpConfig, optional

    Raises
    ------
    SubsetRankDeficient
        When the subset points do not span R^n.
    NewtonStalled
        When ``max_newton`` iterations pass without certifying
        ``gap_tol``; the exception carries the best candidate found.
    """
    cfg = cfg or RmpConfig()
    subset = np.unique(np.asarray(subset, dtype=np.int64))
    if subset.size == 0:
        raise SubsetRankDeficient("empty subset")
    if subset[0] < 0 or subset[-1] >= X.m:
        raise SubsetRankDeficient("subset index out of range")
    Xs = np.asfortranarray(X.data[:, subset])
    n, k = Xs.shape
    lam = np.linalg.eigvalsh(Xs @ Xs.T)
    if lam[-1] <= 0.0 or lam[0] <= lam[-1] * max(n, k) * np.finfo(float).eps:
        raise SubsetRankDeficient(
            f"subset of size {k} spans only a subspace of R^{n}"
        )

    if warm_start is not None:
        u = warm_start.to_dense()[subset]
        u = np.maximum(u, _WARM_CLAMP)
        u /= u.sum()
        cand = _candidate(X, subset, u, cfg.min_weight)
        warm_gap = cand[2] if cand is not None else 1.0
        mu = max(1e-4, warm_gap / k)
    else:
        u = np.full(k, 1.0 / k)
        mu = 1.0

    best: tuple[float, tuple] | None = None
    iters = 0
    rhs = np.zeros(k + 1)
    while mu > 1e-30:
        # check the truncated candidate before burning Newton iterations;
        # warm starts are often already certifiable
        cand = _candidate(X, subset, u, cfg.min_weight)
        if cand is not None:
            if best is None or cand[2] < best[0]:
                best = (cand[2], cand)
            if cand[2] <= cfg.gap_tol:
                w, E, gap = cand
                return RmpSolution(w, E, gap, iters, {"mu_final": mu})

        # Newton iterations at fixed mu until the decrement is below sqrt(mu)
        while iters < cfg.max_newton:
            M = (Xs * u) @ Xs.T
            L = chol_spd(0.5 * (M + M.T))
            V = sla.solve_triangular(L, Xs, lower=True, check_finite=False)
            kappa = np.einsum("ij,ij->j", V, V)
            K = V.T @ V
            grad = kappa + mu / u
            B = -(K * K)
            B[np.diag_indices(k)] -= mu / (u * u)
            kkt = np.zeros((k + 1, k + 1))
            kkt[:k, :k] = B
            kkt[:k, k] = -1.0
            kkt[k, :k] = 1.0
            rhs[:k] = -grad
            try:
                step = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                break
            delta = step[:k]
            dec2 = float(grad @ delta)
            if dec2 < 0.0:
                dec2 = 0.0
            if math.sqrt(dec2) < math.sqrt(mu) or dec2 < 1e-26:
                break
            neg = delta < 0.0
            alpha = 1.0
            if np.any(neg):
                alpha = min(1.0, 0.995 * float(np.min(-u[neg] / delta[neg])))
            f0 = _barrier_value(Xs, u, mu)
            accepted = False
            while alpha > 1e-14:
                trial = u + alpha * delta
                if np.all(trial > 0.0):
                    f1 = _barrier_value(Xs, trial, mu)
                    if f1 >= f0 + _ARMIJO_SLOPE * alpha * dec2:
                        u = trial / trial.sum()
                        accepted = True
                        break
                alpha *= _ARMIJO_FACTOR
            iters += 1
            if not accepted:
                break

        if iters >= cfg.max_newton:
            break
        mu *= cfg.barrier_shrink

    cand = _candidate(X, subset, u, cfg.min_weight)
    if cand is not None and (best is None or cand[2] < best[0]):
        best = (cand[2], cand)
    if best is not None and best[0] <= cfg.gap_tol:
        w, E, gap = best[1]
        return RmpSolution(w, E, gap, iters, {"mu_final": mu})
    sol = None
    if best is not None:
        w, E, gap = best[1]
        sol = RmpSolution(w, E, gap, iters, {"mu_final": mu})
    raise NewtonStalled(
        f"no certificate below {cfg.gap_tol:.1e} within "
        f"{cfg.max_newton} Newton iterations "
        f"(best gap {best[0] if best else float('nan'):.3e})",
        best=sol,
    )


def extract_support(sol: RmpSolution, cfg: RmpConfig | None = None) -> np.ndarray:
    """Indices whose weight exceeds the truncation floor, ascending."""
    cfg = cfg or RmpConfig()
    keep = sol.weights.values > cfg.min_weight
    return np.asarray(sol.weights.support[keep], dtype=np.int64)

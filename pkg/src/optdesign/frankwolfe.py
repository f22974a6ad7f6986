"""Away-step Frank-Wolfe solver for continuous D-optimal design.

First-order companion to the column generation path: each iteration either
moves weight toward the point with the largest quadratic form (closed-form
step length) or moves weight away from the weakest support point, with
rank-one updates of the inverse information matrix and of all cached
quadratic forms.  Periodic refactorization bounds drift of the rank-one
chain, and the same safe elimination rule used by column generation can
shrink the scan set at checkpoints.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from optdesign import _kernels
from optdesign.core import (
    DesignMatrix,
    DesignWeights,
    EllipsoidMatrix,
    SolveReport,
    chol_spd,
)
from optdesign.errors import RankDeficientData

__all__ = ["FwConfig", "ky_init", "fw_solve", "fw_hp_checkpoint"]

_REFRESH_EVERY = 1000
_DRIFT_TOL = 1e-8


@dataclass
class FwConfig:
    """Tolerances and caps for the Frank-Wolfe solver.

    ``tol`` bounds the largest constraint violation max_i x_i'Hx_i - n at
    exit (default 1e-5/n, resolved at solve time).  ``hp_check_every``
    sets the elimination checkpoint cadence; 0 disables elimination.
    """

    tol: float | None = None
    max_iter: int = 1_000_000
    away_steps: bool = True
    hp_check_every: int = 500
    progress_every: int = 1000

    def __post_init__(self):
        if self.tol is not None and self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 0 or self.hp_check_every < 0:
            raise ValueError("caps must be nonnegative")


def ky_init(X: DesignMatrix, seed: int = 0) -> DesignWeights:
    """Spanning initial weights from extreme projections.

    Repeatedly draws a random direction orthogonal to the span of the
    points chosen so far (the first direction is a seeded random unit
    vector), picks the points with the largest and smallest projection
    onto it, and gives every pick weight 1/(2n), merging duplicates.
    The procedure stops once the picks span R^n, and the accumulated
    weights are renormalized; the support therefore has at most 2n
    points and always spans.
    """
    rng = np.random.default_rng(seed)
    n, m = X.n, X.m
    basis = np.zeros((n, 0))
    weight = {}
    while basis.shape[1] < n:
        direction = None
        for _ in range(64):
            d = rng.standard_normal(n)
            if basis.shape[1]:
                d -= basis @ (basis.T @ d)
            norm = float(np.linalg.norm(d))
            if norm > 1e-12:
                direction = d / norm
                break
        if direction is None:
            raise RankDeficientData("could not draw a spanning direction")
        proj = direction @ X.data
        picks = (int(np.argmax(proj)), int(np.argmin(proj)))
        grew = False
        for g in picks:
            weight[g] = weight.get(g, 0.0) + 1.0 / (2.0 * n)
            x = X.data[:, g].copy()
            if basis.shape[1]:
                x -= basis @ (basis.T @ x)
            norm = float(np.linalg.norm(x))
            if norm > 1e-10 * max(1.0, float(np.linalg.norm(X.data[:, g]))):
                basis = np.hstack([basis, (x / norm)[:, None]])
                grew = True
        if not grew:
            raise RankDeficientData("points do not span R^n")
    support = np.fromiter(sorted(weight), dtype=np.int64)
    values = np.array([weight[int(g)] for g in support])
    values /= values.sum()
    return DesignWeights(support, values, m)


def fw_hp_checkpoint(
    X: DesignMatrix,
    E: EllipsoidMatrix,
    epsilon: float,
    active: np.ndarray,
    support: np.ndarray,
) -> np.ndarray:
    """Active set reduced by the safe elimination rule, keeping support."""
    from optdesign.colgen import hp_filter

    retained = hp_filter(X, E, epsilon, active)
    return np.union1d(retained, np.asarray(support, dtype=np.int64))


class _FwState:
    """Working state: active scan set, cached quadratic forms, support."""

    def __init__(self, X: DesignMatrix, init: DesignWeights):
        self.X = X
        self.supp = init.support.copy()
        self.u = init.values.copy()
        self.act = np.arange(X.m, dtype=np.int64)
        self.Xact = X.data
        self.H: np.ndarray | None = None
        self.logdet_m = 0.0
        self.kappa: np.ndarray | None = None
        self.imax = 0
        self.max_drift = 0.0
        self.refresh(measure_drift=False)
        self.rescan()

    def refresh(self, measure_drift: bool = True):
        """Recompute H and the objective from the support weights."""
        self.u /= self.u.sum()
        Xs = self.X.data[:, self.supp]
        M = (Xs * self.u) @ Xs.T
        L = chol_spd(0.5 * (M + M.T))
        Hf = sla.cho_solve((L, True), np.eye(self.X.n), check_finite=False)
        Hf = 0.5 * (Hf + Hf.T)
        if measure_drift and self.H is not None:
            num = float(np.linalg.norm(self.H - Hf))
            den = float(np.linalg.norm(Hf))
            self.max_drift = max(self.max_drift, num / max(den, 1e-300))
        self.H = Hf
        self.logdet_m = 2.0 * float(np.sum(np.log(np.diag(L))))

    def rescan(self):
        self.kappa = _kernels.quad_forms(self.Xact, self.H)
        self.imax = int(np.argmax(self.kappa))

    def set_active(self, new_act: np.ndarray):
        self.act = new_act
        self.Xact = self.X.columns(new_act)
        self.rescan()

    def support_kappa(self) -> np.ndarray:
        pos = np.searchsorted(self.act, self.supp)
        return self.kappa[pos]


def fw_solve(
    X: DesignMatrix,
    cfg: FwConfig | None = None,
    init: DesignWeights | None = None,
    seed: int = 0,
    progress=None,
) -> tuple[DesignWeights, EllipsoidMatrix, SolveReport]:
    """Run away-step Frank-Wolfe until the violation drops below tol.

    Returns weights, the matching ellipsoid, and a report whose duality
    gap n*log(1 + eps/n) is certified over the full point set.
    """
    from optdesign.colgen import hp_constant

    cfg = cfg or FwConfig()
    t0 = time.perf_counter()
    n, m = X.n, X.m
    tol = cfg.tol if cfg.tol is not None else 1e-5 / n
    state = _FwState(X, init if init is not None else ky_init(X, seed=seed))
    it = 0
    away_count = 0
    drop_count = 0
    converged = False
    eps = math.inf
    while True:
        eps = float(state.kappa[state.imax]) - n
        if eps <= tol:
            # certify against freshly factorized H, then against all points
            state.refresh()
            state.rescan()
            eps = float(state.kappa[state.imax]) - n
            if eps <= tol:
                if state.act.size == m:
                    converged = True
                    break
                kappa_all = _kernels.quad_forms(X.data, state.H)
                eps_full = float(np.max(kappa_all)) - n
                if eps_full <= tol:
                    eps = eps_full
                    converged = True
                    break
                viol = np.flatnonzero(kappa_all - n > 0.0).astype(np.int64)
                state.set_active(np.union1d(state.act, viol))
                continue
        if it >= cfg.max_iter:
            break

        if it and it % _REFRESH_EVERY == 0:
            state.refresh()
            state.rescan()
        if cfg.hp_check_every and it and it % cfg.hp_check_every == 0:
            eps_now = max(float(state.kappa[state.imax]) - n, 0.0)
            thr = hp_constant(eps_now, n)
            keep = state.kappa >= thr
            retained = np.union1d(state.act[keep], state.supp)
            if retained.size < state.act.size:
                state.set_active(retained)

        kmax = float(state.kappa[state.imax])
        eps = kmax - n
        step_away = False
        if cfg.away_steps and state.supp.size > 1:
            ks = state.support_kappa()
            jpos = int(np.argmin(ks))
            kmin = float(ks[jpos])
            if (n - kmin) > eps:
                step_away = True

        if step_away:
            j = int(state.supp[jpos])
            uj = float(state.u[jpos])
            kj = kmin
            safe = 1.0 - uj * kj
            if safe <= 1e-12 or uj >= 1.0:
                step_away = False
            else:
                lam_drop = uj / (1.0 - uj)
                if kj <= 1.0 + 1e-12:
                    lam = lam_drop
                else:
                    lam = min((n - kj) / (n * (kj - 1.0)), lam_drop)
                drop = lam >= lam_drop * (1.0 - 1e-15)
                denom = 1.0 + lam - lam * kj
                h = state.H @ X.data[:, j]
                a = 1.0 / (1.0 + lam)
                b = lam / ((1.0 + lam) * denom)
                state.imax = _kernels.fused_scan(state.Xact, h, state.kappa, a, b)
                state.H = a * (state.H + (lam / denom) * np.outer(h, h))
                state.logdet_m += (n - 1.0) * math.log1p(lam) + math.log(denom)
                state.u *= 1.0 + lam
                if drop:
                    state.supp = np.delete(state.supp, jpos)
                    state.u = np.delete(state.u, jpos)
                    drop_count += 1
                else:
                    state.u[jpos] -= lam
                away_count += 1

        if not step_away:
            p = state.imax
            g = int(state.act[p])
            kx = float(state.kappa[p])
            lam = (kx - n) / (n * (kx - 1.0))
            denom = 1.0 - lam + lam * kx
            h = state.H @ X.data[:, g]
            a = 1.0 / (1.0 - lam)
            b = -lam / ((1.0 - lam) * denom)
            state.imax = _kernels.fused_scan(state.Xact, h, state.kappa, a, b)
            state.H = a * (state.H - (lam / denom) * np.outer(h, h))
            state.logdet_m += (n - 1.0) * math.log(1.0 - lam) + math.log(denom)
            state.u *= 1.0 - lam
            spos = int(np.searchsorted(state.supp, g))
            if spos < state.supp.size and state.supp[spos] == g:
                state.u[spos] += lam
            else:
                state.supp = np.insert(state.supp, spos, g)
                state.u = np.insert(state.u, spos, lam)

        it += 1
        if progress is not None and it % cfg.progress_every == 0:
            progress(
                {
                    "iteration": it,
                    "active": int(state.act.size),
                    "working": int(state.supp.size),
                    "z": max(float(state.kappa[state.imax]) - n, 0.0),
                    "objective": state.logdet_m,
                    "gap": n
                    * math.log(
                        1.0 + max(float(state.kappa[state.imax]) - n, 0.0) / n
                    ),
                }
            )

    if not converged:
        state.refresh()
        if state.act.size == m:
            state.rescan()
            eps = float(state.kappa[state.imax]) - n
        else:
            kappa_all = _kernels.quad_forms(X.data, state.H)
            eps = float(np.max(kappa_all)) - n

    weights = DesignWeights(state.supp.copy(), state.u / state.u.sum(), m)
    Xs = X.data[:, weights.support]
    M = (Xs * weights.values) @ Xs.T
    ellipsoid = EllipsoidMatrix.from_information(0.5 * (M + M.T))
    gap = n * math.log(1.0 + max(eps, 0.0) / n)
    report = SolveReport(
        objective=state.logdet_m,
        duality_gap=gap,
        iterations=it,
        support_size=weights.size,
        eliminated=m - int(state.act.size),
        wall_time=time.perf_counter() - t0,
        method="fw",
        converged=converged,
        extras={
            "max_h_drift": state.max_drift,
            "away_steps": away_count,
            "drop_steps": drop_count,
            "tol": tol,
        },
    )
    return weights, ellipsoid, report

"""Column generation for continuous D-optimal design at scale.

The full problem over m points is attacked through a sequence of small
restricted problems: solve the master on a working subset, scan all still
active points for constraint violations against the current ellipsoid
(pricing), pull the worst violators into the working set, and discard
points that provably cannot support any optimal design (Harman-Pronzato
style elimination).  The loop stops when the largest violation over the
active set is at most ``stop_tol``; a final scan over every original point
turns that into a checked certificate even for eliminated points.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from optdesign import _kernels
from optdesign.core import DesignMatrix, DesignWeights, EllipsoidMatrix, SolveReport
from optdesign.errors import DomainError, NewtonStalled
from optdesign.frankwolfe import ky_init
from optdesign.rmp import RmpConfig, RmpSolution, extract_support, solve_restricted

__all__ = [
    "ColGenConfig",
    "ColGenState",
    "pricing",
    "hp_constant",
    "hp_filter",
    "run_column_generation",
    "run_column_generation_with_state",
]


@dataclass
class ColGenConfig:
    """Knobs for the column generation loop.

    ``n0`` is the number of violated points pulled in per iteration
    (default 5n).  ``keep_all`` disables dropping zero-weight points from
    the working set, which recovers the plain one-in nothing-out scheme
    when combined with ``n0=1``.
    """

    n0: int | None = None
    stop_tol: float = 1e-5
    rmp: RmpConfig = field(default_factory=RmpConfig)
    keep_all: bool = False
    hp_elimination: bool = True
    max_outer: int = 500

    def __post_init__(self):
        if self.stop_tol <= 0.0:
            raise ValueError("stop_tol must be positive")
        if self.n0 is not None and self.n0 < 1:
            raise ValueError("n0 must be at least 1")


@dataclass
class ColGenState:
    """Mutable loop state, exposed for inspection and tests."""

    active: np.ndarray
    working: np.ndarray
    current: RmpSolution | None
    epsilon: float
    history: list[dict] = field(default_factory=list)


def pricing(
    X: DesignMatrix,
    E: EllipsoidMatrix,
    active: np.ndarray,
    n0: int,
) -> tuple[float, np.ndarray]:
    """Scan active points for ellipsoid constraint violations.

    Returns ``(z, violated)`` where z is the largest violation
    max(0, max_i x_i' H x_i - n) and ``violated`` holds up to ``n0``
    violating indices ordered by violation descending, ties broken by
    ascending index.
    """
    active = np.asarray(active, dtype=np.int64)
    kappa = _kernels.quad_forms(X.columns(active), E.H)
    return _select_violated(X.n, active, kappa, n0)


def _select_violated(n, active, kappa, n0):
    viol = kappa - n
    zraw = float(np.max(viol)) if viol.size else 0.0
    if zraw <= 0.0:
        return 0.0, np.empty(0, dtype=np.int64)
    mask = viol > 0.0
    idx = active[mask]
    v = viol[mask]
    order = np.lexsort((idx, -v))
    return zraw, idx[order[:n0]]


def hp_constant(epsilon: float, n: int) -> float:
    """Safe elimination threshold for the current violation level.

    Any point whose quadratic form is below this value cannot belong to
    the support of an optimal design once the largest violation is
    ``epsilon``; at epsilon = 0 the threshold equals n.
    """
    if epsilon < 0.0:
        raise DomainError("epsilon must be nonnegative")
    if n < 2:
        raise DomainError("dimension must be at least 2")
    return n * (
        1.0 + epsilon / 2.0 - math.sqrt(epsilon * (4.0 + epsilon - 4.0 / n)) / 2.0
    )


def hp_filter(
    X: DesignMatrix,
    E: EllipsoidMatrix,
    epsilon: float,
    active: np.ndarray,
) -> np.ndarray:
    """Indices in ``active`` whose quadratic form reaches the threshold.

    Every violated point (form above n) is retained since the threshold
    never exceeds n.
    """
    active = np.asarray(active, dtype=np.int64)
    kappa = _kernels.quad_forms(X.columns(active), E.H)
    return active[kappa >= hp_constant(epsilon, X.n)]


def run_column_generation(
    X: DesignMatrix,
    cfg: ColGenConfig | None = None,
    seed: int = 0,
    progress=None,
) -> tuple[DesignWeights, EllipsoidMatrix, SolveReport]:
    """Solve the continuous design problem over all points of X.

    Returns the optimal weights, the matching ellipsoid matrix, and a
    report whose duality gap is certified over the full original point
    set.  ``progress`` may be a callable receiving one dict per outer
    iteration.
    """
    w, E, report, _ = run_column_generation_with_state(X, cfg, seed, progress)
    return w, E, report


def run_column_generation_with_state(
    X: DesignMatrix,
    cfg: ColGenConfig | None = None,
    seed: int = 0,
    progress=None,
):
    """As :func:`run_column_generation` but also returns the loop state."""
    cfg = cfg or ColGenConfig()
    t0 = time.perf_counter()
    n, m = X.n, X.m
    n0 = cfg.n0 if cfg.n0 is not None else 5 * n
    init = ky_init(X, seed=seed)
    state = ColGenState(
        active=np.arange(m, dtype=np.int64),
        working=init.support.copy(),
        current=None,
        epsilon=math.inf,
    )
    warm: DesignWeights | None = init
    stalled = 0
    sol = None
    z = math.inf
    outer = 0
    while outer < cfg.max_outer:
        outer += 1
        try:
            sol = solve_restricted(X, state.working, warm, cfg.rmp)
        except NewtonStalled as exc:
            if exc.best is None:
                raise
            sol = exc.best
            stalled += 1
        state.current = sol
        support = extract_support(sol, cfg.rmp)
        kappa = _kernels.quad_forms(X.columns(state.active), sol.ellipsoid.H)
        z, violated = _select_violated(n, state.active, kappa, n0)
        state.epsilon = z
        objective = -sol.ellipsoid.logdet
        row = {
            "iteration": outer,
            "active": int(state.active.size),
            "working": int(state.working.size),
            "z": z,
            "objective": objective,
            "gap": n * math.log(1.0 + max(z, 0.0) / n),
        }
        state.history.append(row)
        if progress is not None:
            progress(row)

        reinstated = False
        if z <= cfg.stop_tol:
            # checked certificate: rescan every original point, including
            # any that elimination removed along the way
            if state.active.size == m:
                z_full = z
            else:
                kappa_all = _kernels.quad_forms(X.data, sol.ellipsoid.H)
                z_full = max(float(np.max(kappa_all)) - n, 0.0)
            if z_full <= cfg.stop_tol:
                report = _final_report(
                    X, sol, z_full, outer, m - state.active.size, t0, True, stalled
                )
                return sol.weights, sol.ellipsoid, report, state
            # an eliminated point violates after all: reinstate and go on
            viol_idx = np.flatnonzero(kappa_all - n > 0.0).astype(np.int64)
            state.active = np.union1d(state.active, viol_idx)
            _, violated = _select_violated(n, viol_idx, kappa_all[viol_idx], n0)
            reinstated = True

        working_next = (
            np.union1d(state.working, violated)
            if cfg.keep_all
            else np.union1d(violated, support)
        )
        if cfg.hp_elimination and not reinstated:
            keep = kappa >= hp_constant(z, n)
            retained = state.active[keep]
            state.active = np.union1d(retained, working_next)
        state.working = working_next
        warm = sol.weights

    report = _final_report(
        X, sol, z, outer, m - state.active.size, t0, False, stalled
    )
    return sol.weights, sol.ellipsoid, report, state


def _final_report(X, sol, z_full, outer, eliminated, t0, converged, stalled):
    n = X.n
    gap = n * math.log(1.0 + max(z_full, 0.0) / n)
    extras = {}
    if stalled:
        extras["rmp_stalls"] = stalled
    return SolveReport(
        objective=-sol.ellipsoid.logdet,
        duality_gap=gap,
        iterations=outer,
        support_size=sol.weights.size,
        eliminated=int(eliminated),
        wall_time=time.perf_counter() - t0,
        method="colgen",
        converged=converged,
        extras=extras,
    )

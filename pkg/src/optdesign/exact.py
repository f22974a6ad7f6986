"""From continuous weights to provably good integer designs.

Rounding turns optimal weights into N integer multiplicities on the
support; exchange local search then swaps single units between points
until no swap multiplies the determinant by more than ``improve_tol``.
The determinant ratio of a candidate swap has a closed form in the
leverages under the current inverse, so each round of best-improvement
search scans all pairs cheaply.  The achievable quality is bounded a
priori: an N-point rounding of near-optimal weights loses at most
n*log(N/(N-n+1)) in log determinant, and reports verify that bound.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from math import comb

import numpy as np

from optdesign.core import DesignMatrix, DesignWeights, ExactDesign, log_det_objective
from optdesign.errors import (
    DomainError,
    InfeasibleRounding,
    SingularInformation,
    TooLarge,
)

__all__ = [
    "LocalSearchConfig",
    "LocalSearchResult",
    "BoundReport",
    "round_to_exact",
    "local_search",
    "approx_bound",
    "bound_report",
    "verify_lemma_tau",
    "brute_force_exact",
]

_BRUTE_FORCE_CAP = 1_000_000


@dataclass
class LocalSearchConfig:
    """Exchange search variant and caps.

    ``variant`` is "best" (scan all swaps, take the largest ratio) or
    "first" (take the first improving swap in ascending index order).
    A swap is accepted only when its determinant ratio reaches
    ``improve_tol``, a hair above one.
    """

    variant: str = "best"
    max_swaps: int = 100_000
    improve_tol: float = 1.0 + 1e-10

    def __post_init__(self):
        if self.variant not in ("best", "first"):
            raise ValueError("variant must be 'best' or 'first'")
        if self.improve_tol <= 1.0:
            raise ValueError("improve_tol must exceed 1")


@dataclass
class LocalSearchResult:
    """Terminal design plus swap count; ``converged`` is False only when
    the swap cap was hit before reaching a local optimum."""

    design: ExactDesign
    swaps: int
    converged: bool


@dataclass
class BoundReport:
    """A priori and realized quality of an exact design.

    ``achieved`` is log det of the N-normalized information matrix
    G/N, comparable to the continuous objective ``phi_rel``; ``gap``
    is their difference relative to |phi_rel| unless that denominator
    is degenerate, in which case the absolute difference is reported
    and flagged.
    """

    phi_rel: float
    h_nn: float
    lower_bound: float
    achieved: float
    gap: float
    corollary_satisfied: bool
    degenerate_denominator: bool = False

    def to_dict(self) -> dict:
        return {
            "phi_rel": self.phi_rel,
            "h_nn": self.h_nn,
            "lower_bound": self.lower_bound,
            "achieved": self.achieved,
            "gap": self.gap,
            "corollary_satisfied": self.corollary_satisfied,
            "degenerate_denominator": self.degenerate_denominator,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoundReport":
        return cls(
            phi_rel=float(d["phi_rel"]),
            h_nn=float(d["h_nn"]),
            lower_bound=float(d["lower_bound"]),
            achieved=float(d["achieved"]),
            gap=float(d["gap"]),
            corollary_satisfied=bool(d["corollary_satisfied"]),
            degenerate_denominator=bool(d["degenerate_denominator"]),
        )


def round_to_exact(
    u: DesignWeights,
    N: int,
    X: DesignMatrix,
    variant: str = "remainder",
) -> ExactDesign:
    """Round weights to N integer multiplicities on the support.

    "remainder" (default) apportions floor(N*u_i) units and hands the
    leftovers to the largest fractional remainders, ties broken by
    ascending index.  "topN" places one unit on each of the N
    largest-weight support points and needs at least N support points.
    If the rounded design is singular, single units are moved greedily
    to unused support points until it is not.
    """
    if N < X.n:
        raise DomainError(f"N={N} must be at least the dimension n={X.n}")
    if variant not in ("remainder", "topN"):
        raise DomainError(f"unknown rounding variant {variant!r}")
    sup = u.support
    vals = u.values
    if variant == "remainder":
        base = np.floor(N * vals).astype(np.int64)
        rem = N * vals - base
        deficit = N - int(base.sum())
        if deficit > 0:
            order = np.lexsort((sup, -rem))
            base[order[:deficit]] += 1
        counts = {int(sup[i]): int(base[i]) for i in range(sup.size) if base[i] > 0}
    else:
        if sup.size < N:
            raise InfeasibleRounding(
                f"topN rounding needs at least N={N} support points, have {sup.size}"
            )
        order = np.lexsort((sup, -vals))
        counts = {int(sup[i]): 1 for i in order[:N]}
    return _repair_singular(X, counts, sup)


def _repair_singular(X, counts, support):
    """Build the design, moving units onto unused support points while
    the information matrix stays singular."""
    for _ in range(support.size + 1):
        try:
            return ExactDesign.from_counts(X, counts)
        except SingularInformation:
            pass
        unused = [int(s) for s in support if int(s) not in counts]
        donors = [k for k, v in sorted(counts.items()) if v >= 1]
        if not unused or not donors:
            raise InfeasibleRounding("no nonsingular rounding on this support")
        donor = max(donors, key=lambda k: (counts[k], -k))
        idx = np.fromiter(sorted(counts), dtype=np.int64)
        mult = np.array([counts[int(k)] for k in idx], dtype=np.float64)
        Xs = X.data[:, idx]
        G = (Xs * mult) @ Xs.T
        ridge = max(float(np.trace(G)), 1.0) / X.n * 1e-10
        best = None
        xd = X.data[:, donor]
        for cand in unused:
            xc = X.data[:, cand]
            Gmod = G - np.outer(xd, xd) + np.outer(xc, xc) + ridge * np.eye(X.n)
            sign, ld = np.linalg.slogdet(Gmod)
            score = ld if sign > 0 else -math.inf
            if best is None or score > best[0]:
                best = (score, cand)
        if counts[donor] == 1:
            del counts[donor]
        else:
            counts[donor] -= 1
        counts[best[1]] = counts.get(best[1], 0) + 1
    raise InfeasibleRounding("no nonsingular rounding on this support")


def local_search(
    X: DesignMatrix,
    candidates,
    init: ExactDesign,
    cfg: LocalSearchConfig | None = None,
) -> LocalSearchResult:
    """Exchange local search over single-unit swaps.

    Swaps one unit from a placed point i to any candidate j while the
    determinant ratio (1 + lev_j)(1 - lev_i) + cross_ij^2 reaches
    ``improve_tol``.  Ties in best-improvement mode and scan order in
    first-improvement mode both follow ascending (i, j).
    """
    cfg = cfg or LocalSearchConfig()
    cand = np.unique(np.asarray(candidates, dtype=np.int64))
    if cand.size == 0:
        raise DomainError("candidate set must be nonempty")
    if cand[0] < 0 or cand[-1] >= X.m:
        raise DomainError("candidate index out of range")
    design = init.copy()
    cand_set = set(int(c) for c in cand)
    for k in design.counts:
        if k not in cand_set:
            raise DomainError(f"design point {k} is not among the candidates")
    Xc = X.data[:, cand]
    swaps = 0
    while swaps < cfg.max_swaps:
        placed = design.indices()
        Xi = X.data[:, placed]
        Vc = design.Ginv @ Xc
        lev_c = np.einsum("ij,ij->j", Xc, Vc)
        cross = Xi.T @ Vc
        lev_i = np.einsum("ij,ij->j", Xi, design.Ginv @ Xi)
        ratio = (1.0 + lev_c)[None, :] * (1.0 - lev_i)[:, None] + cross**2
        if cfg.variant == "best":
            flat = int(np.argmax(ratio))
            ipos, jpos = divmod(flat, ratio.shape[1])
            if ratio[ipos, jpos] < cfg.improve_tol:
                return LocalSearchResult(design, swaps, True)
        else:
            hits = np.argwhere(ratio >= cfg.improve_tol)
            if hits.size == 0:
                return LocalSearchResult(design, swaps, True)
            ipos, jpos = int(hits[0, 0]), int(hits[0, 1])
        design.swap(X, int(placed[ipos]), int(cand[jpos]))
        swaps += 1
    return LocalSearchResult(design, swaps, False)


def approx_bound(N: int, n: int) -> float:
    """Worst-case log det loss of an N-point rounding, n*log(N/(N-n+1))."""
    if n < 1:
        raise DomainError("dimension must be at least 1")
    if N < n:
        raise DomainError(f"N={N} must be at least n={n}")
    return n * math.log(N / (N - n + 1.0))


def bound_report(
    X: DesignMatrix,
    u_star: DesignWeights,
    design: ExactDesign,
    phi_rel: float | None = None,
) -> BoundReport:
    """Compare an exact design against the continuous optimum.

    ``phi_rel`` defaults to the log det objective of ``u_star``; pass
    the solver's reported objective to avoid recomputation.
    """
    n = X.n
    if phi_rel is None:
        phi_rel = log_det_objective(X, u_star)
    h = approx_bound(design.N, n)
    achieved = design.logdet - n * math.log(design.N)
    lower = phi_rel - h
    degenerate = abs(phi_rel) < 1e-8
    if degenerate:
        gap = phi_rel - achieved
    else:
        gap = (phi_rel - achieved) / abs(phi_rel)
    return BoundReport(
        phi_rel=phi_rel,
        h_nn=h,
        lower_bound=lower,
        achieved=achieved,
        gap=gap,
        corollary_satisfied=achieved >= lower - 1e-8,
        degenerate_denominator=degenerate,
    )


def verify_lemma_tau(X: DesignMatrix, candidates, design: ExactDesign) -> float:
    """Largest leverage-identity residual over placed x candidate pairs.

    At an exchange local optimum,
    lev_j - lev_i*lev_j + cross_ij^2 <= lev_i for every placed i and
    candidate j; the returned maximum of the left side minus the right
    is nonpositive up to the accepted swap tolerance.
    """
    cand = np.unique(np.asarray(candidates, dtype=np.int64))
    placed = design.indices()
    Xc = X.data[:, cand]
    Xi = X.data[:, placed]
    Vc = design.Ginv @ Xc
    lev_c = np.einsum("ij,ij->j", Xc, Vc)
    cross = Xi.T @ Vc
    lev_i = np.einsum("ij,ij->j", Xi, design.Ginv @ Xi)
    resid = lev_c[None, :] - np.outer(lev_i, lev_c) + cross**2 - lev_i[:, None]
    return float(np.max(resid))


def brute_force_exact(X: DesignMatrix, candidates, N: int) -> tuple[float, dict]:
    """Exhaustive search over all N-point multisets of the candidates.

    Returns (best log det, best counts); singular selections score
    -inf.  Raises :class:`TooLarge` when the multiset count exceeds
    one million.
    """
    cand = [int(c) for c in np.unique(np.asarray(candidates, dtype=np.int64))]
    if N < 1:
        raise DomainError("N must be positive")
    total = comb(len(cand) + N - 1, N)
    if total > _BRUTE_FORCE_CAP:
        raise TooLarge(f"{total} multisets exceed the enumeration cap")
    best_ld = -math.inf
    best_counts: dict = {}
    for combo in itertools.combinations_with_replacement(cand, N):
        idx = np.asarray(combo, dtype=np.int64)
        Xs = X.data[:, idx]
        sign, ld = np.linalg.slogdet(Xs @ Xs.T)
        if sign > 0 and ld > best_ld:
            best_ld = ld
            best_counts = {}
            for c in combo:
                best_counts[c] = best_counts.get(c, 0) + 1
    return best_ld, best_counts

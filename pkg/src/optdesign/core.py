"""Domain types and shared numerical kernels for D-optimal design.

A design problem is a set of m points in R^n (columns of a design matrix)
together with a probability vector over those points.  The information
matrix of a weighting u is sum_i u_i x_i x_i'; maximizing its log
determinant over the simplex is the continuous D-optimal design problem,
and the inverse information matrix defines the minimum-volume enclosing
ellipsoid of the point set.  Everything downstream (pricing, elimination,
exchange heuristics) reduces to quadratic forms in these two matrices, so
the numerically delicate pieces are concentrated here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.linalg as sla

from optdesign import _kernels
from optdesign.errors import (
    DimensionMismatch,
    DomainError,
    RankDeficientData,
    SingularAfterSwap,
    SingularInformation,
)

__all__ = [
    "DesignMatrix",
    "DesignWeights",
    "EllipsoidMatrix",
    "ExactDesign",
    "SolveReport",
    "chol_spd",
    "info_matrix",
    "log_det_objective",
    "ellipsoid_from_weights",
    "mahalanobis",
    "duality_gap_certificate",
    "swap_update",
]

# Escalating diagonal jitter used before declaring a matrix singular.
_JITTER_START = 1e-12
_JITTER_MAX = 1e-6
# Relative eigenvalue cutoff below which a matrix counts as rank deficient.
_RANK_TOL = 1e-12
# Exchanges between full refactorizations of an exact design.
_REFRESH_EVERY = 50


def chol_spd(A: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Plain Cholesky is tried first.  On failure the matrix is classified:
    numerically rank deficient matrices raise :class:`SingularInformation`,
    while merely ill-conditioned ones are retried with escalating diagonal
    jitter (1e-12 up to 1e-6 times the mean diagonal).
    """
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        pass
    lam = np.linalg.eigvalsh(A)
    if lam[-1] <= 0.0 or lam[0] <= _RANK_TOL * lam[-1]:
        raise SingularInformation(
            "matrix is numerically singular (eigenvalue range "
            f"[{lam[0]:.3e}, {lam[-1]:.3e}])"
        )
    scale = float(np.trace(A)) / A.shape[0]
    jit = _JITTER_START
    eye = np.eye(A.shape[0])
    while jit <= _JITTER_MAX * (1.0 + 1e-9):
        try:
            return np.linalg.cholesky(A + (jit * scale) * eye)
        except np.linalg.LinAlgError:
            jit *= 10.0
    raise SingularInformation("Cholesky failed even with maximal jitter")


def _logdet_from_chol(L: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(L))))


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Immutable set of m points in R^n, stored column-major.

    Columns are contiguous so that scan kernels stream one point at a time.
    Construction verifies finiteness and that the points span R^n.
    """

    data: np.ndarray
    label: str | None = None

    def __post_init__(self):
        arr = np.asfortranarray(self.data, dtype=np.float64)
        object.__setattr__(self, "data", arr)
        if arr.ndim != 2:
            raise DomainError("design matrix must be 2-d (points as columns)")
        n, m = arr.shape
        if n < 2:
            raise DomainError(f"dimension n must be >= 2, got {n}")
        if m < n:
            raise DomainError(f"need at least n={n} points, got {m}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("design matrix contains non-finite entries")
        # rank check on the (small) Gram matrix X X'
        lam = np.linalg.eigvalsh(arr @ arr.T)
        if lam[-1] <= 0.0 or lam[0] <= lam[-1] * max(n, m) * np.finfo(float).eps:
            raise RankDeficientData(
                f"points span only a subspace (Gram eigenvalue ratio "
                f"{lam[0] / max(lam[-1], 1e-300):.3e})"
            )

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def m(self) -> int:
        return self.data.shape[1]

    def columns(self, idx) -> np.ndarray:
        """Fortran-ordered copy of the selected point columns."""
        return np.asfortranarray(self.data[:, idx])


@dataclass(frozen=True, eq=False)
class DesignWeights:
    """Sparse probability vector over the m points of a design matrix.

    ``support`` holds strictly increasing indices and ``values`` the
    matching positive weights, which must sum to one.
    """

    support: np.ndarray
    values: np.ndarray
    m: int

    def __post_init__(self):
        sup = np.asarray(self.support, dtype=np.int64).ravel()
        val = np.asarray(self.values, dtype=np.float64).ravel()
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "values", val)
        if sup.shape != val.shape:
            raise DimensionMismatch("support and values differ in length")
        if sup.size == 0:
            raise DomainError("weights must have nonempty support")
        if np.any(np.diff(sup) <= 0):
            raise DomainError("support indices must be strictly increasing")
        if sup[0] < 0 or sup[-1] >= self.m:
            raise DomainError("support index out of range")
        if np.any(val <= 0.0) or not np.all(np.isfinite(val)):
            raise DomainError("weights must be finite and strictly positive")
        if abs(float(val.sum()) - 1.0) > 1e-12:
            raise DomainError(f"weights sum to {val.sum():.17g}, expected 1")

    @classmethod
    def from_dense(cls, u: np.ndarray, tol: float = 0.0) -> "DesignWeights":
        u = np.asarray(u, dtype=np.float64).ravel()
        keep = np.flatnonzero(u > tol)
        return cls(keep, u[keep], u.size)

    def to_dense(self) -> np.ndarray:
        u = np.zeros(self.m)
        u[self.support] = self.values
        return u

    @property
    def size(self) -> int:
        return int(self.support.size)


@dataclass(frozen=True, eq=False)
class EllipsoidMatrix:
    """Inverse information matrix H with its Cholesky factor and log det.

    x' H x <= n over all points describes the minimum-volume enclosing
    ellipsoid at optimality; the cached factor makes single-point
    evaluations cheap and stable.
    """

    H: np.ndarray
    chol: np.ndarray
    logdet: float

    def __post_init__(self):
        H = np.ascontiguousarray(self.H, dtype=np.float64)
        L = np.asarray(self.chol, dtype=np.float64)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "chol", L)
        scale = float(np.max(np.abs(H))) or 1.0
        if float(np.max(np.abs(H - H.T))) > 1e-12 * scale:
            raise DomainError("ellipsoid matrix is not symmetric")
        d = np.diag(L)
        if np.any(d <= 0.0):
            raise DomainError("Cholesky factor must have positive diagonal")
        if abs(self.logdet - _logdet_from_chol(L)) > 1e-10 * max(1.0, abs(self.logdet)):
            raise DomainError("cached log determinant disagrees with factor")

    @classmethod
    def from_information(cls, M: np.ndarray) -> "EllipsoidMatrix":
        """Invert an information matrix and package the result."""
        L = chol_spd(M)
        H = sla.cho_solve((L, True), np.eye(M.shape[0]), check_finite=False)
        H = 0.5 * (H + H.T)
        LH = chol_spd(H)
        return cls(H, LH, _logdet_from_chol(LH))

    @property
    def n(self) -> int:
        return self.H.shape[0]


def info_matrix(X: DesignMatrix, u: DesignWeights) -> np.ndarray:
    """Weighted second-moment matrix sum_i u_i x_i x_i' (symmetric PSD)."""
    if u.m != X.m:
        raise DimensionMismatch(f"weights over {u.m} points, matrix has {X.m}")
    Xs = X.data[:, u.support]
    M = (Xs * u.values) @ Xs.T
    return 0.5 * (M + M.T)


def log_det_objective(X: DesignMatrix, u: DesignWeights) -> float:
    """log det of the information matrix of u.

    Raises :class:`SingularInformation` when the support of u does not span
    R^n.
    """
    return _logdet_from_chol(chol_spd(info_matrix(X, u)))


def ellipsoid_from_weights(X: DesignMatrix, u: DesignWeights) -> EllipsoidMatrix:
    """Inverse information matrix of u as an :class:`EllipsoidMatrix`."""
    return EllipsoidMatrix.from_information(info_matrix(X, u))


def mahalanobis(E: EllipsoidMatrix, x: np.ndarray) -> float:
    """Quadratic form x' H x evaluated through the Cholesky factor."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != E.n:
        raise DimensionMismatch(f"point has dimension {x.size}, expected {E.n}")
    v = E.chol.T @ x
    return float(v @ v)


def duality_gap_certificate(
    X: DesignMatrix,
    u: DesignWeights,
    active: np.ndarray | None = None,
) -> tuple[float, float]:
    """Certified distance of u from optimality over an index set.

    Scaling H by n/kappa_max restores feasibility of the dual ellipsoid
    problem and costs exactly n*log(kappa_max/n) in objective, so that
    quantity bounds the true suboptimality of u over the evaluated points.
    Returns ``(gap, kappa_max)``; the gap is clamped at zero when every
    quadratic form is already below n.
    """
    E = ellipsoid_from_weights(X, u)
    if active is None:
        Xa = X.data
    else:
        active = np.asarray(active, dtype=np.int64)
        Xa = X.columns(active)
    kappa = _kernels.quad_forms(Xa, E.H)
    kmax = float(np.max(kappa))
    n = X.n
    gap = n * math.log(max(kmax, float(n)) / n)
    return gap, kmax


class ExactDesign:
    """Integer-multiplicity design with cached inverse and log determinant.

    Mutable, single-writer state for exchange local search: ``counts`` maps
    point index to multiplicity, ``G`` is the unnormalized information
    matrix sum_i count_i x_i x_i'.  Exchanges update ``Ginv`` and
    ``logdet`` with rank-one formulas; every 50 swaps both are
    refactorized from G to keep drift bounded.
    """

    def __init__(
        self,
        counts: Mapping[int, int],
        N: int,
        G: np.ndarray,
        Ginv: np.ndarray,
        logdet: float,
    ):
        self.counts = {int(k): int(v) for k, v in counts.items()}
        self.N = int(N)
        self.G = G
        self.Ginv = Ginv
        self.logdet = float(logdet)
        self._swaps_since_refresh = 0
        self._validate()

    def _validate(self):
        if not self.counts:
            raise DomainError("exact design must place at least one point")
        if any(v < 1 for v in self.counts.values()):
            raise DomainError("multiplicities must be positive integers")
        if sum(self.counts.values()) != self.N:
            raise DomainError("multiplicities do not sum to N")

    @classmethod
    def from_counts(cls, X: DesignMatrix, counts: Mapping[int, int]) -> "ExactDesign":
        counts = {int(k): int(v) for k, v in counts.items()}
        if not counts:
            raise DomainError("exact design must place at least one point")
        for k, v in counts.items():
            if not 0 <= k < X.m:
                raise DomainError(f"design index {k} out of range")
            if v < 1:
                raise DomainError("multiplicities must be positive integers")
        idx = np.fromiter(sorted(counts), dtype=np.int64)
        mult = np.array([counts[int(k)] for k in idx], dtype=np.float64)
        Xs = X.data[:, idx]
        G = (Xs * mult) @ Xs.T
        G = 0.5 * (G + G.T)
        L = chol_spd(G)
        Ginv = sla.cho_solve((L, True), np.eye(X.n), check_finite=False)
        Ginv = 0.5 * (Ginv + Ginv.T)
        return cls(counts, int(mult.sum()), G, Ginv, _logdet_from_chol(L))

    def copy(self) -> "ExactDesign":
        dup = ExactDesign.__new__(ExactDesign)
        dup.counts = dict(self.counts)
        dup.N = self.N
        dup.G = self.G.copy()
        dup.Ginv = self.Ginv.copy()
        dup.logdet = self.logdet
        dup._swaps_since_refresh = self._swaps_since_refresh
        return dup

    def swap(self, X: DesignMatrix, i: int, j: int) -> float:
        """Replace one unit of point i by point j; returns the det ratio.

        The predicted ratio (1 + lev_j)(1 - lev_i) + cross^2 uses leverages
        under the pre-swap inverse.  Ratios at or below 1e-14 would make G
        singular and raise :class:`SingularAfterSwap` without mutating.
        """
        i, j = int(i), int(j)
        if self.counts.get(i, 0) < 1:
            raise DomainError(f"point {i} is not in the design")
        if not 0 <= j < X.m:
            raise DomainError(f"point {j} out of range")
        xi = X.data[:, i]
        xj = X.data[:, j]
        vi = self.Ginv @ xi
        vj = self.Ginv @ xj
        lev_i = float(xi @ vi)
        lev_j = float(xj @ vj)
        cross = float(xi @ vj)
        ratio = (1.0 + lev_j) * (1.0 - lev_i) + cross * cross
        if ratio <= 1e-14:
            raise SingularAfterSwap(
                f"swap {i}->{j} would make the design singular (ratio {ratio:.3e})"
            )
        # add j first, then remove i: the intermediate matrix stays definite
        denom_add = 1.0 + lev_j
        Ginv1 = self.Ginv - np.outer(vj, vj) / denom_add
        w = Ginv1 @ xi
        denom_rem = 1.0 - float(xi @ w)
        if denom_rem <= 1e-14:
            raise SingularAfterSwap(
                f"swap {i}->{j} would make the design singular (denom {denom_rem:.3e})"
            )
        self.Ginv = Ginv1 + np.outer(w, w) / denom_rem
        self.G += np.outer(xj, xj) - np.outer(xi, xi)
        self.logdet += math.log(ratio)
        self.counts[j] = self.counts.get(j, 0) + 1
        if self.counts[i] == 1:
            del self.counts[i]
        else:
            self.counts[i] -= 1
        self._swaps_since_refresh += 1
        if self._swaps_since_refresh >= _REFRESH_EVERY:
            self.refresh()
        return ratio

    def refresh(self):
        """Refactorize Ginv and logdet from G."""
        G = 0.5 * (self.G + self.G.T)
        L = chol_spd(G)
        self.G = G
        self.Ginv = sla.cho_solve((L, True), np.eye(G.shape[0]), check_finite=False)
        self.Ginv = 0.5 * (self.Ginv + self.Ginv.T)
        self.logdet = _logdet_from_chol(L)
        self._swaps_since_refresh = 0

    def indices(self) -> np.ndarray:
        return np.fromiter(sorted(self.counts), dtype=np.int64)


def swap_update(design: ExactDesign, X: DesignMatrix, i: int, j: int) -> ExactDesign:
    """Apply a single exchange to ``design`` in place and return it."""
    design.swap(X, i, j)
    return design


@dataclass
class SolveReport:
    """Summary of one solver run, uniform across methods."""

    objective: float
    duality_gap: float
    iterations: int
    support_size: int
    eliminated: int
    wall_time: float
    method: str
    converged: bool = True
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "duality_gap": self.duality_gap,
            "iterations": self.iterations,
            "support_size": self.support_size,
            "eliminated": self.eliminated,
            "wall_time": self.wall_time,
            "method": self.method,
            "converged": self.converged,
            "extras": dict(self.extras),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SolveReport":
        return cls(
            objective=float(d["objective"]),
            duality_gap=float(d["duality_gap"]),
            iterations=int(d["iterations"]),
            support_size=int(d["support_size"]),
            eliminated=int(d["eliminated"]),
            wall_time=float(d["wall_time"]),
            method=str(d["method"]),
            converged=bool(d["converged"]),
            extras=dict(d.get("extras", {})),
        )

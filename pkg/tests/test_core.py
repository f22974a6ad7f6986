"""Domain types and shared numerics: frozen small cases plus randomized
fidelity checks against the naive oracles."""

import math

import numpy as np
import pytest

from oracles import logdet_counts, logdet_weighted
from optdesign.core import (
    DesignMatrix,
    DesignWeights,
    EllipsoidMatrix,
    ExactDesign,
    SolveReport,
    chol_spd,
    duality_gap_certificate,
    ellipsoid_from_weights,
    info_matrix,
    log_det_objective,
    mahalanobis,
    swap_update,
)
from optdesign.errors import (
    DimensionMismatch,
    DomainError,
    RankDeficientData,
    SingularAfterSwap,
    SingularInformation,
)

LOG3 = math.log(3.0)


# ---------------------------------------------------------------------------
# chol_spd


def test_chol_identity():
    L = chol_spd(np.eye(3))
    assert np.array_equal(L, np.eye(3))


def test_chol_matches_numpy_on_spd():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(2, 7))
        A = rng.standard_normal((n, n))
        M = A @ A.T + n * np.eye(n)
        assert np.allclose(chol_spd(M), np.linalg.cholesky(M), atol=1e-12)


def test_chol_rank_deficient_raises():
    with pytest.raises(SingularInformation):
        chol_spd(np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_chol_indefinite_raises():
    with pytest.raises(SingularInformation):
        chol_spd(np.diag([1.0, -1.0]))


def test_chol_jitter_fallback(monkeypatch):
    # force the plain attempt on this exact matrix to fail so the
    # escalating-jitter retry path runs; retries use perturbed copies
    A = np.diag([2.0, 1.0])
    plain = np.linalg.cholesky

    def flaky(M):
        if M is A:
            raise np.linalg.LinAlgError("injected")
        return plain(M)

    monkeypatch.setattr(np.linalg, "cholesky", flaky)
    L = chol_spd(A)
    assert np.allclose(L @ L.T, A, atol=1e-9)


# ---------------------------------------------------------------------------
# DesignMatrix


def test_design_matrix_shape_and_order(tri):
    assert tri.n == 2
    assert tri.m == 3
    assert tri.data.flags.f_contiguous
    cols = tri.columns([2, 0])
    assert cols.shape == (2, 2)
    assert np.array_equal(cols[:, 0], [1.0, 1.0])
    assert cols.flags.f_contiguous


def test_design_matrix_rejects_bad_input():
    with pytest.raises(DomainError):
        DesignMatrix(np.ones(3))  # 1-d
    with pytest.raises(DomainError):
        DesignMatrix(np.ones((1, 5)))  # n < 2
    with pytest.raises(DomainError):
        DesignMatrix(np.eye(3)[:, :2])  # fewer points than dimensions
    with pytest.raises(DomainError):
        DesignMatrix(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_design_matrix_rejects_rank_deficient():
    with pytest.raises(RankDeficientData):
        DesignMatrix(np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]))


# ---------------------------------------------------------------------------
# DesignWeights


def test_weights_round_trip(tri_opt):
    dense = tri_opt.to_dense()
    assert np.allclose(dense, 1.0 / 3.0)
    back = DesignWeights.from_dense(dense)
    assert np.array_equal(back.support, tri_opt.support)
    assert np.array_equal(back.values, tri_opt.values)
    assert back.size == 3


def test_weights_from_dense_drops_zeros():
    w = DesignWeights.from_dense(np.array([0.5, 0.0, 0.5, 0.0]))
    assert np.array_equal(w.support, [0, 2])
    assert w.m == 4


def test_weights_validation():
    with pytest.raises(DomainError):
        DesignWeights(np.array([0, 1]), np.array([0.5, 0.6]), 3)  # sum != 1
    with pytest.raises(DomainError):
        DesignWeights(np.array([1, 0]), np.array([0.5, 0.5]), 3)  # unsorted
    with pytest.raises(DomainError):
        DesignWeights(np.array([0, 3]), np.array([0.5, 0.5]), 3)  # range
    with pytest.raises(DomainError):
        DesignWeights(np.array([0, 1]), np.array([1.5, -0.5]), 3)  # negative
    with pytest.raises(DomainError):
        DesignWeights(np.array([], dtype=int), np.array([]), 3)  # empty
    with pytest.raises(DimensionMismatch):
        DesignWeights(np.array([0, 1]), np.array([1.0]), 3)


# ---------------------------------------------------------------------------
# information matrix / objective / ellipsoid: the e1, e2, (1,1) instance
# with uniform weights has M = [[2,1],[1,2]]/3, log det 1/3, H = [[2,-1],[-1,2]]


def test_info_matrix_frozen(tri, tri_opt):
    M = info_matrix(tri, tri_opt)
    assert np.allclose(M, np.array([[2.0, 1.0], [1.0, 2.0]]) / 3.0, atol=1e-15)


def test_info_matrix_dimension_mismatch(tri):
    w = DesignWeights(np.array([0, 1]), np.array([0.5, 0.5]), 4)
    with pytest.raises(DimensionMismatch):
        info_matrix(tri, w)


def test_log_det_objective_frozen(tri, tri_opt):
    assert log_det_objective(tri, tri_opt) == pytest.approx(-LOG3, abs=1e-12)


def test_log_det_objective_singular_support(tri):
    w = DesignWeights(np.array([0]), np.array([1.0]), 3)
    with pytest.raises(SingularInformation):
        log_det_objective(tri, w)


def test_ellipsoid_frozen(tri, tri_opt):
    E = ellipsoid_from_weights(tri, tri_opt)
    assert np.allclose(E.H, [[2.0, -1.0], [-1.0, 2.0]], atol=1e-12)
    assert E.logdet == pytest.approx(LOG3, abs=1e-12)
    assert E.n == 2


def test_ellipsoid_validation():
    H = np.array([[2.0, -1.0], [-1.0, 2.0]])
    L = np.linalg.cholesky(H)
    good = EllipsoidMatrix(H, L, 2.0 * float(np.sum(np.log(np.diag(L)))))
    assert good.logdet == pytest.approx(LOG3, abs=1e-12)
    with pytest.raises(DomainError):
        EllipsoidMatrix(np.array([[2.0, 0.5], [-0.5, 2.0]]), L, LOG3)
    with pytest.raises(DomainError):
        EllipsoidMatrix(H, L, LOG3 + 1.0)  # stale cached log det
    with pytest.raises(DomainError):
        EllipsoidMatrix(H, -L, LOG3)  # negative factor diagonal


def test_mahalanobis_frozen(tri, tri_opt):
    E = ellipsoid_from_weights(tri, tri_opt)
    assert mahalanobis(E, [1.0, 0.0]) == pytest.approx(2.0, abs=1e-12)
    assert mahalanobis(E, [1.0, 1.0]) == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(DimensionMismatch):
        mahalanobis(E, [1.0, 0.0, 0.0])


# ---------------------------------------------------------------------------
# duality gap certificate


def test_gap_zero_at_optimum(tri, tri_opt):
    gap, kmax = duality_gap_certificate(tri, tri_opt)
    assert gap == pytest.approx(0.0, abs=1e-12)
    assert kmax == pytest.approx(2.0, abs=1e-12)


def test_gap_frozen_off_optimum(tri):
    # equal mass on the two axis points: H = 2I, so (1,1) scores 4 and
    # the certificate is 2 log 2
    w = DesignWeights(np.array([0, 1]), np.array([0.5, 0.5]), 3)
    gap, kmax = duality_gap_certificate(tri, w)
    assert kmax == pytest.approx(4.0, abs=1e-12)
    assert gap == pytest.approx(2.0 * math.log(2.0), abs=1e-12)


def test_gap_respects_active_subset(tri):
    w = DesignWeights(np.array([0, 1]), np.array([0.5, 0.5]), 3)
    gap, kmax = duality_gap_certificate(tri, w, active=np.array([0, 1]))
    assert gap == pytest.approx(0.0, abs=1e-12)
    assert kmax == pytest.approx(2.0, abs=1e-12)


def test_gap_nonnegative_and_trace_identity():
    # for any weights: the certificate is nonnegative and the weighted
    # quadratic forms under the own ellipsoid average to exactly n
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(n + 1, 20))
        X = DesignMatrix(rng.standard_normal((n, m)))
        u = rng.dirichlet(np.full(m, 1.5))
        u = np.maximum(u, 1e-6)
        w = DesignWeights.from_dense(u / u.sum())
        gap, kmax = duality_gap_certificate(X, w)
        assert gap >= 0.0
        assert kmax >= n - 1e-9
        E = ellipsoid_from_weights(X, w)
        kappa = np.einsum("ij,ij->j", X.data, E.H @ X.data)
        assert float(w.to_dense() @ kappa) == pytest.approx(n, abs=1e-9)


# ---------------------------------------------------------------------------
# ExactDesign and rank-one exchanges


def test_from_counts_frozen(tri):
    d = ExactDesign.from_counts(tri, {0: 1, 1: 1, 2: 1})
    assert d.N == 3
    assert d.logdet == pytest.approx(LOG3, abs=1e-12)
    assert np.allclose(d.G, [[2.0, 1.0], [1.0, 2.0]], atol=1e-15)
    assert np.allclose(d.G @ d.Ginv, np.eye(2), atol=1e-12)
    assert np.array_equal(d.indices(), [0, 1, 2])


def test_from_counts_validation(tri):
    with pytest.raises(DomainError):
        ExactDesign.from_counts(tri, {})
    with pytest.raises(DomainError):
        ExactDesign.from_counts(tri, {5: 1})
    with pytest.raises(DomainError):
        ExactDesign.from_counts(tri, {0: 0, 1: 2})
    with pytest.raises(SingularInformation):
        ExactDesign.from_counts(tri, {0: 2})


def test_swap_frozen_ratio(tri):
    # replacing e1 by (1,1) in the identity design keeps det G = 1
    d = ExactDesign.from_counts(tri, {0: 1, 1: 1})
    ratio = d.swap(tri, 0, 2)
    assert ratio == pytest.approx(1.0, abs=1e-14)
    assert d.counts == {1: 1, 2: 1}
    assert d.logdet == pytest.approx(0.0, abs=1e-12)


def test_swap_to_singular_raises_without_mutating(tri):
    d = ExactDesign.from_counts(tri, {0: 1, 1: 1})
    before = d.logdet
    with pytest.raises(SingularAfterSwap):
        d.swap(tri, 1, 0)  # two copies of e1 are singular
    assert d.counts == {0: 1, 1: 1}
    assert d.logdet == before


def test_swap_validation(tri):
    d = ExactDesign.from_counts(tri, {0: 1, 1: 1})
    with pytest.raises(DomainError):
        d.swap(tri, 2, 0)  # 2 is not placed
    with pytest.raises(DomainError):
        d.swap(tri, 0, 9)  # out of range


def test_swap_update_returns_same_object(tri):
    d = ExactDesign.from_counts(tri, {0: 1, 1: 1})
    assert swap_update(d, tri, 0, 2) is d


def test_copy_is_independent(tri):
    d = ExactDesign.from_counts(tri, {0: 1, 1: 1, 2: 1})
    c = d.copy()
    c.swap(tri, 2, 0)
    assert d.counts == {0: 1, 1: 1, 2: 1}
    assert c.counts == {0: 2, 1: 1}
    assert d.logdet == pytest.approx(LOG3, abs=1e-12)


def test_swap_chain_fidelity():
    # a thousand random exchanges: cached log det and inverse never
    # drift more than 1e-10 (relative) from scratch recomputation
    rng = np.random.default_rng(11)
    n, m = 4, 40
    X = DesignMatrix(rng.standard_normal((n, m)))
    counts = {j: 2 for j in range(6)}
    d = ExactDesign.from_counts(X, counts)
    done = 0
    while done < 1000:
        placed = d.indices()
        i = int(placed[rng.integers(placed.size)])
        j = int(rng.integers(m))
        before = d.logdet
        try:
            ratio = d.swap(X, i, j)
        except SingularAfterSwap:
            continue
        done += 1
        oracle = logdet_counts(X.data, d.counts)
        assert abs(d.logdet - oracle) <= 1e-10 * max(1.0, abs(oracle))
        assert d.logdet - before == pytest.approx(math.log(ratio), abs=1e-9)
        assert sum(d.counts.values()) == d.N
    Gref = np.zeros((n, n))
    for k, c in d.counts.items():
        Gref += c * np.outer(X.data[:, k], X.data[:, k])
    assert np.allclose(d.G, Gref, atol=1e-8 * max(1.0, float(np.abs(Gref).max())))
    assert np.allclose(d.Ginv @ Gref, np.eye(n), atol=1e-8)


def test_refresh_resets_drift(tri):
    d = ExactDesign.from_counts(tri, {0: 1, 1: 1, 2: 1})
    d.Ginv = d.Ginv + 1e-3  # corrupt the cache, then rebuild from G
    d.refresh()
    assert np.allclose(d.G @ d.Ginv, np.eye(2), atol=1e-12)
    assert d.logdet == pytest.approx(LOG3, abs=1e-12)


# ---------------------------------------------------------------------------
# SolveReport


def test_report_round_trip():
    r = SolveReport(
        objective=-LOG3,
        duality_gap=1e-9,
        iterations=4,
        support_size=3,
        eliminated=10,
        wall_time=0.5,
        method="colgen",
        converged=True,
        extras={"rmp_stalls": 0},
    )
    assert SolveReport.from_dict(r.to_dict()) == r


def test_oracle_agrees_with_objective(tri, tri_opt):
    assert logdet_weighted(tri.data, tri_opt.to_dense()) == pytest.approx(
        log_det_objective(tri, tri_opt), abs=1e-12
    )

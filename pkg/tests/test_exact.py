"""Rounding, exchange local search, a priori bounds, and the brute-force
reference for integer designs."""

import math

import numpy as np
import pytest

from conftest import make_ortho
from oracles import logdet_counts
from optdesign.core import DesignMatrix, DesignWeights, ExactDesign
from optdesign.errors import DomainError, InfeasibleRounding, TooLarge
from optdesign.exact import (
    LocalSearchConfig,
    approx_bound,
    bound_report,
    brute_force_exact,
    local_search,
    round_to_exact,
    verify_lemma_tau,
)

LOG3 = math.log(3.0)


def test_search_config_validation():
    with pytest.raises(ValueError):
        LocalSearchConfig(variant="middle")
    with pytest.raises(ValueError):
        LocalSearchConfig(improve_tol=1.0)


# ---------------------------------------------------------------------------
# rounding


def test_remainder_rounding_frozen(tri):
    w = DesignWeights(np.arange(3), np.array([0.5, 0.3, 0.2]), 3)
    d = round_to_exact(w, 5, tri)
    # floors (2,1,1) leave one unit; remainders (.5,.5,0) tie and the
    # lower index wins
    assert d.counts == {0: 3, 1: 1, 2: 1}
    assert d.N == 5


def test_remainder_rounding_orthonormal():
    X = make_ortho(3)
    w = DesignWeights(np.arange(3), np.full(3, 1.0 / 3.0), 3)
    d = round_to_exact(w, 7, X)
    assert d.counts == {0: 3, 1: 2, 2: 2}


def test_topn_rounding_frozen(tri, tri_opt):
    d = round_to_exact(tri_opt, 2, tri, variant="topN")
    assert d.counts == {0: 1, 1: 1}


def test_topn_needs_enough_support(tri, tri_opt):
    with pytest.raises(InfeasibleRounding):
        round_to_exact(tri_opt, 4, tri, variant="topN")


def test_rounding_validation(tri, tri_opt):
    with pytest.raises(DomainError):
        round_to_exact(tri_opt, 1, tri)  # N below dimension
    with pytest.raises(DomainError):
        round_to_exact(tri_opt, 3, tri, variant="nearest")


def test_rounding_repairs_singular_mass(tri):
    # all-but-eps of the mass on one point rounds to a singular design;
    # the repair moves a unit to the best unused support point
    w = DesignWeights(np.arange(3), np.array([0.9, 0.05, 0.05]), 3)
    d = round_to_exact(w, 2, tri)
    assert d.counts == {0: 1, 2: 1}
    assert d.logdet == pytest.approx(0.0, abs=1e-12)


def test_rounding_preserves_total_mass():
    rng = np.random.default_rng(31)
    for _ in range(25):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(n + 2, 25))
        X = DesignMatrix(rng.standard_normal((n, m)))
        k = int(rng.integers(n, m + 1))
        sup = np.sort(rng.choice(m, size=k, replace=False))
        vals = rng.dirichlet(np.full(k, 1.0))
        vals = np.maximum(vals, 1e-9)
        vals /= vals.sum()
        w = DesignWeights(sup, vals, m)
        N = int(rng.integers(n, 3 * n + 4))
        try:
            d = round_to_exact(w, N, X)
        except InfeasibleRounding:
            continue
        assert d.N == N
        assert sum(d.counts.values()) == N
        assert set(d.counts) <= set(int(s) for s in sup)
        assert np.isfinite(d.logdet)


# ---------------------------------------------------------------------------
# local search


def test_local_search_frozen(tri):
    init = ExactDesign.from_counts(tri, {0: 2, 1: 1})
    res = local_search(tri, [0, 1, 2], init)
    assert res.converged
    assert res.swaps == 1
    assert res.design.counts == {0: 1, 1: 1, 2: 1}
    assert res.design.logdet == pytest.approx(LOG3, abs=1e-12)
    # the input design must not be mutated
    assert init.counts == {0: 2, 1: 1}


def test_local_search_first_improvement_variant(tri):
    init = ExactDesign.from_counts(tri, {0: 2, 1: 1})
    res = local_search(tri, [0, 1, 2], init, LocalSearchConfig(variant="first"))
    assert res.converged
    assert res.design.counts == {0: 1, 1: 1, 2: 1}


def test_local_search_already_optimal(tri):
    init = ExactDesign.from_counts(tri, {0: 1, 1: 1, 2: 1})
    res = local_search(tri, [0, 1, 2], init)
    assert res.converged
    assert res.swaps == 0


def test_local_search_swap_cap(tri):
    init = ExactDesign.from_counts(tri, {0: 2, 1: 1})
    res = local_search(tri, [0, 1, 2], init, LocalSearchConfig(max_swaps=0))
    assert not res.converged
    assert res.swaps == 0


def test_local_search_validation(tri):
    init = ExactDesign.from_counts(tri, {0: 1, 1: 1})
    with pytest.raises(DomainError):
        local_search(tri, [], init)
    with pytest.raises(DomainError):
        local_search(tri, [1, 2], init)  # design uses point 0
    with pytest.raises(DomainError):
        local_search(tri, [0, 9], init)


def test_local_search_never_decreases_logdet():
    rng = np.random.default_rng(37)
    for _ in range(10):
        n = int(rng.integers(2, 4))
        m = int(rng.integers(n + 3, 14))
        X = DesignMatrix(rng.standard_normal((n, m)))
        N = n + 2
        counts = {j: 1 for j in range(n)}
        counts[0] = counts.get(0, 0) + (N - n)
        init = ExactDesign.from_counts(X, counts)
        res = local_search(X, np.arange(m), init)
        assert res.design.logdet >= init.logdet - 1e-12
        assert logdet_counts(X.data, res.design.counts) == pytest.approx(
            res.design.logdet, abs=1e-9
        )


# ---------------------------------------------------------------------------
# bounds


def test_approx_bound_frozen():
    assert approx_bound(2, 2) == pytest.approx(2.0 * math.log(2.0), abs=1e-15)
    assert approx_bound(3, 2) == pytest.approx(2.0 * math.log(1.5), abs=1e-15)
    assert approx_bound(10**6, 3) < 1e-5
    with pytest.raises(DomainError):
        approx_bound(1, 2)


def test_bound_report_frozen(tri, tri_opt):
    design = ExactDesign.from_counts(tri, {0: 1, 1: 1, 2: 1})
    br = bound_report(tri, tri_opt, design)
    assert br.phi_rel == pytest.approx(-LOG3, abs=1e-12)
    assert br.h_nn == pytest.approx(2.0 * math.log(1.5), abs=1e-12)
    assert br.achieved == pytest.approx(-LOG3, abs=1e-12)
    assert br.lower_bound == pytest.approx(-LOG3 - 2.0 * math.log(1.5), abs=1e-12)
    assert abs(br.gap) <= 1e-12
    assert br.corollary_satisfied
    assert not br.degenerate_denominator


def test_bound_report_degenerate_denominator(tri, tri_opt):
    design = ExactDesign.from_counts(tri, {0: 1, 1: 1, 2: 1})
    br = bound_report(tri, tri_opt, design, phi_rel=0.0)
    assert br.degenerate_denominator
    assert br.gap == pytest.approx(LOG3, abs=1e-12)  # absolute, not relative


def test_bound_report_round_trip(tri, tri_opt):
    design = ExactDesign.from_counts(tri, {0: 1, 1: 1, 2: 1})
    br = bound_report(tri, tri_opt, design)
    assert type(br).from_dict(br.to_dict()) == br


def test_lemma_residual_nonpositive_at_local_optimum(tri):
    design = ExactDesign.from_counts(tri, {0: 1, 1: 1, 2: 1})
    assert verify_lemma_tau(tri, [0, 1, 2], design) <= 1e-8


def test_lemma_residual_positive_off_optimum(tri):
    design = ExactDesign.from_counts(tri, {0: 2, 1: 1})
    assert verify_lemma_tau(tri, [0, 1, 2], design) > 0.1


# ---------------------------------------------------------------------------
# brute force


def test_brute_force_frozen(tri):
    ld2, counts2 = brute_force_exact(tri, [0, 1, 2], 2)
    assert ld2 == pytest.approx(0.0, abs=1e-12)
    assert counts2 == {0: 1, 1: 1}
    ld3, counts3 = brute_force_exact(tri, [0, 1, 2], 3)
    assert ld3 == pytest.approx(LOG3, abs=1e-12)
    assert counts3 == {0: 1, 1: 1, 2: 1}


def test_brute_force_guards(tri):
    with pytest.raises(DomainError):
        brute_force_exact(tri, [0, 1, 2], 0)
    with pytest.raises(TooLarge):
        brute_force_exact(tri, [0, 1, 2], 3000)


def test_search_reaches_brute_force_on_small_instances():
    rng = np.random.default_rng(43)
    hits = 0
    total = 8
    for _ in range(total):
        n = 2
        m = int(rng.integers(4, 7))
        X = DesignMatrix(rng.standard_normal((n, m)))
        N = int(rng.integers(n, n + 3))
        best_ld, _ = brute_force_exact(X, np.arange(m), N)
        w = DesignWeights.from_dense(np.full(m, 1.0 / m))
        d0 = round_to_exact(w, N, X)
        res = local_search(X, np.arange(m), d0)
        assert res.converged
        assert res.design.logdet <= best_ld + 1e-9
        if abs(res.design.logdet - best_ld) <= 1e-9:
            hits += 1
    assert hits >= total // 2

import math
from collections import Counter

import numpy as np
import pytest

from gwcut.offspring import BINARY, MIXED, TERNARY, OffspringDist, leaf_count_pmf
from gwcut.rng import substream
from gwcut.sampler import (
    InfeasibleError, SamplerConfig, TreeTooLarge, conditioned_weights, empirical_generation_profile,
    leaf_probability, rejection_acceptance, sample_gw, sample_gw_n_leaves, sample_many,
    vertex_count_given_leaves,
)
from gwcut.trees import from_degree_sequence, validate


def _frequency_within(counts: Counter, trees, probs, draws: int, k_se: float):
    for t, p in zip(trees, probs):
        se = math.sqrt(p * (1 - p) / draws)
        assert abs(counts[t] / draws - p) <= k_se * se + 1e-12, (t, counts[t] / draws, p)


def test_unconditioned_single_vertex_and_three_leaves():
    rng = substream(5, 1)
    draws, single, three = 100_000, 0, 0
    for _ in range(draws):
        try:
            t = sample_gw(BINARY, rng, max_vertices=200)
        except TreeTooLarge:
            continue  # neither event can happen in a tree this big
        single += len(t) == 1
        three += t.n_leaves == 3
    for hits, p in ((single, 0.5), (three, 1 / 16)):
        assert abs(hits / draws - p) <= 3 * math.sqrt(p * (1 - p) / draws)


def test_degenerate_law_gives_a_point():
    point = OffspringDist.from_mapping({0: 1.0}, critical=False)
    assert len(sample_gw(point, np.random.default_rng(0))) == 1


def test_exact_enum_combs_are_equally_likely():
    trees, p = conditioned_weights(BINARY, 3)
    assert len(trees) == 2 and np.allclose(p, 0.5)


def test_infeasible_leaf_count():
    with pytest.raises(InfeasibleError):
        sample_gw_n_leaves(TERNARY, 4, np.random.default_rng(0))
    assert leaf_probability(TERNARY, 4) == 0.0


@pytest.mark.parametrize("method", ["cyclic", "rejection", "exact_enum"])
@pytest.mark.parametrize("nu", [BINARY, TERNARY, MIXED])
def test_every_method_returns_n_leaves(nu, method):
    rng = np.random.default_rng(3)
    for n in (1, 3, 5):
        t = sample_gw_n_leaves(nu, n, rng, SamplerConfig(method=method))
        assert t.n_leaves == n and validate(t) is None


@pytest.mark.parametrize("nu,n", [(MIXED, 2), (MIXED, 3), (MIXED, 4), (MIXED, 5), (BINARY, 5)])
def test_cyclic_shape_frequencies_match_enumeration(nu, n):
    draws = 100_000
    rng = substream(11, n, len(nu.pmf))
    counts = Counter(sample_gw_n_leaves(nu, n, rng) for _ in range(draws))
    trees, p = conditioned_weights(nu, n)
    assert set(counts) <= set(trees)
    _frequency_within(counts, trees, p, draws, 4)


def test_rejection_shape_frequencies_match_enumeration():
    draws = 20_000
    rng = substream(12)
    cfg = SamplerConfig(method="rejection")
    counts = Counter(sample_gw_n_leaves(MIXED, 4, rng, cfg) for _ in range(draws))
    trees, p = conditioned_weights(MIXED, 4)
    _frequency_within(counts, trees, p, draws, 4)


def test_rejection_acceptance_rate_n20():
    accepts, attempts = rejection_acceptance(BINARY, 20, 2000, substream(13))
    p = leaf_count_pmf(BINARY, 1, 20)
    rate = accepts / attempts
    se = p * math.sqrt((1 - p) / accepts)
    assert abs(rate - p) <= 3 * se


def test_vertex_count_concentrates_at_n_over_nu0():
    ts = sample_many(BINARY, 1000, 200, seed=4)
    assert all(t.n_leaves == 1000 for t in ts)
    assert abs(np.mean([len(t) for t in ts]) / 1000 - 2) <= 0.05 * 2
    law = vertex_count_given_leaves(MIXED, 1000)
    mean = sum(k * p for k, p in law.items()) / 1000
    assert abs(mean - 1 / MIXED.nu0) <= 0.05 / MIXED.nu0


def test_vertex_count_law_matches_enumeration():
    trees, p = conditioned_weights(MIXED, 5)
    exact = Counter()
    for t, q in zip(trees, p):
        exact[len(t)] += q
    law = vertex_count_given_leaves(MIXED, 5)
    assert set(law) == set(exact)
    assert all(abs(law[k] - exact[k]) < 1e-12 for k in law)


def test_leaf_probability_switches_method_consistently():
    from gwcut.sampler import _cyclic_tables

    assert math.exp(_cyclic_tables(MIXED, 300).log_total) == pytest.approx(leaf_probability(MIXED, 300), rel=1e-10)


def test_sample_many_is_deterministic_across_threads():
    a = sample_many(MIXED, 30, 12, seed=9, threads=1)
    b = sample_many(MIXED, 30, 12, seed=9, threads=2)
    assert a == b


def test_generation_profile_root_and_hat_bound():
    prof = empirical_generation_profile(BINARY, 50, 10, 200, seed=2)
    assert prof.mean[0] == 1 and prof.se[0] == 0
    assert np.all(prof.mean_hat == prof.mean)  # binary trees are their own hat trees
    prof = empirical_generation_profile(MIXED, 50, 10, 200, seed=2)
    assert np.all(prof.gap_mean <= 3 * prof.gap_se + 1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(method="magic")
    with pytest.raises(ValueError):
        SamplerConfig(max_attempts=0)


def test_rejection_budget_is_enforced():
    from gwcut.sampler import SamplerError

    with pytest.raises(SamplerError):
        sample_gw_n_leaves(BINARY, 200, np.random.default_rng(0), SamplerConfig(max_attempts=10, method="rejection"))


def test_from_degree_sequence_of_a_sample_round_trips():
    t = sample_gw_n_leaves(MIXED, 40, np.random.default_rng(1))
    assert from_degree_sequence(t.degrees) == t

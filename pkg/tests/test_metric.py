import math

import numpy as np
import pytest
from hypothesis import given, settings

from gwcut.experiments import random_prokhorov_instance
from gwcut.metric import (
    Correspondence, MeasuredTree, MetricError, distortion, erase, erasure_ghp, from_parents, from_tree,
    gh_lower, gh_upper, ghp_upper, is_tree_metric, lower_mass, prokhorov, prokhorov_bruteforce, rescale,
    tree_distances,
)
from gwcut.offspring import BINARY
from gwcut.rng import substream
from gwcut.sampler import sample_gw_n_leaves
from gwcut.trees import hat_transform, single_vertex

from test_trees import CHERRY, trees

PATH5 = (-1, 0, 1, 2, 3, 4)


def _path(n_edges: int, length: float = 1.0) -> MeasuredTree:
    mu = np.zeros(n_edges + 1)
    mu[-1] = 1.0
    return from_parents(list(range(-1, n_edges)), mu, np.full(n_edges + 1, length))


def test_from_tree_measures():
    T = from_tree(CHERRY, "uniform_leaves")
    assert T.mu.tolist() == [0, 0.5, 0.5]
    T = from_tree(CHERRY, "uniform_edges")
    assert T.mu.tolist() == [0, 0.5, 0.5]
    assert from_tree(single_vertex()).mu.tolist() == [1.0]
    assert from_tree(CHERRY, "uniform_vertices").mu == pytest.approx([1 / 3] * 3)
    with pytest.raises(MetricError):
        from_tree(single_vertex(), "uniform_edges")


def test_rescale_path():
    T = rescale(_path(10), 10)
    assert T.height == pytest.approx(1.0)
    with pytest.raises(MetricError):
        rescale(T, 0)


def test_csv_round_trip():
    T = from_tree(hat_transform(sample_gw_n_leaves(BINARY, 6, np.random.default_rng(0))))
    back = MeasuredTree.from_csv(*T.to_csv())
    assert np.array_equal(back.dist, T.dist) and np.allclose(back.mu, T.mu)


def test_identity_correspondence_and_full_relation():
    T = from_tree(CHERRY)
    assert distortion(Correspondence.identity(3), T, T) == 0
    P = from_tree(single_vertex())
    R = Correspondence.full(3, 1)
    assert gh_upper(R, T, P) == 1.0
    assert gh_upper(R, T, P) >= gh_lower(T, P) == 1.0
    b = ghp_upper(T, P, R)
    assert math.isfinite(b.total) and b.total >= gh_lower(T, P)
    assert ghp_upper(T, T, Correspondence.identity(3)).total == 0


def test_correspondence_must_cover_both_sides():
    with pytest.raises(MetricError):
        Correspondence.from_pairs([(0, 0), (1, 1)]).check(3, 2)
    with pytest.raises(MetricError):
        gh_upper(Correspondence.from_pairs([(0, 1), (1, 0), (2, 0)]), from_tree(CHERRY), from_tree(CHERRY))


@given(trees(max_branch=8))
@settings(max_examples=100, deadline=None)
def test_tree_and_hat_tree_are_close(t):
    h = hat_transform(t)
    pairs = [(o if o >= 0 else h.origin[h.parents[i]], i) for i, o in enumerate(h.origin)]
    assert gh_upper(Correspondence.from_pairs(pairs), from_tree(t), from_tree(h)) <= 1


def test_prokhorov_examples():
    D = np.array([[0.0, 0.3], [0.3, 0.0]])
    assert prokhorov(D, [0.5, 0.5], [0.5, 0.5]) == 0
    assert prokhorov(D, [1, 0], [0, 1]) == pytest.approx(0.3)
    assert prokhorov(D * 10, [1, 0], [0, 1]) == 1.0
    assert prokhorov(D, [0.8, 0.2], [0.5, 0.5]) == pytest.approx(0.3)
    D3 = np.array([[0, 0.2, 0.9], [0.2, 0, 0.7], [0.9, 0.7, 0]])
    a, b = [0.5, 0.5, 0.0], [0.0, 0.6, 0.4]
    assert prokhorov(D3, a, b) == pytest.approx(prokhorov_bruteforce(D3, a, b), abs=1e-12)


def test_prokhorov_matches_bruteforce_on_random_instances():
    rng = substream(3)
    for _ in range(100):
        D, a, b = random_prokhorov_instance(rng)
        assert abs(prokhorov(D, a, b) - prokhorov_bruteforce(D, a, b)) <= 1e-9


def test_prokhorov_symmetry_and_triangle():
    rng = substream(4)
    for _ in range(50):
        D, a, b = random_prokhorov_instance(rng)
        c = rng.dirichlet(np.ones(len(a)))
        ab, ba = prokhorov(D, a, b), prokhorov(D, b, a)
        assert ab == pytest.approx(ba, abs=1e-12)
        assert ab <= prokhorov(D, a, c) + prokhorov(D, c, b) + 1e-12


def test_prokhorov_rejects_unnormalised_measures():
    with pytest.raises(MetricError):
        prokhorov(np.zeros((2, 2)), [0.5, 0.4], [0.5, 0.5])


def test_erase_path():
    T = _path(5)
    E = erase(T, 2.0).tree
    assert E.height == pytest.approx(3.0)
    assert len(erase(T, 0.0).tree) == len(T)


def test_erase_star():
    star = from_parents([-1, 0, 0, 0], [0, 1 / 3, 1 / 3, 1 / 3], [0, 1, 2, 3])
    E = erase(star, 1.5).tree
    assert sorted(E.length[1:].tolist()) == pytest.approx([0.5, 1.5])
    assert E.mu.sum() == pytest.approx(1.0)


def test_erase_everything_leaves_the_root():
    E = erase(_path(2), 5.0).tree
    assert len(E) == 1 and E.mu.tolist() == [1.0]
    with pytest.raises(MetricError):
        erase(_path(2), -1)


def test_erasure_ghp_shrinks_with_eps():
    rng = substream(5)
    n = 500
    T = rescale(from_tree(sample_gw_n_leaves(BINARY, n, rng), "uniform_leaves"), math.sqrt(n))
    bounds = [erasure_ghp(T, eps).total for eps in (0.4, 0.2, 0.1)]
    assert bounds[0] > bounds[1] > bounds[2]


def test_lower_mass_examples():
    star = from_parents([-1, 0, 0, 0], [0, 1 / 3, 1 / 3, 1 / 3])
    assert lower_mass(star, 0.5) == pytest.approx(1 / 3)
    assert lower_mass(star, star.diameter) == pytest.approx(1.0)
    assert lower_mass(from_tree(CHERRY), 1.0) == pytest.approx(0.5)


@given(trees(max_branch=5))
@settings(max_examples=50, deadline=None)
def test_tree_distances_satisfy_four_point_condition(t):
    assert is_tree_metric(tree_distances(t.parents))


def test_weighted_distances():
    D = tree_distances(PATH5, [0, 1, 2, 3, 4, 5])
    assert D[0, 5] == 15 and D[2, 4] == 7
    assert not is_tree_metric(np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], float))

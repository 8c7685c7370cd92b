import math

import numpy as np
import pytest
from hypothesis import given, settings

from gwcut.cut import (
    EXTRA, TimedCutTree, block_law, coupled_cut_trees, cut_shape_law, cut_tree_shape_law,
    edge_cut_tree, first_cut_law_exact, first_split_bruteforce, vertex_cut_tree, vertex_from_clocks,
    law_gap, mb_leaf_depth, mb_shape_law, mb_split_law, mb_split_sample, mb_tree_sample,
    mod_cut_tree, mod_from_clocks,
)
from gwcut.experiments import check_mb_law, check_splitting_law, ks_two_sample
from gwcut.offspring import BINARY, MIXED, TERNARY, TEST_LAWS, OffspringError, norming
from gwcut.rng import substream
from gwcut.sampler import InfeasibleError, sample_gw_n_leaves
from gwcut.trees import TreeError, PlanarTree, hat_transform, single_vertex

from test_trees import CHERRY, TERNARY_STAR, trees


def tampered(nu, n, k, table):
    """The first-cut formula with k + 1 and k - 1 exchanged."""
    return ((k + 1) / (k - 1)) * nu[k] * ((n + 1) / (n - 1)) * table[k - 1, n + 1] / (nu.nu0 * table[1, n])


def _root_star(tree: TimedCutTree) -> list[int]:
    return sorted(tree.size[c] for c in tree.children[0])


def test_vertex_examples():
    rng = np.random.default_rng(0)
    c = vertex_cut_tree(CHERRY, rng)
    assert _root_star(c) == [1, 1, 1] and c.n_leaves == 3
    assert sorted(c.label[v] for v in c.leaves) == [0, 1, 2]
    assert len(vertex_cut_tree(single_vertex(), rng)) == 1
    c = vertex_cut_tree(TERNARY_STAR, rng)
    assert _root_star(c) == [1, 1, 1, 1]


def test_mod_examples():
    rng = np.random.default_rng(0)
    assert mod_cut_tree(CHERRY, rng).n_leaves == 3
    c = mod_cut_tree(TERNARY_STAR, rng)
    assert _root_star(c) == [1] * 5
    assert sum(c.label[v] == EXTRA for v in c.leaves) == 1


def test_edge_examples():
    rng = np.random.default_rng(0)
    c = edge_cut_tree(CHERRY, rng)
    assert _root_star(c) == [1, 1]
    c = edge_cut_tree(hat_transform(TERNARY_STAR), rng)
    assert _root_star(c) == [1, 1, 1, 1]
    with pytest.raises(TreeError):
        edge_cut_tree(PlanarTree((-1, 0)), rng)


@given(trees())
@settings(max_examples=150, deadline=None)
def test_cut_tree_leaf_counts(t):
    rng = np.random.default_rng(len(t))
    c = coupled_cut_trees(t, rng)
    n = t.n_leaves
    assert c.vertex.n_leaves == len(t)
    assert c.mod.n_leaves == 2 * n - 1
    if n >= 2:
        assert c.edge.n_leaves == 2 * n - 2
    if t.is_binary:
        assert c.vertex.shape() == c.mod.shape()
    assert all(v <= 2 + 1e-12 for v in c.distortions().values())


def test_coupled_cherry():
    c = coupled_cut_trees(CHERRY, np.random.default_rng(1))
    assert c.mod.n_leaves == 3 and c.edge.n_leaves == 2
    assert max(c.mod.depths) == max(c.edge.depths) == 1
    assert max(c.distortions().values()) <= 2
    assert (0, 0) in set(zip(c.mod_d.left, c.mod_d.right))


def test_clock_order_controls_the_cut_sequence():
    t = PlanarTree((-1, 0, 0, 2, 2))
    late_root = np.array([2.0, np.inf, 1.0, np.inf, np.inf])
    early_root = np.array([1.0, np.inf, 2.0, np.inf, np.inf])
    a = vertex_from_clocks(t, late_root)
    assert (a.label[0], a.time[0]) == (2, 1.0)  # vertex 2 goes first
    inner = [v for v in a.children[0] if a.children[v]]
    assert [(a.label[v], a.time[v]) for v in inner] == [(0, 2.0)]
    b = vertex_from_clocks(t, early_root)
    assert (b.label[0], b.time[0]) == (0, 1.0)
    assert max(a.depths) == max(b.depths) == 2
    assert mod_from_clocks(t, late_root).n_leaves == 5


def test_json_round_trip():
    c = mod_cut_tree(sample_gw_n_leaves(MIXED, 12, np.random.default_rng(2)), np.random.default_rng(3))
    back = TimedCutTree.from_json(c.to_json())
    assert back.parents == c.parents and back.label == c.label and back.time == c.time


def test_first_cut_examples():
    for n in (2, 3):
        law = first_cut_law_exact(BINARY, n)
        assert law.formula[2] == pytest.approx(1, abs=1e-15) and law.bruteforce[2] == pytest.approx(1, abs=1e-15)
    law = first_cut_law_exact(TERNARY, 3)
    assert law.formula[3] == pytest.approx(1, abs=1e-15)
    with pytest.raises(InfeasibleError):
        first_cut_law_exact(TERNARY, 4)


@pytest.mark.parametrize("name", list(TEST_LAWS))
def test_first_cut_formula_matches_bruteforce(name):
    nu = TEST_LAWS[name]
    for n in range(2, 7):
        try:
            law = first_cut_law_exact(nu, n)
        except InfeasibleError:
            continue
        assert law.max_gap <= 1e-12
        assert abs(law.formula_total - 1) <= 1e-12


def test_tampered_formula_fails_the_splitting_check():
    assert check_splitting_law(TEST_LAWS).passed
    assert not check_splitting_law(TEST_LAWS, formula=tampered).passed
    assert not check_mb_law(BINARY, 3, tampered).passed


def test_block_law_sums_to_one_and_matches_bruteforce():
    for nu, n in ((BINARY, 4), (MIXED, 5), (TERNARY, 5)):
        assert sum(block_law(nu, n).values()) == pytest.approx(1, abs=1e-12)
        assert law_gap(mb_split_law(nu, n), first_split_bruteforce(nu, n)) <= 1e-12


def test_full_shape_laws_agree():
    assert law_gap(cut_tree_shape_law(BINARY, 3), mb_shape_law(BINARY, 3)) <= 1e-12
    assert law_gap(cut_tree_shape_law(MIXED, 4), mb_shape_law(MIXED, 4)) <= 1e-12
    assert law_gap(cut_tree_shape_law(BINARY, 3), mb_shape_law(BINARY, 3, tampered)) > 1e-3


def test_cut_shape_law_of_cherry():
    law = cut_shape_law(CHERRY)
    assert len(law) == 1 and math.isclose(next(iter(law.values())), 1.0)


def test_mb_split_examples():
    rng = np.random.default_rng(4)
    assert all(mb_split_sample(BINARY, 2, rng) == (1, 1, 1) for _ in range(20))
    for nu, n in ((MIXED, 7), (TERNARY, 5), (BINARY, 9)):
        for _ in range(50):
            assert sum(mb_split_sample(nu, n, rng)) == 2 * n - 1


def test_mb_tree_examples():
    rng = np.random.default_rng(5)
    assert len(mb_tree_sample(BINARY, 1, rng)) == 1
    t = mb_tree_sample(BINARY, 2, rng)
    assert t.n_leaves == 3 and max(t.depths) == 1
    for n in (5, 17, 40):
        assert mb_tree_sample(MIXED, n, rng).n_leaves == 2 * n - 1


def test_mb_split_frequencies_binary_n4():
    draws = 100_000
    rng = substream(6)
    law = first_split_bruteforce(BINARY, 4)
    counts: dict = {}
    for _ in range(draws):
        s = mb_split_sample(BINARY, 4, rng)
        counts[s] = counts.get(s, 0) + 1
    assert set(counts) <= set(law)
    for s, p in law.items():
        se = math.sqrt(p * (1 - p) / draws)
        assert abs(counts.get(s, 0) / draws - p) <= 4 * se


def test_mb_depth_matches_mod_cut_tree_depth():
    n, reps = 300, 2000
    rng = substream(7)
    c = norming(BINARY, n).c_prime
    mb = [mb_leaf_depth(BINARY, n, rng) / c for _ in range(reps)]
    mod = []
    for _ in range(reps):
        tree = mod_cut_tree(sample_gw_n_leaves(BINARY, n, rng), rng)
        mod.append(tree.depths[tree.leaves[int(rng.integers(tree.n_leaves))]] / c)
    assert ks_two_sample(mb, mod)[1] > 0.01


def test_mb_leaf_depth_of_one_leaf_is_zero():
    assert mb_leaf_depth(BINARY, 1, np.random.default_rng(0)) == 0


def test_mb_depth_works_up_to_the_cap():
    from gwcut.cut.splitting import MB_CAP

    assert mb_leaf_depth(BINARY, MB_CAP, np.random.default_rng(0)) > 0
    with pytest.raises(OffspringError):
        mb_leaf_depth(BINARY, MB_CAP + 1, np.random.default_rng(0))

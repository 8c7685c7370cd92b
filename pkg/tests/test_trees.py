import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwcut.trees import (
    PlanarTree, TreeError, dumps_lines, enumerate_trees, from_degree_sequence, hat_transform,
    loads_lines, restrict, single_vertex, stats, validate,
)

CHERRY = from_degree_sequence([2, 0, 0])
SMALL_BINARY = from_degree_sequence([2, 0, 2, 0, 0])
TERNARY_STAR = from_degree_sequence([3, 0, 0, 0])


@st.composite
def trees(draw, max_branch=12, degrees=(2, 3, 4)):
    """Random planar trees without unary vertices, built from degree sequences."""
    seq = []
    slots = 1
    branches = draw(st.integers(0, max_branch))
    while slots:
        if branches and draw(st.booleans()):
            k = draw(st.sampled_from(degrees))
            branches -= 1
            seq.append(k)
            slots += k - 1
        else:
            seq.append(0)
            slots -= 1
    return from_degree_sequence(seq)


def test_validate_examples():
    assert validate(single_vertex()) is None
    assert validate(CHERRY) is None
    assert "unary" in validate(PlanarTree((-1, 0)))
    assert validate(PlanarTree((-1, 0)), no_unary=False) is None


def test_validate_rejects_broken_parent_arrays():
    assert validate(PlanarTree((-1, -1))) == "multiple roots"
    assert "order" in validate(PlanarTree((-1, 2, 0)), no_unary=False)


def test_stats_examples():
    s = stats(CHERRY)
    assert (s.n_vertices, s.n_leaves, s.generation_sizes) == (3, 2, (1, 2))
    s = stats(SMALL_BINARY)
    assert (s.n_vertices, s.n_leaves, s.generation_sizes[2]) == (5, 3, 2)
    s = stats(single_vertex())
    assert (s.n_vertices, s.n_leaves) == (1, 1)


def test_hat_transform_examples():
    assert hat_transform(SMALL_BINARY).parents == SMALL_BINARY.parents
    h = hat_transform(TERNARY_STAR)
    assert len(h) == 5 and h.degrees[0] == 4
    assert h.origin[1] == -1  # the added child is leftmost
    quad = hat_transform(from_degree_sequence([4, 0, 0, 0, 0]))
    assert len(quad) == 7 and len(quad) - 1 == 6


def test_hat_transform_rejects_unary():
    with pytest.raises(TreeError):
        hat_transform(PlanarTree((-1, 0)))


@given(trees())
@settings(max_examples=200, deadline=None)
def test_hat_tree_has_2n_minus_1_vertices(t):
    h = hat_transform(t)
    assert len(h) == 2 * t.n_leaves - 1
    assert h.n_leaves == 2 * t.n_leaves - 1 - len(t.branch_points)
    assert validate(h) is None


@given(trees())
@settings(max_examples=100, deadline=None)
def test_json_round_trip(t):
    assert PlanarTree.from_json(t.to_json()) == t
    assert loads_lines(dumps_lines([t, CHERRY])) == [t, CHERRY]


def test_enumeration_counts():
    assert enumerate_trees(1, {2}) == [single_vertex()]
    assert len(enumerate_trees(3, {2})) == 2
    assert len(enumerate_trees(3, {3})) == 1
    # Catalan numbers for binary trees
    for n in range(1, 8):
        assert len(enumerate_trees(n, {2})) == math.comb(2 * n - 2, n - 1) // n


def test_enumeration_is_duplicate_free():
    ts = enumerate_trees(5, {2, 3})
    assert len(set(ts)) == len(ts)
    assert all(t.n_leaves == 5 and validate(t) is None for t in ts)


def test_restrict_keeps_first_generations():
    r = restrict(SMALL_BINARY, 1)
    assert len(r) == 3 and stats(r).generation_sizes == (1, 2)

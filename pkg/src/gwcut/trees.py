"""Rooted planar trees stored as parent arrays in depth-first order."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

ENUMERATION_CAP = 8


class TreeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PlanarTree:
    """A rooted planar tree.

    ``parents[v]`` is the parent of vertex ``v`` (``-1`` for the root). Children
    are ordered by index, so a tree whose vertices are numbered in depth-first
    order has vertex ``j`` equal to the j-th vertex visited by the contour.

    ``origin`` is only set on trees produced by :func:`hat_transform`; it maps
    each vertex to its index in the source tree, or ``-1`` for added leaves.
    """

    parents: tuple[int, ...]
    origin: tuple[int, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(int(p) for p in self.parents))
        if self.origin is not None:
            object.__setattr__(self, "origin", tuple(int(o) for o in self.origin))

    def __eq__(self, other):
        if not isinstance(other, PlanarTree):
            return NotImplemented
        return self.parents == other.parents

    def __hash__(self):
        return hash(self.parents)

    def __len__(self):
        return len(self.parents)

    @property
    def n_vertices(self) -> int:
        return len(self.parents)

    @property
    def root(self) -> int:
        return self.parents.index(-1)

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in self.parents]
        for v, p in enumerate(self.parents):
            if 0 <= p < len(kids):
                kids[p].append(v)
        return tuple(tuple(c) for c in kids)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.children)

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        return tuple(v for v, k in enumerate(self.degrees) if k == 0)

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    @cached_property
    def branch_points(self) -> tuple[int, ...]:
        return tuple(v for v, k in enumerate(self.degrees) if k > 0)

    @cached_property
    def depths(self) -> tuple[int, ...]:
        # valid trees are in depth-first order, so parents precede children
        d = [0] * len(self.parents)
        for v, p in enumerate(self.parents):
            if p >= 0:
                d[v] = d[p] + 1
        return tuple(d)

    @property
    def height(self) -> int:
        return max(self.depths)

    @property
    def is_binary(self) -> bool:
        return all(k in (0, 2) for k in self.degrees)

    def to_json(self) -> str:
        return json.dumps({"parents": list(self.parents)}, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "PlanarTree":
        return cls(tuple(json.loads(text)["parents"]))


def single_vertex() -> PlanarTree:
    return PlanarTree((-1,))


def from_degree_sequence(degrees: Sequence[int]) -> PlanarTree:
    """Build the tree whose depth-first offspring counts are ``degrees``."""
    n = len(degrees)
    if n == 0:
        raise TreeError("empty degree sequence")
    parents = [-1] * n
    stack: list[list[int]] = []
    for i, k in enumerate(degrees):
        if i > 0:
            if not stack:
                raise TreeError("degree sequence closes before its end")
            top = stack[-1]
            parents[i] = top[0]
            top[1] -= 1
            if top[1] == 0:
                stack.pop()
        if k < 0:
            raise TreeError("negative degree")
        if k > 0:
            stack.append([i, int(k)])
    if stack:
        raise TreeError("degree sequence ends with unfilled child slots")
    return PlanarTree(tuple(parents))


def validate(t: PlanarTree, no_unary: bool = True) -> str | None:
    """Return ``None`` for a valid tree, otherwise the first violation found."""
    parents = t.parents
    n = len(parents)
    if n == 0:
        return "empty tree"
    roots = [v for v, p in enumerate(parents) if p == -1]
    if len(roots) == 0:
        return "no root"
    if len(roots) > 1:
        return "multiple roots"
    for v, p in enumerate(parents):
        if p != -1 and not 0 <= p < n:
            return f"parent of vertex {v} out of range"
        if p == v:
            return f"cycle at vertex {v}"
    # every vertex must reach the root
    state = [0] * n  # 0 unseen, 1 on current path, 2 reaches root
    state[roots[0]] = 2
    for v in range(n):
        path = []
        u = v
        while state[u] == 0:
            state[u] = 1
            path.append(u)
            u = parents[u]
        if state[u] == 1:
            return f"cycle through vertex {u}"
        for w in path:
            state[w] = 2
    if roots[0] != 0 or _preorder(t) != list(range(n)):
        return "vertices not in depth-first order"
    if no_unary:
        for v, k in enumerate(t.degrees):
            if k == 1:
                return f"unary vertex {v}"
    return None


def _preorder(t: PlanarTree) -> list[int]:
    order = []
    stack = [t.root]
    kids = t.children
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(reversed(kids[v]))
    return order


def check(t: PlanarTree, no_unary: bool = True) -> PlanarTree:
    problem = validate(t, no_unary)
    if problem:
        raise TreeError(problem)
    return t


def relabel_depth_first(t: PlanarTree) -> PlanarTree:
    """Renumber vertices in depth-first order, keeping each child list's order."""
    order = _preorder(t)
    new = {v: i for i, v in enumerate(order)}
    return PlanarTree(tuple(-1 if t.parents[v] == -1 else new[t.parents[v]] for v in order))


@dataclass(frozen=True)
class TreeStats:
    n_vertices: int
    n_leaves: int
    generation_sizes: tuple[int, ...]
    generation_leaves: tuple[int, ...]

    @property
    def max_generation(self) -> int:
        return len(self.generation_sizes) - 1


def stats(t: PlanarTree) -> TreeStats:
    depths = t.depths
    h = max(depths)
    sizes = [0] * (h + 1)
    leaves = [0] * (h + 1)
    for v, d in enumerate(depths):
        sizes[d] += 1
        if t.degrees[v] == 0:
            leaves[d] += 1
    return TreeStats(len(depths), t.n_leaves, tuple(sizes), tuple(leaves))


def restrict(t: PlanarTree, k: int) -> PlanarTree:
    """The subtree of vertices at generation at most ``k``."""
    keep = [v for v, d in enumerate(t.depths) if d <= k]
    new = {v: i for i, v in enumerate(keep)}
    return PlanarTree(tuple(-1 if t.parents[v] == -1 else new[t.parents[v]] for v in keep))


def hat_transform(t: PlanarTree) -> PlanarTree:
    """Give every branch point with k children k-2 extra leftmost leaf children."""
    if any(k == 1 for k in t.degrees):
        raise TreeError("hat transform needs a tree without unary vertices")
    new_index = [0] * len(t)
    parents: list[int] = []
    origin: list[int] = []
    for v in range(len(t)):
        p = t.parents[v]
        new_index[v] = len(parents)
        parents.append(-1 if p == -1 else new_index[p])
        origin.append(v)
        extra = t.degrees[v] - 2
        if extra > 0:
            parents.extend([new_index[v]] * extra)
            origin.extend([-1] * extra)
    return PlanarTree(tuple(parents), origin=tuple(origin))


def _compositions(n: int, k: int) -> Iterable[tuple[int, ...]]:
    for cuts in itertools.combinations(range(1, n), k - 1):
        edges = (0,) + cuts + (n,)
        yield tuple(edges[i + 1] - edges[i] for i in range(k))


@lru_cache(maxsize=None)
def _degree_sequences(n: int, support: frozenset[int]) -> tuple[tuple[int, ...], ...]:
    if n == 1:
        return ((0,),)
    out = []
    for k in sorted(support):
        if k > n:
            continue
        for parts in _compositions(n, k):
            for subs in itertools.product(*(_degree_sequences(m, support) for m in parts)):
                out.append((k,) + tuple(itertools.chain.from_iterable(subs)))
    return tuple(out)


def enumerate_trees(n_leaves: int, support: Iterable[int], cap: int = ENUMERATION_CAP) -> list[PlanarTree]:
    """All planar trees with ``n_leaves`` leaves and branch degrees in ``support``."""
    support = frozenset(int(k) for k in support)
    if n_leaves < 1:
        raise TreeError("need at least one leaf")
    if n_leaves > cap:
        raise TreeError(f"enumeration capped at {cap} leaves")
    if 1 in support or 0 in support:
        raise TreeError("support must only contain branch degrees >= 2")
    return [from_degree_sequence(s) for s in _degree_sequences(n_leaves, support)]


def dumps_lines(trees: Iterable[PlanarTree]) -> str:
    return "".join(t.to_json() + "\n" for t in trees)


def loads_lines(text: str) -> list[PlanarTree]:
    return [PlanarTree.from_json(line) for line in text.splitlines() if line.strip()]

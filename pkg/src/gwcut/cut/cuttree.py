"""Cut-trees of planar trees built from one exponential clock per branch point.

Cutting the branch point of a component whose clock rings first is the same as
picking it with probability proportional to its rate, so a clock vector fixes
the whole cut sequence. Cut-trees are assembled backwards in time: going from
the last cut to the first, each cut merges the components it created into one
new node.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from ..metric import Correspondence, distortion_matrices, tree_distances
from ..trees import PlanarTree, check, hat_transform

KINDS = ("vertex", "mod", "edge", "mb")
EXTRA = -1  # label of the singletons appended by the modified construction


@dataclass(frozen=True, eq=False)
class TimedCutTree:
    """A cut-tree in depth-first order.

    Internal nodes are components, labelled by the vertex they were cut at and
    carrying the cut time. Leaves are final fragments labelled by the vertex
    (or, for edge fragmentations, the edge) they contain, ``-1`` for the
    appended singletons; their time is ``inf``. ``size`` is the number of
    leaves below a node.
    """

    parents: tuple[int, ...]
    label: tuple[int, ...]
    time: tuple[float, ...]
    kind: str
    size: tuple[int, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown cut-tree kind {self.kind!r}")
        if not self.size:
            size = [0] * len(self.parents)
            for v in range(len(self.parents) - 1, -1, -1):
                if not self.children[v]:
                    size[v] = 1
                p = self.parents[v]
                if p >= 0:
                    size[p] += size[v]
            object.__setattr__(self, "size", tuple(size))

    def __len__(self):
        return len(self.parents)

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        return PlanarTree(self.parents).children

    @cached_property
    def depths(self) -> tuple[int, ...]:
        return PlanarTree(self.parents).depths

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        return tuple(v for v, c in enumerate(self.children) if not c)

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    @cached_property
    def leaf_of(self) -> dict[int, int]:
        """Map from the fragment label of a leaf to its node index (appended singletons excluded)."""
        return {self.label[v]: v for v in self.leaves if self.label[v] != EXTRA}

    @cached_property
    def node_of_cut(self) -> dict[int, int]:
        return {self.label[v]: v for v, c in enumerate(self.children) if c}

    def as_planar(self) -> PlanarTree:
        return PlanarTree(self.parents)

    def distances(self) -> np.ndarray:
        return tree_distances(self.parents)

    def shape(self):
        """Canonical unordered shape: a leaf is ``()``, a node the sorted tuple of its children."""
        shapes: list = [None] * len(self)
        for v in range(len(self) - 1, -1, -1):
            shapes[v] = tuple(sorted(shapes[c] for c in self.children[v]))
        return shapes[0]

    def to_json(self) -> str:
        nodes = [
            {"size": s, "cut_vertex": (lab if c else None), "fragment": (None if c else lab),
             "time": (None if math.isinf(t) else t)}
            for s, lab, t, c in zip(self.size, self.label, self.time, self.children)
        ]
        return json.dumps({"kind": self.kind, "parents": list(self.parents), "nodes": nodes}, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "TimedCutTree":
        d = json.loads(text)
        label, time = [], []
        for node in d["nodes"]:
            lab = node["cut_vertex"] if node["cut_vertex"] is not None else node["fragment"]
            label.append(lab)
            time.append(math.inf if node["time"] is None else node["time"])
        return cls(tuple(d["parents"]), tuple(label), tuple(time), d["kind"], tuple(n["size"] for n in d["nodes"]))


# --- assembling a cut-tree from a node list --------------------------------


class _Builder:
    """Nodes with ordered children, later renumbered in depth-first order."""

    def __init__(self):
        self.kids: list[list[int]] = []
        self.label: list[int] = []
        self.time: list[float] = []

    def leaf(self, label: int) -> int:
        self.kids.append([])
        self.label.append(label)
        self.time.append(math.inf)
        return len(self.kids) - 1

    def node(self, kids: list[int], label: int, time: float) -> int:
        self.kids.append(kids)
        self.label.append(label)
        self.time.append(time)
        return len(self.kids) - 1

    def finish(self, root: int, kind: str, skip=frozenset()) -> tuple[TimedCutTree, dict[int, int]]:
        order: list[int] = []
        parent_of: dict[int, int] = {root: -1}
        stack = [root]
        while stack:
            x = stack.pop()
            order.append(x)
            for c in reversed(self.kids[x]):
                if c not in skip:
                    parent_of[c] = x
                    stack.append(c)
        new = {x: i for i, x in enumerate(order)}
        parents = tuple(-1 if parent_of[x] < 0 else new[parent_of[x]] for x in order)
        tree = TimedCutTree(parents, tuple(self.label[x] for x in order), tuple(self.time[x] for x in order), kind)
        return tree, new


class _UnionFind:
    def __init__(self, n: int):
        self.up = list(range(n))
        self.top = list(range(n))  # builder node currently holding each set (valid at roots)

    def find(self, x: int) -> int:
        up = self.up
        r = x
        while up[r] != r:
            r = up[r]
        while up[x] != r:
            up[x], x = r, up[x]
        return r

    def merge(self, items: Sequence[int], node: int):
        roots = [self.find(x) for x in items]
        r = roots[0]
        for s in roots[1:]:
            self.up[s] = r
        self.top[r] = node


# --- clocks ----------------------------------------------------------------


def draw_clocks(t: PlanarTree, rates: Sequence[float] | np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Independent exponential clocks, ``inf`` where the rate is 0."""
    rates = np.asarray(rates, dtype=float)
    e = rng.standard_exponential(len(rates))
    with np.errstate(divide="ignore"):
        return np.where(rates > 0, e / np.where(rates > 0, rates, 1.0), np.inf)


def vertex_rates(t: PlanarTree) -> np.ndarray:
    """Rate k_v - 1 at each branch point."""
    return np.array([k - 1 if k > 0 else 0 for k in t.degrees], dtype=float)


def edge_rates(t_hat: PlanarTree) -> np.ndarray:
    """Rate k_v at each branch point."""
    return np.array(t_hat.degrees, dtype=float)


def _cut_order(t: PlanarTree, clocks: np.ndarray) -> list[int]:
    """Branch points from the last cut to the first."""
    branch = np.array(t.branch_points, dtype=np.int64)
    return branch[np.argsort(-clocks[branch], kind="stable")].tolist()


def _vertex_cut(t: PlanarTree, clocks: np.ndarray, modified: bool):
    b = _Builder()
    for v in range(len(t)):
        b.leaf(v)
    uf = _UnionFind(len(t))
    extras = set()
    for v in _cut_order(t, clocks):
        kids_v = t.children[v]
        items = [v, *kids_v]
        kids = [uf.top[uf.find(x)] for x in items]
        if modified:
            for _ in range(len(kids_v) - 2):
                e = b.leaf(EXTRA)
                extras.add(e)
                kids.append(e)
        node = b.node(kids, v, float(clocks[v]))
        uf.merge(items, node)
    return b, uf.top[uf.find(t.root)], extras


def _check_clocks(t: PlanarTree, clocks) -> np.ndarray:
    clocks = np.asarray(clocks, dtype=float)
    if clocks.shape != (len(t),):
        raise ValueError("need one clock per vertex")
    branch = np.array(t.degrees) > 0
    if not np.isfinite(clocks[branch]).all():
        raise ValueError("every branch point needs a finite clock")
    return clocks


def vertex_from_clocks(t: PlanarTree, clocks) -> TimedCutTree:
    clocks = _check_clocks(t, clocks)
    b, root, _ = _vertex_cut(t, clocks, modified=False)
    return b.finish(root, "vertex")[0]


def mod_from_clocks(t: PlanarTree, clocks) -> TimedCutTree:
    clocks = _check_clocks(t, clocks)
    b, root, _ = _vertex_cut(t, clocks, modified=True)
    return b.finish(root, "mod")[0]


def edge_from_clocks(t_hat: PlanarTree, clocks) -> TimedCutTree:
    """Edge fragmentation: a cut at v removes the edges from v to its children.

    Edge ids are child vertex indices, so the leaves carry labels 1..m. The
    children of the node cut at v are, in order: the component still holding
    the edge above v (absent when that edge was already removed), the removed
    edges as singletons, then the nonempty components below each child.
    """
    clocks = _check_clocks(t_hat, clocks)
    n = len(t_hat)
    b = _Builder()
    if n == 1:
        return b.finish(b.node([], t_hat.root, math.inf), "edge")[0]
    leaf_node = [-1] + [b.leaf(e) for e in range(1, n)]
    uf = _UnionFind(n)
    for e in range(1, n):
        uf.top[e] = leaf_node[e]
    par = t_hat.parents
    for v in _cut_order(t_hat, clocks):
        kids_v = t_hat.children[v]
        kids = []
        items = list(kids_v)
        if par[v] >= 0 and clocks[par[v]] > clocks[v]:
            kids.append(uf.top[uf.find(v)])
            items.append(v)
        kids.extend(leaf_node[w] for w in kids_v)
        for w in kids_v:
            if t_hat.children[w] and clocks[w] > clocks[v]:
                first = t_hat.children[w][0]
                kids.append(uf.top[uf.find(first)])
                items.append(first)
        node = b.node(kids, v, float(clocks[v]))
        uf.merge(items, node)
    return b.finish(uf.top[uf.find(1)], "edge")[0]


def vertex_cut_tree(t: PlanarTree, rng: np.random.Generator) -> TimedCutTree:
    """Vertex cut-tree: branch points chosen with weight k_v - 1 within their component."""
    check(t)
    return vertex_from_clocks(t, draw_clocks(t, vertex_rates(t), rng))


def mod_cut_tree(t: PlanarTree, rng: np.random.Generator) -> TimedCutTree:
    """Vertex cut-tree with k - 2 extra singletons appended at every split.

    Given the same generator state it uses the same cuts as :func:`vertex_cut_tree`.
    """
    check(t)
    return mod_from_clocks(t, draw_clocks(t, vertex_rates(t), rng))


def edge_cut_tree(t_hat: PlanarTree, rng: np.random.Generator) -> TimedCutTree:
    """Edge cut-tree: branch points chosen with weight k_v within their component."""
    check(t_hat)
    return edge_from_clocks(t_hat, draw_clocks(t_hat, edge_rates(t_hat), rng))


# --- the coupling ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoupledCutTrees:
    """Cut-trees of t and of its hat tree driven by one clock vector.

    ``vertex_mod`` relates the plain vertex cut-tree to the modified one (each
    appended singleton goes to its split node); ``mod_d`` relates the modified
    cut-tree to the edge cut-tree of the hat tree; ``tree_hat`` relates t to
    its hat tree.
    """

    tree: PlanarTree
    tree_hat: PlanarTree
    clocks: np.ndarray
    vertex: TimedCutTree
    mod: TimedCutTree
    edge: TimedCutTree
    vertex_mod: Correspondence
    mod_d: Correspondence
    tree_hat_corr: Correspondence

    def distortions(self) -> dict[str, float]:
        """Distortion of each of the three correspondences."""
        return {
            "tree_hat": distortion_matrices(self.tree_hat_corr, tree_distances(self.tree.parents),
                                            tree_distances(self.tree_hat.parents)),
            "vertex_mod": distortion_matrices(self.vertex_mod, self.vertex.distances(), self.mod.distances()),
            "mod_edge": distortion_matrices(self.mod_d, self.mod.distances(), self.edge.distances()),
        }


def _mod_edge_pairs(mod: TimedCutTree, d: TimedCutTree, hat_index: Sequence[int]) -> list[tuple[int, int]]:
    if len(d) == 1 and not d.children[0]:
        return [(x, 0) for x in range(len(mod))]
    partner_md = {x: d.node_of_cut[hat_index[mod.label[x]]] for x, c in enumerate(mod.children) if c}
    partner_dm = {y: x for x, y in partner_md.items()}
    pairs = list(partner_md.items())
    pairs += [(x, partner_md[mod.parents[x]]) for x in mod.leaves]
    pairs += [(partner_dm[d.parents[y]], y) for y in d.leaves]
    return pairs


def coupled_from_clocks(t: PlanarTree, clocks) -> CoupledCutTrees:
    clocks = _check_clocks(t, clocks)
    t_hat = hat_transform(t)
    hat_index = [0] * len(t)
    for i, o in enumerate(t_hat.origin):
        if o >= 0:
            hat_index[o] = i
    hat_clocks = np.full(len(t_hat), np.inf)
    hat_clocks[hat_index] = clocks
    b, root, extras = _vertex_cut(t, clocks, modified=True)
    mod, new_mod = b.finish(root, "mod")
    vertex, new_vertex = b.finish(root, "vertex", skip=frozenset(extras))
    d = edge_from_clocks(t_hat, hat_clocks)

    vertex_mod = [(new_vertex[x], new_mod[x]) for x in new_vertex]
    vertex_mod += [(new_vertex[p], new_mod[e]) for p, kids in enumerate(b.kids) for e in kids if e in extras]

    if len(t) == 1:
        mod_d = [(0, 0)]
    else:
        mod_d = _mod_edge_pairs(mod, d, hat_index)

    th = [(o if o >= 0 else t_hat.origin[t_hat.parents[i]], i) for i, o in enumerate(t_hat.origin)]
    return CoupledCutTrees(
        t, t_hat, clocks, vertex, mod, d,
        Correspondence.from_pairs(vertex_mod), Correspondence.from_pairs(mod_d), Correspondence.from_pairs(th),
    )


def coupled_cut_trees(t: PlanarTree, rng: np.random.Generator) -> CoupledCutTrees:
    """One cut sequence on t (weights k - 1) drives the plain and modified vertex
    cut-trees and the edge cut-tree of the hat tree, whose branch points have
    degree 2k - 2."""
    check(t)
    return coupled_from_clocks(t, draw_clocks(t, vertex_rates(t), rng))


# --- exact laws of small cut-trees -----------------------------------------


def cut_shape_law(t: PlanarTree, modified: bool = False) -> dict:
    """Exact law of the unordered shape of the vertex cut-tree of ``t``."""
    check(t)
    kids = t.children
    memo: dict[frozenset, dict] = {}

    def law(comp: frozenset) -> dict:
        if comp in memo:
            return memo[comp]
        branch = [v for v in comp if kids[v] and kids[v][0] in comp]
        if not branch:
            memo[comp] = {(): 1.0}
            return memo[comp]
        weights = {v: len(kids[v]) - 1 for v in branch}
        total = sum(weights.values())
        out: dict = {}
        for v, w in weights.items():
            parts = [_component(comp, v, kids, above=True)] + [_component(comp, c, kids) for c in kids[v]]
            sub = _product([law(p) for p in parts])
            extra = ((),) * (len(kids[v]) - 2 if modified else 0)
            for shape, p in sub.items():
                key = tuple(sorted(shape + extra))
                out[key] = out.get(key, 0.0) + p * w / total
        memo[comp] = out
        return out

    return law(frozenset(range(len(t))))


def _component(comp: frozenset, v: int, kids, above: bool = False) -> frozenset:
    """Vertices of ``comp`` reachable from v without using v's child edges (above)
    or the part of ``comp`` in v's subtree (below)."""
    if above:
        below = set()
        stack = list(kids[v])
        while stack:
            x = stack.pop()
            if x in comp:
                below.add(x)
                stack.extend(kids[x])
        return frozenset(comp - below)
    out = set()
    stack = [v]
    while stack:
        x = stack.pop()
        if x in comp:
            out.add(x)
            stack.extend(kids[x])
    return frozenset(out)


def _product(laws: list[dict]) -> dict:
    """Law of the tuple of independent shapes, stored as sorted tuples."""
    acc: dict = {(): 1.0}
    for lw in laws:
        nxt: dict = {}
        for a, pa in acc.items():
            for s, ps in lw.items():
                key = a + (s,)
                nxt[key] = nxt.get(key, 0.0) + pa * ps
        acc = nxt
    out: dict = {}
    for k, p in acc.items():
        key = tuple(sorted(k))
        out[key] = out.get(key, 0.0) + p
    return out

"""Finite rooted measured metric trees and distances between them.

Gromov-Hausdorff type distances are only ever bounded from above, through an
explicit correspondence; the Prokhorov distance on a common finite space is
computed exactly.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import networkx as nx
import numpy as np

from .trees import PlanarTree

MEASURES = ("uniform_leaves", "uniform_edges", "uniform_vertices")
MASS_TOL = 1e-9


class MetricError(ValueError):
    pass


def ancestor_matrix(parents: Sequence[int]) -> np.ndarray:
    """A[i, j] = 1 iff j is i or an ancestor of i. Parents must precede children."""
    m = len(parents)
    A = np.zeros((m, m), dtype=np.float64)
    for v, p in enumerate(parents):
        if p >= 0:
            A[v] = A[p]
        A[v, v] = 1.0
    return A


def tree_distances(parents: Sequence[int], lengths: Sequence[float] | None = None) -> np.ndarray:
    """All-pairs distances of a rooted tree given in depth-first order."""
    A = ancestor_matrix(parents)
    w = np.ones(len(parents)) if lengths is None else np.asarray(lengths, dtype=float).copy()
    w[[v for v, p in enumerate(parents) if p < 0]] = 0.0
    depth = A @ w
    lca_depth = (A * w) @ A.T
    D = depth[:, None] + depth[None, :] - 2 * lca_depth
    np.fill_diagonal(D, 0.0)
    return np.maximum(D, 0.0)


@dataclass(frozen=True, eq=False)
class MeasuredTree:
    """Finite rooted metric tree with an atomic probability measure.

    ``parent`` and ``length`` are kept when the tree comes from explicit edges;
    erasure needs them, distance computations do not.
    """

    dist: np.ndarray
    root: int
    mu: np.ndarray
    parent: tuple[int, ...] | None = field(default=None, repr=False)
    length: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        mu = np.asarray(self.mu, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] != mu.shape[0]:
            raise MetricError("distance matrix and measure sizes disagree")
        if not 0 <= self.root < len(mu):
            raise MetricError("root outside the point set")
        if (mu < 0).any() or abs(mu.sum() - 1) > MASS_TOL:
            raise MetricError("measure must be a probability vector")
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "mu", mu)

    def __len__(self):
        return len(self.mu)

    @property
    def height(self) -> float:
        return float(self.dist[self.root].max())

    @property
    def diameter(self) -> float:
        return float(self.dist.max())

    def to_csv(self) -> tuple[str, str]:
        """(distance matrix, (point, mass)) as CSV text."""
        a = io.StringIO()
        w = csv.writer(a, lineterminator="\n")
        for row in self.dist:
            w.writerow([repr(float(x)) for x in row])
        b = io.StringIO()
        w = csv.writer(b, lineterminator="\n")
        w.writerow(["point", "mass"])
        for i, m in enumerate(self.mu):
            if m > 0:
                w.writerow([i, repr(float(m))])
        return a.getvalue(), b.getvalue()

    @classmethod
    def from_csv(cls, dist_text: str, mass_text: str, root: int = 0) -> "MeasuredTree":
        D = np.array([[float(x) for x in row] for row in csv.reader(io.StringIO(dist_text)) if row])
        mu = np.zeros(len(D))
        for row in list(csv.reader(io.StringIO(mass_text)))[1:]:
            if row:
                mu[int(row[0])] = float(row[1])
        return cls(D, root, mu)


def from_tree(t: PlanarTree, measure: str = "uniform_leaves") -> MeasuredTree:
    """Unit edge lengths; edges are represented by their child endpoints."""
    n = len(t)
    mu = np.zeros(n)
    if measure == "uniform_leaves":
        mu[list(t.leaves)] = 1.0
    elif measure == "uniform_edges":
        mu[1:] = 1.0
    elif measure == "uniform_vertices":
        mu[:] = 1.0
    else:
        raise MetricError(f"unknown measure {measure!r}")
    if mu.sum() == 0:
        raise MetricError("the selected measure has empty support")
    length = np.ones(n)
    length[t.root] = 0.0
    return MeasuredTree(tree_distances(t.parents), t.root, mu / mu.sum(), t.parents, length)


def from_parents(parents: Sequence[int], mu: Sequence[float], lengths: Sequence[float] | None = None) -> MeasuredTree:
    lengths = np.ones(len(parents)) if lengths is None else np.asarray(lengths, dtype=float)
    root = list(parents).index(-1)
    lengths = lengths.copy()
    lengths[root] = 0.0
    return MeasuredTree(tree_distances(parents, lengths), root, np.asarray(mu, float), tuple(parents), lengths)


def rescale(T: MeasuredTree, c: float) -> MeasuredTree:
    """Divide every distance by ``c``."""
    if not c > 0:
        raise MetricError("scale factor must be positive")
    length = None if T.length is None else T.length / c
    return MeasuredTree(T.dist / c, T.root, T.mu, T.parent, length)


# --- correspondences -------------------------------------------------------


@dataclass(frozen=True)
class Correspondence:
    """Relation between the points of two spaces, as parallel index arrays."""

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "left", np.asarray(self.left, dtype=np.int64))
        object.__setattr__(self, "right", np.asarray(self.right, dtype=np.int64))
        if self.left.shape != self.right.shape:
            raise MetricError("correspondence sides differ in length")

    @classmethod
    def from_pairs(cls, pairs) -> "Correspondence":
        pairs = list(pairs)
        return cls([a for a, _ in pairs], [b for _, b in pairs])

    @classmethod
    def identity(cls, n: int) -> "Correspondence":
        return cls(np.arange(n), np.arange(n))

    @classmethod
    def full(cls, n: int, m: int) -> "Correspondence":
        a, b = np.meshgrid(np.arange(n), np.arange(m), indexing="ij")
        return cls(a.ravel(), b.ravel())

    def check(self, n_left: int, n_right: int, roots: tuple[int, int] | None = None):
        if set(self.left.tolist()) != set(range(n_left)) or set(self.right.tolist()) != set(range(n_right)):
            raise MetricError("correspondence does not cover both spaces")
        if roots is not None and not np.any((self.left == roots[0]) & (self.right == roots[1])):
            raise MetricError("roots are not related")


def distortion_matrices(R: Correspondence, D1: np.ndarray, D2: np.ndarray) -> float:
    L, Rr = R.left, R.right
    best = 0.0
    step = max(1, 4_000_000 // max(len(L), 1))
    for s in range(0, len(L), step):
        block = np.abs(D1[np.ix_(L[s:s + step], L)] - D2[np.ix_(Rr[s:s + step], Rr)])
        best = max(best, float(block.max()))
    return best


def distortion(R: Correspondence, T: MeasuredTree, T2: MeasuredTree) -> float:
    R.check(len(T), len(T2))
    return distortion_matrices(R, T.dist, T2.dist)


def gh_upper(R: Correspondence, T: MeasuredTree, T2: MeasuredTree) -> float:
    """Pointed Gromov-Hausdorff upper bound ``dis(R) / 2``; roots must be related."""
    R.check(len(T), len(T2), (T.root, T2.root))
    return distortion_matrices(R, T.dist, T2.dist) / 2


def gh_lower(T: MeasuredTree, T2: MeasuredTree) -> float:
    """Cheap lower bound from diameters and heights."""
    return max(abs(T.diameter - T2.diameter) / 2, abs(T.height - T2.height) / 2)


# --- Prokhorov distance ----------------------------------------------------


def _normalised(mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if (mu < 0).any() or abs(mu.sum() - 1) > MASS_TOL:
        raise MetricError("measures must be normalised")
    return mu


def _unmatched_mass(cross: np.ndarray, a: np.ndarray, b: np.ndarray, r: float) -> float:
    """1 - max coupling mass on pairs at distance <= r (max-flow)."""
    G = nx.DiGraph()
    for i, m in enumerate(a):
        G.add_edge("s", ("a", i), capacity=float(m))
    for j, m in enumerate(b):
        G.add_edge(("b", j), "t", capacity=float(m))
    ii, jj = np.nonzero(cross <= r)
    for i, j in zip(ii.tolist(), jj.tolist()):
        G.add_edge(("a", i), ("b", j))  # no capacity attribute: unbounded
    if not ii.size:
        return 1.0
    value = nx.maximum_flow_value(G, "s", "t")
    return max(0.0, 1.0 - value)


def prokhorov_cross(cross: np.ndarray, a, b) -> float:
    """Prokhorov distance between ``a`` on the rows and ``b`` on the columns.

    ``cross[i, j]`` is the distance between row point i and column point j in
    a common space. By Strassen's theorem d_P <= r iff some coupling puts mass
    at most r on pairs farther apart than r. The unmatched mass m(r) is a
    nonincreasing step function with jumps at the entries of ``cross``, so the
    distance is min_i max(r_i, m(r_i)) over those entries, found by bisection
    on the crossing of the two monotone sequences.
    """
    a = _normalised(a)
    b = _normalised(b)
    ia, ib = np.flatnonzero(a > 0), np.flatnonzero(b > 0)
    cross = np.asarray(cross, dtype=float)[np.ix_(ia, ib)]
    a, b = a[ia], b[ib]
    r = np.unique(np.concatenate([[0.0], cross.ravel()]))
    r = r[r <= 1.0]
    cache: dict[int, float] = {}

    def m(i):
        if i not in cache:
            cache[i] = _unmatched_mass(cross, a, b, r[i])
        return cache[i]

    lo, hi = 0, len(r) - 1
    if m(hi) > r[hi]:
        return float(min(1.0, m(hi)))
    # first index with m(r_i) <= r_i
    while lo < hi:
        mid = (lo + hi) // 2
        if m(mid) <= r[mid]:
            hi = mid
        else:
            lo = mid + 1
    best = r[lo]
    if lo > 0:
        best = min(best, m(lo - 1))
    return float(best)


def prokhorov(dist: np.ndarray, mu, mu2) -> float:
    """Exact Prokhorov distance between two measures on one finite metric space."""
    return prokhorov_cross(np.asarray(dist, float), mu, mu2)


def prokhorov_bruteforce(dist: np.ndarray, mu, mu2) -> float:
    """Prokhorov distance from its definition, enumerating all subsets.

    For each closed neighbourhood radius the worst subset gives the smallest
    admissible epsilon on that radius interval; meant for spaces of a few points.
    """
    mu = _normalised(mu)
    mu2 = _normalised(mu2)
    D = np.asarray(dist, dtype=float)
    n = len(mu)
    r = np.unique(np.concatenate([[0.0], D.ravel()]))
    r = r[r <= 1.0]
    best = 1.0
    subsets = [s for k in range(1, n + 1) for s in itertools.combinations(range(n), k)]
    for ri in r:
        worst = 0.0
        for A in subsets:
            near = (D[list(A)] <= ri).any(axis=0)
            worst = max(worst, mu[list(A)].sum() - mu2[near].sum(), mu2[list(A)].sum() - mu[near].sum())
        best = min(best, max(ri, worst))
    return float(best)


# --- glued space and GHP upper bound ---------------------------------------


def glued_cross(R: Correspondence, D1: np.ndarray, D2: np.ndarray) -> np.ndarray:
    """Cross distances of T and T' glued along R at half its distortion."""
    half = distortion_matrices(R, D1, D2) / 2
    out = np.full((D1.shape[0], D2.shape[0]), np.inf)
    for y, y2 in zip(R.left.tolist(), R.right.tolist()):
        np.minimum(out, D1[:, y][:, None] + D2[y2][None, :], out=out)
    return out + half


@dataclass(frozen=True)
class GhpBound:
    hausdorff: float
    root: float
    prokhorov: float

    @property
    def total(self) -> float:
        return self.hausdorff + self.root + self.prokhorov


def ghp_upper(T: MeasuredTree, T2: MeasuredTree, R: Correspondence) -> GhpBound:
    """Hausdorff + root + Prokhorov terms evaluated in the space glued along R."""
    R.check(len(T), len(T2), (T.root, T2.root))
    cross = glued_cross(R, T.dist, T2.dist)
    return _ghp_terms(cross, T.root, T2.root, T.mu, T2.mu)


def _ghp_terms(cross, root1, root2, mu1, mu2) -> GhpBound:
    haus = max(float(cross.min(axis=1).max()), float(cross.min(axis=0).max()))
    return GhpBound(haus, float(cross[root1, root2]), prokhorov_cross(cross, mu1, mu2))


# --- erasure and lower mass ------------------------------------------------


def subtree_heights(parent: Sequence[int], length: np.ndarray) -> np.ndarray:
    h = np.zeros(len(parent))
    for v in range(len(parent) - 1, -1, -1):
        p = parent[v]
        if p >= 0:
            h[p] = max(h[p], h[v] + length[v])
    return h


@dataclass(frozen=True, eq=False)
class ErasedTree:
    """Erasure of a tree, with each point located on the source tree.

    Point k sits on the edge from ``child[k]`` up to its parent at distance
    ``offset[k]`` below the parent (offset equals the edge length for kept
    vertices); the root has ``child = root`` and offset 0.
    """

    tree: MeasuredTree
    child: np.ndarray
    offset: np.ndarray


def erase(T: MeasuredTree, eps: float, normalise: bool = True) -> ErasedTree:
    """Keep the points whose subtree height is at least ``eps``, plus the root.

    Each retained edge piece carries an atom eps * length at its lower end.
    """
    if eps < 0:
        raise MetricError("eps must be nonnegative")
    if T.parent is None or T.length is None:
        raise MetricError("erasure needs explicit edges")
    parent, length = T.parent, T.length
    h = subtree_heights(parent, length)
    new_parent: list[int] = []
    new_len: list[float] = []
    child: list[int] = []
    offset: list[float] = []
    index = {}
    for v, p in enumerate(parent):
        if p < 0:
            index[v] = len(new_parent)
            new_parent.append(-1)
            new_len.append(0.0)
            child.append(v)
            offset.append(0.0)
            continue
        if p not in index:
            continue
        if h[v] >= eps:
            keep = length[v]
        else:
            keep = h[v] + length[v] - eps
            if keep <= 0:
                continue
        index[v] = len(new_parent)
        new_parent.append(index[p])
        new_len.append(float(keep))
        child.append(v)
        offset.append(float(keep))
    lens = np.array(new_len)
    mass = eps * lens
    if mass.sum() <= 0:
        mass = np.zeros(len(lens))
        mass[0] = 1.0
    elif normalise:
        mass = mass / mass.sum()
    if not normalise and abs(mass.sum() - 1) > MASS_TOL:
        raise MetricError("an unnormalised erasure measure is not a probability; pass normalise=True")
    tree = MeasuredTree(tree_distances(new_parent, lens), 0, mass, tuple(new_parent), lens)
    return ErasedTree(tree, np.array(child), np.array(offset))


def erasure_cross(T: MeasuredTree, E: ErasedTree) -> np.ndarray:
    """Distances in T between the points of T and the points of its erasure."""
    A = ancestor_matrix(T.parent)
    out = np.empty((len(T), len(E.tree)))
    for k, (v, s) in enumerate(zip(E.child.tolist(), E.offset.tolist())):
        p = T.parent[v]
        if p < 0:
            out[:, k] = T.dist[:, v]
            continue
        below = A[:, v] > 0
        out[:, k] = np.where(below, T.dist[:, v] + T.length[v] - s, T.dist[:, p] + s)
    return out


def erasure_ghp(T: MeasuredTree, eps: float) -> GhpBound:
    """GHP upper bound between T and its erasure, both embedded in T."""
    E = erase(T, eps)
    cross = erasure_cross(T, E)
    return _ghp_terms(cross, T.root, 0, T.mu, E.tree.mu)


def lower_mass(T: MeasuredTree, delta: float) -> float:
    """Smallest closed delta-ball mass around a point of the support."""
    if delta <= 0:
        raise MetricError("delta must be positive")
    supp = np.flatnonzero(T.mu > 0)
    balls = (T.dist[supp] <= delta) @ T.mu
    return float(balls.min())


def is_tree_metric(D: np.ndarray, tol: float = 1e-9) -> bool:
    """Four-point condition on every quadruple (for small spaces)."""
    n = len(D)
    if not np.allclose(D, D.T, atol=tol) or np.abs(np.diag(D)).max(initial=0) > tol:
        return False
    for a, b, c, d in itertools.combinations(range(n), 4):
        s = sorted([D[a, b] + D[c, d], D[a, c] + D[b, d], D[a, d] + D[b, c]])
        if s[2] - s[1] > tol:
            return False
    for a, b, c in itertools.combinations(range(n), 3):
        if D[a, b] > D[a, c] + D[c, b] + tol or D[a, c] > D[a, b] + D[b, c] + tol or D[b, c] > D[b, a] + D[a, c] + tol:
            return False
    return True

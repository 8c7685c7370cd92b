"""Continuous-time edge fragmentation of a hat tree: mass processes,
separation times and the distances they induce."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..offspring import OffspringDist, norming
from ..rng import map_replicates
from ..sampler import SamplerConfig, check_feasible, sample_gw_n_leaves
from ..trees import PlanarTree, check, hat_transform
from .cuttree import TimedCutTree, edge_from_clocks

MASS_UNITS = ("edges", "leaves")
RATES = ("k", "k-1")
TAIL_LEVELS = tuple(range(7))


def fragmentation_rates(t_hat: PlanarTree, a_tilde: float, rate: str = "k") -> np.ndarray:
    """k_v / (2 a_tilde) at every branch point (or (k_v - 1) / (2 a_tilde))."""
    if rate not in RATES:
        raise ValueError(f"unknown rate convention {rate!r}")
    k = np.array(t_hat.degrees, dtype=float)
    r = k if rate == "k" else np.where(k > 0, k - 1, 0.0)
    return r / (2 * a_tilde)


@dataclass(frozen=True, eq=False)
class FragmentationTrace:
    """One run of the fragmentation, read off its timed edge cut-tree.

    The component of edge i just before the cut of an ancestor node ``a`` of
    its leaf is the component of ``a``; the edge leaves its last component
    when its parent node is cut and has mass 0 from then on.
    """

    tree: TimedCutTree
    node_mass: np.ndarray
    tracked: frozenset = field(default=frozenset())

    @cached_property
    def events(self) -> list[tuple[float, int]]:
        return sorted((self.tree.time[v], self.tree.label[v]) for v, c in enumerate(self.tree.children) if c)

    def _leaf(self, i: int) -> int:
        if self.tracked and i not in self.tracked:
            raise KeyError(f"edge {i} is not tracked")
        try:
            return self.tree.leaf_of[i]
        except KeyError:
            raise KeyError(f"no edge {i}") from None

    def _path(self, i: int) -> list[int]:
        x = self._leaf(i)
        path = []
        while x >= 0:
            path.append(x)
            x = self.tree.parents[x]
        return path[::-1]

    def mass_history(self, i: int) -> list[tuple[float, float]]:
        """Breakpoints (time, mass) of the piecewise-constant mass of edge i's component."""
        path = self._path(i)
        out = [(0.0, float(self.node_mass[path[0]]))]
        for a, b in zip(path, path[1:]):
            out.append((self.tree.time[a], float(self.node_mass[b]) if self.tree.children[b] else 0.0))
        return out

    def tail_integral(self, i: int, start: float = 0.0) -> float:
        """Integral of edge i's mass over [start, inf)."""
        hist = self.mass_history(i)
        total = 0.0
        for (t0, m), (t1, _) in zip(hist, hist[1:]):
            lo = max(t0, start)
            if t1 > lo:
                total += m * (t1 - lo)
        return total

    def separation_time(self, i: int, j: int) -> float:
        if i == j:
            return math.inf
        pi, pj = self._path(i), self._path(j)
        k = 0
        while k < min(len(pi), len(pj)) and pi[k] == pj[k]:
            k += 1
        return self.tree.time[pi[k - 1]]

    def delta(self, i: int, j: int) -> int:
        """Graph distance in the cut-tree; ``i == 0`` stands for the root."""
        if i == 0:
            return self.tree.depths[self._leaf(j)]
        if i == j:
            return 0
        pi, pj = self._path(i), self._path(j)
        k = 0
        while k < min(len(pi), len(pj)) and pi[k] == pj[k]:
            k += 1
        return len(pi) + len(pj) - 2 * k

    def delta_prime_root(self, i: int) -> float:
        return self.tail_integral(i, 0.0)

    def delta_prime(self, i: int, j: int) -> float:
        if i == 0:
            return self.delta_prime_root(j)
        if i == j:
            return 0.0
        s = self.separation_time(i, j)
        return self.tail_integral(i, s) + self.tail_integral(j, s)


def _node_mass(tree: TimedCutTree, t_hat: PlanarTree, mass: str) -> np.ndarray:
    if mass == "edges":
        total = len(t_hat) - 1
        return np.array(tree.size, dtype=float) / total
    if mass != "leaves":
        raise ValueError(f"unknown mass unit {mass!r}")
    is_leaf = np.array([k == 0 for k in t_hat.degrees])
    cnt = np.zeros(len(tree))
    for v in range(len(tree) - 1, -1, -1):
        if not tree.children[v]:
            cnt[v] = float(is_leaf[tree.label[v]])
        p = tree.parents[v]
        if p >= 0:
            cnt[p] += cnt[v]
    return cnt / is_leaf.sum()


def trace_from_clocks(t_hat: PlanarTree, clocks, mass: str = "edges", tracked=()) -> FragmentationTrace:
    tree = edge_from_clocks(t_hat, clocks)
    return FragmentationTrace(tree, _node_mass(tree, t_hat, mass), frozenset(tracked))


def timed_fragmentation(
    t_hat: PlanarTree, a_tilde: float, rng: np.random.Generator,
    tracked=(), mass: str = "edges", rate: str = "k",
) -> FragmentationTrace:
    """Every branch point removes the edges to its children at an exponential
    time of rate k_v / (2 a_tilde). Mass is the share of the 2n - 2 edges in the
    component by default, or of the hat tree's leaves with ``mass="leaves"``."""
    check(t_hat)
    if len(t_hat) < 2:
        raise ValueError("the fragmentation needs at least one edge")
    bad = [i for i in tracked if not 1 <= i < len(t_hat)]
    if bad:
        raise KeyError(f"edges {bad} do not exist")
    rates = fragmentation_rates(t_hat, a_tilde, rate)
    e = rng.standard_exponential(len(t_hat))
    clocks = np.where(rates > 0, e / np.where(rates > 0, rates, 1.0), np.inf)
    return trace_from_clocks(t_hat, clocks, mass, tracked)


@dataclass(frozen=True)
class CutDistances:
    delta: int
    delta_prime: float
    delta_prime_root: float


def cut_distances(trace: FragmentationTrace, i: int, j: int) -> CutDistances:
    return CutDistances(trace.delta(i, j), trace.delta_prime(i, j), trace.delta_prime_root(i))


# --- Monte Carlo check of the two inequalities -------------------------------


@dataclass(frozen=True)
class _FragmentationJob:
    nu: OffspringDist
    n: int
    a_tilde: float
    mass: str

    def __call__(self, rng: np.random.Generator, _i: int):
        t = sample_gw_n_leaves(self.nu, self.n, rng, SamplerConfig())
        t_hat = hat_transform(t)
        e = rng.standard_exponential(len(t_hat))
        m = len(t_hat) - 1
        i, j = (rng.choice(np.arange(1, m + 1), size=2, replace=False) if m >= 2 else (1, 1))
        i, j, xi = int(i), int(j), int(rng.integers(1, m + 1))
        out = {}
        for rate in RATES:
            rates = fragmentation_rates(t_hat, self.a_tilde, rate)
            clocks = np.where(rates > 0, e / np.where(rates > 0, rates, 1.0), np.inf)
            trace = trace_from_clocks(t_hat, clocks, self.mass)
            if rate == "k-1":
                out["alt_root"] = trace.delta_prime_root(xi)
                continue
            out.update(
                d_ij=trace.delta(i, j), dp_ij=trace.delta_prime(i, j),
                dp_0i=trace.delta_prime_root(i), dp_0j=trace.delta_prime_root(j),
                d_0xi=trace.delta(0, xi), dp_0xi=trace.delta_prime_root(xi),
                tails=[trace.tail_integral(xi, 2.0 ** l) for l in TAIL_LEVELS],
            )
        return out


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    se = float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else math.inf
    return float(x.mean()), se


@dataclass(frozen=True)
class InequalityCheck:
    lhs: float
    rhs: float
    se: float  # standard error of the per-replicate difference lhs - rhs

    @property
    def passed(self) -> bool:
        return self.lhs - self.rhs <= 3 * self.se


@dataclass(frozen=True)
class FragmentationReport:
    n: int
    replicates: int
    pair: InequalityCheck
    root_pair: InequalityCheck
    mean_delta_prime: float
    mean_delta_prime_se: float
    tails: tuple[float, ...]
    tails_se: tuple[float, ...]
    time_scale_ratio: float

    @property
    def tails_nonincreasing(self) -> bool:
        return all(b <= a for a, b in zip(self.tails, self.tails[1:]))

    @property
    def passed(self) -> bool:
        return self.pair.passed and self.root_pair.passed and self.tails_nonincreasing


def fragmentation_inequality_mc(
    nu: OffspringDist, n: int, replicates: int, seed: int, threads: int = 1, mass: str = "edges"
) -> FragmentationReport:
    """Monte Carlo estimates for the distance-comparison inequality (for a pair
    of distinct uniform edges and for the root against a uniform edge), the mean
    modified root distance and its tail integrals beyond 2**l, l = 0..6.

    ``time_scale_ratio`` compares the mean modified root distance under rates
    proportional to k and to k - 1, on the same trees and exponentials.
    """
    check_feasible(nu, n)
    if n < 2:
        raise ValueError("the fragmentation needs n >= 2")
    a_t = norming(nu, n).a_tilde
    res = map_replicates(_FragmentationJob(nu, n, a_t, mass), replicates, seed, key=(n, 21), threads=threads)
    s = a_t / (n - 1)
    get = lambda key: np.array([r[key] for r in res], dtype=float)
    lhs_ij = (s * get("d_ij") - get("dp_ij")) ** 2
    rhs_ij = s * (get("dp_0i") + get("dp_0j"))
    lhs_0 = (s * get("d_0xi") - get("dp_0xi")) ** 2
    rhs_0 = s * get("dp_0xi")
    pair = InequalityCheck(float(lhs_ij.mean()), float(rhs_ij.mean()), _mean_se(lhs_ij - rhs_ij)[1])
    root = InequalityCheck(float(lhs_0.mean()), float(rhs_0.mean()), _mean_se(lhs_0 - rhs_0)[1])
    tails = np.array([r["tails"] for r in res])
    m, se = _mean_se(get("dp_0xi"))
    ratio = m / float(get("alt_root").mean())
    return FragmentationReport(
        n, replicates, pair, root, m, se,
        tuple(float(x) for x in tails.mean(axis=0)),
        tuple(float(x) for x in tails.std(axis=0, ddof=1) / math.sqrt(len(tails))) if len(tails) > 1 else (math.inf,) * len(TAIL_LEVELS),
        ratio,
    )

"""First-split laws of the modified vertex cut-tree and the Markov branching
trees they generate.

Sizes are counted in two units. A component with m leaves in the original tree
grows into a subtree of the modified cut-tree with 2m - 1 leaves; ``blocks``
below are leaf counts m, ``ranked`` splits are in the 2m - 1 units.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .. import offspring
from ..offspring import OffspringDist
from ..sampler import InfeasibleError, conditioned_weights
from ..trees import PlanarTree
from .cuttree import EXTRA, TimedCutTree, _Builder, _product, cut_shape_law

MB_CAP = 4000

SplitFormula = Callable[[OffspringDist, int, int, np.ndarray], float]


@lru_cache(maxsize=16)
def _table(nu: OffspringDist, m_max: int) -> np.ndarray:
    """table[j, m] = P(S_j = m) for j <= max degree + 1."""
    return offspring.leaf_count_table(nu, nu.max_degree + 1, m_max, cap=MB_CAP + 1)  # row n + 1 is needed


def split_probability(nu: OffspringDist, n: int, k: int, table: np.ndarray) -> float:
    """Probability that the first cut of an n-leaf tree is at a branch point with k children."""
    return ((k - 1) / (k + 1)) * nu[k] * ((n + 1) / (n - 1)) * table[k + 1, n + 1] / (nu.nu0 * table[1, n])


def first_cut_formula(nu: OffspringDist, n: int, formula: SplitFormula = split_probability) -> dict[int, float]:
    if n < 2:
        raise InfeasibleError("a tree with one leaf has no cut")
    table = _table(nu, n + 1)
    if table[1, n] <= 0:
        raise InfeasibleError(f"a tree with {n} leaves has probability 0 under this law")
    return {k: float(formula(nu, n, k, table)) for k in nu.branch_support}


def first_cut_bruteforce(nu: OffspringDist, n: int) -> dict[int, float]:
    """Average over all conditioned trees of the chance that the first cut has k children."""
    if n < 2:
        raise InfeasibleError("a tree with one leaf has no cut")
    trees, probs = conditioned_weights(nu, n)
    out = {k: 0.0 for k in nu.branch_support}
    for t, p in zip(trees, probs):
        for v in t.branch_points:
            k = t.degrees[v]
            out[k] += p * (k - 1) / (n - 1)
    return out


@dataclass(frozen=True)
class FirstCutLaw:
    n: int
    bruteforce: dict[int, float]
    formula: dict[int, float]

    @property
    def max_gap(self) -> float:
        return max(abs(self.bruteforce[k] - self.formula.get(k, 0.0)) for k in self.bruteforce)

    @property
    def formula_total(self) -> float:
        return sum(self.formula.values())


def first_cut_law_exact(nu: OffspringDist, n: int, formula: SplitFormula = split_probability) -> FirstCutLaw:
    if n < 1 or offspring.leaf_count_pmf(nu, 1, n, cap=MB_CAP) <= 0:
        raise InfeasibleError(f"a tree with {n} leaves has probability 0 under this law")
    return FirstCutLaw(n, first_cut_bruteforce(nu, n), first_cut_formula(nu, n, formula))


# --- block sizes ------------------------------------------------------------


def _ranked(blocks, k: int) -> tuple[int, ...]:
    return tuple(sorted([2 * m - 1 for m in blocks] + [1] * (k - 2), reverse=True))


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def block_law(nu: OffspringDist, n: int, formula: SplitFormula = split_probability) -> dict[tuple[int, tuple[int, ...]], float]:
    """Exact law of (k, ordered leaf counts of the k + 1 blocks) at the first split.

    Given k the blocks are k + 1 independent tree leaf counts conditioned to
    sum to n + 1.
    """
    q = first_cut_formula(nu, n, formula)
    table = _table(nu, n + 1)
    f = table[1]
    out = {}
    for k, qk in q.items():
        if qk <= 0:
            continue
        z = table[k + 1, n + 1]
        for comp in _compositions(n + 1, k + 1):
            w = float(np.prod(f[list(comp)])) / z
            if w > 0:
                out[(k, comp)] = qk * w
    return out


def mb_split_law(nu: OffspringDist, n: int, formula: SplitFormula = split_probability) -> dict[tuple[int, ...], float]:
    """Exact law of the ranked first split (2m - 1 units, with the k - 2 singletons)."""
    out: dict = {}
    for (k, comp), p in block_law(nu, n, formula).items():
        key = _ranked(comp, k)
        out[key] = out.get(key, 0.0) + p
    return out


def first_split_bruteforce(nu: OffspringDist, n: int) -> dict[tuple[int, ...], float]:
    """Ranked first split averaged over all conditioned trees and first cuts."""
    trees, probs = conditioned_weights(nu, n)
    out: dict = {}
    for t, p in zip(trees, probs):
        below = _leaves_below(t)
        for v in t.branch_points:
            k = t.degrees[v]
            blocks = [n - below[v] + 1] + [below[w] for w in t.children[v]]
            key = _ranked(blocks, k)
            out[key] = out.get(key, 0.0) + p * (k - 1) / (n - 1)
    return out


def _leaves_below(t: PlanarTree) -> list[int]:
    cnt = [0] * len(t)
    for v in range(len(t) - 1, -1, -1):
        if not t.children[v]:
            cnt[v] = 1
        if t.parents[v] >= 0:
            cnt[t.parents[v]] += cnt[v]
    return cnt


def _sample_blocks(nu: OffspringDist, n: int, rng: np.random.Generator, table: np.ndarray) -> tuple[int, list[int]]:
    ks = np.array(nu.branch_support)
    q = np.array([split_probability(nu, n, int(k), table) for k in ks])
    k = int(ks[0]) if len(ks) == 1 else int(rng.choice(ks, p=q / q.sum()))
    f = table[1]
    s = n + 1
    blocks = []
    for left in range(k, 0, -1):
        x = np.arange(1, s - left + 1)
        w = f[x] * table[left, s - x]
        m = int(rng.choice(x, p=w / w.sum()))
        blocks.append(m)
        s -= m
    blocks.append(s)
    return k, blocks


def _check_feasible(nu: OffspringDist, n: int) -> np.ndarray:
    table = _table(nu, max(n + 1, 2))
    if n < 1 or table[1, n] <= 0:
        raise InfeasibleError(f"a tree with {n} leaves has probability 0 under this law")
    return table


def mb_split_sample(nu: OffspringDist, n: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Ranked first split of an n-leaf tree, in 2m - 1 units; sums to 2n - 1."""
    table = _check_feasible(nu, n)
    if n == 1:
        return (1,)
    k, blocks = _sample_blocks(nu, n, rng, table)
    return _ranked(blocks, k)


def mb_tree_sample(nu: OffspringDist, n: int, rng: np.random.Generator) -> TimedCutTree:
    """Markov branching tree with 2n - 1 leaves. Node labels are leaf counts m,
    node times are generations; appended singletons are labelled -1."""
    table = _check_feasible(nu, n)
    b = _Builder()

    def grow(m: int, depth: int) -> int:
        if m == 1:
            return b.leaf(1)
        k, blocks = _sample_blocks(nu, m, rng, table)
        kids = [grow(x, depth + 1) for x in blocks]
        kids += [b.leaf(EXTRA) for _ in range(k - 2)]
        return b.node(kids, m, float(depth))

    return b.finish(grow(n, 0), "mb")[0]


def mb_leaf_depth(nu: OffspringDist, n: int, rng: np.random.Generator) -> int:
    """Depth of a uniform leaf of a Markov branching tree, grown along its path only."""
    table = _check_feasible(nu, n)
    depth = 0
    m = n
    while m > 1:
        k, blocks = _sample_blocks(nu, m, rng, table)
        sizes = np.array([2 * x - 1 for x in blocks] + [1] * (k - 2), dtype=float)
        pick = int(rng.choice(len(sizes), p=sizes / sizes.sum()))
        depth += 1
        m = blocks[pick] if pick < len(blocks) else 1
    return depth


# --- exact shape laws --------------------------------------------------------


def mb_shape_law(nu: OffspringDist, n: int, formula: SplitFormula = split_probability) -> dict:
    """Exact law of the unordered Markov branching tree shape with 2n - 1 leaves."""
    memo: dict[int, dict] = {}

    def law(m: int) -> dict:
        if m == 1:
            return {(): 1.0}
        if m in memo:
            return memo[m]
        out: dict = {}
        for (k, comp), p in block_law(nu, m, formula).items():
            sub = _product([law(x) for x in comp] + [{(): 1.0}] * (k - 2))
            for shape, ps in sub.items():
                out[shape] = out.get(shape, 0.0) + p * ps
        memo[m] = out
        return out

    return law(n)


def cut_tree_shape_law(nu: OffspringDist, n: int, modified: bool = True) -> dict:
    """Exact law of the unordered vertex cut-tree shape of the conditioned tree,
    by enumerating trees and all cut sequences."""
    trees, probs = conditioned_weights(nu, n)
    out: dict = {}
    for t, p in zip(trees, probs):
        for shape, ps in cut_shape_law(t, modified).items():
            out[shape] = out.get(shape, 0.0) + p * ps
    return out


def law_gap(a: dict, b: dict) -> float:
    return max(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in set(a) | set(b))

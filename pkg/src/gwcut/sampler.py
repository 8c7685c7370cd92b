"""Galton-Watson trees, unconditioned and conditioned on their number of leaves."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import offspring
from .offspring import OffspringDist
from .rng import map_replicates
from .trees import PlanarTree, enumerate_trees, from_degree_sequence, hat_transform, stats

METHODS = ("cyclic", "rejection", "exact_enum")


class SamplerError(RuntimeError):
    pass


class InfeasibleError(SamplerError):
    pass


class TreeTooLarge(SamplerError):
    """The tree exceeded ``max_vertices``; no truncated tree is returned."""


@dataclass(frozen=True)
class SamplerConfig:
    max_attempts: int = 10_000_000
    max_vertices: int = 1_000_000
    method: str = "cyclic"

    def __post_init__(self):
        if self.max_attempts < 1 or self.max_vertices < 1:
            raise ValueError("sampler caps must be positive")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")


def _draw(nu: OffspringDist, rng: np.random.Generator, size) -> np.ndarray:
    ks, ps = zip(*nu.pmf)
    return rng.choice(np.array(ks), size=size, p=np.array(ps))


def sample_gw(nu: OffspringDist, rng: np.random.Generator, max_vertices: int = 1_000_000) -> PlanarTree:
    """Unconditioned Galton-Watson tree, offspring drawn in depth-first order."""
    degrees: list[int] = []
    height = 0  # Lukasiewicz walk value before the next vertex
    chunk = 64
    while True:
        block = _draw(nu, rng, chunk)
        walk = height + np.cumsum(block - 1)
        hit = np.flatnonzero(walk == -1)
        if hit.size:
            degrees.extend(block[: hit[0] + 1].tolist())
            break
        degrees.extend(block.tolist())
        height = int(walk[-1])
        if len(degrees) > max_vertices:
            raise TreeTooLarge(f"tree exceeded {max_vertices} vertices")
        chunk = min(2 * chunk, 1 << 16)
    if len(degrees) > max_vertices:
        raise TreeTooLarge(f"tree exceeded {max_vertices} vertices")
    return from_degree_sequence(degrees)


def leaf_probability(nu: OffspringDist, n: int) -> float:
    """P(lambda(G) = n), via the leaf DP when in range, else the cyclic sampler's weights."""
    if n <= offspring.LEAF_DP_CAP:
        return offspring.leaf_count_pmf(nu, 1, n)
    return math.exp(_cyclic_tables(nu, n).log_total)


def check_feasible(nu: OffspringDist, n: int):
    if n < 1 or leaf_probability(nu, n) <= 0:
        raise InfeasibleError(f"a tree with {n} leaves has probability 0 under this law")


# --- exact sampler through the cyclic lemma --------------------------------
#
# A tree with n leaves and b branch points is a depth-first sequence of n + b
# offspring counts. Among the n + b rotations of any sequence with n zeros
# whose (k - 1)-sum is -1 exactly one is a tree, so
#   P(zeta = n + b, lambda = n)
#       = C(n+b, n) nu0^n (1-nu0)^b P(A_1 + ... + A_b = n - 1) / (n + b),
# with A_i = k - 1 drawn from nu_{a+1} / (1 - nu0). Sampling b, then the A's
# given their sum, then a uniform arrangement and the unique good rotation is
# an exact draw from the conditioned law.


@dataclass(frozen=True)
class _CyclicTables:
    n: int
    up: np.ndarray  # up[a] = P(A = a)
    rows: np.ndarray  # rows[b, s] proportional to P(A_1 + ... + A_b = s)
    b_values: np.ndarray
    b_probs: np.ndarray
    log_total: float


@lru_cache(maxsize=8)
def _cyclic_tables(nu: OffspringDist, n: int) -> _CyclicTables:
    nu0 = nu.nu0
    K = nu.max_degree
    up = np.zeros(K)
    for k in nu.branch_support:
        up[k - 1] = nu[k] / (1 - nu0)
    s_max = n - 1
    rows = np.zeros((n, s_max + 1))
    log_scale = np.zeros(n)
    rows[0, 0] = 1.0
    for b in range(1, n):
        r = np.convolve(rows[b - 1], up)[: s_max + 1]
        m = r.max()
        if m > 0:
            rows[b] = r / m
            log_scale[b] = log_scale[b - 1] + math.log(m)
        else:
            log_scale[b] = -math.inf
    logw = np.full(n, -math.inf)
    for b in range(n):
        if rows[b, s_max] <= 0:
            continue
        N = n + b
        logw[b] = (
            math.lgamma(N + 1) - math.lgamma(n + 1) - math.lgamma(b + 1) - math.log(N)
            + n * math.log(nu0)
            + (b * math.log(1 - nu0) if b else 0.0)
            + log_scale[b] + math.log(rows[b, s_max])
        )
    finite = np.isfinite(logw)
    if not finite.any():
        return _CyclicTables(n, up, rows, np.array([], dtype=int), np.array([]), -math.inf)
    top = logw[finite].max()
    w = np.exp(logw[finite] - top)
    log_total = top + math.log(w.sum())
    return _CyclicTables(n, up, rows, np.flatnonzero(finite), w / w.sum(), log_total)


def vertex_count_given_leaves(nu: OffspringDist, n: int) -> dict[int, float]:
    """Law of zeta(G) given lambda(G) = n."""
    tab = _cyclic_tables(nu, n)
    return {int(n + b): float(p) for b, p in zip(tab.b_values, tab.b_probs)}


def _rotate_to_tree(degrees: np.ndarray) -> np.ndarray:
    walk = np.cumsum(degrees - 1)
    tau = int(np.argmin(walk))  # first index of the overall minimum
    return np.concatenate([degrees[tau + 1:], degrees[: tau + 1]])


def _sample_cyclic(nu: OffspringDist, n: int, rng: np.random.Generator) -> PlanarTree:
    tab = _cyclic_tables(nu, n)
    if tab.b_values.size == 0:
        raise InfeasibleError(f"a tree with {n} leaves has probability 0 under this law")
    b = int(rng.choice(tab.b_values, p=tab.b_probs)) if tab.b_values.size > 1 else int(tab.b_values[0])
    ups = np.flatnonzero(tab.up)
    if ups.size == 1:
        branch = np.full(b, ups[0] + 1)
    else:
        branch = np.empty(b, dtype=np.int64)
        s = n - 1
        for i in range(b):
            left = b - i - 1
            feasible = ups[ups <= s]
            w = tab.up[feasible] * tab.rows[left, s - feasible]
            a = int(rng.choice(feasible, p=w / w.sum()))
            branch[i] = a + 1
            s -= a
    seq = np.concatenate([np.zeros(n, dtype=np.int64), branch.astype(np.int64)])
    seq = rng.permutation(seq)
    return from_degree_sequence(_rotate_to_tree(seq).tolist())


def _sample_rejection(nu: OffspringDist, n: int, rng: np.random.Generator, cfg: SamplerConfig):
    """Draw unconditioned trees until one has n leaves; returns (tree, attempts)."""
    width = 2 * n - 1  # a tree with n leaves and no unary vertex has at most 2n - 1 vertices
    attempts = 0
    batch = 64
    while attempts < cfg.max_attempts:
        rows = min(batch, cfg.max_attempts - attempts)
        draws = _draw(nu, rng, (rows, width))
        walk = np.cumsum(draws - 1, axis=1)
        closed = walk == -1
        has = closed.any(axis=1)
        end = np.argmax(closed, axis=1)
        zeros = np.cumsum(draws == 0, axis=1)
        leaves = zeros[np.arange(rows), end]
        ok = np.flatnonzero(has & (leaves == n))
        if ok.size:
            r = int(ok[0])
            attempts += r + 1
            return from_degree_sequence(draws[r, : end[r] + 1].tolist()), attempts
        attempts += rows
        batch = min(batch * 2, 4096)
    raise SamplerError(f"no tree with {n} leaves after {cfg.max_attempts} attempts")


@lru_cache(maxsize=64)
def _enum_table(nu: OffspringDist, n: int):
    trees = enumerate_trees(n, nu.branch_support)
    w = np.array([math.prod(nu[k] for k in t.degrees) for t in trees])
    return trees, w


def conditioned_weights(nu: OffspringDist, n: int) -> tuple[list[PlanarTree], np.ndarray]:
    """Enumerated trees with n leaves and their conditional probabilities."""
    trees, w = _enum_table(nu, n)
    return trees, w / w.sum()


def sample_gw_n_leaves(
    nu: OffspringDist, n: int, rng: np.random.Generator, cfg: SamplerConfig = SamplerConfig()
) -> PlanarTree:
    """Galton-Watson tree conditioned to have exactly ``n`` leaves."""
    check_feasible(nu, n)
    if cfg.method == "cyclic":
        return _sample_cyclic(nu, n, rng)
    if cfg.method == "rejection":
        return _sample_rejection(nu, n, rng, cfg)[0]
    trees, p = conditioned_weights(nu, n)
    return trees[int(rng.choice(len(trees), p=p))]


def rejection_acceptance(nu: OffspringDist, n: int, accepts: int, rng: np.random.Generator,
                         cfg: SamplerConfig = SamplerConfig(method="rejection")) -> tuple[int, int]:
    """Run the rejection sampler until ``accepts`` trees; return (accepts, attempts)."""
    check_feasible(nu, n)
    total = 0
    for _ in range(accepts):
        total += _sample_rejection(nu, n, rng, cfg)[1]
    return accepts, total


@dataclass(frozen=True)
class GenerationProfile:
    n: int
    k: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    mean_hat: np.ndarray
    se_hat: np.ndarray
    replicates: int
    gap_mean: np.ndarray  # mean of zeta_k(hat) - 2 zeta_k per generation
    gap_se: np.ndarray
    vertex_mean: float  # mean total vertex count


def _profile_one(nu: OffspringDist, n: int, k_max: int, cfg: SamplerConfig):
    def run(rng, _i):
        t = sample_gw_n_leaves(nu, n, rng, cfg)
        a = np.zeros(k_max + 1)
        b = np.zeros(k_max + 1)
        g = stats(t).generation_sizes[: k_max + 1]
        h = stats(hat_transform(t)).generation_sizes[: k_max + 1]
        a[: len(g)] = g
        b[: len(h)] = h
        return a, b, len(t)
    return run


def empirical_generation_profile(
    nu: OffspringDist, n: int, k_max: int, replicates: int, seed: int,
    cfg: SamplerConfig = SamplerConfig(), threads: int = 1,
) -> GenerationProfile:
    """Monte Carlo means of the generation sizes of the conditioned tree and its hat tree."""
    check_feasible(nu, n)
    res = map_replicates(_ProfileJob(nu, n, k_max, cfg), replicates, seed, key=(n, 11), threads=threads)
    a = np.array([r[0] for r in res])
    b = np.array([r[1] for r in res])
    sizes = np.array([r[2] for r in res], dtype=float)
    sd = lambda x: x.std(axis=0, ddof=1) / math.sqrt(len(x)) if len(x) > 1 else np.zeros(x.shape[1])
    gap = b - 2 * a
    return GenerationProfile(n, np.arange(k_max + 1), a.mean(axis=0), sd(a), b.mean(axis=0), sd(b), replicates,
                             gap.mean(axis=0), sd(gap), float(sizes.mean()))


@dataclass(frozen=True)
class _ProfileJob:
    nu: OffspringDist
    n: int
    k_max: int
    cfg: SamplerConfig

    def __call__(self, rng, i):
        return _profile_one(self.nu, self.n, self.k_max, self.cfg)(rng, i)


@dataclass(frozen=True)
class _SampleJob:
    nu: OffspringDist
    n: int
    cfg: SamplerConfig

    def __call__(self, rng, _i):
        return sample_gw_n_leaves(self.nu, self.n, rng, self.cfg)


def sample_many(nu: OffspringDist, n: int, replicates: int, seed: int,
                cfg: SamplerConfig = SamplerConfig(), threads: int = 1) -> list[PlanarTree]:
    check_feasible(nu, n)
    return map_replicates(_SampleJob(nu, n, cfg), replicates, seed, key=(n, 1), threads=threads)

"""Offspring laws, norming constants and exact leaf/vertex count kernels.

All kernels here are deterministic dynamic programs in double precision; no
sampling is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

import numpy as np

LEAF_DP_CAP = 500
WALK_DP_CAP = 4000
TAIL_EPS = 1e-15


class OffspringError(ValueError):
    pass


@dataclass(frozen=True)
class OffspringDist:
    """Finite-support offspring law with no single-child mass.

    ``pmf`` is stored as a sorted tuple of ``(k, p)`` pairs so instances are
    hashable and can key the kernel caches.
    """

    pmf: tuple[tuple[int, float], ...]
    critical: bool = True

    def __post_init__(self):
        items = tuple(sorted((int(k), float(p)) for k, p in self.pmf if float(p) != 0.0))
        object.__setattr__(self, "pmf", items)
        ks = [k for k, _ in items]
        if len(set(ks)) != len(ks):
            raise OffspringError("repeated child count")
        if any(k < 0 for k in ks):
            raise OffspringError("negative child count")
        if any(p < 0 for _, p in items):
            raise OffspringError("negative probability")
        if abs(math.fsum(p for _, p in items) - 1.0) > 1e-12:
            raise OffspringError("probabilities must sum to 1")
        if 1 in ks:
            raise OffspringError("single-child mass is not supported (nu_1 must be 0)")
        if self.critical:
            if self.nu0 <= 0:
                raise OffspringError("nu_0 must be positive")
            if abs(self.mean - 1.0) > 1e-9:
                raise OffspringError(f"offspring mean {self.mean!r} is not critical")

    @classmethod
    def from_mapping(cls, pmf: Mapping[int, float], critical: bool = True) -> "OffspringDist":
        return cls(tuple(pmf.items()), critical=critical)

    @classmethod
    def parse(cls, text: str, critical: bool = True) -> "OffspringDist":
        """Parse ``"k:p,k:p,..."``; probabilities may be fractions such as ``2/3``."""
        pmf = {}
        for item in text.replace(" ", "").split(","):
            if not item:
                continue
            try:
                k, p = item.split(":")
                k = int(k)
                p = float(Fraction(p))
            except ValueError as exc:
                raise OffspringError(f"cannot parse offspring entry {item!r}") from exc
            if k == 1:
                raise OffspringError("single-child mass is not supported (nu_1 must be 0)")
            if k in pmf:
                raise OffspringError(f"child count {k} given twice")
            pmf[k] = p
        if not pmf:
            raise OffspringError("empty offspring law")
        return cls.from_mapping(pmf, critical=critical)

    def spec(self) -> str:
        return ",".join(f"{k}:{p!r}" for k, p in self.pmf)

    def __getitem__(self, k: int) -> float:
        return dict(self.pmf).get(k, 0.0)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.pmf)

    @property
    def branch_support(self) -> tuple[int, ...]:
        return tuple(k for k in self.support if k >= 2)

    @property
    def max_degree(self) -> int:
        return self.support[-1]

    @property
    def nu0(self) -> float:
        return self[0]

    @property
    def mean(self) -> float:
        return math.fsum(k * p for k, p in self.pmf)

    @property
    def variance(self) -> float:
        m = self.mean
        return math.fsum((k - m) ** 2 * p for k, p in self.pmf)

    def as_array(self) -> np.ndarray:
        out = np.zeros(self.max_degree + 1)
        for k, p in self.pmf:
            out[k] = p
        return out


def moments(nu: OffspringDist) -> tuple[float, float, float]:
    """(mean, variance, nu_0)."""
    return nu.mean, nu.variance, nu.nu0


BINARY = OffspringDist(((0, 0.5), (2, 0.5)))
TERNARY = OffspringDist(((0, 2 / 3), (3, 1 / 3)))
MIXED = OffspringDist(((0, 7 / 12), (2, 0.25), (3, 1 / 6)))
TEST_LAWS = {"binary": BINARY, "ternary": TERNARY, "mixed": MIXED}


@dataclass(frozen=True)
class NormingConstants:
    alpha: float
    a_n: float
    a_tilde: float
    c_n: float
    c_prime: float


def norming(nu: OffspringDist, n: int, alpha: float = 2.0, a_n: float | None = None) -> NormingConstants:
    """Norming constants for walks, trees and cut-trees with ``n`` leaves.

    For ``alpha == 2`` everything follows from the variance; other indices need
    the caller's ``a_n`` and then only ``a_n`` and ``a_tilde`` are meaningful.
    """
    if n < 1:
        raise OffspringError("n must be at least 1")
    if alpha == 2.0:
        s2 = nu.variance
        if s2 <= 0:
            raise OffspringError("degenerate offspring law (zero variance)")
        sigma = math.sqrt(s2)
        a = sigma * math.sqrt(n / 2) if a_n is None else a_n
        nu0 = nu.nu0
        return NormingConstants(
            alpha=2.0,
            a_n=a,
            a_tilde=a / math.sqrt(nu0),
            c_n=math.sqrt(n) / (sigma * math.sqrt(nu0)),
            c_prime=math.sqrt(nu0) * math.sqrt(n) / sigma,
        )
    if a_n is None:
        raise OffspringError("stable index below 2 needs an explicit a_n")
    a_t = a_n / nu.nu0 ** (1 / alpha)
    return NormingConstants(alpha, a_n, a_t, n / (math.sqrt(2) * a_t), math.nan)


# ---------------------------------------------------------------------------
# leaf and vertex counts of forests


@lru_cache(maxsize=32)
def _single_tree_counts(nu: OffspringDist, m_max: int, kind: str) -> np.ndarray:
    """P(lambda(G) = m) (kind="leaves") or P(zeta(G) = m) (kind="vertices"), m <= m_max.

    Uses the first-generation decomposition: a tree is a leaf, or a root with
    k subtrees whose counts add up (plus one for the root in the vertex case).
    """
    f = np.zeros(m_max + 1)
    K = nu.max_degree
    # powers[k][m] = P(S_k = m) built up incrementally in m
    powers = np.zeros((K + 1, m_max + 1))
    powers[0, 0] = 1.0
    shift = 1 if kind == "vertices" else 0
    for m in range(1, m_max + 1):
        val = nu.nu0 if m == 1 else 0.0
        target = m - shift
        for k in nu.branch_support:
            if target >= k:
                val += nu[k] * _power_entry(powers, f, k, target)
        f[m] = val
        powers[1, m] = val
        for k in range(2, K + 1):
            powers[k, m] = _power_entry(powers, f, k, m)
    return f


def _power_entry(powers: np.ndarray, f: np.ndarray, k: int, m: int) -> float:
    # P(S_k = m) = sum_i f[i] P(S_{k-1} = m - i); S_{k-1} >= k-1, f[i] needs i >= 1
    if m < k:
        return 0.0
    i = np.arange(1, m - k + 2)
    return float(np.dot(f[i], powers[k - 1, m - i]))


@lru_cache(maxsize=32)
def _forest_table(nu: OffspringDist, m_max: int, j_max: int, kind: str) -> np.ndarray:
    """table[j, m] = P(S_j = m) for j <= j_max, m <= m_max."""
    f = _single_tree_counts(nu, m_max, kind)
    table = np.zeros((j_max + 1, m_max + 1))
    table[0, 0] = 1.0
    for j in range(1, j_max + 1):
        table[j] = np.convolve(table[j - 1], f)[: m_max + 1]
    return table


def _check_cap(j: int, n: int, cap: int):
    if not 1 <= j <= n:
        raise OffspringError("need 1 <= j <= n")
    if n > cap:
        raise OffspringError(f"n={n} exceeds the configured cap {cap}")


def leaf_count_table(nu: OffspringDist, j_max: int, m_max: int, cap: int = LEAF_DP_CAP) -> np.ndarray:
    if m_max > cap:
        raise OffspringError(f"n={m_max} exceeds the configured cap {cap}")
    return _forest_table(nu, m_max, j_max, "leaves")


def leaf_count_pmf(nu: OffspringDist, j: int, n: int, cap: int = LEAF_DP_CAP) -> float:
    """P(S_j = n): j independent trees have n leaves in total."""
    _check_cap(j, n, cap)
    return float(_forest_table(nu, n, j, "leaves")[j, n])


def vertex_count_pmf(nu: OffspringDist, j: int, n: int, cap: int = LEAF_DP_CAP) -> float:
    """P(S^V_j = n): j independent trees have n vertices in total."""
    _check_cap(j, n, cap)
    return float(_forest_table(nu, n, j, "vertices")[j, n])


# ---------------------------------------------------------------------------
# walks


@dataclass(frozen=True)
class LatticePmf:
    """pmf on consecutive integers ``offset, offset+1, ...`` with a mass deficit bound."""

    offset: int
    probs: np.ndarray
    deficit: float = 0.0

    def __getitem__(self, value: int) -> float:
        i = value - self.offset
        if 0 <= i < len(self.probs):
            return float(self.probs[i])
        return 0.0

    @property
    def values(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + len(self.probs))

    @property
    def total(self) -> float:
        return float(self.probs.sum())


def step_pmf(nu: OffspringDist) -> LatticePmf:
    """Law of W_1 = (number of children) - 1."""
    return LatticePmf(-1, nu.as_array())


@lru_cache(maxsize=32)
def tilde_step_pmf(nu: OffspringDist, tail_eps: float = TAIL_EPS) -> LatticePmf:
    """Law of the increment between successive down-moves.

    The increment is A_1 + ... + A_G - 1 with G geometric (success nu_0) and
    A_i the up-moves, so its pmf h solves the renewal equation
    h(m) = nu_0 [m = 0] + (1 - nu_0) sum_a r(a) h(m - a), shifted by -1.
    Truncated once the remaining mass drops below ``tail_eps``.
    """
    nu0 = nu.nu0
    r = np.zeros(nu.max_degree)
    for k in nu.branch_support:
        r[k - 1] = nu[k] / (1 - nu0)
    h = [nu0]
    total = nu0
    m = 0
    while 1.0 - total >= tail_eps:
        m += 1
        lo = max(1, m - len(h))
        acc = 0.0
        for a in range(lo, min(m, len(r) - 1) + 1):
            acc += r[a] * h[m - a]
        val = (1 - nu0) * acc
        h.append(val)
        total += val
        if m > 100000:
            raise OffspringError("down-move increment tail does not decay")
    probs = np.array(h)
    return LatticePmf(-1, probs, deficit=max(0.0, 1.0 - math.fsum(h)))


def _trim_upper(probs: np.ndarray, budget: float) -> tuple[np.ndarray, float]:
    tail = np.cumsum(probs[::-1])
    drop = int(np.searchsorted(tail, budget, side="left"))
    # tail[drop-1] < budget <= tail[drop]; entries beyond keep-length carry < budget
    if drop == 0:
        return probs, 0.0
    removed = float(tail[drop - 1])
    return probs[: len(probs) - drop], removed


def walk_pmfs(step: LatticePmf, n_max: int, tail_eps: float = 0.0, cap: int = WALK_DP_CAP):
    """Yield the pmf of the n-step walk for n = 0..n_max by iterated convolution.

    With ``tail_eps > 0`` each step drops an upper tail of mass below
    ``tail_eps / 2``; the returned ``deficit`` bounds the total mass lost,
    including the step law's own truncation.
    """
    if n_max > cap:
        raise OffspringError(f"n={n_max} exceeds the configured cap {cap}")
    probs = np.array([1.0])
    offset = 0
    deficit = 0.0
    yield LatticePmf(0, probs.copy(), 0.0)
    for _ in range(n_max):
        probs = np.convolve(probs, step.probs)
        offset += step.offset
        deficit += step.deficit
        if tail_eps > 0:
            probs, removed = _trim_upper(probs, tail_eps / 2)
            deficit += removed
        yield LatticePmf(offset, probs.copy(), deficit)


def walk_pmf(nu: OffspringDist, n: int) -> LatticePmf:
    """Exact law of the Lukasiewicz walk W_n."""
    out = None
    for out in walk_pmfs(step_pmf(nu), n):
        pass
    return out


def tilde_walk_pmf(nu: OffspringDist, n: int, tail_eps: float = TAIL_EPS, cap: int = WALK_DP_CAP) -> LatticePmf:
    """Law of the leaf-time-changed walk after n down-moves.

    Total mass deficit is certified to be at most ``n * tail_eps``.
    """
    if n < 0:
        raise OffspringError("n must be non-negative")
    step = tilde_step_pmf(nu, tail_eps / 2)
    out = None
    for out in walk_pmfs(step, n, tail_eps, cap):
        pass
    return out


def cyclic_identity_gap(nu: OffspringDist, j: int, n: int, tail_eps: float = TAIL_EPS) -> float:
    """|P(S_j = n) - (j/n) P(W~_n = -j)|."""
    _check_cap(j, n, LEAF_DP_CAP)
    lhs = leaf_count_pmf(nu, j, n)
    rhs = j / n * tilde_walk_pmf(nu, n, tail_eps)[-j]
    return abs(lhs - rhs)


def vertex_cyclic_identity_gap(nu: OffspringDist, j: int, n: int) -> float:
    """|P(S^V_j = n) - (j/n) P(W_n = -j)|."""
    _check_cap(j, n, LEAF_DP_CAP)
    return abs(vertex_count_pmf(nu, j, n) - j / n * walk_pmf(nu, n)[-j])


def gaussian_density(x):
    """Density of the limit X_1, normal with variance 2."""
    return np.exp(-np.asarray(x, dtype=float) ** 2 / 4) / (2 * math.sqrt(math.pi))


def local_limit_gap(nu: OffspringDist, n: int, tail_eps: float = TAIL_EPS) -> float:
    """sup_k |a~_n P(W~_n = k) - p_1(k / a~_n)| over the computed support."""
    a_t = norming(nu, n).a_tilde
    pmf = tilde_walk_pmf(nu, n, tail_eps)
    return float(np.max(np.abs(a_t * pmf.probs - gaussian_density(pmf.values / a_t))))

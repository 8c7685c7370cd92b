"""Reference sampler for the Brownian continuum random tree (line-breaking)
and conversions between its usual normalisations."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass

import numpy as np

from .metric import tree_distances


class NormConvention(enum.Enum):
    """Scale of a convention relative to the line-breaking tree."""

    BR = 1.0  # line-breaking tree (same as Aldous's)
    HM = 0.5  # tree coded by a standard excursion
    KOR = 1 / math.sqrt(2)

    @classmethod
    def parse(cls, name: str) -> "NormConvention":
        key = name.strip().upper()
        aliases = {"ALD": "BR", "BR": "BR", "HM": "HM", "KOR": "KOR", "EXCURSION": "HM"}
        if key not in aliases:
            raise ValueError(f"unknown convention {name!r}")
        return cls[aliases[key]]


def convert(x: float, src: NormConvention, dst: NormConvention) -> float:
    """Re-express a distance measured in ``src`` units in ``dst`` units."""
    return x * dst.value / src.value


@dataclass(frozen=True, eq=False)
class CrtSample:
    """Distances between the root (index 0) and leaves 1..k; ``cuts`` are J_1 < ... < J_k."""

    k: int
    dist: np.ndarray
    cuts: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "j", "distance"])
        for i in range(self.k + 1):
            for j in range(i + 1, self.k + 1):
                w.writerow([i, j, repr(float(self.dist[i, j]))])
        return buf.getvalue()


def line_break_sample(k: int, rng: np.random.Generator) -> CrtSample:
    """Reduced tree spanned by the root and k uniform leaves.

    Cut points are the arrivals of a Poisson process of rate t dt, drawn by
    inversion. Segment m, of length J_m - J_{m-1}, is glued at a uniform point
    of the tree built so far and its free end is leaf m.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    u = rng.random(k)
    J = np.sqrt(np.cumsum(-2.0 * np.log1p(-u)))
    # vertices: 0 root, then leaves and branch points; edges stored by child
    parent = [-1, 0]
    length = [0.0, float(J[0])]
    leaf = [1]
    for m in range(1, k):
        lens = np.array(length)
        x = rng.random() * lens.sum()
        e = int(np.searchsorted(np.cumsum(lens), x, side="right"))
        e = min(e, len(lens) - 1)
        below = float(np.cumsum(lens)[e] - x)  # distance from the glue point down to vertex e
        # split edge (parent[e], e) at the glue point
        mid = len(parent)
        parent.append(parent[e])
        length.append(length[e] - below)
        parent[e] = mid
        length[e] = below
        parent.append(mid)
        length.append(float(J[m] - J[m - 1]))
        leaf.append(len(parent) - 1)
    order = _depth_first(parent)
    pos = {v: i for i, v in enumerate(order)}
    D = tree_distances([-1 if parent[v] < 0 else pos[parent[v]] for v in order], [length[v] for v in order])
    idx = [pos[0]] + [pos[v] for v in leaf]
    return CrtSample(k, D[np.ix_(idx, idx)], J)


def _depth_first(parent: list[int]) -> list[int]:
    kids: list[list[int]] = [[] for _ in parent]
    for v, p in enumerate(parent):
        if p >= 0:
            kids[p].append(v)
    order, stack = [], [0]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(reversed(kids[v]))
    return order


def rayleigh_cdf(x):
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, -np.expm1(-x * x / 2), 0.0)


RAYLEIGH_MEAN = math.sqrt(math.pi / 2)

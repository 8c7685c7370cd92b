"""Coding functions of planar trees and the leaf time change of walks."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

from .trees import PlanarTree, TreeError, from_degree_sequence


@dataclass(frozen=True)
class WalkPath:
    """Integer lattice path started at 0 with increments >= -1."""

    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if not self.values or self.values[0] != 0:
            raise ValueError("walk must start at 0")
        for a, b in zip(self.values, self.values[1:]):
            if b - a < -1:
                raise ValueError("walk is not downward skip-free")

    @classmethod
    def from_steps(cls, steps: Sequence[int]) -> "WalkPath":
        vals = [0]
        for s in steps:
            vals.append(vals[-1] + int(s))
        return cls(tuple(vals))

    @property
    def steps(self) -> tuple[int, ...]:
        v = self.values
        return tuple(v[i + 1] - v[i] for i in range(len(v) - 1))

    @cached_property
    def down_steps(self) -> tuple[int, ...]:
        """Times ``j`` with ``values[j] - values[j-1] == -1``."""
        v = self.values
        return tuple(j for j in range(1, len(v)) if v[j] - v[j - 1] == -1)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class CodingBundle:
    lukasiewicz: WalkPath
    height: tuple[int, ...]
    contour: tuple[int, ...]
    leaf_count: tuple[int, ...]

    def to_csv(self) -> tuple[str, str]:
        """Two CSV tables: (index, X, H, Lambda) and (time, C).

        ``H`` is blank at the final index, where only ``X`` and ``Lambda`` are defined.
        """
        a = io.StringIO()
        w = csv.writer(a, lineterminator="\n")
        w.writerow(["index", "X", "H", "Lambda"])
        X = self.lukasiewicz.values
        for j in range(len(X)):
            h = self.height[j] if j < len(self.height) else ""
            w.writerow([j, X[j], h, self.leaf_count[j]])
        b = io.StringIO()
        w = csv.writer(b, lineterminator="\n")
        w.writerow(["time", "C"])
        for s, c in enumerate(self.contour):
            w.writerow([s, c])
        return a.getvalue(), b.getvalue()


def lukasiewicz(t: PlanarTree) -> WalkPath:
    return WalkPath.from_steps([k - 1 for k in t.degrees])


def contour(t: PlanarTree) -> tuple[int, ...]:
    """Contour on the integer grid 0..2*zeta, zero after the walk returns."""
    out = [0]
    kids = t.children
    depths = t.depths
    # iterative depth-first walk; each edge is traversed up then down
    stack = [(t.root, 0)]
    while stack:
        v, i = stack.pop()
        if i < len(kids[v]):
            stack.append((v, i + 1))
            w = kids[v][i]
            out.append(depths[w])
            stack.append((w, 0))
        elif v != t.root:
            out.append(depths[v] - 1)
    out.extend([0] * (2 * len(t) + 1 - len(out)))
    return tuple(out)


def encode(t: PlanarTree) -> CodingBundle:
    X = lukasiewicz(t)
    lam = [0]
    for s in X.steps:
        lam.append(lam[-1] + (s == -1))
    return CodingBundle(X, t.depths, contour(t), tuple(lam))


def decode(x: WalkPath) -> PlanarTree:
    """Inverse of :func:`encode` on Lukasiewicz paths of single trees."""
    v = x.values
    if len(v) < 2 or v[-1] != -1 or any(val < 0 for val in v[:-1]):
        raise TreeError("not the Lukasiewicz path of a single tree")
    return from_degree_sequence([s + 1 for s in x.steps])


def leaf_time_change(w: WalkPath, length: int | None = None) -> WalkPath:
    """Observe ``w`` only after its down-steps: value n is ``w`` at the n-th down-step."""
    downs = w.down_steps
    if length is not None:
        if length > len(downs):
            raise ValueError(f"walk has {len(downs)} down-steps, {length} requested")
        downs = downs[:length]
    return WalkPath((0,) + tuple(w.values[k] for k in downs))


@dataclass(frozen=True)
class IndexMaps:
    phi: tuple[int, ...]
    psi: tuple[int, ...]


def index_maps(t: PlanarTree, t_hat: PlanarTree) -> IndexMaps:
    """phi sends hat-tree indices to source indices (extras go to their parent);
    psi counts hat-tree vertices strictly preceding each source vertex."""
    origin = t_hat.origin
    if origin is None or len(origin) != len(t_hat):
        raise TreeError("t_hat carries no back-references; build it with hat_transform")
    psi = [0] * len(t)
    seen = 0
    phi = []
    for i, o in enumerate(origin):
        if o >= 0:
            if o >= len(t):
                raise TreeError("back-reference outside the source tree")
            psi[o] = i
            phi.append(o)
            seen += 1
        else:
            p = origin[t_hat.parents[i]]
            if p < 0:
                raise TreeError("added vertex attached to an added vertex")
            phi.append(p)
    if seen != len(t):
        raise TreeError("t_hat does not contain every source vertex")
    return IndexMaps(tuple(phi), tuple(psi))

import math

import numpy as np
import pytest

from gwcut.cut import (
    TAIL_LEVELS, cut_distances, fragmentation_rates, fragmentation_inequality_mc, timed_fragmentation,
    trace_from_clocks,
)
from gwcut.offspring import BINARY, MIXED, norming
from gwcut.rng import substream
from gwcut.sampler import sample_gw_n_leaves
from gwcut.trees import hat_transform

from test_trees import CHERRY

ROOT2 = math.sqrt(2)


def test_cherry_rates():
    a = norming(BINARY, 2).a_tilde
    assert fragmentation_rates(CHERRY, a)[0] == pytest.approx(1 / ROOT2)
    assert fragmentation_rates(CHERRY, a, "k-1")[0] == pytest.approx(1 / (2 * ROOT2))
    with pytest.raises(ValueError):
        fragmentation_rates(CHERRY, a, "k+1")


def test_cherry_trace_by_hand():
    e = 0.7
    tr = trace_from_clocks(CHERRY, [e, math.inf, math.inf])
    assert tr.mass_history(1) == [(0.0, 1.0), (e, 0.0)]
    assert tr.separation_time(1, 2) == e
    d = cut_distances(tr, 1, 2)
    assert d.delta == 2 and d.delta_prime == 0.0 and d.delta_prime_root == pytest.approx(e)
    assert tr.delta(0, 1) == tr.delta(0, 2) == 1
    assert tr.tail_integral(1, 0.5) == pytest.approx(0.2)


def test_cherry_monte_carlo_moments():
    a = norming(BINARY, 2).a_tilde
    rng = substream(1)
    reps = 10_000
    root = np.empty(reps)
    tails = np.empty((reps, len(TAIL_LEVELS)))
    for r in range(reps):
        tr = timed_fragmentation(CHERRY, a, rng)
        root[r] = tr.delta_prime_root(1)
        tails[r] = [tr.tail_integral(1, 2.0 ** l) for l in TAIL_LEVELS]
    se = root.std(ddof=1) / math.sqrt(reps)
    assert abs(root.mean() - ROOT2) <= 3 * se
    # root inequality for the cherry: E[(sqrt2 - E)^2] = Var(E) = 2
    lhs = ((a * 1 - root) ** 2)
    assert abs(lhs.mean() - 2) <= 3 * lhs.std(ddof=1) / math.sqrt(reps)
    expected = [ROOT2 * math.exp(-(2.0 ** l) / ROOT2) for l in TAIL_LEVELS]
    for l, (m, x) in zip(TAIL_LEVELS, zip(tails.mean(axis=0), expected)):
        # (E - s)^+ has second moment 2 m^2 exp(-s / m) for E exponential with mean m
        sd = math.sqrt(2 * ROOT2 ** 2 * math.exp(-(2.0 ** l) / ROOT2) - x * x)
        assert abs(m - x) <= 3 * sd / math.sqrt(reps)
    assert all(b <= a for a, b in zip(expected, expected[1:]))


def test_masses_are_nonincreasing_and_absorbed():
    rng = substream(2)
    for n in (5, 30):
        t_hat = hat_transform(sample_gw_n_leaves(MIXED, n, rng))
        tr = timed_fragmentation(t_hat, norming(MIXED, n).a_tilde, rng)
        for i in range(1, len(t_hat)):
            hist = tr.mass_history(i)
            times = [t for t, _ in hist]
            masses = [m for _, m in hist]
            assert times == sorted(times)
            assert all(b <= a for a, b in zip(masses, masses[1:]))
            assert masses[-1] == 0.0 and masses[0] == pytest.approx(1.0)
        for i, j in ((1, 2), (1, len(t_hat) - 1)):
            assert math.isfinite(tr.delta_prime(i, j))


def test_leaf_mass_unit():
    rng = substream(3)
    t_hat = hat_transform(sample_gw_n_leaves(MIXED, 20, rng))
    tr = timed_fragmentation(t_hat, 3.0, rng, mass="leaves")
    assert tr.node_mass[0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        timed_fragmentation(t_hat, 3.0, rng, mass="volume")


def test_tracked_edges_are_checked():
    tr = timed_fragmentation(CHERRY, ROOT2, np.random.default_rng(0), tracked=[1])
    tr.delta_prime_root(1)
    with pytest.raises(KeyError):
        tr.delta_prime_root(2)
    with pytest.raises(KeyError):
        timed_fragmentation(CHERRY, ROOT2, np.random.default_rng(0), tracked=[5])


def test_fragmentation_report_small_run():
    rep = fragmentation_inequality_mc(BINARY, 50, 400, seed=1)
    assert rep.passed
    assert rep.time_scale_ratio == pytest.approx(0.5)
    assert len(rep.tails) == len(TAIL_LEVELS)
    again = fragmentation_inequality_mc(BINARY, 50, 400, seed=1, threads=2)
    assert again == rep

import math

import numpy as np
import pytest
from scipy import stats

from gwcut.crt import RAYLEIGH_MEAN, NormConvention, convert, line_break_sample, rayleigh_cdf
from gwcut.metric import is_tree_metric
from gwcut.rng import substream


def test_convert_examples():
    assert convert(1.0, NormConvention.BR, NormConvention.HM) == 0.5
    assert convert(1.0, NormConvention.BR, NormConvention.KOR) == pytest.approx(1 / math.sqrt(2))
    assert convert(3.7, NormConvention.BR, NormConvention.BR) == 3.7
    x = convert(convert(2.0, NormConvention.HM, NormConvention.KOR), NormConvention.KOR, NormConvention.HM)
    assert x == pytest.approx(2.0)


def test_parse_convention():
    assert NormConvention.parse("ald") is NormConvention.BR
    assert NormConvention.parse("Kor") is NormConvention.KOR
    with pytest.raises(ValueError):
        NormConvention.parse("xyz")


def test_first_leaf_is_rayleigh():
    rng = substream(8)
    x = np.array([line_break_sample(1, rng).dist[0, 1] for _ in range(100_000)])
    assert stats.kstest(x, rayleigh_cdf).pvalue > 0.01
    assert abs(x.mean() - RAYLEIGH_MEAN) < 4 * x.std() / math.sqrt(len(x))


def test_reduced_trees_are_trees_of_the_right_length():
    rng = substream(9)
    for k in (2, 3, 6):
        s = line_break_sample(k, rng)
        assert s.dist.shape == (k + 1, k + 1)
        assert is_tree_metric(s.dist)
        assert np.all(np.diff(s.cuts) > 0)
        if k == 2:
            # three distances among root and two leaves add up to twice the total length
            total = s.dist[0, 1] + s.dist[0, 2] + s.dist[1, 2]
            assert total == pytest.approx(2 * s.cuts[-1])


def test_csv_lists_every_pair():
    s = line_break_sample(3, np.random.default_rng(0))
    assert len(s.to_csv().strip().splitlines()) == 1 + 6
    with pytest.raises(ValueError):
        line_break_sample(0, np.random.default_rng(0))

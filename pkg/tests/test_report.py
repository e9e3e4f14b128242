import numpy as np
import pytest

from riskpipe.errors import DataError
from riskpipe.report import summarize_distribution


def test_four_values_two_bins():
    s = summarize_distribution([1, 2, 3, 4], False, 2)
    assert list(s.counts) == [2, 2]
    # linear interpolation: q1 = 1 + 0.75, q3 = 3 + 0.25
    assert (s.q1, s.median, s.q3) == (1.75, 2.5, 3.25)
    assert s.whisker_low == 1.75 - 1.5 * 1.5 and s.whisker_high == 3.25 + 1.5 * 1.5


def test_all_equal():
    s = summarize_distribution([0.4] * 7, False, 50)
    assert int(np.count_nonzero(s.counts)) == 1 and s.iqr == 0.0 and s.counts.sum() == 7


def test_log_bins_equal_width_in_log10():
    vals = np.logspace(-4, 0, 37)
    s = summarize_distribution(np.r_[vals, 0, 0], True, 8)
    widths = np.diff(np.log10(s.edges))
    assert np.allclose(widths, 0.5)
    assert s.zero_count == 2 and s.counts.sum() == 37 and s.n == 39


def test_log_scale_all_zero():
    s = summarize_distribution([0, 0], True, 10)
    assert s.zero_count == 2 and s.counts.size == 0


@pytest.mark.parametrize("vals,log", [([], False), ([-1.0, 2.0], True), ([float("nan")], False)])
def test_bad_inputs(vals, log):
    with pytest.raises(DataError):
        summarize_distribution(vals, log, 5)

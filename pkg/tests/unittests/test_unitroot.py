import unittest

import numpy as np
import pytest

from spline_arima.arima import ArimaOrder
from spline_arima.errors import ConstantSeriesError, SeriesTooShortError
from spline_arima.series_core import difference
from spline_arima.simulate import simulate_arima
from spline_arima.unitroot import (CRITICAL_VALUE_TABLE, LagSelection,
                                   adf_critical_values, adf_test,
                                   schwert_max_lag)


def random_walk(seed, n):
    return simulate_arima(ArimaOrder(0, 1, 0), n=n, seed=seed)


class TestCriticalValues(unittest.TestCase):

    def test_large_sample_values(self):
        values = adf_critical_values(3000)

        self.assertEqual(round(values['1%'], 2), -3.43)
        self.assertEqual(round(values['5%'], 2), -2.86)
        self.assertEqual(round(values['10%'], 2), -2.57)
        self.assertLessEqual(abs(values['10%'] - (-2.56)), 0.01)

    def test_small_samples_are_more_negative(self):
        self.assertLess(adf_critical_values(25)['1%'], adf_critical_values(3000)['1%'])

    def test_table_entries_are_returned_at_their_sizes(self):
        for size in (25, 100, 500):
            values = adf_critical_values(size)
            for level, expected in zip(('1%', '5%', '10%'), CRITICAL_VALUE_TABLE[size]):
                self.assertAlmostEqual(values[level], expected, places=12)

    def test_interpolated_values_lie_between_table_entries(self):
        values = adf_critical_values(150)

        for index, level in enumerate(('1%', '5%', '10%')):
            low, high = sorted((CRITICAL_VALUE_TABLE[100][index], CRITICAL_VALUE_TABLE[250][index]))
            self.assertTrue(low <= values[level] <= high)

    def test_levels_are_ordered(self):
        for size in (20, 25, 60, 400, 100000):
            values = adf_critical_values(size)
            self.assertTrue(values['1%'] < values['5%'] < values['10%'] < 0)

    def test_sample_too_small(self):
        with self.assertRaises(SeriesTooShortError):
            adf_critical_values(19)


def test_schwert_bound():
    assert schwert_max_lag(100) == 12
    assert schwert_max_lag(2000) == 25


def test_random_walk_keeps_its_unit_root_and_its_difference_rejects():
    not_rejected = 0
    for seed in range(20):
        walk = random_walk(seed, 2000)
        level = adf_test(walk)
        changes = adf_test(difference(walk, 1).values)

        not_rejected += not level.reject_unit_root_at_5pct
        assert changes.statistic < changes.critical_values['1%']
        assert changes.reject_unit_root_at_5pct
        assert changes.p_bracket == 'p < 0.01'

    assert not_rejected >= 16


def test_seeded_random_walk_is_not_rejected_at_its_level():
    walk = random_walk(0, 2000)

    level = adf_test(walk)
    changes = adf_test(difference(walk, 1).values)

    assert level.statistic > level.critical_values['5%']
    assert not level.reject_unit_root_at_5pct
    assert changes.statistic < changes.critical_values['1%']


def test_stationary_ar1_rejects():
    values = simulate_arima(ArimaOrder(1, 0, 0), phi=[0.5], n=2000, seed=31)

    assert adf_test(values).reject_unit_root_at_5pct


def test_decision_matches_the_five_percent_value():
    for seed in range(10):
        result = adf_test(random_walk(100 + seed, 300), max_lag=3, lag_selection='fixed')
        assert result.reject_unit_root_at_5pct == (result.statistic < result.critical_values['5%'])
        assert result.lags_used == 3


def test_statistic_is_shift_and_scale_invariant():
    walk = random_walk(5, 800)

    base = adf_test(walk, max_lag=4, lag_selection=LagSelection.FIXED).statistic
    shifted = adf_test(walk + 100.0, max_lag=4, lag_selection=LagSelection.FIXED).statistic
    scaled = adf_test(walk * 3.7, max_lag=4, lag_selection=LagSelection.FIXED).statistic

    assert shifted == pytest.approx(base, abs=1e-8)
    assert scaled == pytest.approx(base, abs=1e-8)


def test_size_of_the_test_on_random_walks():
    rejections = 0
    for seed in range(500):
        result = adf_test(random_walk(10000 + seed, 500), max_lag=0, lag_selection='fixed')
        rejections += result.reject_unit_root_at_5pct

    assert 10 <= rejections <= 40


def test_errors():
    with pytest.raises(ConstantSeriesError):
        adf_test([3.0] * 100)
    with pytest.raises(SeriesTooShortError):
        adf_test(np.arange(12.0), max_lag=5)


def test_report_fields():
    result = adf_test(random_walk(1, 400))

    report = result.to_report(d=0)

    assert set(report) == {'d', 'adf_statistic', 'p_value', 'critical_values', 'lags_used',
                           'n_effective', 'reject_unit_root_at_5pct'}
    assert report['n_effective'] == 399 - result.lags_used

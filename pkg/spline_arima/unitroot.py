"""
Augmented Dickey-Fuller test (constant, no trend) with a bundled table of
finite-sample critical values.
"""

import enum
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np
import singer

from spline_arima.errors import (ConstantSeriesError, ContractError,
                                 SeriesTooShortError)
from spline_arima.stats import is_constant, ols

LOGGER = singer.get_logger()

SIGNIFICANCE_LEVELS = ('1%', '5%', '10%')

# Constant-only Dickey-Fuller critical values evaluated from the MacKinnon
# response surface at each sample size; None is the asymptotic row.
CRITICAL_VALUE_TABLE = {
    25: (-3.7239, -2.9865, -2.6328),
    50: (-3.5685, -2.9214, -2.5987),
    100: (-3.4975, -2.8909, -2.5824),
    250: (-3.4568, -2.8732, -2.5730),
    500: (-3.4435, -2.8673, -2.5699),
    None: (-3.4304, -2.8615, -2.5668),
}

MIN_EFFECTIVE_SAMPLE = 20

# observations required beyond the largest lag
MIN_EXTRA_OBSERVATIONS = 10


class LagSelection(str, enum.Enum):
    FIXED = 'fixed'
    AIC = 'aic'

    @classmethod
    def parse(cls, mode: str) -> 'LagSelection':
        if isinstance(mode, cls):
            return mode
        try:
            return cls(str(mode).strip().lower())
        except ValueError:
            raise ContractError('Unknown lag selection "{}"; expected fixed or aic'.format(
                mode)) from None


@dataclass(frozen=True)
class AdfResult:
    """
    Outcome of an augmented Dickey-Fuller regression.
    """
    statistic: float
    lags_used: int
    n_effective: int
    critical_values: Dict[str, float]
    p_bracket: str
    reject_unit_root_at_5pct: bool

    def to_report(self, d: Optional[int] = None) -> dict:
        """
        Returns the JSON report record, keys named after the stationarity
        table rows.
        """
        report = {
            'adf_statistic': self.statistic,
            'p_value': self.p_bracket,
            'critical_values': dict(self.critical_values),
            'lags_used': self.lags_used,
            'n_effective': self.n_effective,
            'reject_unit_root_at_5pct': self.reject_unit_root_at_5pct,
        }
        if d is not None:
            report['d'] = d
        return report


def adf_critical_values(n_effective: int) -> Dict[str, float]:
    """
    Interpolates the bundled critical-value table linearly in 1/n.

    Sizes between 20 and 25 extrapolate along the first table segment.
    """
    if n_effective < MIN_EFFECTIVE_SAMPLE:
        raise SeriesTooShortError('ADF critical values need n_effective >= {}, got {}'.format(
            MIN_EFFECTIVE_SAMPLE, n_effective))

    sizes = sorted(size for size in CRITICAL_VALUE_TABLE if size is not None)
    inverse = 1.0 / n_effective
    # table points in 1/n, from the asymptotic row upwards
    points = [(0.0, CRITICAL_VALUE_TABLE[None])] + [
        (1.0 / size, CRITICAL_VALUE_TABLE[size]) for size in reversed(sizes)]

    for (left_x, left_row), (right_x, right_row) in zip(points, points[1:]):
        if inverse <= right_x:
            break
    weight = (inverse - left_x) / (right_x - left_x)
    values = [left + weight * (right - left) for left, right in zip(left_row, right_row)]
    return dict(zip(SIGNIFICANCE_LEVELS, values))


def _p_bracket(statistic: float, critical_values: Dict[str, float]) -> str:
    if statistic < critical_values['1%']:
        return 'p < 0.01'
    if statistic < critical_values['5%']:
        return '0.01 < p < 0.05'
    if statistic < critical_values['10%']:
        return '0.05 < p < 0.10'
    return 'p > 0.10'


def _design(levels: np.ndarray, lags: int, max_lag: int):
    """
    Builds the ADF regression on the sample shared by all lags up to max_lag.
    """
    changes = np.diff(levels)
    start = max_lag
    response = changes[start:]
    rows = len(response)
    columns = [np.ones(rows), levels[start:-1]]
    for k in range(1, lags + 1):
        columns.append(changes[start - k:len(changes) - k])
    return np.column_stack(columns), response


def schwert_max_lag(n: int) -> int:
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def adf_test(values: Sequence[float],
             max_lag: Optional[int] = None,
             lag_selection: LagSelection = LagSelection.AIC) -> AdfResult:
    """
    Augmented Dickey-Fuller test of a unit root against stationarity.

    Regresses the first difference on a constant, the lagged level and k
    lagged differences; the statistic is the t-ratio of the lagged level.
    With AIC selection, k is chosen in 0..max_lag on the common sample and
    the chosen regression is then refit on all usable observations.

    :param values: gap-free series
    :param max_lag: largest lag; defaults to the Schwert bound
    :param lag_selection: fixed (use max_lag) or aic
    :return: AdfResult
    """
    lag_selection = LagSelection.parse(lag_selection)
    levels = np.asarray(values, dtype=float)
    n = len(levels)
    if max_lag is None:
        max_lag = schwert_max_lag(n)
        # keep the default lag usable on short series
        max_lag = max(0, min(max_lag, n - MIN_EXTRA_OBSERVATIONS - MIN_EFFECTIVE_SAMPLE - 1))
    if max_lag < 0:
        raise ContractError('max_lag must be non-negative, got {}'.format(max_lag))
    if n < max_lag + MIN_EXTRA_OBSERVATIONS:
        raise SeriesTooShortError('ADF test with max_lag {} needs at least {} values, got {}'.format(
            max_lag, max_lag + MIN_EXTRA_OBSERVATIONS, n))
    if is_constant(levels):
        raise ConstantSeriesError('ADF test is undefined for a constant series')

    lags = max_lag
    if lag_selection is LagSelection.AIC and max_lag > 0:
        best_aic = math.inf
        for candidate in range(max_lag + 1):
            design, response = _design(levels, candidate, max_lag)
            fit = ols(design, response)
            rows, columns = design.shape
            aic = rows * math.log(fit.rss / rows) + 2 * columns
            if aic < best_aic:
                best_aic, lags = aic, candidate

    design, response = _design(levels, lags, lags)
    fit = ols(design, response)
    statistic = fit.coefficients[1] / fit.standard_errors[1]
    n_effective = design.shape[0]
    critical_values = adf_critical_values(n_effective)

    result = AdfResult(statistic=float(statistic),
                       lags_used=lags,
                       n_effective=n_effective,
                       critical_values=critical_values,
                       p_bracket=_p_bracket(statistic, critical_values),
                       reject_unit_root_at_5pct=bool(statistic < critical_values['5%']))
    LOGGER.info('ADF statistic %.4f with %s lags (%s), reject unit root at 5%%: %s',
                result.statistic, lags, result.p_bracket, result.reject_unit_root_at_5pct)
    return result

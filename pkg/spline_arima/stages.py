"""
This module defines the pipeline stage classes and the artifacts each one
writes.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import singer
from singer import Transformer, metrics

from spline_arima import arima, artifacts, evaluation, simulate, stats
from spline_arima.arima import ArimaOrder, FittedArima
from spline_arima.config import PipelineConfig
from spline_arima.errors import ContractError, SplineArimaDataError
from spline_arima.series_core import (RawSeries, TimeSeries, difference,
                                      load_csv_columns, to_daily_grid)
from spline_arima.spline import (BoundaryCondition, fit_cubic_spline,
                                 interpolate_missing)
from spline_arima.unitroot import AdfResult, LagSelection, adf_test

LOGGER = singer.get_logger()

# every Ljung-Box p-value must exceed this for residuals to count as white noise
WHITE_NOISE_P_VALUE = 0.05


@dataclass(frozen=True)
class SeriesContext:
    """
    One input column on its daily grid, before and after gap filling.
    """
    column: str
    grid: TimeSeries
    filled: TimeSeries
    filled_indices: Tuple[int, ...]

    @property
    def values(self) -> np.ndarray:
        return self.filled.to_array()


@dataclass(frozen=True)
class AdfSelection:
    selected_d: int
    results: Tuple[Tuple[int, AdfResult], ...]
    rejected: bool


@dataclass(frozen=True)
class WhiteNoiseCheck:
    passed: bool
    rows: Tuple[stats.LjungBoxRow, ...]

    @property
    def min_p_value(self) -> float:
        return min(row.p_value for row in self.rows)


def load_contexts(config: PipelineConfig) -> Dict[str, SeriesContext]:
    """
    Reads every configured column and fills its gaps with the configured
    spline boundary condition.
    """
    raws = load_csv_columns(config.input_path, config.columns, config.date_column)
    boundary = BoundaryCondition.parse(config.boundary_kind)
    contexts = {}
    for column in config.columns:
        grid = to_daily_grid(raws[column])
        filled, indices = interpolate_missing(grid, boundary)
        contexts[column] = SeriesContext(column=column,
                                         grid=grid,
                                         filled=filled,
                                         filled_indices=tuple(indices))
    return contexts


def white_noise_check(residuals: Sequence[float], config: PipelineConfig, fitted_params: int) -> WhiteNoiseCheck:
    """
    Ljung-Box test at lags 1..diagnostics_max_lag; passes when every
    p-value exceeds WHITE_NOISE_P_VALUE.
    """
    rows = stats.ljung_box(residuals,
                           config.diagnostics_max_lag,
                           fitted_params=fitted_params,
                           df_adjust=config.df_adjust)
    return WhiteNoiseCheck(passed=all(row.p_value > WHITE_NOISE_P_VALUE for row in rows),
                           rows=tuple(rows))


def _correlogram_lag(config: PipelineConfig, n: int) -> int:
    # PACF needs max_lag below n / 2
    return max(1, min(config.correlogram_max_lag, (n - 1) // 2))


class BaseStage:
    """
    A base class representing one pipeline stage.

    :param config: the resolved pipeline configuration
    :param options: stage-specific settings from the subcommand flags
    """
    stage_name = None
    artifact_suffixes = []
    optional_suffixes = []

    def __init__(self, config: PipelineConfig, options: Optional[dict] = None):
        self.config = config
        self.options = options or {}

    def path(self, column: str, suffix: str, **fields) -> str:
        """
        Output path of one declared artifact.

        :param column: the input column the artifact belongs to
        :param suffix: a template from artifact_suffixes or optional_suffixes
        :param fields: values for the template placeholders
        """
        if suffix not in self.artifact_suffixes and suffix not in self.optional_suffixes:
            raise ContractError('The {} stage does not declare the artifact {}'.format(
                self.stage_name, suffix))
        return artifacts.artifact_path(self.config.output_dir, column, suffix.format(**fields))

    def process(self, context: SeriesContext, transformer: Transformer):
        """
        Runs the stage on one column and writes its artifacts.

        :param context: the loaded and gap-filled column
        :param transformer: A singer Transformer object
        :return: the stage result handed to later stages
        """
        raise NotImplementedError("Child classes of BaseStage require "
                                  "`process` implementation")

    def run(self) -> Dict[str, object]:
        """
        Loads the input and processes every configured column.
        """
        results = {}
        with metrics.job_timer(self.stage_name):
            contexts = load_contexts(self.config)
            with Transformer() as transformer:
                for column, context in contexts.items():
                    LOGGER.info('Starting %s for column: %s', self.stage_name, column)
                    results[column] = self.process(context, transformer)
        return results

    def require_order(self) -> ArimaOrder:
        order = self.options.get('order')
        if order is None:
            raise ContractError('The {} stage needs an order, pass --order p,d,q'.format(
                self.stage_name))
        return order


class InterpolateStage(BaseStage):
    """
    Writes the gap-filled series with its interpolation flags and the raw
    daily grid; optionally dumps the spline pieces in global-x form.
    """
    stage_name = 'interpolate'
    artifact_suffixes = ['filled.csv', 'daily_grid.csv']
    optional_suffixes = ['spline.csv']

    def process(self, context: SeriesContext, transformer: Transformer) -> int:
        filled_set = set(context.filled_indices)
        dates = context.filled.dates()
        artifacts.write_csv(self.path(context.column, 'filled.csv'),
                            artifacts.FILLED_HEADER,
                            ((day, value, index in filled_set)
                             for index, (day, value) in enumerate(zip(dates, context.filled.values))))
        artifacts.write_csv(self.path(context.column, 'daily_grid.csv'),
                            artifacts.DAILY_GRID_HEADER,
                            zip(dates, context.grid.values))
        if self.options.get('spline_dump'):
            self.write_spline(context)
        LOGGER.info('%s: filled %s of %s daily slots',
                    context.column, len(context.filled_indices), len(context.filled))
        return len(context.filled_indices)

    def write_spline(self, context: SeriesContext):
        present = [i for i, value in enumerate(context.grid.values) if value is not None]
        spline = fit_cubic_spline(present,
                                  [context.grid.values[i] for i in present],
                                  BoundaryCondition.parse(self.config.boundary_kind))
        rows = ((index, left, right) + tuple(coefficients)
                for index, (left, right, coefficients) in enumerate(
                    zip(spline.knots_x, spline.knots_x[1:], spline.global_coefficients())))
        artifacts.write_csv(self.path(context.column, 'spline.csv'), artifacts.SPLINE_HEADER, rows)


class AdfStage(BaseStage):
    """
    Augmented Dickey-Fuller tests. With a fixed `d` option a single test is
    run; otherwise d is raised from 0 while the unit root is not rejected at
    adf_alpha, up to d_max.
    """
    stage_name = 'adf'
    artifact_suffixes = ['adf.json']

    def test(self, values: np.ndarray, d: int) -> AdfResult:
        return adf_test(difference(values, d).values,
                        max_lag=self.config.adf_max_lag,
                        lag_selection=LagSelection.parse(self.config.lag_selection))

    def select(self, values: np.ndarray) -> AdfSelection:
        fixed = self.options.get('d')
        candidates = [fixed] if fixed is not None else range(self.config.d_max + 1)
        results = []
        for d in candidates:
            result = self.test(values, d)
            results.append((d, result))
            if result.statistic < result.critical_values[self.config.adf_alpha]:
                return AdfSelection(selected_d=d, results=tuple(results), rejected=True)
        selected = results[-1][0]
        if fixed is None:
            LOGGER.warning('Unit root not rejected up to d=%s, continuing with d=%s',
                           self.config.d_max, selected)
        return AdfSelection(selected_d=selected, results=tuple(results), rejected=False)

    def process(self, context: SeriesContext, transformer: Transformer) -> AdfSelection:
        selection = self.select(context.values)
        tests = []
        for d, result in selection.results:
            entry = result.to_report(d)
            entry['reject_unit_root'] = bool(result.statistic < result.critical_values[self.config.adf_alpha])
            tests.append(entry)
        report = {
            'column': context.column,
            'alpha': self.config.adf_alpha,
            'selected_d': selection.selected_d if (selection.rejected or self.options.get('d') is None) else None,
            'tests': tests,
        }
        artifacts.write_report(self.path(context.column, 'adf.json'), 'adf_report', report, transformer)
        return selection


class AcfStage(BaseStage):
    """
    Sample ACF (with lag 0) and PACF of the d-times differenced series.
    """
    stage_name = 'acf'
    artifact_suffixes = ['acf_d{d}.csv', 'pacf_d{d}.csv']

    def process(self, context: SeriesContext, transformer: Transformer,
                d: Optional[int] = None) -> Tuple[stats.Correlogram, stats.Correlogram]:
        if d is None:
            d = self.options.get('d') or 0
        differenced = difference(context.values, d).values
        max_lag = _correlogram_lag(self.config, len(differenced))
        autocorrelations = stats.acf(differenced, max_lag)
        partials = stats.pacf(differenced, max_lag)
        artifacts.write_csv(self.path(context.column, 'acf_d{d}.csv', d=d),
                            artifacts.CORRELOGRAM_HEADER,
                            autocorrelations.rows(include_lag_zero=True))
        artifacts.write_csv(self.path(context.column, 'pacf_d{d}.csv', d=d),
                            artifacts.CORRELOGRAM_HEADER,
                            partials.rows())
        return autocorrelations, partials


class GridStage(BaseStage):
    """
    Information-criterion grid over p in 0..p_max and q in 0..q_max. Without
    a `d` option the differencing order comes from the ADF loop.
    """
    stage_name = 'grid'
    artifact_suffixes = ['grid.csv']

    def process(self, context: SeriesContext, transformer: Transformer, d: Optional[int] = None) -> evaluation.OrderGrid:
        if d is None:
            d = self.options.get('d')
        if d is None:
            d = AdfStage(self.config).select(context.values).selected_d
        grid = evaluation.grid_search(context.values,
                                      d,
                                      self.config.p_max,
                                      self.config.q_max,
                                      workers=self.config.workers)
        artifacts.write_csv(self.path(context.column, 'grid.csv'),
                            artifacts.GRID_HEADER,
                            ([cell.to_row()[key] for key in artifacts.GRID_HEADER] for cell in grid.cells))
        return grid


class FitStage(BaseStage):
    """
    Fits one order and writes the fit report, the Ljung-Box table and the
    residual and in-sample artifacts.
    """
    stage_name = 'fit'
    artifact_suffixes = ['fit.json', 'ljung_box.csv', 'residuals.csv',
                         'residual_acf.csv', 'residual_pacf.csv', 'fitted.csv']

    def write_fit(self,
                  context: SeriesContext,
                  fitted: FittedArima,
                  check: WhiteNoiseCheck,
                  candidates: Sequence[str],
                  transformer: Transformer):
        column = context.column
        conditioned = fitted.conditioned_residuals
        report = fitted.to_report()
        report['column'] = column
        report['white_noise'] = {
            'passed': check.passed,
            'max_lag': self.config.diagnostics_max_lag,
            'min_p_value': check.min_p_value,
            'candidates_tried': list(candidates),
        }
        summary = stats.residual_summary(conditioned)
        report['residual_summary'] = {
            'n': summary.n,
            'mean': summary.mean,
            'std': summary.std,
            'skewness': summary.skewness,
            'excess_kurtosis': summary.excess_kurtosis,
            'jarque_bera': summary.jarque_bera,
            'jarque_bera_p_value': summary.jarque_bera_p_value,
        }
        artifacts.write_report(self.path(column, 'fit.json'), 'fit_report', report, transformer)
        artifacts.write_csv(self.path(column, 'ljung_box.csv'),
                            artifacts.LJUNG_BOX_HEADER,
                            ((row.lag, row.q_stat, row.df, row.p_value) for row in check.rows))
        artifacts.write_csv(self.path(column, 'residuals.csv'),
                            artifacts.RESIDUALS_HEADER,
                            ((index, value, index < fitted.n_presample)
                             for index, value in enumerate(fitted.residuals)))

        max_lag = _correlogram_lag(self.config, len(conditioned))
        artifacts.write_csv(self.path(column, 'residual_acf.csv'),
                            artifacts.CORRELOGRAM_HEADER,
                            stats.acf(conditioned, max_lag).rows(include_lag_zero=True))
        artifacts.write_csv(self.path(column, 'residual_pacf.csv'),
                            artifacts.CORRELOGRAM_HEADER,
                            stats.pacf(conditioned, max_lag).rows())

        predictions = arima.in_sample_predictions(fitted, context.values)
        artifacts.write_csv(self.path(column, 'fitted.csv'),
                            artifacts.FITTED_HEADER,
                            ((context.filled.date_at(index), context.filled.values[index], predictions[index])
                             for index in range(0, len(predictions), self.config.fitted_stride)))

    def fit_and_check(self, context: SeriesContext, order: ArimaOrder) -> Tuple[FittedArima, WhiteNoiseCheck]:
        fitted = arima.fit(context.values, order)
        check = white_noise_check(fitted.conditioned_residuals, self.config, order.p + order.q)
        return fitted, check

    def process(self, context: SeriesContext, transformer: Transformer) -> FittedArima:
        order = self.require_order()
        fitted, check = self.fit_and_check(context, order)
        if not check.passed:
            LOGGER.warning('Residuals of %s are not white noise (min p-value %.4f)',
                           order.label, check.min_p_value)
        self.write_fit(context, fitted, check, [order.label], transformer)
        return fitted


class ForecastStage(BaseStage):
    """
    Forecasts forecast_horizon days past the last grid slot.
    """
    stage_name = 'forecast'
    artifact_suffixes = ['forecast.csv']

    def write_forecast(self, context: SeriesContext, fitted: FittedArima) -> arima.ForecastResult:
        horizon = self.config.forecast_horizon
        result = arima.forecast(fitted, context.values, horizon)
        artifacts.write_csv(self.path(context.column, 'forecast.csv'),
                            artifacts.FORECAST_HEADER,
                            zip(context.filled.future_dates(horizon),
                                result.point, result.stderr, result.ci_low, result.ci_high))
        return result

    def process(self, context: SeriesContext, transformer: Transformer) -> arima.ForecastResult:
        fitted = arima.fit(context.values, self.require_order())
        return self.write_forecast(context, fitted)


class BacktestStage(BaseStage):
    """
    Expanding-window backtest of one order over the configured test lengths.
    """
    stage_name = 'backtest'
    artifact_suffixes = ['backtest.csv']

    def process(self, context: SeriesContext, transformer: Transformer) -> evaluation.BacktestReport:
        report = evaluation.rolling_backtest(context.values,
                                             self.require_order(),
                                             self.config.test_lengths,
                                             workers=self.config.workers)
        artifacts.write_csv(self.path(context.column, 'backtest.csv'),
                            artifacts.BACKTEST_HEADER,
                            ([row.to_row()[key] for key in artifacts.BACKTEST_HEADER] for row in report.rows))
        return report


class SimulateStage(BaseStage):
    """
    Writes a seeded ARIMA fixture in the input CSV format. Needs no input
    file; the output path comes from the `output` option.
    """
    stage_name = 'simulate'
    artifact_suffixes = []

    def draw(self) -> RawSeries:
        options = self.options
        order = options.get('order') or ArimaOrder(1, 1, 0)
        values = simulate.simulate_arima(order,
                                         phi=options.get('phi', ()),
                                         theta=options.get('theta', ()),
                                         constant=options.get('constant', 0.0),
                                         sigma2=options.get('sigma2', 1.0),
                                         n=options.get('n', 1000),
                                         seed=options.get('seed', 0))
        return simulate.drop_slots(values,
                                   options['start_date'],
                                   self.config.value_column or 'Open',
                                   n_gaps=options.get('n_gaps'),
                                   gap_rate=options.get('gap_rate', 0.0),
                                   seed=options.get('seed', 0))

    def run(self) -> Dict[str, object]:
        with metrics.job_timer(self.stage_name):
            raw = self.draw()
            if not raw.observations:
                raise SplineArimaDataError('Simulation produced no observations')
            artifacts.write_series_csv(self.options['output'], [raw], self.config.date_column)
        return {raw.column_name: len(raw)}

    def process(self, context: SeriesContext, transformer: Transformer):
        raise ContractError('The simulate stage does not read an input series')


STAGES = {
    'interpolate': InterpolateStage,
    'adf': AdfStage,
    'acf': AcfStage,
    'grid': GridStage,
    'fit': FitStage,
    'forecast': ForecastStage,
    'backtest': BacktestStage,
    'simulate': SimulateStage,
}

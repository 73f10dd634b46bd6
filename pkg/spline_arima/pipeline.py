"""
This module defines the end-to-end orchestration behind the `auto`
subcommand.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional

import singer
from singer import Transformer, metrics

from spline_arima import arima
from spline_arima.arima import FittedArima
from spline_arima.config import PipelineConfig
from spline_arima.errors import NoConvergedCellError, SplineArimaError
from spline_arima.evaluation import OrderGrid
from spline_arima.stages import (AcfStage, AdfStage, FitStage, ForecastStage,
                                 GridStage, InterpolateStage, SeriesContext,
                                 load_contexts)

LOGGER = singer.get_logger()


@dataclass(frozen=True)
class AutoResult:
    column: str
    d: int
    fitted: FittedArima
    passed_gate: bool
    candidates_tried: List[str]
    forecast: arima.ForecastResult


def select_model(context: SeriesContext,
                 config: PipelineConfig,
                 grid: OrderGrid,
                 fit_stage: FitStage) -> Optional[tuple]:
    """
    Walks the grid ranking under the configured criterion and keeps the first
    of up to gate_candidates orders whose residuals pass the Ljung-Box gate.
    Without a passing candidate the best-ranked fit is returned.

    :return: (fitted, check, labels of the orders tried) or None when no
        candidate could be fitted
    """
    tried = []
    fallback = None
    for cell in grid.ranked(config.criterion)[:config.gate_candidates]:
        order = grid.order(cell.p, cell.q)
        tried.append(order.label)
        try:
            fitted, check = fit_stage.fit_and_check(context, order)
        except SplineArimaError as error:
            LOGGER.warning('Candidate %s failed: %s', order.label, error)
            continue
        if check.passed:
            LOGGER.info('%s passes the white-noise gate (min p-value %.4f)',
                        order.label, check.min_p_value)
            return fitted, check, tried
        LOGGER.warning('%s fails the white-noise gate (min p-value %.4f)',
                       order.label, check.min_p_value)
        if fallback is None:
            fallback = (fitted, check)
    if fallback is None:
        return None
    return fallback[0], fallback[1], tried


def process_column(context: SeriesContext, config: PipelineConfig, transformer: Transformer) -> AutoResult:
    """
    Runs every stage on one column in modeling order: interpolation, the
    ADF differencing loop, correlograms, the order grid, the white-noise
    gated fit and the forecast.
    """
    column = context.column
    InterpolateStage(config).process(context, transformer)

    selection = AdfStage(config).process(context, transformer)
    acf_stage = AcfStage(config)
    for d, _ in selection.results:
        acf_stage.process(context, transformer, d=d)

    grid = GridStage(config).process(context, transformer, d=selection.selected_d)

    fit_stage = FitStage(config)
    chosen = select_model(context, config, grid, fit_stage)
    if chosen is None:
        raise NoConvergedCellError('No candidate order of {} could be fitted'.format(column))
    fitted, check, tried = chosen
    if not check.passed:
        LOGGER.warning('No candidate for %s passed the white-noise gate; writing %s anyway',
                       column, fitted.order.label)
    fit_stage.write_fit(context, fitted, check, tried, transformer)

    forecast = ForecastStage(config).write_forecast(context, fitted)
    return AutoResult(column=column,
                      d=selection.selected_d,
                      fitted=fitted,
                      passed_gate=check.passed,
                      candidates_tried=tried,
                      forecast=forecast)


def cmd_auto(config: PipelineConfig) -> Dict[str, AutoResult]:
    """
    Runs the full pipeline on every configured column.
    """
    results = {}
    with metrics.job_timer('auto'):
        contexts = load_contexts(config)
        with Transformer() as transformer:
            for column, context in contexts.items():
                LOGGER.info('Starting auto pipeline for column: %s', column)
                results[column] = process_column(context, config, transformer)
    return results

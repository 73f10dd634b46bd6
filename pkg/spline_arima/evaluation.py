"""
Order selection by information-criterion grid search and expanding-window
backtesting.
"""

import functools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import singer
from singer import metrics

from spline_arima import arima
from spline_arima.arima import ArimaOrder
from spline_arima.errors import (ContractError, NoConvergedCellError,
                                 NoFeasibleFoldError, OutOfRangeError,
                                 SeriesTooShortError, SplineArimaError)

LOGGER = singer.get_logger()

CRITERIA = ('aic', 'bic', 'hqic')

# criterion values this close (relative) count as a tie
TIE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GridCell:
    p: int
    q: int
    aic: Optional[float] = None
    bic: Optional[float] = None
    hqic: Optional[float] = None
    converged: bool = False
    error: Optional[str] = None

    def criterion(self, name: str) -> Optional[float]:
        return getattr(self, name)

    def to_row(self) -> dict:
        return {
            'p': self.p,
            'q': self.q,
            'aic': self.aic,
            'bic': self.bic,
            'hqic': self.hqic,
            'converged': self.converged,
        }


def _check_criterion(criterion: str) -> str:
    criterion = str(criterion).strip().lower()
    if criterion not in CRITERIA:
        raise ContractError('Unknown criterion "{}"; expected one of {}'.format(
            criterion, ', '.join(CRITERIA)))
    return criterion


def _select(cells: Sequence[GridCell], criterion: str) -> GridCell:
    """
    Argmin of the criterion; ties within TIE_TOLERANCE go to the smaller
    p + q, then the smaller p.
    """
    lowest = min(cell.criterion(criterion) for cell in cells)
    tolerance = TIE_TOLERANCE * max(1.0, abs(lowest))
    tied = [cell for cell in cells if cell.criterion(criterion) - lowest <= tolerance]
    return min(tied, key=lambda cell: (cell.p + cell.q, cell.p))


@dataclass(frozen=True)
class OrderGrid:
    """
    Information criteria of every (p, q) cell at a fixed d. Cells are kept
    in (p, q) order; failed or unconverged cells carry converged=False and
    never win a selection.
    """
    d: int
    include_constant: bool
    cells: Tuple[GridCell, ...]
    best_by_aic: Tuple[int, int]
    best_by_bic: Tuple[int, int]
    best_by_hqic: Tuple[int, int]

    def cell(self, p: int, q: int) -> GridCell:
        for cell in self.cells:
            if (cell.p, cell.q) == (p, q):
                return cell
        raise ContractError('Grid has no cell ({}, {})'.format(p, q))

    def ranked(self, criterion: str) -> List[GridCell]:
        """
        Converged cells from best to worst under the criterion, applying the
        tie-break at every rank.
        """
        criterion = _check_criterion(criterion)
        remaining = [cell for cell in self.cells if cell.converged]
        ranking = []
        while remaining:
            chosen = _select(remaining, criterion)
            ranking.append(chosen)
            remaining.remove(chosen)
        return ranking

    def order(self, p: int, q: int) -> ArimaOrder:
        return ArimaOrder(p, self.d, q, self.include_constant)


@dataclass(frozen=True)
class BacktestRow:
    test_length: int
    mse: float
    n_windows: int
    skipped: int
    n_predictions: int

    def to_row(self) -> dict:
        return {'test_length': self.test_length, 'mse': self.mse, 'n_windows': self.n_windows,
                'skipped': self.skipped}


@dataclass(frozen=True)
class BacktestReport:
    order: ArimaOrder
    rows: Tuple[BacktestRow, ...]

    def row(self, test_length: int) -> BacktestRow:
        for row in self.rows:
            if row.test_length == test_length:
                return row
        raise ContractError('No backtest row for test length {}'.format(test_length))


def _run_ordered(function: Callable, items: Sequence, workers: int) -> list:
    """
    Applies function to every item, concurrently when workers > 1, and
    returns the results in item order.
    """
    if workers < 1:
        raise ContractError('workers must be at least 1, got {}'.format(workers))
    if workers == 1 or len(items) < 2:
        return [function(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, items))


def _fit_cell(values: np.ndarray, order: ArimaOrder) -> GridCell:
    try:
        fitted = arima.fit(values, order)
    except SplineArimaError as error:
        LOGGER.warning('Grid cell %s failed: %s', order.label, error)
        return GridCell(p=order.p, q=order.q, error=str(error))
    if not fitted.converged:
        LOGGER.warning('Grid cell %s did not converge', order.label)
    return GridCell(p=order.p,
                    q=order.q,
                    aic=fitted.aic,
                    bic=fitted.bic,
                    hqic=fitted.hqic,
                    converged=fitted.converged)


def grid_search(series: Sequence[float],
                d: int,
                p_max: int,
                q_max: int,
                include_constant: Optional[bool] = None,
                workers: int = 1) -> OrderGrid:
    """
    Fits ARIMA(p, d, q) for every p in 0..p_max and q in 0..q_max and picks
    the argmin of each information criterion among converged cells.

    The (0, 0) cell is left out when d = 0 and the model has no constant.
    Cells may be fitted concurrently; results are merged in (p, q) order.

    :param series: gap-free level series
    :param d: differencing order shared by all cells
    :param p_max: largest AR order, at most 10
    :param q_max: largest MA order, at most 10
    :param include_constant: constant flag for all cells, default d == 0
    :param workers: number of concurrent fits
    :return: OrderGrid
    """
    for name, bound in (('p_max', p_max), ('q_max', q_max)):
        if not 0 <= bound <= arima.MAX_ORDER:
            raise OutOfRangeError('{} must be in 0..{}, got {}'.format(name, arima.MAX_ORDER, bound))
    if include_constant is None:
        include_constant = d == 0
    values = np.asarray(series, dtype=float)
    minimum = arima.MIN_FIT_EXTRA + p_max + d + q_max
    if len(values) < minimum:
        raise SeriesTooShortError('Grid up to ({}, {}) at d={} needs {} observations, got {}'.format(
            p_max, q_max, d, minimum, len(values)))

    orders = [ArimaOrder(p, d, q, include_constant)
              for p in range(p_max + 1)
              for q in range(q_max + 1)
              if p or q or d or include_constant]
    if not orders:
        raise ContractError('Grid is empty: (0, 0) without constant at d=0 is not a model')

    LOGGER.info('Grid search over %s cells at d=%s with %s workers', len(orders), d, workers)
    with metrics.record_counter('grid_cells') as counter:
        cells = tuple(_run_ordered(functools.partial(_fit_cell, values), orders, workers))
        counter.increment(len(cells))

    converged = [cell for cell in cells if cell.converged]
    if not converged:
        raise NoConvergedCellError('No grid cell converged at d={}'.format(d))

    best = {criterion: _select(converged, criterion) for criterion in CRITERIA}
    grid = OrderGrid(d=d,
                     include_constant=include_constant,
                     cells=cells,
                     best_by_aic=(best['aic'].p, best['aic'].q),
                     best_by_bic=(best['bic'].p, best['bic'].q),
                     best_by_hqic=(best['hqic'].p, best['hqic'].q))
    LOGGER.info('Best cells: aic %s, bic %s, hqic %s',
                grid.best_by_aic, grid.best_by_bic, grid.best_by_hqic)
    return grid


def mse(predicted: Sequence[float], observed: Sequence[float]) -> float:
    """
    Mean squared difference of two equally long, non-empty vectors.
    """
    predicted = np.asarray(predicted, dtype=float)
    observed = np.asarray(observed, dtype=float)
    if predicted.shape != observed.shape:
        raise ContractError('mse needs equal lengths, got {} and {}'.format(
            predicted.size, observed.size))
    if predicted.size == 0:
        raise ContractError('mse needs at least one value')
    return float(np.mean((predicted - observed) ** 2))


def _fold_errors(values: np.ndarray, order: ArimaOrder, window: int, test_length: int) -> Optional[np.ndarray]:
    """
    Squared errors of one fold, or None when its fit failed.
    """
    try:
        fitted = arima.fit(values[:window], order)
        result = arima.forecast(fitted, values[:window], test_length)
    except SplineArimaError as error:
        LOGGER.warning('Skipping fold with window %s for test length %s: %s',
                       window, test_length, error)
        return None
    return (np.asarray(result.point) - values[window:window + test_length]) ** 2


def rolling_backtest(series: Sequence[float],
                     order: ArimaOrder,
                     test_lengths: Sequence[int],
                     workers: int = 1) -> BacktestReport:
    """
    Expanding-window backtest. For each test length L the window starts
    with the first L points; each fold fits the window, forecasts the next
    L points in one batch and then grows the window by those L points,
    until fewer than L points remain.

    Folds whose fit fails are skipped and counted; a test length with no
    usable fold raises NoFeasibleFoldError.

    :param series: gap-free level series
    :param order: the model to evaluate
    :param test_lengths: test lengths, each below half the series length
    :param workers: number of concurrent folds
    :return: BacktestReport with one row per test length, in input order
    """
    values = np.asarray(series, dtype=float)
    n = len(values)
    if not test_lengths:
        raise ContractError('At least one test length is required')
    for test_length in test_lengths:
        if int(test_length) != test_length or test_length < 1 or test_length >= n / 2.0:
            raise OutOfRangeError('Test length {} must be a positive integer below half the '
                                  'series length {}'.format(test_length, n))

    rows = []
    with metrics.record_counter('backtest_folds') as counter:
        for test_length in test_lengths:
            test_length = int(test_length)
            windows = list(range(test_length, n - test_length + 1, test_length))

            fold_errors = _run_ordered(
                functools.partial(_fold_errors, values, order, test_length=test_length), windows, workers)
            counter.increment(len(fold_errors))
            usable = [errors for errors in fold_errors if errors is not None]
            if not usable:
                raise NoFeasibleFoldError('Every fold of {} failed for test length {}'.format(
                    order.label, test_length))
            squared = np.concatenate(usable)
            row = BacktestRow(test_length=test_length,
                              mse=float(np.mean(squared)),
                              n_windows=len(usable),
                              skipped=len(windows) - len(usable),
                              n_predictions=int(squared.size))
            LOGGER.info('Backtest %s, test length %s: mse %.6f over %s folds (%s skipped)',
                        order.label, test_length, row.mse, row.n_windows, row.skipped)
            rows.append(row)
    return BacktestReport(order=order, rows=tuple(rows))

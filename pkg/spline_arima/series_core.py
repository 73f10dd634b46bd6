"""
Module for the time-series data model, calendar-grid alignment and
differencing.
"""

import csv
import datetime
import math
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import singer

from spline_arima.errors import (DuplicateDateError, EmptySeriesError,
                                 InputFileNotFoundError, MissingColumnError,
                                 MissingValuesError, NonNumericValueError,
                                 SeriesTooShortError, UnparseableDateError,
                                 ContractError)

LOGGER = singer.get_logger()

DATE_FORMAT = '%Y-%m-%d'


@dataclass(frozen=True)
class RawSeries:
    """
    Ordered (date, value) observations of one CSV column.

    :param observations: tuple of (date, value) pairs, strictly increasing dates
    :param column_name: the CSV column the values came from
    """
    observations: Tuple[Tuple[datetime.date, float], ...]
    column_name: str

    def __post_init__(self):
        previous = None
        for observed_date, value in self.observations:
            if previous is not None and observed_date <= previous:
                raise DuplicateDateError(
                    'Dates must be strictly increasing, got {} after {}'.format(
                        observed_date.isoformat(), previous.isoformat()))
            if not math.isfinite(value):
                raise NonNumericValueError(
                    'Non-finite value {} on {}'.format(value, observed_date.isoformat()))
            previous = observed_date

    def __len__(self):
        return len(self.observations)


@dataclass(frozen=True)
class TimeSeries:
    """
    A series on a uniform daily grid. Slot i holds the value observed on
    start_date + i days, or None when that day is missing.
    """
    start_date: datetime.date
    values: Tuple[Optional[float], ...]
    column_name: str

    def __post_init__(self):
        if not self.values:
            raise EmptySeriesError('A daily grid needs at least one slot')
        if self.values[0] is None or self.values[-1] is None:
            raise ContractError('First and last slots of a daily grid must be present')

    def __len__(self):
        return len(self.values)

    def date_at(self, index: int) -> datetime.date:
        """
        Returns the calendar date of slot `index`; indices past the end
        continue the grid.
        """
        return self.start_date + datetime.timedelta(days=index)

    def dates(self) -> List[datetime.date]:
        return [self.date_at(i) for i in range(len(self.values))]

    def future_dates(self, horizon: int) -> List[datetime.date]:
        """
        Returns the `horizon` calendar days following the last slot.
        """
        return [self.date_at(len(self.values) + i) for i in range(horizon)]

    def missing_indices(self) -> List[int]:
        return [i for i, value in enumerate(self.values) if value is None]

    def to_array(self) -> np.ndarray:
        """
        Returns the slot values as a float array; the grid must be gap-free.
        """
        missing = self.missing_indices()
        if missing:
            raise MissingValuesError(
                '{} has {} missing slots, interpolate before modeling'.format(
                    self.column_name, len(missing)))
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class DifferencedSeries:
    """
    The d-times differenced values of a series together with the d leading
    values of the source needed to invert the differencing.
    """
    values: Tuple[float, ...]
    d: int
    origin: Tuple[float, ...]


def _parse_date(text: str, line_number: int) -> datetime.date:
    try:
        return datetime.datetime.strptime(text.strip(), DATE_FORMAT).date()
    except ValueError:
        raise UnparseableDateError(
            'Row {}: date "{}" is not an ISO-8601 YYYY-MM-DD date'.format(
                line_number, text)) from None


def _parse_value(text: str, line_number: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise NonNumericValueError(
            'Row {}: value "{}" in column "{}" is not numeric'.format(
                line_number, text, column)) from None
    if not math.isfinite(value):
        raise NonNumericValueError(
            'Row {}: value "{}" in column "{}" is not finite'.format(
                line_number, text, column))
    return value


def load_csv_columns(path: str,
                     columns: Sequence[str],
                     date_column: str = 'Date') -> Dict[str, RawSeries]:
    """
    Reads one or more numeric columns of a CSV file into RawSeries objects.

    Rows with an empty cell in a column are treated as not observed for that
    column. Rows need not be sorted; each column is returned in date order.

    :param path: path to a comma separated UTF-8 file with a header row
    :param columns: names of the value columns to read
    :param date_column: name of the ISO-8601 date column
    :return: dict of column name to RawSeries
    """
    if not os.path.isfile(path):
        raise InputFileNotFoundError('Input file "{}" does not exist'.format(path))

    with open(path, newline='', encoding='utf-8') as file:
        reader = csv.DictReader(file)
        header = reader.fieldnames or []
        for name in [date_column] + list(columns):
            if name not in header:
                raise MissingColumnError(
                    'Column "{}" not found in {}; available columns: {}'.format(
                        name, path, ', '.join(header)))

        rows = {column: [] for column in columns}
        seen_dates = {}
        # header is line 1
        for line_number, row in enumerate(reader, start=2):
            observed_date = _parse_date(row[date_column] or '', line_number)
            if observed_date in seen_dates:
                raise DuplicateDateError(
                    'Row {}: duplicate date {} (first seen on row {})'.format(
                        line_number, observed_date.isoformat(), seen_dates[observed_date]))
            seen_dates[observed_date] = line_number
            for column in columns:
                cell = (row[column] or '').strip()
                if not cell:
                    continue
                rows[column].append((observed_date, _parse_value(cell, line_number, column)))

    result = {}
    for column in columns:
        observations = tuple(sorted(rows[column], key=lambda pair: pair[0]))
        LOGGER.info('Loaded %s observations for column %s from %s',
                    len(observations), column, path)
        result[column] = RawSeries(observations=observations, column_name=column)
    return result


def load_csv(path: str, column: str, date_column: str = 'Date') -> RawSeries:
    """
    Reads a single numeric column of a CSV file into a RawSeries.
    """
    return load_csv_columns(path, [column], date_column)[column]


def to_daily_grid(raw: RawSeries) -> TimeSeries:
    """
    Places observations on a calendar-day grid from the first to the last
    observed date. Days without an observation become None slots.
    """
    if not raw.observations:
        raise EmptySeriesError('Column {} has no observations'.format(raw.column_name))

    start_date = raw.observations[0][0]
    end_date = raw.observations[-1][0]
    slots: List[Optional[float]] = [None] * ((end_date - start_date).days + 1)
    for observed_date, value in raw.observations:
        slots[(observed_date - start_date).days] = value

    grid = TimeSeries(start_date=start_date, values=tuple(slots), column_name=raw.column_name)
    LOGGER.info('Daily grid for %s: %s slots, %s missing',
                raw.column_name, len(grid), len(grid.missing_indices()))
    return grid


def _as_finite_array(values: Sequence[float]) -> np.ndarray:
    if any(value is None for value in values):
        raise MissingValuesError('Cannot difference a series with missing slots')
    array = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(array)):
        raise NonNumericValueError('Cannot difference a series with non-finite values')
    return array


def difference(values: Sequence[float], d: int) -> DifferencedSeries:
    """
    Applies first differencing d times and keeps the d leading values of the
    source for inversion.

    :param values: gap-free series
    :param d: order of differencing
    :return: DifferencedSeries of length len(values) - d
    """
    if d < 0:
        raise ContractError('Differencing order must be non-negative, got {}'.format(d))
    array = _as_finite_array(values)
    if len(array) <= d:
        raise SeriesTooShortError(
            'Series of length {} is too short to difference {} times'.format(len(array), d))

    differenced = np.diff(array, n=d) if d else array.copy()
    return DifferencedSeries(values=tuple(differenced.tolist()),
                             d=d,
                             origin=tuple(array[:d].tolist()))


def _undifference_array(values: np.ndarray, d: int, origin: np.ndarray) -> np.ndarray:
    if d == 0:
        return values
    # the once-differenced series has d - 1 differences left and starts with
    # the differences of the retained origin
    once_differenced = _undifference_array(values, d - 1, np.diff(origin))
    return np.concatenate(([origin[0]], origin[0] + np.cumsum(once_differenced)))


def undifference(diff: DifferencedSeries) -> List[float]:
    """
    Inverts `difference`: undifference(difference(x, d)) == x.
    """
    if len(diff.origin) != diff.d:
        raise ContractError('Origin holds {} values but d is {}'.format(
            len(diff.origin), diff.d))
    restored = _undifference_array(np.asarray(diff.values, dtype=float),
                                   diff.d,
                                   np.asarray(diff.origin, dtype=float))
    return restored.tolist()

"""
Module that handles the output artifacts: report schemas, JSON reports
conformed to them and the plot-ready CSV files.
"""

import csv
import datetime
import json
import os
from typing import Dict, Iterable, Optional, Sequence

import numpy as np
import singer
from singer import Transformer

from spline_arima.series_core import DATE_FORMAT, RawSeries

LOGGER = singer.get_logger()

REPORT_SCHEMAS = ['adf_report', 'fit_report']

FILLED_HEADER = ['date', 'value', 'was_interpolated']
DAILY_GRID_HEADER = ['date', 'value']
SPLINE_HEADER = ['interval_index', 'x_left', 'x_right', 'a', 'b', 'c', 'd']
CORRELOGRAM_HEADER = ['lag', 'coefficient', 'band']
LJUNG_BOX_HEADER = ['lag', 'q_stat', 'df', 'p_value']
GRID_HEADER = ['p', 'q', 'aic', 'bic', 'hqic', 'converged']
BACKTEST_HEADER = ['test_length', 'mse', 'n_windows', 'skipped']
FORECAST_HEADER = ['date', 'point', 'stderr', 'ci_low', 'ci_high']
RESIDUALS_HEADER = ['index', 'residual', 'presample']
FITTED_HEADER = ['date', 'observed', 'predicted']


def _package_path(path: str) -> str:
    # relative to the installed package, not the working directory
    return os.path.join(os.path.dirname(os.path.realpath(__file__)), path)


def get_schemas() -> Dict[str, dict]:
    """
    Loads the JSON schemas of the reports from the schemas directory.
    """
    schemas = {}
    for report_name in REPORT_SCHEMAS:
        schema_path = _package_path('schemas/{}.json'.format(report_name))
        with open(schema_path, encoding='utf-8') as file:
            schemas[report_name] = json.load(file)
    return schemas


def artifact_path(output_dir: str, column: str, suffix: str) -> str:
    """
    Returns `<output_dir>/<column>_<suffix>`.
    """
    return os.path.join(output_dir, '{}_{}'.format(column, suffix))


def format_cell(value) -> str:
    """
    Renders a CSV cell: empty for None, 0/1 for booleans, ISO dates and the
    shortest round-trip text of floats.
    """
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return '1' if value else '0'
    if isinstance(value, datetime.date):
        return value.strftime(DATE_FORMAT)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    """
    Writes a header and rows; returns the number of data rows.
    """
    os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
    count = 0
    with open(path, 'w', newline='', encoding='utf-8') as file:
        writer = csv.writer(file, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(value) for value in row])
            count += 1
    LOGGER.info('Wrote %s rows to %s', count, path)
    return count


def write_report(path: str, report_name: str, record: dict, transformer: Optional[Transformer] = None) -> dict:
    """
    Conforms a report record to its schema with a singer Transformer and
    writes it as indented JSON.

    :return: the conformed record
    """
    schema = get_schemas()[report_name]
    if transformer is None:
        with Transformer() as own_transformer:
            conformed = own_transformer.transform(record, schema)
    else:
        conformed = transformer.transform(record, schema)
    os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
    with open(path, 'w', encoding='utf-8') as file:
        json.dump(conformed, file, indent=2, default=float)
        file.write('\n')
    LOGGER.info('Wrote %s report to %s', report_name, path)
    return conformed


def write_series_csv(path: str, series: Sequence[RawSeries], date_column: str = 'Date') -> int:
    """
    Writes one or more RawSeries as an input-format CSV: a date column and
    one value column per series, empty cells where a series has no
    observation on that date.
    """
    by_date: Dict[datetime.date, Dict[str, float]] = {}
    for raw in series:
        for observed_date, value in raw.observations:
            by_date.setdefault(observed_date, {})[raw.column_name] = value
    header = [date_column] + [raw.column_name for raw in series]
    rows = ([observed_date] + [by_date[observed_date].get(raw.column_name) for raw in series]
            for observed_date in sorted(by_date))
    return write_csv(path, header, rows)

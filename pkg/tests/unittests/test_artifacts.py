import csv
import datetime
import json
import os
import shutil
import tempfile
import unittest

import numpy as np
import pytest

from spline_arima import artifacts
from spline_arima.series_core import RawSeries, load_csv


def read_rows(path):
    with open(path, newline='', encoding='utf-8') as file:
        return list(csv.DictReader(file))


@pytest.mark.parametrize('value, expected', [
    (None, ''),
    (True, '1'),
    (np.bool_(False), '0'),
    (datetime.date(2021, 3, 9), '2021-03-09'),
    (0.1, '0.1'),
    (np.float64(2.5), '2.5'),
    (np.int64(7), '7'),
    ('ARIMA(1,1,0)', 'ARIMA(1,1,0)'),
])
def test_format_cell(value, expected):
    assert artifacts.format_cell(value) == expected


def test_artifact_path():
    assert artifacts.artifact_path('out', 'Open', 'grid.csv') == os.path.join('out', 'Open_grid.csv')


def test_schemas_are_loaded():
    schemas = artifacts.get_schemas()

    assert set(schemas) == {'adf_report', 'fit_report'}
    assert 'white_noise' in schemas['fit_report']['properties']


def test_schema_paths_resolve_inside_the_package():
    path = artifacts._package_path('schemas/fit_report.json')

    assert os.path.isabs(path)
    assert os.path.dirname(os.path.dirname(path)) == os.path.dirname(os.path.realpath(artifacts.__file__))
    assert os.path.isfile(path)


class TestWriters(unittest.TestCase):

    def setUp(self):
        self.directory = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.directory)

    def test_csv_is_written_into_new_directories(self):
        path = os.path.join(self.directory, 'nested', 'Open_backtest.csv')

        count = artifacts.write_csv(path, artifacts.BACKTEST_HEADER, [(10, 5.5, 97, 2), (50, 25.25, 19, 0)])

        self.assertEqual(count, 2)
        self.assertEqual(read_rows(path),
                         [{'test_length': '10', 'mse': '5.5', 'n_windows': '97', 'skipped': '2'},
                          {'test_length': '50', 'mse': '25.25', 'n_windows': '19', 'skipped': '0'}])

    def test_report_is_conformed_to_its_schema(self):
        path = os.path.join(self.directory, 'Open_adf.json')
        record = {'column': 'Open', 'alpha': '5%', 'selected_d': 1, 'tests': []}

        conformed = artifacts.write_report(path, 'adf_report', record)

        with open(path, encoding='utf-8') as file:
            self.assertEqual(json.load(file), conformed)
        self.assertEqual(conformed['selected_d'], 1)

    def test_series_csv_is_readable_as_input(self):
        path = os.path.join(self.directory, 'prices.csv')
        start = datetime.date(2020, 1, 1)
        opening = RawSeries(observations=((start, 1.5), (start + datetime.timedelta(days=2), 2.0)),
                            column_name='Open')
        closing = RawSeries(observations=((start, 1.25), (start + datetime.timedelta(days=1), 1.75)),
                            column_name='Close')

        artifacts.write_series_csv(path, [opening, closing])

        self.assertEqual(load_csv(path, 'Open'), opening)
        self.assertEqual(load_csv(path, 'Close'), closing)
        self.assertEqual(read_rows(path)[1], {'Date': '2020-01-02', 'Open': '', 'Close': '1.75'})

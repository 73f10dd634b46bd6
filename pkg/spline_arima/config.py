"""
Pipeline configuration: defaults, a flat `key = value` file and command-line
overrides, merged in that order.
"""

import dataclasses
import os
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import singer
from singer import utils

from spline_arima.arima import MAX_HORIZON, MAX_ORDER
from spline_arima.errors import ConfigError, SplineArimaError
from spline_arima.evaluation import CRITERIA
from spline_arima.spline import BoundaryCondition
from spline_arima.unitroot import SIGNIFICANCE_LEVELS, LagSelection

LOGGER = singer.get_logger()

REQUIRED_CONFIG_KEYS = ["input_path", "value_column"]

TRUE_VALUES = ('true', '1', 'yes', 'on')
FALSE_VALUES = ('false', '0', 'no', 'off')


@dataclass(frozen=True)
class PipelineConfig:
    """
    Settings of every pipeline stage. value_column may hold a comma list of
    columns, each processed independently.
    """
    input_path: Optional[str] = None
    value_column: Optional[str] = None
    date_column: str = 'Date'
    boundary_kind: str = 'natural'
    d_max: int = 2
    p_max: int = 5
    q_max: int = 5
    criterion: str = 'bic'
    adf_alpha: str = '5%'
    adf_max_lag: Optional[int] = None
    lag_selection: str = 'aic'
    diagnostics_max_lag: int = 10
    correlogram_max_lag: int = 40
    df_adjust: bool = False
    gate_candidates: int = 3
    forecast_horizon: int = 31
    test_lengths: Tuple[int, ...] = (10, 50, 200, 1000)
    fitted_stride: int = 100
    workers: int = 1
    output_dir: str = 'output'

    def __post_init__(self):
        try:
            BoundaryCondition.parse(self.boundary_kind)
            LagSelection.parse(self.lag_selection)
        except SplineArimaError as error:
            raise ConfigError(str(error)) from None
        if self.criterion not in CRITERIA:
            raise ConfigError('criterion must be one of {}, got "{}"'.format(
                ', '.join(CRITERIA), self.criterion))
        if self.adf_alpha not in SIGNIFICANCE_LEVELS:
            raise ConfigError('adf_alpha must be one of {}, got "{}"'.format(
                ', '.join(SIGNIFICANCE_LEVELS), self.adf_alpha))
        for name in ('d_max', 'p_max', 'q_max'):
            _check_range(name, getattr(self, name), 0, MAX_ORDER)
        _check_range('forecast_horizon', self.forecast_horizon, 1, MAX_HORIZON)
        for name in ('diagnostics_max_lag', 'correlogram_max_lag', 'gate_candidates',
                     'fitted_stride', 'workers'):
            _check_range(name, getattr(self, name), 1, None)
        if self.adf_max_lag is not None:
            _check_range('adf_max_lag', self.adf_max_lag, 0, None)
        if not self.test_lengths:
            raise ConfigError('test_lengths must name at least one length')
        for length in self.test_lengths:
            _check_range('test_lengths', length, 1, None)

    @property
    def columns(self) -> Tuple[str, ...]:
        return tuple(column.strip() for column in (self.value_column or '').split(',') if column.strip())


def _check_range(name: str, value: int, low: int, high: Optional[int]):
    if value < low or (high is not None and value > high):
        bound = '{}..{}'.format(low, high) if high is not None else '>= {}'.format(low)
        raise ConfigError('{} must be {}, got {}'.format(name, bound, value))


def _to_int(name: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError('{} must be an integer, got "{}"'.format(name, text)) from None


def _to_optional_int(name: str, text: str) -> Optional[int]:
    if text.strip().lower() in ('', 'auto', 'none'):
        return None
    return _to_int(name, text)


def _to_bool(name: str, text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in TRUE_VALUES:
        return True
    if lowered in FALSE_VALUES:
        return False
    raise ConfigError('{} must be a boolean, got "{}"'.format(name, text))


def _to_int_list(name: str, text: str) -> Tuple[int, ...]:
    return tuple(_to_int(name, part.strip()) for part in text.split(',') if part.strip())


def _to_lower(_name: str, text: str) -> str:
    return text.strip().lower()


def _to_text(_name: str, text: str) -> str:
    return text.strip()


# config key to the parser of its textual value
FIELD_PARSERS = {
    'input_path': _to_text,
    'value_column': _to_text,
    'date_column': _to_text,
    'boundary_kind': _to_lower,
    'd_max': _to_int,
    'p_max': _to_int,
    'q_max': _to_int,
    'criterion': _to_lower,
    'adf_alpha': _to_text,
    'adf_max_lag': _to_optional_int,
    'lag_selection': _to_lower,
    'diagnostics_max_lag': _to_int,
    'correlogram_max_lag': _to_int,
    'df_adjust': _to_bool,
    'gate_candidates': _to_int,
    'forecast_horizon': _to_int,
    'test_lengths': _to_int_list,
    'fitted_stride': _to_int,
    'workers': _to_int,
    'output_dir': _to_text,
}


def read_config_file(path: str) -> Dict[str, str]:
    """
    Parses a flat UTF-8 `key = value` file. Blank lines and lines starting
    with `#` are ignored; unknown keys are rejected.
    """
    if not os.path.isfile(path):
        raise ConfigError('Config file "{}" does not exist'.format(path))
    values = {}
    with open(path, encoding='utf-8') as file:
        for line_number, line in enumerate(file, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith('#'):
                continue
            key, separator, value = stripped.partition('=')
            key = key.strip()
            if not separator or not key:
                raise ConfigError('{} line {}: expected "key = value", got "{}"'.format(
                    path, line_number, stripped))
            if key not in FIELD_PARSERS:
                raise ConfigError('{} line {}: unknown key "{}"'.format(path, line_number, key))
            values[key] = value.strip()
    return values


def load_config(path: Optional[str] = None,
                overrides: Optional[Dict[str, object]] = None,
                required_keys: Sequence[str] = tuple(REQUIRED_CONFIG_KEYS)) -> PipelineConfig:
    """
    Builds a PipelineConfig from defaults, then the config file, then the
    overrides. Override values that are None are ignored; string overrides
    are parsed like file values.

    :param path: optional config file
    :param overrides: typed or textual values from command-line flags
    :param required_keys: keys that must be set by the file or the overrides
    :return: PipelineConfig
    """
    merged: Dict[str, object] = {}
    if path:
        for key, text in read_config_file(path).items():
            merged[key] = FIELD_PARSERS[key](key, text)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in FIELD_PARSERS:
            raise ConfigError('Unknown setting "{}"'.format(key))
        merged[key] = FIELD_PARSERS[key](key, value) if isinstance(value, str) else value

    try:
        utils.check_config(merged, list(required_keys))
    except Exception as error:  # pylint: disable=broad-except
        raise ConfigError(str(error)) from None

    config = PipelineConfig(**merged)
    if required_keys and 'value_column' in required_keys and not config.columns:
        raise ConfigError('value_column names no column')
    LOGGER.debug('Resolved config: %s', dataclasses.asdict(config))
    return config

"""
Command-line surface: one subcommand per pipeline stage plus `auto` and the
`simulate` fixture generator.
"""

import argparse
import datetime
from typing import List, Optional, Sequence

import singer

from spline_arima import pipeline
from spline_arima.arima import ArimaOrder
from spline_arima.config import REQUIRED_CONFIG_KEYS, PipelineConfig, load_config
from spline_arima.series_core import DATE_FORMAT
from spline_arima.stages import STAGES

LOGGER = singer.get_logger()

SUBCOMMANDS = ['interpolate', 'adf', 'acf', 'grid', 'fit', 'forecast', 'backtest', 'auto']

# flag destination to config key
CONFIG_FLAGS = {
    'input': 'input_path',
    'column': 'value_column',
    'date_column': 'date_column',
    'output_dir': 'output_dir',
    'boundary': 'boundary_kind',
    'workers': 'workers',
    'd_max': 'd_max',
    'p_max': 'p_max',
    'q_max': 'q_max',
    'criterion': 'criterion',
    'alpha': 'adf_alpha',
    'adf_max_lag': 'adf_max_lag',
    'lag_selection': 'lag_selection',
    'lags': 'diagnostics_max_lag',
    'correlogram_lags': 'correlogram_max_lag',
    'df_adjust': 'df_adjust',
    'gate_candidates': 'gate_candidates',
    'horizon': 'forecast_horizon',
    'test_lengths': 'test_lengths',
    'fitted_stride': 'fitted_stride',
}


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError('expected comma separated numbers, got "{}"'.format(
            text)) from None


def _date(text: str) -> datetime.date:
    try:
        return datetime.datetime.strptime(text, DATE_FORMAT).date()
    except ValueError:
        raise argparse.ArgumentTypeError('expected a YYYY-MM-DD date, got "{}"'.format(text)) from None


def _common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--config', help='flat key = value config file')
    parser.add_argument('--input', help='input CSV file')
    parser.add_argument('--column', help='value column, or a comma separated list of columns')
    parser.add_argument('--date-column', help='date column (default Date)')
    parser.add_argument('--output-dir', help='directory for the artifacts (default output)')
    parser.add_argument('--boundary', help='spline boundary: natural, not_a_knot or periodic')
    parser.add_argument('--workers', type=int, help='concurrent fits in grid and backtest')
    parser.add_argument('--d', type=int, help='fixed differencing order')
    parser.add_argument('--d-max', type=int, help='largest order tried by the ADF loop')
    parser.add_argument('--p-max', type=int, help='largest AR order of the grid')
    parser.add_argument('--q-max', type=int, help='largest MA order of the grid')
    parser.add_argument('--criterion', help='aic, bic or hqic')
    parser.add_argument('--alpha', help='ADF significance level: 1%%, 5%% or 10%%')
    parser.add_argument('--adf-max-lag', help='largest ADF lag, or auto')
    parser.add_argument('--lag-selection', help='ADF lag selection: fixed or aic')
    parser.add_argument('--lags', type=int, help='Ljung-Box lags of the white-noise gate')
    parser.add_argument('--correlogram-lags', type=int, help='lags of the ACF/PACF files')
    parser.add_argument('--df-adjust', action='store_const', const=True, default=None,
                        help='subtract p + q from the Ljung-Box degrees of freedom')
    parser.add_argument('--gate-candidates', type=int, help='orders tried by the white-noise gate')
    parser.add_argument('--order', help='model order as p,d,q')
    parser.add_argument('--include-constant', choices=['true', 'false'],
                        help='constant term (default: only when d = 0)')
    parser.add_argument('--horizon', type=int, help='forecast steps (default 31)')
    parser.add_argument('--test-lengths', help='comma separated backtest test lengths')
    parser.add_argument('--fitted-stride', type=int, help='days between rows of the fitted file')
    parser.add_argument('--spline-dump', action='store_true', help='also write the spline pieces')
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='spline-arima',
                                     description='Spline gap filling and ARIMA forecasting')
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True
    common = _common_parser()
    for name in SUBCOMMANDS:
        subparsers.add_parser(name, parents=[common], help='run the {} stage'.format(name))

    simulate = subparsers.add_parser('simulate', help='write a seeded ARIMA fixture CSV')
    simulate.add_argument('--output', required=True, help='CSV file to write')
    simulate.add_argument('--order', default='1,1,0', help='model order as p,d,q')
    simulate.add_argument('--phi', type=_float_list, help='AR coefficients (default zeros)')
    simulate.add_argument('--theta', type=_float_list, help='MA coefficients (default zeros)')
    simulate.add_argument('--drift', type=float, default=0.0, help='constant of the ARMA part')
    simulate.add_argument('--sigma2', type=float, default=1.0, help='innovation variance')
    simulate.add_argument('--n', type=int, default=1000, help='number of daily slots')
    simulate.add_argument('--gap-rate', type=float, default=0.0, help='fraction of interior slots removed')
    simulate.add_argument('--n-gaps', type=int, help='exact number of removed slots')
    simulate.add_argument('--start-date', type=_date, default=datetime.date(2010, 1, 4),
                          help='date of the first slot')
    simulate.add_argument('--seed', type=int, default=0, help='random seed')
    simulate.add_argument('--column', default='Open', help='value column name')
    simulate.add_argument('--date-column', default='Date', help='date column name')
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def _include_constant(args: argparse.Namespace) -> Optional[bool]:
    value = getattr(args, 'include_constant', None)
    return None if value is None else value == 'true'


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    """
    Resolves the configuration: defaults, then --config, then flags.
    """
    if args.command == 'simulate':
        return load_config(overrides={'value_column': args.column, 'date_column': args.date_column},
                           required_keys=())
    overrides = {key: getattr(args, flag, None) for flag, key in CONFIG_FLAGS.items()}
    return load_config(args.config, overrides, REQUIRED_CONFIG_KEYS)


def stage_options(args: argparse.Namespace) -> dict:
    """
    Collects the stage-specific options of a subcommand.
    """
    if args.command == 'simulate':
        order = ArimaOrder.parse(args.order)
        return {
            'output': args.output,
            'order': order,
            'phi': args.phi if args.phi is not None else [0.0] * order.p,
            'theta': args.theta if args.theta is not None else [0.0] * order.q,
            'constant': args.drift,
            'sigma2': args.sigma2,
            'n': args.n,
            'gap_rate': args.gap_rate,
            'n_gaps': args.n_gaps,
            'start_date': args.start_date,
            'seed': args.seed,
        }
    options = {'d': args.d, 'spline_dump': args.spline_dump}
    if args.order:
        options['order'] = ArimaOrder.parse(args.order, _include_constant(args))
    return options


def run(argv: Optional[Sequence[str]] = None) -> dict:
    """
    Parses the arguments and runs the requested subcommand.

    :return: per-column results of the stage
    """
    args = parse_args(argv)
    config = config_from_args(args)
    LOGGER.info('Running %s', args.command)
    if args.command == 'auto':
        return pipeline.cmd_auto(config)
    return STAGES[args.command](config, stage_options(args)).run()

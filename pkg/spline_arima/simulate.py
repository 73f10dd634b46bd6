"""
Seeded ARIMA simulation and gapped daily fixtures.
"""

import datetime
from typing import Optional, Sequence

import numpy as np
import singer
from scipy import signal

from spline_arima.arima import ArimaOrder, ArimaParams, min_root_moduli
from spline_arima.errors import ContractError
from spline_arima.series_core import DifferencedSeries, RawSeries, undifference

LOGGER = singer.get_logger()

DEFAULT_BURN_IN = 200
DEFAULT_START_LEVEL = 100.0


def simulate_arima(order: ArimaOrder,
                   phi: Sequence[float] = (),
                   theta: Sequence[float] = (),
                   constant: float = 0.0,
                   sigma2: float = 1.0,
                   n: int = 1000,
                   seed: int = 0,
                   burn_in: int = DEFAULT_BURN_IN,
                   start_level: float = DEFAULT_START_LEVEL) -> np.ndarray:
    """
    Simulates n levels of an ARIMA(p, d, q) process with Gaussian
    innovations. The ARMA part runs burn_in extra steps that are discarded;
    for d >= 1 the differenced draws are integrated from start_level, and
    `constant` acts as a drift.

    :param order: orders; len(phi) and len(theta) must equal p and q
    :param seed: seed of numpy's default generator
    :return: array of n levels
    """
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if len(phi) != order.p or len(theta) != order.q:
        raise ContractError('{} needs {} AR and {} MA coefficients, got {} and {}'.format(
            order.label, order.p, order.q, len(phi), len(theta)))
    if sigma2 <= 0:
        raise ContractError('sigma2 must be positive, got {}'.format(sigma2))
    if n <= order.d:
        raise ContractError('n must exceed d, got n={} d={}'.format(n, order.d))
    if min_root_moduli(ArimaParams(phi=tuple(phi.tolist())))[0] <= 1.0:
        raise ContractError('AR coefficients {} are not stationary'.format(phi.tolist()))

    rng = np.random.default_rng(seed)
    size = n - order.d + burn_in
    innovations = rng.normal(0.0, np.sqrt(sigma2), size)
    driven = constant + signal.lfilter(np.concatenate(([1.0], theta)), [1.0], innovations)
    arma = signal.lfilter([1.0], np.concatenate(([1.0], -phi)), driven)[burn_in:]

    if not order.d:
        return arma
    origin = (float(start_level),) * order.d
    return np.asarray(undifference(DifferencedSeries(values=tuple(arma.tolist()),
                                                     d=order.d,
                                                     origin=origin)))


def drop_slots(values: Sequence[float],
               start_date: datetime.date,
               column_name: str,
               n_gaps: Optional[int] = None,
               gap_rate: float = 0.0,
               seed: int = 0) -> RawSeries:
    """
    Places values on consecutive days from start_date and removes gap slots
    drawn without replacement from the interior, so the first and last days
    stay observed.

    :param n_gaps: exact number of removed slots; overrides gap_rate
    :param gap_rate: fraction of interior slots to remove when n_gaps is None
    """
    values = np.asarray(values, dtype=float)
    interior = len(values) - 2
    if n_gaps is None:
        if not 0.0 <= gap_rate < 1.0:
            raise ContractError('gap_rate must be in [0, 1), got {}'.format(gap_rate))
        n_gaps = int(round(gap_rate * max(interior, 0)))
    if n_gaps < 0 or (n_gaps and n_gaps > interior):
        raise ContractError('Cannot remove {} of {} interior slots'.format(n_gaps, max(interior, 0)))

    rng = np.random.default_rng(seed)
    gaps = set(rng.choice(np.arange(1, len(values) - 1), size=n_gaps, replace=False).tolist()) \
        if n_gaps else set()
    observations = tuple((start_date + datetime.timedelta(days=i), float(value))
                         for i, value in enumerate(values) if i not in gaps)
    LOGGER.info('Simulated %s observations of %s with %s gaps', len(observations), column_name, n_gaps)
    return RawSeries(observations=observations, column_name=column_name)

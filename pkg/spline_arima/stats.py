"""
Statistical primitives shared by the pipeline: distribution tails, least
squares, correlograms and residual whiteness diagnostics.
"""

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import singer
from scipy import linalg, special

from spline_arima.errors import (ConstantSeriesError, ContractError,
                                 RankDeficientError, SeriesTooShortError)

LOGGER = singer.get_logger()

# half-width multiplier of the white-noise confidence band
BAND_Z = 1.96

# relative tolerance on the pivoted QR diagonal
RANK_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Correlogram:
    """
    Sample (partial) autocorrelations for lags 1..max_lag.

    :param coefficients: coefficient at lag k is coefficients[k - 1]
    :param n: sample size
    :param band: half-width of the +-1.96/sqrt(n) white-noise band
    """
    coefficients: Tuple[float, ...]
    n: int
    band: float

    @property
    def max_lag(self) -> int:
        return len(self.coefficients)

    def rows(self, include_lag_zero: bool = False) -> List[Tuple[int, float, float]]:
        """
        Returns (lag, coefficient, band) rows, optionally led by lag 0 = 1.
        """
        rows = [(lag, coefficient, self.band)
                for lag, coefficient in enumerate(self.coefficients, start=1)]
        if include_lag_zero:
            rows.insert(0, (0, 1.0, self.band))
        return rows


@dataclass(frozen=True)
class LjungBoxRow:
    lag: int
    q_stat: float
    df: int
    p_value: float


@dataclass(frozen=True)
class OlsResult:
    coefficients: Tuple[float, ...]
    standard_errors: Tuple[float, ...]
    residuals: Tuple[float, ...]
    rss: float
    n_obs: int


@dataclass(frozen=True)
class ResidualSummary:
    n: int
    mean: float
    std: float
    skewness: float
    excess_kurtosis: float
    jarque_bera: float
    jarque_bera_p_value: float


def chi2_sf(x: float, k: int) -> float:
    """
    Upper-tail probability of the chi-squared distribution with k degrees of
    freedom, via the regularized upper incomplete gamma function Q(k/2, x/2).
    """
    if x < 0:
        raise ContractError('chi2_sf needs x >= 0, got {}'.format(x))
    if int(k) != k or k < 1:
        raise ContractError('chi2_sf needs a positive integer k, got {}'.format(k))
    return float(special.gammaincc(k / 2.0, x / 2.0))


def normal_sf(z: float) -> float:
    """
    Upper-tail probability of the standard normal distribution.
    """
    return float(special.ndtr(-z))


def two_sided_p(z: float) -> float:
    return 2.0 * normal_sf(abs(z))


def ols(design: Sequence[Sequence[float]], response: Sequence[float]) -> OlsResult:
    """
    Ordinary least squares through a column-pivoted QR factorization.

    Standard errors are the classical s^2 (X'X)^-1 ones with
    s^2 = RSS / (rows - columns).

    :param design: rows x columns regressor matrix
    :param response: rows observations
    :return: OlsResult
    """
    x = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ContractError('Design of shape {} does not match {} responses'.format(
            x.shape, y.shape[0]))
    rows, columns = x.shape
    if rows < columns:
        raise SeriesTooShortError('OLS needs at least as many rows ({}) as columns ({})'.format(
            rows, columns))

    q, r, permutation = linalg.qr(x, mode='economic', pivoting=True)
    diagonal = np.abs(np.diag(r))
    if diagonal.size and (diagonal[0] == 0 or diagonal[-1] <= RANK_TOLERANCE * diagonal[0]):
        raise RankDeficientError('Design matrix is rank deficient')

    permuted = linalg.solve_triangular(r, q.T @ y)
    coefficients = np.empty(columns)
    coefficients[permutation] = permuted
    residuals = y - x @ coefficients
    rss = float(residuals @ residuals)

    degrees = rows - columns
    if degrees > 0:
        r_inverse = linalg.solve_triangular(r, np.eye(columns))
        variances = np.sum(r_inverse ** 2, axis=1) * rss / degrees
        standard_errors = np.empty(columns)
        standard_errors[permutation] = np.sqrt(variances)
    else:
        standard_errors = np.full(columns, np.nan)

    return OlsResult(coefficients=tuple(coefficients.tolist()),
                     standard_errors=tuple(standard_errors.tolist()),
                     residuals=tuple(residuals.tolist()),
                     rss=rss,
                     n_obs=rows)


def is_constant(x: np.ndarray) -> bool:
    """
    True when the spread of x is within one ulp of its magnitude.
    """
    return bool(np.ptp(x) <= np.finfo(float).eps * max(1.0, abs(float(x.mean()))))


def _centered(values: Sequence[float], max_lag: int) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    if max_lag < 1:
        raise ContractError('max_lag must be positive, got {}'.format(max_lag))
    if max_lag >= len(x):
        raise SeriesTooShortError('max_lag {} must be below the sample size {}'.format(
            max_lag, len(x)))
    if is_constant(x):
        raise ConstantSeriesError('Autocorrelations are undefined for a constant series')
    return x - x.mean()


def _autocorrelations(centered: np.ndarray, max_lag: int) -> np.ndarray:
    denominator = centered @ centered
    n = len(centered)
    return np.array([centered[:n - k] @ centered[k:] for k in range(1, max_lag + 1)]) / denominator


def acf(values: Sequence[float], max_lag: int) -> Correlogram:
    """
    Sample autocorrelations with the lag-0 sum as common denominator.
    """
    centered = _centered(values, max_lag)
    n = len(centered)
    return Correlogram(coefficients=tuple(_autocorrelations(centered, max_lag).tolist()),
                       n=n,
                       band=BAND_Z / math.sqrt(n))


def durbin_levinson(autocorrelations: Sequence[float], order: int) -> Tuple[List[float], List[float]]:
    """
    Runs the Durbin-Levinson recursion on autocorrelations rho_1..rho_order.

    :return: (partial autocorrelations phi_kk for k = 1..order,
              AR coefficients of the order-`order` Yule-Walker solution)
    """
    rho = np.concatenate(([1.0], np.asarray(autocorrelations, dtype=float)[:order]))
    phi = np.zeros(order)
    partials = []
    variance = 1.0
    for k in range(1, order + 1):
        previous = phi[:k - 1].copy()
        reflection = (rho[k] - previous @ rho[k - 1:0:-1]) / variance
        phi[:k - 1] = previous - reflection * previous[::-1]
        phi[k - 1] = reflection
        variance *= 1.0 - reflection ** 2
        partials.append(float(reflection))
    return partials, phi.tolist()


def pacf(values: Sequence[float], max_lag: int) -> Correlogram:
    """
    Sample partial autocorrelations from the Durbin-Levinson recursion on
    the sample ACF.
    """
    centered = _centered(values, max_lag)
    n = len(centered)
    if max_lag >= n / 2.0:
        raise SeriesTooShortError('PACF max_lag {} must be below half the sample size {}'.format(
            max_lag, n))
    partials, _ = durbin_levinson(_autocorrelations(centered, max_lag), max_lag)
    return Correlogram(coefficients=tuple(partials), n=n, band=BAND_Z / math.sqrt(n))


def yule_walker(values: Sequence[float], order: int) -> List[float]:
    """
    AR coefficients solving the sample Yule-Walker equations of `order`.
    """
    if order == 0:
        return []
    centered = _centered(values, order)
    _, coefficients = durbin_levinson(_autocorrelations(centered, order), order)
    return coefficients


def ljung_box(residuals: Sequence[float],
              max_lag: int,
              fitted_params: int = 0,
              df_adjust: bool = False) -> List[LjungBoxRow]:
    """
    Ljung-Box portmanteau statistics Q(h) for h = 1..max_lag.

    Degrees of freedom are h unless df_adjust is set, in which case the
    fitted parameter count is subtracted (floored at 1).
    """
    centered = _centered(residuals, max_lag)
    n = len(centered)
    rho = _autocorrelations(centered, max_lag)
    terms = rho ** 2 / (n - np.arange(1, max_lag + 1))
    q_stats = n * (n + 2) * np.cumsum(terms)

    rows = []
    for lag, q_stat in enumerate(q_stats.tolist(), start=1):
        df = max(lag - fitted_params, 1) if df_adjust else lag
        rows.append(LjungBoxRow(lag=lag, q_stat=q_stat, df=df, p_value=chi2_sf(q_stat, df)))
    return rows


def residual_summary(residuals: Sequence[float]) -> ResidualSummary:
    """
    Moments of a residual series and the Jarque-Bera normality statistic.
    """
    x = np.asarray(residuals, dtype=float)
    n = len(x)
    if n < 3:
        raise SeriesTooShortError('Residual summary needs at least 3 values, got {}'.format(n))
    if is_constant(x):
        raise ConstantSeriesError('Residual series is constant')
    centered = x - x.mean()
    variance = centered @ centered / n
    skewness = float(np.mean(centered ** 3) / variance ** 1.5)
    excess_kurtosis = float(np.mean(centered ** 4) / variance ** 2 - 3.0)
    jarque_bera = n / 6.0 * (skewness ** 2 + excess_kurtosis ** 2 / 4.0)
    return ResidualSummary(n=n,
                           mean=float(x.mean()),
                           std=float(math.sqrt(variance)),
                           skewness=skewness,
                           excess_kurtosis=excess_kurtosis,
                           jarque_bera=float(jarque_bera),
                           jarque_bera_p_value=chi2_sf(jarque_bera, 2))

"""
ARIMA(p,d,q) orders, conditional-sum-of-squares estimation,
coefficient inference and forecasting.

The model for the d-times differenced series x_t is

    x_t = c + phi_1 x_{t-1} + ... + phi_p x_{t-p}
            + e_t + theta_1 e_{t-1} + ... + theta_q e_{t-q}

so the MA polynomial is 1 + theta_1 z + ... + theta_q z^q. Software that
writes the MA part with minus signs reports -theta.
"""

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import singer
from scipy import optimize, signal

from spline_arima.errors import (BoundaryOptimumError, ConstantSeriesError,
                                 ContractError, OutOfRangeError,
                                 RankDeficientError, SeriesTooShortError,
                                 SplineArimaError)
from spline_arima.series_core import DifferencedSeries, difference, undifference
from spline_arima.stats import BAND_Z, ols, two_sided_p, yule_walker

LOGGER = singer.get_logger()

MAX_ORDER = 10
MAX_HORIZON = 10000

# the fit needs this many observations beyond p + d + q
MIN_FIT_EXTRA = 20

# stationarity / invertibility penalty
ROOT_MARGIN = 1.001
PENALTY_WEIGHT = 1e6

# objective for parameter vectors whose recursion overflows
INFEASIBLE_OBJECTIVE = 1e12

OPTIMIZER_RESTARTS = 3
EVALUATIONS_PER_PARAMETER = 2000
RELATIVE_SPREAD = 1e-10
RESTART_JITTER = 0.1

HESSIAN_STEP = 1e-4

# longest autoregression of the Hannan-Rissanen first stage
HANNAN_RISSANEN_MAX_ORDER = 20


@dataclass(frozen=True)
class ArimaOrder:
    """
    Orders of an ARIMA model. include_constant defaults to True when d = 0
    and False otherwise.
    """
    p: int
    d: int
    q: int
    include_constant: Optional[bool] = None

    def __post_init__(self):
        for name in ('p', 'd', 'q'):
            value = getattr(self, name)
            if int(value) != value or not 0 <= value <= MAX_ORDER:
                raise OutOfRangeError('{} must be an integer in 0..{}, got {}'.format(
                    name, MAX_ORDER, value))
        if self.include_constant is None:
            object.__setattr__(self, 'include_constant', self.d == 0)

    @classmethod
    def parse(cls, text: str, include_constant: Optional[bool] = None) -> 'ArimaOrder':
        """
        Parses "p,d,q".
        """
        parts = [part.strip() for part in str(text).split(',')]
        if len(parts) != 3 or not all(part.isdigit() for part in parts):
            raise ContractError('Order must look like "p,d,q", got "{}"'.format(text))
        p, d, q = (int(part) for part in parts)
        return cls(p, d, q, include_constant)

    @property
    def n_free(self) -> int:
        """
        Number of optimizer dimensions: AR, MA and constant.
        """
        return self.p + self.q + int(self.include_constant)

    @property
    def k_params(self) -> int:
        """
        Parameter count for information criteria, including the variance.
        """
        return self.n_free + 1

    @property
    def label(self) -> str:
        return 'ARIMA({},{},{})'.format(self.p, self.d, self.q)


@dataclass(frozen=True)
class ArimaParams:
    phi: Tuple[float, ...] = ()
    theta: Tuple[float, ...] = ()
    constant: float = 0.0
    sigma2: float = 1.0

    def vector(self, order: ArimaOrder) -> np.ndarray:
        """
        Flattens to the optimizer layout [phi..., theta..., constant?].
        """
        parts = list(self.phi) + list(self.theta)
        if order.include_constant:
            parts.append(self.constant)
        return np.asarray(parts, dtype=float)

    @classmethod
    def from_vector(cls, order: ArimaOrder, vector: Sequence[float], sigma2: float = 1.0) -> 'ArimaParams':
        vector = [float(value) for value in vector]
        phi = tuple(vector[:order.p])
        theta = tuple(vector[order.p:order.p + order.q])
        constant = vector[order.p + order.q] if order.include_constant else 0.0
        return cls(phi=phi, theta=theta, constant=constant, sigma2=sigma2)


@dataclass(frozen=True)
class CoefficientRow:
    """
    One line of the fit report; inference fields are None when the Hessian
    was not usable.
    """
    name: str
    coef: float
    std_err: Optional[float] = None
    z: Optional[float] = None
    p: Optional[float] = None
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None

    @property
    def available(self) -> bool:
        return self.std_err is not None

    def to_record(self) -> dict:
        return {
            'name': self.name,
            'coef': self.coef,
            'std_err': self.std_err,
            'z': self.z,
            'p': self.p,
            'ci_low': self.ci_low,
            'ci_high': self.ci_high,
        }


@dataclass(frozen=True)
class RootsResult:
    roots: Tuple[complex, ...]
    min_modulus: float


@dataclass(frozen=True)
class FittedArima:
    """
    An estimated ARIMA model. Residuals align one-to-one with the differenced
    series; the first n_presample of them are conditioned on zero presample
    innovations.
    """
    order: ArimaOrder
    params: ArimaParams
    loglik: float
    aic: float
    bic: float
    hqic: float
    residuals: Tuple[float, ...]
    n_obs: int
    converged: bool
    coef_table: Tuple[CoefficientRow, ...] = field(default=())

    @property
    def n_presample(self) -> int:
        return max(self.order.p, self.order.q)

    @property
    def conditioned_residuals(self) -> List[float]:
        return list(self.residuals[self.n_presample:])

    def to_report(self) -> dict:
        """
        Returns the JSON fit report record.
        """
        return {
            'model': self.order.label,
            'include_constant': self.order.include_constant,
            'n_obs': self.n_obs,
            'converged': self.converged,
            'loglik': self.loglik,
            'aic': self.aic,
            'bic': self.bic,
            'hqic': self.hqic,
            'coefficients': [row.to_record() for row in self.coef_table],
        }


@dataclass(frozen=True)
class ForecastResult:
    horizon: int
    point: Tuple[float, ...]
    stderr: Tuple[float, ...]
    ci_low: Tuple[float, ...]
    ci_high: Tuple[float, ...]


def characteristic_roots(coeffs: Sequence[float]) -> RootsResult:
    """
    Roots of 1 - c_1 z - ... - c_k z^k from the companion-matrix eigenvalues.

    :param coeffs: c_1..c_k with c_k != 0
    :return: RootsResult with all k roots and the smallest modulus
    """
    coefficients = np.asarray(coeffs, dtype=float)
    if coefficients.size == 0:
        raise ContractError('Characteristic polynomial needs degree >= 1')
    if coefficients[-1] == 0:
        raise ContractError('Leading coefficient of the characteristic polynomial is zero')
    # np.roots wants the highest power first
    roots = np.roots(np.concatenate((-coefficients[::-1], [1.0])))
    return RootsResult(roots=tuple(complex(root) for root in roots),
                       min_modulus=float(np.min(np.abs(roots))))


def _min_modulus(coeffs: Sequence[float]) -> float:
    """
    Smallest root modulus of 1 - c_1 z - ..., with trailing zero
    coefficients dropped; inf when no root exists.
    """
    coefficients = np.trim_zeros(np.asarray(coeffs, dtype=float), 'b')
    if coefficients.size == 0:
        return math.inf
    if not np.all(np.isfinite(coefficients)):
        return 0.0
    return characteristic_roots(coefficients).min_modulus


def min_root_moduli(params: ArimaParams) -> Tuple[float, float]:
    """
    Returns the smallest AR and MA root moduli.
    """
    return _min_modulus(params.phi), _min_modulus([-theta for theta in params.theta])


def css_residuals(params: ArimaParams, diff_values: Sequence[float], order: ArimaOrder) -> np.ndarray:
    """
    Innovations of the conditional recursion with zero presample
    innovations. The first p entries cannot be computed and are zero.
    """
    x = np.asarray(diff_values, dtype=float)
    n, p = len(x), order.p
    if n <= p + order.q:
        raise SeriesTooShortError('CSS recursion needs more than {} values, got {}'.format(
            p + order.q, n))

    ar_part = x[p:] - params.constant
    for lag, phi in enumerate(params.phi, start=1):
        ar_part = ar_part - phi * x[p - lag:n - lag]
    if order.q:
        innovations = signal.lfilter([1.0], np.concatenate(([1.0], params.theta)), ar_part)
    else:
        innovations = ar_part
    return np.concatenate((np.zeros(p), innovations))


def css_objective(params: ArimaParams, diff_values: Sequence[float], order: ArimaOrder) -> Tuple[float, float]:
    """
    Conditional sum of squared innovations and the Gaussian log-likelihood
    with the variance profiled as RSS / (n - p).

    :return: (rss, loglik)
    """
    innovations = css_residuals(params, diff_values, order)[order.p:]
    n_effective = len(innovations)
    rss = float(innovations @ innovations)
    with np.errstate(divide='ignore', invalid='ignore'):
        loglik = -0.5 * n_effective * (math.log(2.0 * math.pi) + np.log(rss / n_effective) + 1.0)
    return rss, float(loglik)


def information_criteria(loglik: float, k_params: int, n: int) -> Tuple[float, float, float]:
    """
    AIC, BIC and HQIC for a log-likelihood with k parameters and n
    observations.
    """
    if k_params < 1 or n <= k_params:
        raise SeriesTooShortError('Information criteria need n > k, got n={} k={}'.format(
            n, k_params))
    deviance = -2.0 * loglik
    return (deviance + 2.0 * k_params,
            deviance + k_params * math.log(n),
            deviance + 2.0 * k_params * math.log(math.log(n)))


def coefficient_row(name: str, coef: float, std_err: Optional[float]) -> CoefficientRow:
    """
    Builds a report row with z statistic, two-sided p-value and 95% interval.
    """
    if std_err is None or not std_err > 0:
        return CoefficientRow(name=name, coef=coef)
    z = coef / std_err
    return CoefficientRow(name=name,
                          coef=coef,
                          std_err=std_err,
                          z=z,
                          p=two_sided_p(z),
                          ci_low=coef - BAND_Z * std_err,
                          ci_high=coef + BAND_Z * std_err)


def _parameter_names(order: ArimaOrder) -> List[str]:
    names = ['ar.L{}'.format(lag) for lag in range(1, order.p + 1)]
    names += ['ma.L{}'.format(lag) for lag in range(1, order.q + 1)]
    if order.include_constant:
        names.append('const')
    return names


def _numerical_hessian(function, point: np.ndarray) -> np.ndarray:
    size = len(point)
    steps = HESSIAN_STEP * np.maximum(1.0, np.abs(point))
    hessian = np.empty((size, size))
    center = function(point)

    def shifted(i, si, j=None, sj=0.0):
        moved = point.copy()
        moved[i] += si
        if j is not None:
            moved[j] += sj
        return function(moved)

    for i in range(size):
        hi = steps[i]
        hessian[i, i] = (shifted(i, hi) - 2.0 * center + shifted(i, -hi)) / hi ** 2
        for j in range(i + 1, size):
            hj = steps[j]
            value = (shifted(i, hi, j, hj) - shifted(i, hi, j, -hj)
                     - shifted(i, -hi, j, hj) + shifted(i, -hi, j, -hj)) / (4.0 * hi * hj)
            hessian[i, j] = hessian[j, i] = value
    return hessian


def standard_errors(fitted: FittedArima, diff_values: Sequence[float]) -> List[CoefficientRow]:
    """
    Coefficient table from the inverse negative Hessian of the CSS
    log-likelihood at the optimum, using central finite differences.

    Rows are flagged unavailable when the negative Hessian is not positive
    definite. The sigma2 row uses the Gaussian asymptotic variance
    2 sigma^4 / n.
    """
    if not fitted.converged:
        raise ContractError('Standard errors need a converged fit')
    order = fitted.order
    names = _parameter_names(order)
    point = fitted.params.vector(order)
    sigma2 = fitted.params.sigma2
    sigma2_row = coefficient_row('sigma2', sigma2, sigma2 * math.sqrt(2.0 / fitted.n_obs))
    if not names:
        return [sigma2_row]

    def loglik(vector):
        return css_objective(ArimaParams.from_vector(order, vector), diff_values, order)[1]

    information = -_numerical_hessian(loglik, point)
    try:
        np.linalg.cholesky(information)
        covariance = np.linalg.inv(information)
        errors = np.sqrt(np.diag(covariance))
    except np.linalg.LinAlgError:
        errors = None
    if errors is None or not np.all(np.isfinite(errors)):
        LOGGER.warning('Negative Hessian of %s is not positive definite, '
                       'standard errors unavailable', order.label)
        rows = [CoefficientRow(name=name, coef=float(value)) for name, value in zip(names, point)]
    else:
        rows = [coefficient_row(name, float(value), float(error))
                for name, value, error in zip(names, point, errors)]
    return rows + [sigma2_row]


def _feasible(coeffs: Sequence[float]) -> bool:
    return _min_modulus(coeffs) > ROOT_MARGIN


def _hannan_rissanen_theta(x: np.ndarray, order: ArimaOrder) -> List[float]:
    n = len(x)
    long_order = int(math.floor(min(n / 10.0, HANNAN_RISSANEN_MAX_ORDER)))
    long_order = max(long_order, order.p + order.q, 1)
    if n - long_order <= long_order + 1:
        raise SeriesTooShortError('Series too short for the Hannan-Rissanen regression')

    design = [np.ones(n - long_order)]
    design += [x[long_order - lag:n - lag] for lag in range(1, long_order + 1)]
    proxy = np.asarray(ols(np.column_stack(design), x[long_order:]).residuals)

    # innovation proxy is aligned with x[long_order:]
    start = max(order.p, order.q)
    target = x[long_order + start:]
    rows = len(target)
    design = [np.ones(rows)]
    design += [x[long_order + start - lag:n - lag] for lag in range(1, order.p + 1)]
    design += [proxy[start - lag:len(proxy) - lag] for lag in range(1, order.q + 1)]
    coefficients = ols(np.column_stack(design), target).coefficients
    return list(coefficients[1 + order.p:])


def initial_params(diff_values: Sequence[float], order: ArimaOrder) -> ArimaParams:
    """
    Starting values: Yule-Walker for the AR part, Hannan-Rissanen for the MA
    part, each replaced by zeros when unusable or outside the feasible
    region.
    """
    x = np.asarray(diff_values, dtype=float)
    phi = [0.0] * order.p
    theta = [0.0] * order.q
    if order.p:
        try:
            phi = yule_walker(x, order.p)
        except SplineArimaError:
            LOGGER.debug('Yule-Walker start unavailable for %s', order.label)
        if not _feasible(phi):
            phi = [0.0] * order.p
    if order.q:
        try:
            theta = _hannan_rissanen_theta(x, order)
        except (SeriesTooShortError, RankDeficientError):
            LOGGER.debug('Hannan-Rissanen start unavailable for %s', order.label)
        if not _feasible([-value for value in theta]):
            theta = [0.0] * order.q
    constant = float(np.mean(x)) * (1.0 - sum(phi)) if order.include_constant else 0.0
    return ArimaParams(phi=tuple(phi), theta=tuple(theta), constant=constant)


def _penalty(params: ArimaParams) -> float:
    smallest = min(min_root_moduli(params))
    if smallest < ROOT_MARGIN:
        return PENALTY_WEIGHT * (ROOT_MARGIN - smallest) ** 2
    return 0.0


def _jitter(vector: np.ndarray, attempt: int) -> np.ndarray:
    pattern = np.where(np.arange(len(vector)) % 2 == 0, 1.0, -1.0)
    if attempt % 2 == 0:
        pattern = -pattern
    return vector + RESTART_JITTER * attempt * pattern / 2.0


def fit(series: Sequence[float], order: ArimaOrder) -> FittedArima:
    """
    Estimates an ARIMA model by maximizing the CSS log-likelihood of the
    differenced series with a Nelder-Mead simplex search.

    The search is run from the Yule-Walker / Hannan-Rissanen start and
    restarted from jittered copies of the best point; the best penalty-free
    result is kept. A fit whose best point carries a stationarity penalty
    or that exhausted its evaluation budget is returned with
    converged=False. Orders without MA terms take the least-squares
    solution directly when it is stationary.

    :param series: gap-free level series
    :param order: the model orders
    :return: FittedArima
    """
    minimum = MIN_FIT_EXTRA + order.p + order.d + order.q
    if len(series) < minimum:
        raise SeriesTooShortError('{} needs at least {} observations, got {}'.format(
            order.label, minimum, len(series)))

    x = np.asarray(difference(series, order.d).values, dtype=float)

    def negative_loglik(vector):
        params = ArimaParams.from_vector(order, vector)
        penalty = _penalty(params)
        if penalty > 0 and penalty * 1e-3 > 1.0:
            # far outside the feasible region the recursion may overflow
            return INFEASIBLE_OBJECTIVE + penalty
        with np.errstate(over='ignore', invalid='ignore'):
            _, loglik = css_objective(params, x, order)
        if not math.isfinite(loglik):
            return INFEASIBLE_OBJECTIVE + penalty
        return -loglik + penalty

    start = initial_params(x, order).vector(order)
    converged = True
    best = _autoregressive_optimum(x, order) if order.q == 0 else None
    if best is None and order.n_free:
        best, converged = _minimize_with_restarts(negative_loglik, start, order)
    elif best is None:
        best = start

    params = ArimaParams.from_vector(order, best)
    rss, loglik = css_objective(params, x, order)
    n_effective = len(x) - order.p
    sigma2 = rss / n_effective
    if sigma2 <= 0:
        raise ConstantSeriesError('{} leaves zero innovation variance'.format(order.label))
    params = replace(params, sigma2=sigma2)

    aic, bic, hqic = information_criteria(loglik, order.k_params, n_effective)
    fitted = FittedArima(order=order,
                         params=params,
                         loglik=loglik,
                         aic=aic,
                         bic=bic,
                         hqic=hqic,
                         residuals=tuple(css_residuals(params, x, order).tolist()),
                         n_obs=n_effective,
                         converged=converged)
    if converged:
        table = standard_errors(fitted, x)
    else:
        table = [CoefficientRow(name=name, coef=float(value))
                 for name, value in zip(_parameter_names(order), best)]
        table.append(CoefficientRow(name='sigma2', coef=sigma2))
        LOGGER.warning('%s did not converge; reporting the best point found', order.label)
    LOGGER.info('Fitted %s: loglik %.4f, aic %.4f, bic %.4f', order.label, loglik, aic, bic)
    return replace(fitted, coef_table=tuple(table))


def _autoregressive_optimum(x: np.ndarray, order: ArimaOrder) -> Optional[np.ndarray]:
    """
    Without MA terms the CSS objective is a linear least-squares problem;
    returns its solution when it lies inside the stationarity region.
    """
    if not order.n_free:
        return None
    n, p = len(x), order.p
    columns = [x[p - lag:n - lag] for lag in range(1, p + 1)]
    if order.include_constant:
        columns.append(np.ones(n - p))
    try:
        solution = np.asarray(ols(np.column_stack(columns), x[p:]).coefficients)
    except (RankDeficientError, SeriesTooShortError):
        return None
    if _penalty(ArimaParams.from_vector(order, solution)) > 0:
        return None
    return solution


def _minimize_with_restarts(objective, start: np.ndarray, order: ArimaOrder) -> Tuple[np.ndarray, bool]:
    """
    Runs the simplex search from `start` and OPTIMIZER_RESTARTS jittered
    restarts; returns the best penalty-free point and its convergence flag.
    """
    max_evaluations = EVALUATIONS_PER_PARAMETER * (order.p + order.q + 1)
    results = []
    anchor, anchor_value = start, math.inf
    for attempt in range(OPTIMIZER_RESTARTS + 1):
        initial = start if attempt == 0 else _jitter(anchor, attempt)
        spread = RELATIVE_SPREAD * max(1.0, abs(objective(initial)))
        result = optimize.minimize(objective, initial, method='Nelder-Mead',
                                   options={'maxfev': max_evaluations,
                                            'fatol': spread,
                                            'xatol': np.inf})
        params = ArimaParams.from_vector(order, result.x)
        feasible = _penalty(params) == 0.0
        results.append((result.fun, attempt, result.x, bool(result.success), feasible, params))
        if feasible and result.fun < anchor_value:
            anchor, anchor_value = result.x, result.fun

    feasible = [r for r in results if r[4]]
    if feasible:
        value, attempt, point, success, _, _ = min(feasible, key=lambda r: (r[0], r[1]))
        return point, success

    inside = [r for r in results if min(min_root_moduli(r[5])) > 1.0]
    if inside:
        _, _, point, _, _, _ = min(inside, key=lambda r: (r[0], r[1]))
        return point, False
    raise BoundaryOptimumError('Every restart of {} ended on the stationarity/invertibility '
                               'boundary'.format(order.label))


def _integrated_ar_coefficients(params: ArimaParams, d: int) -> np.ndarray:
    """
    AR coefficients of phi(B) (1 - B)^d written as 1 - sum a_i B^i.
    """
    polynomial = np.concatenate(([1.0], -np.asarray(params.phi, dtype=float)))
    for _ in range(d):
        polynomial = np.convolve(polynomial, [1.0, -1.0])
    return -polynomial[1:]


def psi_weights(params: ArimaParams, d: int, count: int) -> np.ndarray:
    """
    First `count` weights of the moving-average representation of the
    integrated process.
    """
    ar = _integrated_ar_coefficients(params, d)
    theta = np.asarray(params.theta, dtype=float)
    psi = np.zeros(count)
    psi[0] = 1.0
    for j in range(1, count):
        value = theta[j - 1] if j <= len(theta) else 0.0
        for i in range(1, min(j, len(ar)) + 1):
            value += ar[i - 1] * psi[j - i]
        psi[j] = value
    return psi


def forecast(fitted: FittedArima, origin_series: Sequence[float], horizon: int) -> ForecastResult:
    """
    Multi-step forecasts on the level scale with psi-weight standard errors.

    Future innovations are zero; known innovations come from the CSS
    recursion over origin_series, which is normally the series the model
    was fitted to.

    :param fitted: the estimated model
    :param origin_series: level series the forecast continues
    :param horizon: number of steps, 1..10000
    :return: ForecastResult
    """
    if int(horizon) != horizon or not 1 <= horizon <= MAX_HORIZON:
        raise OutOfRangeError('Forecast horizon must be in 1..{}, got {}'.format(
            MAX_HORIZON, horizon))
    if not fitted.converged:
        LOGGER.warning('Forecasting from unconverged %s', fitted.order.label)

    order, params = fitted.order, fitted.params
    levels = np.asarray(origin_series, dtype=float)
    x = np.asarray(difference(levels, order.d).values, dtype=float)
    innovations = css_residuals(params, x, order)

    history = list(x)
    shocks = list(innovations)
    predicted = []
    for _ in range(horizon):
        value = params.constant
        for lag, phi in enumerate(params.phi, start=1):
            value += phi * history[-lag]
        for lag, theta in enumerate(params.theta, start=1):
            value += theta * shocks[-lag]
        history.append(value)
        shocks.append(0.0)
        predicted.append(value)

    origin = tuple(levels[len(levels) - order.d:].tolist()) if order.d else ()
    point = undifference(DifferencedSeries(values=tuple(predicted), d=order.d, origin=origin))[order.d:]

    psi = psi_weights(params, order.d, horizon)
    stderr = np.sqrt(params.sigma2 * np.cumsum(psi ** 2))
    point_array = np.asarray(point)
    return ForecastResult(horizon=horizon,
                          point=tuple(point),
                          stderr=tuple(stderr.tolist()),
                          ci_low=tuple((point_array - BAND_Z * stderr).tolist()),
                          ci_high=tuple((point_array + BAND_Z * stderr).tolist()))


def in_sample_predictions(fitted: FittedArima, series: Sequence[float]) -> List[Optional[float]]:
    """
    One-step-ahead predictions on the level scale. The one-step error of the
    level equals the innovation, so the prediction is the observation minus
    its residual; the first d + p slots have no prediction.
    """
    order = fitted.order
    levels = np.asarray(series, dtype=float)
    x = np.asarray(difference(levels, order.d).values, dtype=float)
    innovations = css_residuals(fitted.params, x, order)
    first = order.d + order.p
    predictions: List[Optional[float]] = [None] * first
    predictions += (levels[first:] - innovations[order.p:]).tolist()
    return predictions

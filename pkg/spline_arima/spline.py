"""
Cubic spline construction and missing-value interpolation of daily grids.

The spline is solved for its knot second derivatives (moments) through a
tridiagonal system and stored as one cubic per interval in the local
variable t = x - x_i:

    S_i(x) = a_i t**3 + b_i t**2 + c_i t + d_i

Global monomial coefficients (in x itself) are produced on export only.
"""

import enum
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import singer
from singer import metrics

from spline_arima.errors import (ContractError, OutOfRangeError,
                                 SeriesTooShortError, SingularSystemError)
from spline_arima.series_core import TimeSeries

LOGGER = singer.get_logger()

PERIODIC_TOLERANCE = 1e-12


class BoundaryCondition(str, enum.Enum):
    """
    End conditions fixing the two free degrees of freedom of the spline.
    """
    NATURAL = 'natural'
    NOT_A_KNOT = 'not_a_knot'
    PERIODIC = 'periodic'

    @classmethod
    def parse(cls, kind: str) -> 'BoundaryCondition':
        if isinstance(kind, cls):
            return kind
        try:
            return cls(str(kind).strip().lower())
        except ValueError:
            raise ContractError('Unknown boundary condition "{}"; expected one of: {}'.format(
                kind, ', '.join(member.value for member in cls))) from None


@dataclass(frozen=True)
class CubicSpline:
    """
    Piecewise cubic interpolant with local-variable coefficients.

    :param knots_x: strictly increasing abscissae, n values
    :param knots_y: ordinates at the knots, n values
    :param coefficients: n - 1 (a, b, c, d) quadruples in t = x - x_i
    :param boundary: the end condition used to build the spline
    """
    knots_x: Tuple[float, ...]
    knots_y: Tuple[float, ...]
    coefficients: Tuple[Tuple[float, float, float, float], ...]
    boundary: BoundaryCondition

    def global_coefficients(self) -> List[Tuple[float, float, float, float]]:
        """
        Expands every piece into a x**3 + b x**2 + c x + d form in the
        global variable x.
        """
        expanded = []
        for x_i, (a, b, c, d) in zip(self.knots_x, self.coefficients):
            expanded.append((
                a,
                b - 3.0 * a * x_i,
                c - 2.0 * b * x_i + 3.0 * a * x_i ** 2,
                d - c * x_i + b * x_i ** 2 - a * x_i ** 3,
            ))
        return expanded


def solve_tridiagonal(sub: Sequence[float],
                      diag: Sequence[float],
                      sup: Sequence[float],
                      rhs: Sequence[float]) -> List[float]:
    """
    Solves a tridiagonal system with the Thomas algorithm.

    :param sub: sub-diagonal, n - 1 values (row i + 1, column i)
    :param diag: main diagonal, n values
    :param sup: super-diagonal, n - 1 values (row i, column i + 1)
    :param rhs: right-hand side, n values
    :return: the solution x of A x = rhs
    """
    n = len(diag)
    if n < 1 or len(rhs) != n or len(sub) != n - 1 or len(sup) != n - 1:
        raise ContractError('Tridiagonal system needs n >= 1 diagonal entries and '
                            'n - 1 off-diagonal entries')

    lower = np.asarray(sub, dtype=float)
    upper = np.asarray(sup, dtype=float)
    pivots = np.array(diag, dtype=float)
    values = np.array(rhs, dtype=float)
    tolerance = np.finfo(float).eps * max(np.max(np.abs(pivots)), np.finfo(float).tiny)

    # forward elimination
    for i in range(n):
        if i > 0:
            factor = lower[i - 1] / pivots[i - 1]
            pivots[i] -= factor * upper[i - 1]
            values[i] -= factor * values[i - 1]
        if not np.isfinite(pivots[i]) or abs(pivots[i]) <= tolerance:
            raise SingularSystemError('Zero pivot in row {} of tridiagonal system'.format(i))

    # back substitution
    solution = np.empty(n)
    solution[-1] = values[-1] / pivots[-1]
    for i in range(n - 2, -1, -1):
        solution[i] = (values[i] - upper[i] * solution[i + 1]) / pivots[i]
    return solution.tolist()


def solve_cyclic_tridiagonal(sub: Sequence[float],
                             diag: Sequence[float],
                             sup: Sequence[float],
                             rhs: Sequence[float],
                             corner_top: float,
                             corner_bottom: float) -> List[float]:
    """
    Solves a tridiagonal system with two extra corner entries,
    A[0, n-1] = corner_top and A[n-1, 0] = corner_bottom, through the
    Sherman-Morrison correction of two Thomas solves.
    """
    n = len(diag)
    if n < 3:
        # the corners fall on the ordinary off-diagonals
        if n == 1:
            return solve_tridiagonal([], [diag[0] + corner_top + corner_bottom], [], rhs)
        return solve_tridiagonal([sub[0] + corner_bottom], diag, [sup[0] + corner_top], rhs)

    gamma = -diag[0]
    modified = list(diag)
    modified[0] = diag[0] - gamma
    modified[-1] = diag[-1] - corner_top * corner_bottom / gamma

    u = np.zeros(n)
    u[0] = gamma
    u[-1] = corner_bottom
    v = np.zeros(n)
    v[0] = 1.0
    v[-1] = corner_top / gamma

    y = np.asarray(solve_tridiagonal(sub, modified, sup, rhs))
    z = np.asarray(solve_tridiagonal(sub, modified, sup, u))
    denominator = 1.0 + v @ z
    if abs(denominator) <= np.finfo(float).eps:
        raise SingularSystemError('Cyclic tridiagonal system is singular')
    return (y - z * (v @ y) / denominator).tolist()


def _natural_moments(h: np.ndarray, slopes: np.ndarray) -> np.ndarray:
    m = len(h)
    moments = np.zeros(m + 1)
    if m < 2:
        return moments
    diag = 2.0 * (h[:-1] + h[1:])
    rhs = 6.0 * np.diff(slopes)
    moments[1:-1] = solve_tridiagonal(h[1:-1], diag, h[1:-1], rhs)
    return moments


def _not_a_knot_moments(h: np.ndarray, slopes: np.ndarray) -> np.ndarray:
    m = len(h)
    diag = 2.0 * (h[:-1] + h[1:])
    sub = h[1:-1].copy()
    sup = h[1:-1].copy()
    rhs = 6.0 * np.diff(slopes)

    # third derivative continuous at the second knot: eliminate M_0
    diag[0] = (h[0] + h[1]) * (h[0] + 2.0 * h[1]) / h[1]
    sup[0] = (h[1] ** 2 - h[0] ** 2) / h[1]
    # and at the second-to-last knot: eliminate M_m
    diag[-1] = (h[-2] + h[-1]) * (2.0 * h[-2] + h[-1]) / h[-2]
    sub[-1] = (h[-2] ** 2 - h[-1] ** 2) / h[-2]

    moments = np.zeros(m + 1)
    moments[1:-1] = solve_tridiagonal(sub, diag, sup, rhs)
    moments[0] = ((h[0] + h[1]) * moments[1] - h[0] * moments[2]) / h[1]
    moments[-1] = ((h[-1] + h[-2]) * moments[-2] - h[-1] * moments[-3]) / h[-2]
    return moments


def _periodic_moments(h: np.ndarray, slopes: np.ndarray) -> np.ndarray:
    m = len(h)
    moments = np.zeros(m + 1)
    if m < 2:
        return moments
    # unknowns M_0..M_{m-1}, with M_m = M_0; row 0 wraps around the ends
    diag = np.empty(m)
    diag[0] = 2.0 * (h[-1] + h[0])
    diag[1:] = 2.0 * (h[:-1] + h[1:])
    rhs = np.empty(m)
    rhs[0] = 6.0 * (slopes[0] - slopes[-1])
    rhs[1:] = 6.0 * np.diff(slopes)
    off = h[:-1]
    solution = solve_cyclic_tridiagonal(off, diag, off, rhs,
                                        corner_top=h[-1], corner_bottom=h[-1])
    moments[:-1] = solution
    moments[-1] = solution[0]
    return moments


def fit_cubic_spline(xs: Sequence[float],
                     ys: Sequence[float],
                     boundary: BoundaryCondition = BoundaryCondition.NATURAL) -> CubicSpline:
    """
    Builds the interpolating cubic spline through (xs, ys).

    With exactly two points every boundary condition degrades to the straight
    line through them.

    :param xs: strictly increasing abscissae
    :param ys: ordinates, same length as xs
    :param boundary: natural, not_a_knot or periodic end conditions
    :return: CubicSpline
    """
    boundary = BoundaryCondition.parse(boundary)
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) != len(y):
        raise ContractError('xs and ys differ in length ({} vs {})'.format(len(x), len(y)))
    minimum = 4 if boundary is BoundaryCondition.NOT_A_KNOT else 2
    if len(x) < minimum:
        raise SeriesTooShortError('A {} spline needs at least {} points, got {}'.format(
            boundary.value, minimum, len(x)))

    h = np.diff(x)
    if np.any(h <= 0):
        raise ContractError('Spline abscissae must be strictly increasing')
    if boundary is BoundaryCondition.PERIODIC:
        scale = max(abs(y[0]), abs(y[-1]), 1.0)
        if abs(y[0] - y[-1]) > PERIODIC_TOLERANCE * scale:
            raise ContractError('Periodic boundary requires equal end ordinates, got {} and {}'.format(
                y[0], y[-1]))

    slopes = np.diff(y) / h
    if len(h) == 1:
        moments = np.zeros(2)
    elif boundary is BoundaryCondition.NATURAL:
        moments = _natural_moments(h, slopes)
    elif boundary is BoundaryCondition.NOT_A_KNOT:
        moments = _not_a_knot_moments(h, slopes)
    else:
        moments = _periodic_moments(h, slopes)

    a = (moments[1:] - moments[:-1]) / (6.0 * h)
    b = moments[:-1] / 2.0
    c = slopes - h * (2.0 * moments[:-1] + moments[1:]) / 6.0
    d = y[:-1]
    coefficients = tuple(zip(a.tolist(), b.tolist(), c.tolist(), d.tolist()))
    return CubicSpline(knots_x=tuple(x.tolist()),
                       knots_y=tuple(y.tolist()),
                       coefficients=coefficients,
                       boundary=boundary)


def evaluate_many(spline: CubicSpline, xs: Sequence[float]) -> np.ndarray:
    """
    Evaluates the spline at every point of xs. Knots evaluate to their
    stored ordinates exactly.
    """
    knots = np.asarray(spline.knots_x)
    points = np.atleast_1d(np.asarray(xs, dtype=float))
    if np.any(points < knots[0]) or np.any(points > knots[-1]):
        raise OutOfRangeError('Spline evaluation outside [{}, {}] is not supported'.format(
            knots[0], knots[-1]))

    coefficients = np.asarray(spline.coefficients)
    intervals = np.clip(np.searchsorted(knots, points, side='right') - 1, 0, len(knots) - 2)
    t = points - knots[intervals]
    a, b, c, d = coefficients[intervals].T
    result = ((a * t + b) * t + c) * t + d

    exact = np.searchsorted(knots, points)
    exact = np.clip(exact, 0, len(knots) - 1)
    on_knot = knots[exact] == points
    result[on_knot] = np.asarray(spline.knots_y)[exact[on_knot]]
    return result


def evaluate(spline: CubicSpline, x: float) -> float:
    """
    Evaluates the spline at a single point inside the knot range.
    """
    return float(evaluate_many(spline, [x])[0])


def interpolate_missing(series: TimeSeries,
                        boundary: BoundaryCondition = BoundaryCondition.NATURAL
                        ) -> Tuple[TimeSeries, List[int]]:
    """
    Fills every missing slot of a daily grid by evaluating a cubic spline
    through the present (day offset, value) pairs.

    :param series: daily grid with present first and last slots
    :param boundary: spline end conditions
    :return: the gap-free grid and the indices that were filled
    """
    missing = series.missing_indices()
    present = [i for i, value in enumerate(series.values) if value is not None]
    if len(present) < 2:
        raise SeriesTooShortError('Interpolation needs at least 2 present values in {}, got {}'.format(
            series.column_name, len(present)))
    if not missing:
        LOGGER.info('No missing slots in %s', series.column_name)
        return series, []

    spline = fit_cubic_spline(present, [series.values[i] for i in present], boundary)
    filled_values = evaluate_many(spline, missing)

    values = list(series.values)
    with metrics.record_counter('interpolated_slots') as counter:
        for index, value in zip(missing, filled_values.tolist()):
            values[index] = value
            counter.increment()

    LOGGER.info('Filled %s missing slots in %s with a %s cubic spline',
                len(missing), series.column_name, spline.boundary.value)
    filled = TimeSeries(start_date=series.start_date,
                        values=tuple(values),
                        column_name=series.column_name)
    return filled, missing

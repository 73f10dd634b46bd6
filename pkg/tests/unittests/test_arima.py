import dataclasses
import math
import unittest
from unittest import mock

import numpy as np
import pytest
from scipy.optimize import OptimizeResult

from spline_arima import arima
from spline_arima.arima import (ArimaOrder, ArimaParams, FittedArima,
                                characteristic_roots, coefficient_row,
                                css_objective, css_residuals, forecast,
                                in_sample_predictions, information_criteria,
                                min_root_moduli, psi_weights, standard_errors)
from spline_arima.errors import (BoundaryOptimumError, ContractError,
                                 OutOfRangeError, SeriesTooShortError)
from spline_arima.series_core import difference
from spline_arima.simulate import simulate_arima


def fitted_model(order, params, n_obs=100):
    return FittedArima(order=order, params=params, loglik=0.0, aic=0.0, bic=0.0, hqic=0.0,
                       residuals=(), n_obs=n_obs, converged=True)


class TestArimaOrder(unittest.TestCase):

    def test_constant_defaults_to_stationary_models(self):
        self.assertTrue(ArimaOrder(1, 0, 0).include_constant)
        self.assertFalse(ArimaOrder(1, 1, 0).include_constant)
        self.assertTrue(ArimaOrder(1, 1, 0, include_constant=True).include_constant)

    def test_parse(self):
        order = ArimaOrder.parse('2, 1, 2')

        self.assertEqual((order.p, order.d, order.q), (2, 1, 2))
        self.assertEqual(order.label, 'ARIMA(2,1,2)')
        self.assertEqual(order.n_free, 4)
        self.assertEqual(order.k_params, 5)

    def test_parse_rejects_malformed_orders(self):
        for text in ('2,1', 'a,b,c', '1,-1,0', ''):
            with self.assertRaises(ContractError):
                ArimaOrder.parse(text)

    def test_bounds(self):
        with self.assertRaises(OutOfRangeError):
            ArimaOrder(11, 0, 0)

    def test_parameter_vector_layout(self):
        order = ArimaOrder(2, 0, 1)
        params = ArimaParams(phi=(0.5, -0.2), theta=(0.3,), constant=1.5)

        vector = params.vector(order)

        np.testing.assert_array_equal(vector, [0.5, -0.2, 0.3, 1.5])
        self.assertEqual(ArimaParams.from_vector(order, vector), params)


class TestCharacteristicRoots(unittest.TestCase):

    def test_single_root(self):
        result = characteristic_roots([0.5])

        self.assertAlmostEqual(result.min_modulus, 2.0, places=12)

    def test_unit_root_is_detected(self):
        result = characteristic_roots([1.5, -0.5])

        self.assertEqual(sorted(round(root.real, 10) for root in result.roots), [1.0, 2.0])
        self.assertLessEqual(abs(result.min_modulus - 1.0), 1e-8)

    def test_roots_rebuild_the_polynomial(self):
        rng = np.random.default_rng(41)
        for _ in range(20):
            coefficients = rng.uniform(-1.0, 1.0, 5)
            coefficients[-1] = 0.5 if coefficients[-1] >= 0 else -0.5

            roots = np.asarray(characteristic_roots(coefficients).roots)

            rebuilt = -coefficients[-1] * np.poly(roots)
            expected = np.concatenate((-coefficients[::-1], [1.0]))
            np.testing.assert_allclose(rebuilt.real, expected, rtol=1e-6, atol=1e-8)
            residual = 1.0 - sum(c * roots ** (k + 1) for k, c in enumerate(coefficients))
            self.assertLessEqual(np.max(np.abs(residual)), 1e-8)

    def test_degree_zero_input(self):
        with self.assertRaises(ContractError):
            characteristic_roots([])
        with self.assertRaises(ContractError):
            characteristic_roots([0.5, 0.0])

    def test_moduli_ignore_trailing_zeros(self):
        ar, ma = min_root_moduli(ArimaParams(phi=(0.5, 0.0), theta=()))

        self.assertAlmostEqual(ar, 2.0, places=12)
        self.assertEqual(ma, math.inf)


class TestCssObjective(unittest.TestCase):

    def test_white_noise_order(self):
        order = ArimaOrder(0, 0, 0, include_constant=False)
        x = np.random.default_rng(1).normal(size=50)

        rss, loglik = css_objective(ArimaParams(), x, order)

        second_moment = np.mean(x ** 2)
        self.assertAlmostEqual(rss, float(x @ x), places=10)
        self.assertAlmostEqual(loglik, -25.0 * (math.log(2 * math.pi) + math.log(second_moment) + 1.0),
                               places=10)

    def test_autoregression_recovers_generating_innovations(self):
        order = ArimaOrder(1, 0, 0)
        innovations = np.random.default_rng(2).normal(size=40)
        x = np.empty(40)
        x[0] = innovations[0]
        for t in range(1, 40):
            x[t] = 0.3 + 0.6 * x[t - 1] + innovations[t]

        residuals = css_residuals(ArimaParams(phi=(0.6,), constant=0.3), x, order)

        self.assertEqual(residuals[0], 0.0)
        np.testing.assert_allclose(residuals[1:], innovations[1:], rtol=0, atol=1e-10)

    def test_arma_matches_hand_unrolled_recursion(self):
        order = ArimaOrder(1, 0, 1)
        params = ArimaParams(phi=(0.4,), theta=(-0.3,), constant=0.2)
        x = [0.5, 1.2, -0.3, 0.8, 2.0, -1.1, 0.4, 0.9, -0.6, 1.5]

        rss = 0.0
        previous = 0.0
        for t in range(1, 10):
            innovation = x[t] - 0.2 - 0.4 * x[t - 1] + 0.3 * previous
            rss += innovation ** 2
            previous = innovation

        self.assertAlmostEqual(css_objective(params, x, order)[0], rss, delta=1e-12)

    def test_series_too_short(self):
        with self.assertRaises(SeriesTooShortError):
            css_residuals(ArimaParams(phi=(0.1,), theta=(0.1,)), [1.0, 2.0], ArimaOrder(1, 0, 1))


class TestInference(unittest.TestCase):

    def test_information_criteria(self):
        aic, bic, hqic = information_criteria(-100.0, 3, 100)

        self.assertAlmostEqual(aic, 206.0, places=10)
        self.assertAlmostEqual(bic, 213.816, delta=1e-3)
        self.assertAlmostEqual(hqic, 209.163, delta=1e-3)

    def test_information_criteria_need_more_observations_than_parameters(self):
        with self.assertRaises(SeriesTooShortError):
            information_criteria(-10.0, 5, 5)

    def test_coefficient_row_arithmetic(self):
        row = coefficient_row('ar.L1', 0.42, 0.032)

        self.assertAlmostEqual(row.ci_low, 0.357, delta=1e-3)
        self.assertAlmostEqual(row.ci_high, 0.483, delta=1e-3)
        self.assertAlmostEqual(row.z, 13.1, delta=0.05)
        self.assertAlmostEqual(row.ci_low, row.coef - 1.96 * row.std_err, places=9)
        self.assertEqual(row.p, arima.two_sided_p(row.z))

    def test_coefficient_row_without_standard_error(self):
        row = coefficient_row('ma.L1', 0.1, None)

        self.assertFalse(row.available)
        self.assertIsNone(row.z)

    def test_standard_errors_need_a_converged_fit(self):
        model = dataclasses.replace(fitted_model(ArimaOrder(1, 0, 0), ArimaParams(phi=(0.5,))),
                                    converged=False)

        with self.assertRaises(ContractError):
            standard_errors(model, np.arange(50.0))

    @mock.patch('spline_arima.arima._numerical_hessian')
    def test_non_positive_definite_hessian_flags_rows(self, mocked_hessian):
        mocked_hessian.return_value = np.eye(2)
        values = simulate_arima(ArimaOrder(1, 0, 0), phi=[0.5], n=200, seed=3)
        model = fitted_model(ArimaOrder(1, 0, 0), ArimaParams(phi=(0.5,), sigma2=1.0), n_obs=199)

        rows = standard_errors(model, values)

        self.assertEqual([row.name for row in rows], ['ar.L1', 'const', 'sigma2'])
        self.assertFalse(rows[0].available)
        self.assertFalse(rows[1].available)
        self.assertTrue(rows[2].available)


class TestFit(unittest.TestCase):

    def test_ar1_recovery(self):
        values = simulate_arima(ArimaOrder(1, 0, 0), phi=[0.5], n=5000, seed=101)

        fitted = arima.fit(values, ArimaOrder(1, 0, 0))

        self.assertTrue(fitted.converged)
        self.assertLessEqual(abs(fitted.params.phi[0] - 0.5), 0.05)
        self.assertTrue(0.9 <= fitted.params.sigma2 <= 1.1)
        asymptotic = math.sqrt((1.0 - 0.25) / 5000)
        self.assertTrue(0.7 * asymptotic <= fitted.coef_table[0].std_err <= 1.4 * asymptotic)
        self.assertEqual([row.name for row in fitted.coef_table], ['ar.L1', 'const', 'sigma2'])

    def test_ma1_recovery(self):
        values = simulate_arima(ArimaOrder(0, 0, 1), theta=[0.4], n=5000, seed=102)

        fitted = arima.fit(values, ArimaOrder(0, 0, 1))

        self.assertLessEqual(abs(fitted.params.theta[0] - 0.4), 0.05)

    def test_arma11_recovery(self):
        values = simulate_arima(ArimaOrder(1, 0, 1), phi=[0.6], theta=[0.3], n=10000, seed=103)

        fitted = arima.fit(values, ArimaOrder(1, 0, 1))

        self.assertLessEqual(abs(fitted.params.phi[0] - 0.6), 0.06)
        self.assertLessEqual(abs(fitted.params.theta[0] - 0.3), 0.06)

    def test_mean_only_model_matches_sample_moments(self):
        values = np.random.default_rng(7).normal(4.0, 2.0, 200)

        fitted = arima.fit(values, ArimaOrder(0, 0, 0, include_constant=True))

        self.assertAlmostEqual(fitted.params.constant, float(np.mean(values)), delta=1e-8)
        self.assertAlmostEqual(fitted.params.sigma2, float(np.var(values)), delta=1e-8)

    def test_residuals_align_with_the_differenced_series(self):
        values = simulate_arima(ArimaOrder(1, 1, 1), phi=[0.3], theta=[0.2], n=300, seed=8)

        fitted = arima.fit(values, ArimaOrder(1, 1, 1))

        self.assertEqual(len(fitted.residuals), 299)
        self.assertEqual(fitted.n_presample, 1)
        self.assertEqual(len(fitted.conditioned_residuals), 298)
        self.assertEqual(fitted.residuals[0], 0.0)

    def test_fit_is_deterministic(self):
        values = simulate_arima(ArimaOrder(1, 1, 1), phi=[0.4], theta=[0.3], n=400, seed=9)

        first = arima.fit(values, ArimaOrder(1, 1, 1))
        second = arima.fit(values, ArimaOrder(1, 1, 1))

        self.assertEqual(first, second)

    def test_fitted_parameters_are_a_local_optimum(self):
        cases = [
            (simulate_arima(ArimaOrder(2, 0, 0), phi=[0.5, -0.3], n=1000, seed=10), ArimaOrder(2, 0, 0)),
            (simulate_arima(ArimaOrder(0, 1, 1), theta=[0.4], n=1000, seed=11), ArimaOrder(0, 1, 1)),
        ]
        for values, order in cases:
            fitted = arima.fit(values, order)
            x = difference(values, order.d).values
            point = fitted.params.vector(order)
            for index in range(len(point)):
                for step in (-1e-3, 1e-3):
                    moved = point.copy()
                    moved[index] += step
                    _, loglik = css_objective(ArimaParams.from_vector(order, moved), x, order)
                    self.assertLessEqual(loglik - fitted.loglik, 1e-6)

    def test_fitted_models_keep_roots_outside_the_unit_circle(self):
        rng = np.random.default_rng(55)
        orders = [ArimaOrder(1, 0, 0), ArimaOrder(2, 0, 0), ArimaOrder(0, 0, 1),
                  ArimaOrder(1, 0, 1), ArimaOrder(0, 1, 1), ArimaOrder(1, 1, 0)]
        checked = 0
        for _ in range(1000):
            order = orders[int(rng.integers(len(orders)))]
            values = np.cumsum(rng.normal(size=40)) if order.d else rng.normal(size=40)
            try:
                fitted = arima.fit(values, order)
            except arima.SplineArimaError:
                continue
            ar, ma = min_root_moduli(fitted.params)
            self.assertGreater(ar, 1.0)
            self.assertGreater(ma, 1.0)
            checked += 1
        self.assertGreater(checked, 900)

    def test_series_too_short(self):
        with self.assertRaises(SeriesTooShortError):
            arima.fit(np.arange(22.0), ArimaOrder(2, 1, 0))

    @mock.patch('spline_arima.arima.optimize.minimize')
    def test_every_restart_on_the_boundary(self, mocked_minimize):
        mocked_minimize.return_value = OptimizeResult(x=np.array([1.5]), fun=0.0, success=True)
        values = np.random.default_rng(4).normal(size=100)

        with self.assertRaises(BoundaryOptimumError):
            arima.fit(values, ArimaOrder(0, 0, 1, include_constant=False))

    @mock.patch('spline_arima.arima.optimize.minimize')
    def test_penalized_optimum_inside_the_circle_is_unconverged(self, mocked_minimize):
        mocked_minimize.return_value = OptimizeResult(x=np.array([0.9995]), fun=0.0, success=True)
        values = np.random.default_rng(4).normal(size=100)

        fitted = arima.fit(values, ArimaOrder(0, 0, 1, include_constant=False))

        self.assertFalse(fitted.converged)
        self.assertEqual(fitted.params.theta, (0.9995,))
        self.assertFalse(fitted.coef_table[0].available)


class TestForecast(unittest.TestCase):

    def test_random_walk_forecast_is_flat(self):
        values = simulate_arima(ArimaOrder(0, 1, 0), n=500, seed=12)
        fitted = arima.fit(values, ArimaOrder(0, 1, 0))

        result = forecast(fitted, values, 10)

        self.assertEqual(result.point, tuple([float(values[-1])] * 10))
        sigma = math.sqrt(fitted.params.sigma2)
        np.testing.assert_allclose(result.stderr, sigma * np.sqrt(np.arange(1, 11)), rtol=1e-12)
        self.assertEqual(list(result.stderr), sorted(result.stderr))

    def test_autoregressive_forecast_decays(self):
        order = ArimaOrder(1, 0, 0, include_constant=False)
        model = fitted_model(order, ArimaParams(phi=(0.5,), sigma2=1.0))

        result = forecast(model, [1.0, 3.0, 8.0], 3)

        self.assertEqual(result.point, (4.0, 2.0, 1.0))
        np.testing.assert_allclose(result.stderr, np.sqrt([1.0, 1.25, 1.3125]), rtol=1e-12)
        np.testing.assert_allclose(np.asarray(result.ci_high) - result.point,
                                   np.asarray(result.point) - result.ci_low, atol=1e-12)

    def test_horizon_bounds(self):
        model = fitted_model(ArimaOrder(1, 0, 0, include_constant=False), ArimaParams(phi=(0.5,)))

        for horizon in (0, 10001):
            with self.assertRaises(OutOfRangeError):
                forecast(model, [1.0, 2.0, 3.0], horizon)

    def test_psi_weights_of_an_integrated_autoregression(self):
        weights = psi_weights(ArimaParams(phi=(0.5,)), 1, 4)

        np.testing.assert_allclose(weights, [1.0, 1.5, 1.75, 1.875], atol=1e-12)

    def test_monte_carlo_agreement(self):
        order = ArimaOrder(1, 1, 1)
        params = ArimaParams(phi=(0.5,), theta=(0.3,), sigma2=1.0)
        model = fitted_model(order, params)
        history = simulate_arima(order, phi=[0.5], theta=[0.3], n=300, seed=13)
        horizon = 10

        result = forecast(model, history, horizon)

        x = np.asarray(difference(history, 1).values)
        last_shock = css_residuals(params, x, order)[-1]
        rng = np.random.default_rng(14)
        shocks = rng.standard_normal((10000, horizon))
        previous_x = np.full(10000, x[-1])
        previous_shock = np.full(10000, last_shock)
        level = np.full(10000, history[-1])
        paths = np.empty((10000, horizon))
        for h in range(horizon):
            change = 0.5 * previous_x + shocks[:, h] + 0.3 * previous_shock
            level = level + change
            paths[:, h] = level
            previous_x, previous_shock = change, shocks[:, h]

        standard_error = paths.std(axis=0) / math.sqrt(10000)
        self.assertTrue(np.all(np.abs(paths.mean(axis=0) - result.point) <= 4.0 * standard_error))
        np.testing.assert_allclose(paths.std(axis=0), result.stderr, rtol=0.05)


def test_in_sample_predictions_of_a_random_walk():
    values = simulate_arima(ArimaOrder(0, 1, 0), n=200, seed=15)
    fitted = arima.fit(values, ArimaOrder(0, 1, 0))

    predictions = in_sample_predictions(fitted, values)

    assert len(predictions) == 200
    assert predictions[0] is None
    np.testing.assert_allclose(predictions[1:], values[:-1], atol=1e-9)


def test_fit_report_fields():
    values = simulate_arima(ArimaOrder(2, 1, 0), phi=[0.3, 0.2], n=300, seed=16)

    report = arima.fit(values, ArimaOrder(2, 1, 0)).to_report()

    assert report['model'] == 'ARIMA(2,1,0)'
    assert report['include_constant'] is False
    assert [row['name'] for row in report['coefficients']] == ['ar.L1', 'ar.L2', 'sigma2']
    assert {'aic', 'bic', 'hqic', 'loglik', 'n_obs', 'converged'} <= set(report)


@pytest.mark.parametrize('order, phi, theta', [
    (ArimaOrder(1, 0, 0), [0.5], []),
    (ArimaOrder(0, 1, 2), [], [0.4, 0.2]),
])
def test_fit_rows_carry_consistent_inference(order, phi, theta):
    values = simulate_arima(order, phi=phi, theta=theta, n=800, seed=17)

    fitted = arima.fit(values, order)

    for row in fitted.coef_table:
        if row.available:
            assert row.z == pytest.approx(row.coef / row.std_err, abs=1e-9)
            assert row.ci_high == pytest.approx(row.coef + 1.96 * row.std_err, abs=1e-9)

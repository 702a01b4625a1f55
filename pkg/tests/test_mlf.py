import math

import numpy as np
import pytest
from scipy import special
from scipy.integrate import quad

from src.errors import DomainError, ParameterError
from src.numerics.mlf import (
    MLParams,
    evaluate,
    mlf_bound_constant,
    mlf_crosscheck,
    mlf_eval,
    mlf_first_moment,
    mlf_moment,
    mlf_series_reference,
)


def test_exponential_identity():
    x = -np.linspace(0.0, 100.0, 201)
    np.testing.assert_allclose(mlf_eval(MLParams(alpha=1.0, beta=1.0), x), np.exp(x), rtol=1e-10, atol=1e-300)


def test_cosine_identity_across_switch():
    y = np.linspace(0.0, 100.0, 401)
    values = mlf_eval(MLParams(alpha=2.0, beta=1.0), -y)
    np.testing.assert_allclose(values, np.cos(np.sqrt(y)), atol=1e-10)


def test_sinc_identity_across_switch():
    y = np.linspace(0.5, 100.0, 400)
    values = mlf_eval(MLParams(alpha=2.0, beta=2.0), -y)
    np.testing.assert_allclose(values, np.sin(np.sqrt(y)) / np.sqrt(y), atol=1e-10)


def test_value_at_zero_is_reciprocal_gamma():
    for beta in (0.5, 1.0, 1.5, 2.7):
        assert mlf_eval(MLParams(alpha=1.5, beta=beta), 0.0) == pytest.approx(float(special.rgamma(beta)), rel=1e-14)


def test_scalar_input_returns_float():
    assert isinstance(mlf_eval(MLParams(alpha=1.5, beta=1.0), -2.0), float)


ORDERS = [1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9]
BETA_SHIFTS = [("1", lambda a: 1.0), ("2", lambda a: 2.0), ("a-1", lambda a: a - 1.0),
               ("a", lambda a: a), ("a+1", lambda a: a + 1.0), ("a+2", lambda a: a + 2.0)]


@pytest.mark.parametrize("alpha", ORDERS)
@pytest.mark.parametrize("label,beta_of", BETA_SHIFTS, ids=[label for label, _ in BETA_SHIFTS])
def test_matches_extended_precision_series(alpha, label, beta_of):
    beta = beta_of(alpha)
    x = np.array([-0.5, -3.0, -9.5, -10.5, -12.0, -15.0, -25.0, -35.0, -50.0])
    values = mlf_eval(MLParams(alpha=alpha, beta=beta), x)
    reference = np.array([mlf_series_reference(alpha, beta, float(v)) for v in x])
    assert np.all(np.abs(values - reference) <= 1e-9 * np.maximum(1.0, np.abs(reference)))


def test_small_order_far_field_values():
    for alpha, beta, x in [(1.1, 1.1, -12.0), (1.1, 0.1, -15.0), (1.2, 2.2, -18.0)]:
        value = mlf_eval(MLParams(alpha=alpha, beta=beta), x)
        reference = mlf_series_reference(alpha, beta, x, dps=80)
        assert value == pytest.approx(reference, rel=1e-9, abs=1e-13)


def test_far_field_is_pointwise_independent_of_batch():
    y = np.linspace(10.5, 400.0, 300)
    batch = evaluate(1.15, 2.0, -y)
    single = np.array([float(evaluate(1.15, 2.0, -v)) for v in y[::37]])
    np.testing.assert_allclose(batch[::37], single, rtol=1e-11, atol=1e-15)


@pytest.mark.parametrize("alpha", [1.1, 1.2, 1.5, 1.8])
@pytest.mark.parametrize("label,beta_of", BETA_SHIFTS, ids=[label for label, _ in BETA_SHIFTS])
def test_series_and_far_field_agree_on_switch_band(alpha, label, beta_of):
    assert mlf_crosscheck(MLParams(alpha=alpha, beta=beta_of(alpha))) <= 1e-8


def test_crosscheck_shifted_parameters():
    assert mlf_crosscheck(MLParams(alpha=1.1, beta=2.1)) <= 1e-8
    assert mlf_crosscheck(MLParams(alpha=1.2, beta=2.2)) <= 1e-8


def test_unit_order_integer_beta_far_field():
    y = 20.0
    assert evaluate(1.0, 2.0, -y) == pytest.approx((1.0 - math.exp(-y)) / y, rel=1e-12)


def test_unit_order_rejects_fractional_beta_far_field():
    with pytest.raises(ParameterError):
        evaluate(1.0, 1.5, -20.0)


def test_invalid_parameters():
    with pytest.raises(ParameterError):
        MLParams(alpha=0.0, beta=1.0)
    with pytest.raises(ParameterError):
        MLParams(alpha=2.5, beta=1.0)
    with pytest.raises(ParameterError):
        MLParams(alpha=1.5, beta=math.nan)


def test_positive_argument_rejected():
    with pytest.raises(DomainError):
        mlf_eval(MLParams(alpha=1.5, beta=1.0), 0.1)
    with pytest.raises(DomainError):
        mlf_eval(MLParams(alpha=1.5, beta=1.0), [-1.0, np.inf * -1])


def test_moment_matches_quadrature():
    alpha, lam, t = 1.5, 3.0, 1.2

    def integrand(s):
        return s ** (alpha - 1.0) * float(evaluate(alpha, alpha, -lam * s**alpha))

    expected, _ = quad(integrand, 0.0, t, epsabs=1e-13, epsrel=1e-12)
    assert mlf_moment(alpha, lam, t) == pytest.approx(expected, rel=1e-8)


def test_first_moment_integrates_moment():
    alpha, lam, t = 1.4, 2.0, 0.9
    expected, _ = quad(lambda s: mlf_moment(alpha, lam, s) if s > 0 else 0.0, 0.0, t, epsabs=1e-13, epsrel=1e-11)
    assert mlf_first_moment(alpha, lam, t) == pytest.approx(expected, rel=1e-8)


def test_moment_domain():
    with pytest.raises(DomainError):
        mlf_moment(1.5, 0.0, 1.0)
    with pytest.raises(DomainError):
        mlf_moment(1.5, 1.0, 0.0)


@pytest.mark.parametrize("beta", [1.0, 2.0, 1.5])
def test_bound_constant_dominates_profile(beta):
    params = MLParams(alpha=1.5, beta=beta)
    constant = mlf_bound_constant(params, x_max=1e4, grid_size=400)
    x = np.geomspace(1e-3, 1e4, 997)
    profile = (1.0 + x) * np.abs(evaluate(1.5, beta, -x))
    assert np.all(profile <= constant * (1.0 + 1e-6))
    assert constant >= float(special.rgamma(beta))


@pytest.mark.parametrize("alpha", [1.1, 1.3, 1.7, 1.9])
@pytest.mark.parametrize("beta_of", [lambda a: 1.0, lambda a: 2.0, lambda a: a], ids=["1", "2", "a"])
def test_decay_bound_holds_across_orders(alpha, beta_of):
    beta = beta_of(alpha)
    constant = mlf_bound_constant(MLParams(alpha=alpha, beta=beta), x_max=1e4, grid_size=2000)
    assert math.isfinite(constant)
    x = np.geomspace(1e-4, 1e4, 1501)
    profile = (1.0 + x) * np.abs(evaluate(alpha, beta, -x))
    assert np.all(profile <= constant * (1.0 + 1e-3))

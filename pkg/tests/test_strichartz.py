import itertools
import math

import pytest

from src.errors import DomainError, ParameterError, ValidationError
from src.numerics.linear import LinearSolver, TimeGrid
from src.numerics.semilinear import exponent_set_for_b
from src.numerics.strichartz import (
    ExponentSet,
    admissible_exponents,
    derived_orders,
    estimate_constant,
    growth_exponent,
    is_admissible,
    TrialDraw,
    run_trial,
    summarize_trials,
)


def _admissible_by_hand(d, alpha, gamma, p, q):
    if gamma > d / 4:
        q_ok = q == math.inf
    elif gamma == d / 4:
        q_ok = 2 < q < math.inf
    else:
        q_ok = q != math.inf and abs(q - 2 * d / (d - 4 * gamma)) <= 1e-12 * q
    if gamma > 1 - 1 / alpha:
        p_ok = 1 <= p < 1 / (1 - alpha * (1 - gamma))
    else:
        p_ok = p == math.inf
    return q_ok and p_ok


def test_growth_exponent_reference_value():
    s, r = derived_orders(1.5, 0.375)
    assert s == 0.0
    assert r == pytest.approx(1.0 / 3.0)
    assert growth_exponent(1.5, 0.375, 0.0, 1.0 / 3.0, 4.0) == pytest.approx(0.6875, abs=1e-15)


def test_growth_exponent_infinite_p():
    # γ ≤ 1-1/α 时 p = ∞
    assert growth_exponent(1.8, 0.2, 0.0, 0.2, math.inf) == pytest.approx(max(1.8 * 0.8 - 1, 1 - 1.8 * 0.2))


@pytest.mark.parametrize("d,alpha,gamma", itertools.product([1, 2, 3], [1.2, 1.5, 1.8], [0.1, 0.25, 0.5, 0.75, 0.9]))
def test_admissibility_matches_rule(d, alpha, gamma):
    q_candidates = [4.0, math.inf]
    if gamma < d / 4:
        q_candidates.append(2 * d / (d - 4 * gamma))
    for p, q in itertools.product([1.0, 1.5, 3.0, 12.0, math.inf], q_candidates):
        assert is_admissible(d, alpha, gamma, p, q) == _admissible_by_hand(d, alpha, gamma, p, q)


def test_admissible_exponents_branches():
    rule = admissible_exponents(3, 1.5, 0.375)
    assert rule.q == pytest.approx(4.0)
    assert rule.p_sup == pytest.approx(16.0)
    assert rule.p_strict
    assert admissible_exponents(2, 1.5, 0.5).q_range == (2.0, math.inf)
    assert admissible_exponents(1, 1.5, 0.5).q == math.inf
    assert admissible_exponents(1, 1.5, 0.5).unproven_dimension
    assert not admissible_exponents(3, 1.8, 0.3).p_strict


def test_invalid_inputs():
    with pytest.raises(ParameterError):
        admissible_exponents(4, 1.5, 0.3)
    with pytest.raises(ParameterError):
        admissible_exponents(3, 2.0, 0.3)
    with pytest.raises(DomainError):
        admissible_exponents(3, 1.5, 1.0)
    assert not is_admissible(3, 1.5, 1.0, 2.0, math.inf)


def test_exponent_set_validation():
    built = ExponentSet.build(3, 1.5, 0.375, p=4.0)
    assert built.delta == pytest.approx(0.6875)
    assert 1.0 <= built.ell < 2.0
    with pytest.raises(ValidationError):
        ExponentSet.build(3, 1.5, 0.375, p=20.0)
    with pytest.raises(ValidationError):
        ExponentSet.build(3, 1.5, 0.375, p=4.0, ell=2.5)


def test_quarter_gamma_requires_q():
    with pytest.raises(ValidationError):
        ExponentSet.build(3, 1.5, 0.75)
    assert ExponentSet.build(3, 1.5, 0.75, q=6.0).q == 6.0


def test_trial_is_deterministic(interval_basis):
    exponents = exponent_set_for_b(3, 1.5, 2.0)
    solver = LinearSolver(interval_basis, 1.5, TimeGrid.uniform(1.0, 16)).prepare()
    first = run_trial(solver, exponents, rng_seed=7, horizon_index=0, trial=2)
    second = run_trial(solver, exponents, rng_seed=7, horizon_index=0, trial=2)
    other = run_trial(solver, exponents, rng_seed=7, horizon_index=0, trial=3)
    assert first == second
    assert first.ratio != other.ratio


def test_estimate_constant_is_reproducible(interval_basis):
    exponents = exponent_set_for_b(3, 1.5, 2.0)
    horizons = [1.0, 2.0, 4.0]
    first = estimate_constant(interval_basis, exponents, horizons, trials=3, rng_seed=11, steps=16)
    second = estimate_constant(interval_basis, exponents, horizons, trials=3, rng_seed=11, steps=16)
    assert first.model_dump() == second.model_dump()
    assert first.trials == 3
    assert first.degenerate == 0
    assert 0.0 < first.c0_hat < 1e3
    assert first.delta_hat is not None
    for T, ratio in zip(horizons, first.max_ratios):
        assert ratio <= first.c0_hat * (1.0 + T) ** first.delta * (1.0 + 1e-12)


def test_estimate_constant_needs_trials(interval_basis):
    exponents = exponent_set_for_b(3, 1.5, 2.0)
    with pytest.raises(ValidationError):
        estimate_constant(interval_basis, exponents, [1.0], trials=0, rng_seed=1)


def test_fit_intercept_recovers_power_law():
    exponents = exponent_set_for_b(3, 1.5, 2.0)
    horizons = [1.0, 2.0, 4.0, 8.0]
    draws = [
        TrialDraw(horizon=T, trial=0, numerator=0.7 * (1.0 + T) ** 0.4, denominator=1.0, ratio=0.7 * (1.0 + T) ** 0.4)
        for T in horizons
    ]
    estimate = summarize_trials(exponents, horizons, draws)
    assert estimate.delta_hat == pytest.approx(0.4, rel=1e-10)
    assert estimate.c0_fit == pytest.approx(0.7, rel=1e-10)
    assert estimate.log_c0_fit == pytest.approx(math.log(0.7), rel=1e-10)
    # C0_hat 按理论指数 δ 取包络，c0_fit 按拟合斜率
    assert estimate.c0_hat == pytest.approx(0.7 * 2.0 ** (0.4 - exponents.delta), rel=1e-12)


def test_fit_intercept_absent_with_single_horizon():
    exponents = exponent_set_for_b(3, 1.5, 2.0)
    draws = [TrialDraw(horizon=2.0, trial=0, numerator=1.0, denominator=2.0, ratio=0.5)]
    estimate = summarize_trials(exponents, [2.0], draws)
    assert estimate.delta_hat is None
    assert estimate.c0_fit is None
    assert estimate.c0_hat == pytest.approx(0.5 / 3.0**exponents.delta)


def test_many_draws_growth_stays_near_theory(interval_basis):
    exponents = exponent_set_for_b(3, 1.5, 2.0)
    horizons = [1.0, 2.0, 4.0, 8.0]
    estimate = estimate_constant(interval_basis, exponents, horizons, trials=100, rng_seed=5, steps=16)
    assert len(estimate.draws) == 400
    assert estimate.degenerate == 0
    assert estimate.delta_hat <= exponents.delta + 0.15
    assert estimate.c0_fit > 0.0

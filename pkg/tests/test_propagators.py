import numpy as np
import pytest

from src.errors import DomainError, ParameterError
from src.numerics.mlf import evaluate
from src.numerics.propagators import Propagator, PropagatorKind, apply, kernel_table


def test_wave_limit_kernels():
    lam = np.array([1.0, 4.0, 9.0])
    t = np.array([0.0, 0.3, 1.7])
    s1 = kernel_table(PropagatorKind.S1, 2.0, lam, t)
    s2 = kernel_table(PropagatorKind.S2, 2.0, lam, t)
    root = np.sqrt(lam)
    np.testing.assert_allclose(s1, np.cos(np.outer(t, root)), atol=1e-12)
    np.testing.assert_allclose(s2, np.sin(np.outer(t, root)) / root, atol=1e-12)


def test_s1_matches_mittag_leffler():
    lam = np.array([1.0, 2.5])
    table = kernel_table("S1", 1.5, lam, 0.8)
    np.testing.assert_allclose(table, evaluate(1.5, 1.0, -lam * 0.8**1.5))


def test_ds1_is_time_derivative_of_s1():
    lam = np.array([1.0, 3.0])
    t, h = 0.7, 1e-5
    forward = kernel_table("S1", 1.5, lam, t + h)
    backward = kernel_table("S1", 1.5, lam, t - h)
    np.testing.assert_allclose(kernel_table("dS1", 1.5, lam, t), (forward - backward) / (2 * h), rtol=1e-6)


def test_ds2_is_time_derivative_of_s2():
    lam = np.array([2.0])
    t, h = 1.1, 1e-5
    forward = kernel_table("S2", 1.5, lam, t + h)
    backward = kernel_table("S2", 1.5, lam, t - h)
    np.testing.assert_allclose(kernel_table("dS2", 1.5, lam, t), (forward - backward) / (2 * h), rtol=1e-6)


def test_singular_kernels_reject_zero_time():
    lam = np.array([1.0])
    for kind in ("S3", "dS1", "dS3"):
        with pytest.raises(DomainError):
            kernel_table(kind, 1.5, lam, np.array([0.0, 1.0]))
    with pytest.raises(DomainError):
        kernel_table("S1", 1.5, lam, -0.1)


def test_apply_is_diagonal(interval_basis):
    coeffs = np.arange(1.0, interval_basis.mode_count + 1)
    out = apply("S2", interval_basis, 1.5, 0.5, coeffs)
    expected = kernel_table("S2", 1.5, interval_basis.eigenvalues, 0.5) * coeffs
    np.testing.assert_allclose(out, expected)


def test_propagator_caches_kernels(interval_basis):
    propagator = Propagator(interval_basis, 1.5)
    coeffs = np.ones(interval_basis.mode_count)
    first = propagator.apply("S1", 0.5, coeffs)
    second = propagator.apply(PropagatorKind.S1, 0.5, coeffs)
    np.testing.assert_array_equal(first, second)
    assert propagator.cached_entries == 1
    propagator.apply("S3", 0.5, coeffs)
    assert propagator.cached_entries == 2


def test_propagator_rejects_bad_order(interval_basis):
    with pytest.raises(ParameterError):
        Propagator(interval_basis, 2.5)

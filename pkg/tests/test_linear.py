import math

import numpy as np
import pytest

from src.errors import ParameterError, ValidationError
from src.numerics.linear import (
    LinearSolver,
    SourceTerm,
    TimeGrid,
    caputo_l1_residual,
    closed_form_mode,
    evaluate_representation,
    refinement_difference,
    solve_linear,
    solve_linear_derivative,
    stability_report,
)
from src.numerics.mlf import MLParams, evaluate, mlf_bound_constant
from src.numerics.spectral import build_interval_basis

ALPHA = 1.5


def test_graded_grid_nodes():
    grid = TimeGrid.graded(2.0, 8, 2.0)
    assert grid.nodes[0] == 0.0
    assert grid.nodes[-1] == pytest.approx(2.0, rel=1e-15)
    assert grid.steps == 8
    assert not grid.is_uniform
    assert TimeGrid.uniform(1.0, 8).is_uniform


def test_refined_grid_contains_coarse_nodes():
    grid = TimeGrid.graded(1.0, 16, 1.5)
    np.testing.assert_allclose(grid.refined().nodes[::2], grid.nodes, rtol=1e-14)


def test_grid_validation():
    with pytest.raises(ValidationError):
        TimeGrid(nodes=np.array([0.1, 0.5, 1.0]))
    with pytest.raises(ValidationError):
        TimeGrid(nodes=np.array([0.0, 0.5, 0.5]))
    with pytest.raises(ValidationError):
        TimeGrid.graded(-1.0, 4)


def test_order_outside_range_rejected(interval_basis, unit_grid):
    with pytest.raises(ParameterError):
        LinearSolver(interval_basis, 1.0, unit_grid)
    with pytest.raises(ParameterError):
        LinearSolver(interval_basis, 2.0, unit_grid)


def test_zero_data_gives_zero_solution(interval_basis, unit_grid):
    n = interval_basis.mode_count
    trajectory = solve_linear(interval_basis, ALPHA, np.zeros(n), np.zeros(n), None, unit_grid)
    assert np.all(trajectory.modal_u == 0.0)


def test_homogeneous_solution_matches_kernels(interval_basis, unit_grid, smooth_data):
    u0, u1 = smooth_data
    trajectory = solve_linear(interval_basis, ALPHA, u0, u1, None, unit_grid)
    t = unit_grid.nodes[:, None]
    x = -interval_basis.eigenvalues * t**ALPHA
    expected = evaluate(ALPHA, 1.0, x) * u0 + t * evaluate(ALPHA, 2.0, x) * u1
    np.testing.assert_allclose(trajectory.modal_u, expected, atol=1e-10)


@pytest.mark.parametrize("grading", [1.0, 2.0])
def test_constant_source_matches_closed_form(interval_basis, grading):
    grid = TimeGrid.graded(1.0, 40, grading)
    n = interval_basis.mode_count
    c = np.zeros(n)
    c[:2] = [1.0, -2.0]
    u0 = np.zeros(n)
    u0[0] = 0.3
    trajectory = solve_linear(interval_basis, ALPHA, u0, np.zeros(n), SourceTerm.constant(grid, c), grid)
    for k in range(2):
        expected = closed_form_mode(ALPHA, interval_basis.eigenvalues[k], grid.nodes, u0[k], 0.0, c[k])
        np.testing.assert_allclose(trajectory.modal_u[:, k], expected, atol=1e-8)


@pytest.mark.parametrize("alpha", [1.1, 1.2, 1.3])
@pytest.mark.parametrize("modes", [4, 8])
def test_constant_source_high_modes_small_order(alpha, modes):
    basis = build_interval_basis(math.pi, modes)
    grid = TimeGrid.uniform(1.0, 64)
    c = np.ones(modes)
    trajectory = solve_linear(basis, alpha, np.zeros(modes), np.zeros(modes), SourceTerm.constant(grid, c), grid)
    assert basis.eigenvalues[-1] >= 16.0
    for k in range(modes):
        expected = closed_form_mode(alpha, basis.eigenvalues[k], grid.nodes, 0.0, 0.0, 1.0)
        np.testing.assert_allclose(trajectory.modal_u[:, k], expected, rtol=1e-8, atol=1e-10)


def test_constant_source_single_value_small_order():
    basis = build_interval_basis(math.pi, 4)
    grid = TimeGrid.uniform(1.0, 64)
    c = np.zeros(4)
    c[3] = 1.0
    trajectory = solve_linear(basis, 1.2, np.zeros(4), np.zeros(4), SourceTerm.constant(grid, c), grid)
    assert trajectory.modal_u[-1, 3] == pytest.approx(0.0632760761, rel=1e-8)


def test_representation_at_nodes_agrees_with_solver(interval_basis, unit_grid, smooth_data, constant_source):
    u0, u1 = smooth_data
    trajectory = solve_linear(interval_basis, ALPHA, u0, u1, constant_source, unit_grid)
    values = evaluate_representation(
        interval_basis.eigenvalues, ALPHA, u0, u1, constant_source, unit_grid, unit_grid.nodes
    )
    np.testing.assert_allclose(values, trajectory.modal_u, atol=1e-10)


def test_refinement_difference_vanishes_for_piecewise_linear_source(interval_basis, unit_grid, smooth_data, constant_source):
    u0, u1 = smooth_data
    solver = LinearSolver(interval_basis, ALPHA, unit_grid)
    assert refinement_difference(solver, u0, u1, constant_source) < 1e-10


def test_source_shape_checked(interval_basis, unit_grid, smooth_data):
    u0, u1 = smooth_data
    bad = SourceTerm(modal_samples=np.zeros((3, interval_basis.mode_count)))
    with pytest.raises(ValidationError):
        solve_linear(interval_basis, ALPHA, u0, u1, bad, unit_grid)


def test_from_modal_validates_shape(interval_basis, unit_grid):
    samples = np.ones((unit_grid.nodes.size, interval_basis.mode_count))
    source = SourceTerm.from_modal(unit_grid, interval_basis, samples)
    np.testing.assert_array_equal(source.modal_samples, samples)
    with pytest.raises(ValidationError):
        SourceTerm.from_modal(unit_grid, interval_basis, samples[:, :2])


def test_derivative_starts_at_initial_velocity(interval_basis, unit_grid, smooth_data):
    u0, u1 = smooth_data
    trajectory = solve_linear_derivative(solve_linear(interval_basis, ALPHA, u0, u1, None, unit_grid))
    np.testing.assert_array_equal(trajectory.modal_du[0], u1)
    t = unit_grid.nodes[1:, None]
    lam = interval_basis.eigenvalues
    expected = -lam * t ** (ALPHA - 1.0) * evaluate(ALPHA, ALPHA, -lam * t**ALPHA) * u0 + evaluate(
        ALPHA, 1.0, -lam * t**ALPHA
    ) * u1
    np.testing.assert_allclose(trajectory.modal_du[1:], expected, atol=1e-10)


def test_caputo_residual_decreases_under_refinement(interval_basis, smooth_data):
    u0, u1 = smooth_data
    residuals = []
    for steps in (32, 64, 128, 256):
        grid = TimeGrid.uniform(1.0, steps)
        trajectory = solve_linear(interval_basis, ALPHA, u0, u1, None, grid)
        residuals.append(caputo_l1_residual(trajectory)[:3])
    residuals = np.array(residuals)
    assert np.all(np.diff(residuals, axis=0) < 0)
    assert np.all(residuals[-1] < 0.5 * residuals[0])


def test_stability_ratio_is_finite(interval_basis, unit_grid, smooth_data, constant_source):
    u0, u1 = smooth_data
    trajectory = solve_linear(interval_basis, ALPHA, u0, u1, constant_source, unit_grid)
    report = stability_report(trajectory, u0, u1, constant_source, 0.2)
    assert 0.0 < report.ratio < math.inf
    assert report.sup_l2 == pytest.approx(np.max(np.linalg.norm(trajectory.modal_u, axis=1)))
    assert report.w11_ratio > 0.0


def test_stability_zero_data(interval_basis, unit_grid):
    n = interval_basis.mode_count
    f = SourceTerm.zero(unit_grid, n)
    trajectory = solve_linear(interval_basis, ALPHA, np.zeros(n), np.zeros(n), f, unit_grid)
    report = stability_report(trajectory, np.zeros(n), np.zeros(n), f)
    assert report.ratio == 0.0


def test_stability_order_validated(interval_basis, unit_grid, smooth_data):
    u0, u1 = smooth_data
    trajectory = solve_linear(interval_basis, ALPHA, u0, u1, None, unit_grid)
    with pytest.raises(ParameterError):
        stability_report(trajectory, u0, u1, SourceTerm.zero(unit_grid, interval_basis.mode_count), 0.3)


def test_prepared_solver_reused(interval_basis, unit_grid, smooth_data):
    u0, u1 = smooth_data
    solver = LinearSolver(interval_basis, ALPHA, unit_grid).prepare()
    first = solver.solve(u0, u1)
    second = solver.solve(2 * u0, 2 * u1)
    np.testing.assert_allclose(second.modal_u, 2 * first.modal_u, rtol=1e-14, atol=1e-15)


def test_solution_is_linear_in_data(interval_basis, unit_grid):
    rng = np.random.default_rng(3)
    n = interval_basis.mode_count
    solver = LinearSolver(interval_basis, ALPHA, unit_grid).prepare()
    first = [rng.standard_normal(n), rng.standard_normal(n), SourceTerm.constant(unit_grid, rng.standard_normal(n))]
    second = [rng.standard_normal(n), rng.standard_normal(n), SourceTerm.constant(unit_grid, rng.standard_normal(n))]
    a, b = 0.7, -1.3
    combined = SourceTerm(modal_samples=a * first[2].modal_samples + b * second[2].modal_samples)
    mixed = solver.solve(a * first[0] + b * second[0], a * first[1] + b * second[1], combined)
    expected = a * solver.solve(*first).modal_u + b * solver.solve(*second).modal_u
    np.testing.assert_allclose(mixed.modal_u, expected, rtol=1e-12, atol=1e-12)


def test_stability_ratio_bounded_over_random_data(interval_basis, unit_grid):
    # T = 1 时 sup‖u‖ ≤ K(‖u0‖ + ‖A^{-1/2}u1‖ + ‖f‖_{L¹L²})，K 取三个核的衰减常数最大值
    K = max(
        mlf_bound_constant(MLParams(alpha=ALPHA, beta=beta), x_max=1e4, grid_size=400) for beta in (1.0, 2.0, ALPHA)
    )
    rng = np.random.default_rng(11)
    n = interval_basis.mode_count
    solver = LinearSolver(interval_basis, ALPHA, unit_grid).prepare()
    ratios = []
    for _ in range(40):
        u0, u1 = rng.standard_normal(n), rng.standard_normal(n)
        f = SourceTerm.constant(unit_grid, rng.standard_normal(n))
        trajectory = solver.solve(u0, u1, f)
        ratios.append(stability_report(trajectory, u0, u1, f).ratio)
    assert all(0.0 < r <= K * (1.0 + 1e-6) for r in ratios)

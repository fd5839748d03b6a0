import numpy as np
import pytest
from numpy.testing import assert_allclose

from uwsvd.channels import ChannelGenerator, build_geometry
from uwsvd.detection import (
    DetectorMode,
    block_orthogonal_channel,
    build_problem_esignal,
    build_problem_original,
    exact_solve,
    uw_svd,
)
from uwsvd.errors import NumericalError, SingularMatrixError, UnknownNameError, ValidationError
from uwsvd.infrastructure import FlopCounter
from uwsvd.solvers import (
    Algorithm,
    CgState,
    LbfgsState,
    SolverRegistry,
    SolverSpec,
    build_preconditioner,
    run,
    step_cg,
    step_lbfgs,
    step_matrix_splitting,
    step_richardson,
)

from tests.conftest import dense_problem, random_spd


def _model1_problem(mode=DetectorMode.LMMSE, coords="orig", seed=0):
    geometry = build_geometry("ula", m=128, k_users=4, n_ue=2, frequency=3.5e9)
    rng = np.random.default_rng(seed)
    h = ChannelGenerator(geometry).model1(rng).h
    y = h @ (rng.standard_normal(8) + 1j * rng.standard_normal(8)) + 0.05 * rng.standard_normal(128)
    if coords == "orig":
        return build_problem_original(h, y, mode, rho=20.0)
    return build_problem_esignal(uw_svd(h, [2, 2, 2, 2]), y, mode, rho=20.0)


def test_richardson_identity_converges_in_one_step():
    problem = dense_problem(np.eye(3), [1.0, 2.0, 3.0])
    assert_allclose(step_richardson(problem, np.zeros(3, dtype=np.complex128)), [1.0, 2.0, 3.0])


def test_richardson_fixed_point_and_scalar_example():
    problem = dense_problem([[2.0]], [2.0])
    x1 = step_richardson(problem, np.zeros(1, dtype=np.complex128))
    assert_allclose(x1, [2.0])
    assert_allclose(step_richardson(problem, x1), [0.0])
    assert_allclose(step_richardson(problem, np.array([1.0 + 0j])), [1.0])


def test_jacobi_on_diagonal_system_is_exact_in_one_step():
    problem = dense_problem(np.diag([2.0, 5.0, 0.5]), [4.0, 5.0, 1.0])
    x1 = step_matrix_splitting(problem, np.zeros(3, dtype=np.complex128), Algorithm.JI)
    assert_allclose(x1, [2.0, 1.0, 2.0])


def test_gauss_seidel_on_lower_triangular_system_is_exact_in_one_step(rng):
    lower = np.tril(rng.standard_normal((4, 4))) + 4.0 * np.eye(4)
    b = rng.standard_normal(4) + 0j
    trace = run(dense_problem(lower, b), SolverSpec(Algorithm.GS, 1))
    assert_allclose(trace.solution, np.linalg.solve(lower, b), atol=1e-12)


def test_jacobi_equals_richardson_on_unit_diagonal_problem():
    problem = _model1_problem(DetectorMode.ZF, coords="uwsvd")
    ji = run(problem, SolverSpec(Algorithm.JI, 8), keep_iterates=True)
    ri = run(problem, SolverSpec(Algorithm.RI, 8), keep_iterates=True)
    for a, b in zip(ji.iterates, ri.iterates):
        assert np.array_equal(a, b)


def test_jacobi_zero_diagonal_is_singular():
    with pytest.raises(SingularMatrixError):
        build_preconditioner(dense_problem([[0.0, 1.0], [1.0, 2.0]], [1.0, 1.0]), Algorithm.JI)


def test_lbfgs_with_identity_is_exact_in_one_step(rng):
    b = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    problem = dense_problem(np.eye(5), b)
    state = LbfgsState.for_problem(problem)
    x1, state = step_lbfgs(problem, state, np.zeros(5, dtype=np.complex128))
    assert_allclose(x1, b, atol=1e-14)
    assert not state.stagnated


def test_lbfgs_reports_stagnation_at_the_optimum():
    problem = dense_problem(np.diag([2.0, 4.0]), [2.0, 8.0])
    x_star = np.array([1.0, 2.0], dtype=np.complex128)
    trace = run(problem, SolverSpec(Algorithm.LBFGS, 3, initial_iterate=x_star))
    assert trace.stagnated == [True, True, True]
    assert trace.stagnations == 3
    assert_allclose(trace.solution, x_star)


def test_lbfgs_matches_preconditioned_cg_trajectory():
    rng = np.random.default_rng(99)
    for _ in range(50):
        a = random_spd(rng, 8, rng.uniform(2.0, 50.0))
        b = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        problem = dense_problem(a, b)
        x_star = np.linalg.solve(a, b)
        lbfgs = run(problem, SolverSpec(Algorithm.LBFGS, 8), keep_iterates=True)
        pcg = run(problem, SolverSpec(Algorithm.CG, 8, cg_preconditioned=True), keep_iterates=True)
        for x_l, x_c in zip(lbfgs.iterates, pcg.iterates):
            assert np.linalg.norm(x_l - x_c) <= 1e-6 * np.linalg.norm(x_star)


def test_lbfgs_matches_plain_cg_on_unit_diagonal_problem():
    problem = _model1_problem(DetectorMode.ZF, coords="uwsvd", seed=3)
    x_star = exact_solve(problem)
    lbfgs = run(problem, SolverSpec(Algorithm.LBFGS, 6), keep_iterates=True)
    cg = run(problem, SolverSpec(Algorithm.CG, 6), keep_iterates=True)
    for x_l, x_c in zip(lbfgs.iterates, cg.iterates):
        assert np.linalg.norm(x_l - x_c) <= 1e-6 * np.linalg.norm(x_star)


def test_cg_terminates_in_n_steps(rng):
    a = random_spd(rng, 6, 20.0)
    b = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    x_star = np.linalg.solve(a, b)
    trace = run(dense_problem(a, b), SolverSpec(Algorithm.CG, 6))
    assert np.linalg.norm(trace.solution - x_star) <= 1e-8 * np.linalg.norm(x_star)


def test_cg_energy_error_is_monotone(rng):
    a = random_spd(rng, 10, 80.0)
    b = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    x_star = np.linalg.solve(a, b)
    trace = run(dense_problem(a, b), SolverSpec(Algorithm.CG, 10), keep_iterates=True)
    energy = [np.vdot(x - x_star, a @ (x - x_star)).real for x in trace.iterates]
    initial = np.vdot(x_star, a @ x_star).real
    assert energy[0] <= initial
    for previous, current in zip(energy, energy[1:]):
        assert current <= previous + 1e-12 * initial


@pytest.mark.parametrize("preconditioned", [False, True])
def test_cg_stays_finite_long_after_convergence(preconditioned):
    rng = np.random.default_rng(5)
    a = random_spd(rng, 12, 30.0)
    b = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    x_star = np.linalg.solve(a, b)
    trace = run(dense_problem(a, b), SolverSpec(Algorithm.CG, 500, cg_preconditioned=preconditioned), keep_iterates=True)
    assert all(np.all(np.isfinite(x)) for x in trace.iterates)
    assert trace.stagnations > 0
    assert np.linalg.norm(trace.solution - x_star) <= 1e-10 * np.linalg.norm(x_star)


def test_cg_step_below_roundoff_floor_is_a_no_op():
    problem = dense_problem(np.diag([1.0, 3.0]), [1.0, 1.0])
    x_t = np.array([1.0, 1.0 / 3.0], dtype=np.complex128)
    tiny = np.full(2, 1e-170, dtype=np.complex128)
    state = CgState(residual=tiny, direction=tiny.copy(), rz=np.vdot(tiny, tiny))
    x_next, state = step_cg(problem, state, x_t)
    assert state.stagnated
    assert np.array_equal(x_next, x_t)


def test_run_raises_on_non_finite_iterate(monkeypatch):
    import uwsvd.solvers.iterative as iterative

    monkeypatch.setattr(iterative, "step_richardson", lambda problem, x, counter=None: x + np.nan)
    problem = dense_problem(np.eye(3), [1.0, 2.0, 3.0])
    with pytest.raises(NumericalError, match="non-finite iterate at step 1"):
        run(problem, SolverSpec(Algorithm.RI, 5))


@pytest.mark.parametrize("algorithm", list(Algorithm))
@pytest.mark.parametrize("coords", ["orig", "uwsvd"])
def test_every_solver_converges_to_the_exact_detector(algorithm, coords):
    problem = _model1_problem(DetectorMode.LMMSE, coords=coords)
    x_star = exact_solve(problem)
    trace = run(problem, SolverSpec(algorithm, 500))
    assert np.linalg.norm(trace.solution - x_star) <= 1e-5 * np.linalg.norm(x_star)


@pytest.mark.parametrize(
    "spec",
    [
        SolverSpec(Algorithm.GS, 3000),
        SolverSpec(Algorithm.SSOR, 3000),
        SolverSpec(Algorithm.SSOR, 3000, omega=1.4),
        SolverSpec(Algorithm.LBFGS, 500),
        SolverSpec(Algorithm.LBFGS, 500, lbfgs_textbook=True),
        SolverSpec(Algorithm.CG, 500, cg_preconditioned=True),
    ],
)
def test_converges_on_ill_conditioned_spd(spec):
    rng = np.random.default_rng(5)
    a = random_spd(rng, 12, 30.0)
    b = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    x_star = np.linalg.solve(a, b)
    trace = run(dense_problem(a, b), spec)
    assert np.linalg.norm(trace.solution - x_star) <= 1e-5 * np.linalg.norm(x_star)


@pytest.mark.parametrize("algorithm,omega", [("ji", 1.0), ("gs", 1.0), ("ssor", 1.0), ("ssor", 1.3)])
def test_preconditioner_apply_inverts_its_matrix(rng, algorithm, omega):
    a = random_spd(rng, 7, 15.0)
    problem = dense_problem(a, np.zeros(7))
    preconditioner = build_preconditioner(problem, algorithm, omega)
    r = rng.standard_normal(7) + 1j * rng.standard_normal(7)
    assert_allclose(preconditioner.apply(r), np.linalg.solve(preconditioner.matrix(), r), atol=1e-10)


def test_unit_diagonal_ssor_preconditioner_is_consistent(rng):
    problem = _model1_problem(DetectorMode.ZF, coords="uwsvd").materialized()
    preconditioner = build_preconditioner(problem, Algorithm.SSOR)
    r = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    assert_allclose(preconditioner.apply(r), np.linalg.solve(preconditioner.matrix(), r), atol=1e-10)


def _iterations_to(trace, target):
    below = np.flatnonzero(trace.relative_residuals() < target)
    return int(below[0]) + 1 if below.size else trace.iterations + 1


def test_esignal_coordinates_speed_up_ssor():
    rng = np.random.default_rng(12)
    partition = [4, 4, 4, 4]
    h = block_orthogonal_channel(64, partition, 0.95, rng)
    h = h + 0.15 * (rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape)) / np.sqrt(2 * 64)
    y = h @ (rng.standard_normal(16) + 1j * rng.standard_normal(16))

    spec = SolverSpec(Algorithm.SSOR, 200)
    original = run(build_problem_original(h, y, DetectorMode.ZF), spec)
    esignal = run(build_problem_esignal(uw_svd(h, partition), y, DetectorMode.ZF), spec)
    assert _iterations_to(esignal, 1e-3) < _iterations_to(original, 1e-3)


def _measured_per_iteration(problem, spec_kwargs):
    one, two = FlopCounter(), FlopCounter()
    run(problem, SolverSpec(max_iterations=1, **spec_kwargs), counter=one)
    run(problem, SolverSpec(max_iterations=2, **spec_kwargs), counter=two)
    return two.get_metrics()["per_iteration"] - one.get_metrics()["per_iteration"]


def test_ssor_measured_cost_tracks_closed_form():
    problem = _model1_problem(DetectorMode.ZF, coords="uwsvd")
    n = problem.size
    measured = _measured_per_iteration(problem, {"algorithm": Algorithm.SSOR})
    expected = 2 * n * n + n
    assert expected / 2 <= measured <= 2 * expected


def test_lbfgs_measured_cost_tracks_closed_form():
    problem = _model1_problem(DetectorMode.ZF, coords="uwsvd")
    m, n = 128, problem.size
    measured = _measured_per_iteration(problem, {"algorithm": Algorithm.LBFGS})
    expected = 4 * m * n + n * n + 5 * n
    assert expected / 2 <= measured <= 2 * expected


def test_solver_spec_validation():
    with pytest.raises(ValidationError):
        SolverSpec(Algorithm.SSOR, 0)
    with pytest.raises(ValidationError):
        SolverSpec(Algorithm.SSOR, 5, omega=2.0)
    with pytest.raises(ValueError):
        SolverSpec("newton", 5)


def test_single_iteration_trace():
    trace = run(dense_problem(np.eye(2), [1.0, 1.0]), SolverSpec(Algorithm.RI, 1))
    assert trace.iterations == 1
    assert len(trace.flops) == 1
    assert trace.relative_residuals()[0] == pytest.approx(0.0, abs=1e-15)


def test_callback_sees_every_iteration():
    seen = []
    run(dense_problem(np.eye(2), [1.0, 1.0]), SolverSpec(Algorithm.CG, 4), per_iteration_callback=lambda t, x: seen.append(t))
    assert seen == [1, 2, 3, 4]


def test_trace_csv(tmp_path, rng):
    a = random_spd(rng, 4, 5.0)
    trace = run(dense_problem(a, np.ones(4)), SolverSpec(Algorithm.SSOR, 3))
    lines = trace.to_csv(tmp_path / "traces" / "ssor.csv").read_text().splitlines()
    assert lines[0] == "iteration,residual_norm,cumulative_flops"
    assert len(lines) == 4
    assert lines[1].startswith("1,")


def test_registry_lookup_and_listing():
    registry = SolverRegistry()
    listing = registry.list_available_solvers()
    names = {entry["name"] for entries in listing.values() for entry in entries}
    assert names == {"ri", "ji", "gs", "ssor", "lbfgs", "cg"}
    assert registry.get("SSOR").metadata.needs_gram

    with pytest.raises(UnknownNameError) as info:
        registry.get("newton")
    assert "lbfgs" in str(info.value)


def test_registry_executes_named_solver():
    registry = SolverRegistry()
    problem = dense_problem(np.diag([2.0, 4.0]), [2.0, 8.0])
    trace = registry.execute_solver("ji", problem, SolverSpec(Algorithm.RI, 1))
    assert trace.algorithm is Algorithm.JI
    assert_allclose(trace.solution, [1.0, 2.0])

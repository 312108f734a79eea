import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from phasecov.channel import PhaseCovariantChannel, compose
from phasecov.dynamics import (
    EigenvalueTrajectory,
    RateTrajectory,
    TimeGrid,
    commutativity_defect_matrix,
    composition_commutator,
    cp_divisibility_via_choi,
    eigenvalues_from_rates,
    generator_action,
    is_commutative_family,
    is_cp_divisible,
    propagator,
    propagator_from_channels,
    rates_from_eigenvalues,
    semigroup_channel,
    semigroup_trajectory,
    singular_nodes,
    step_propagators,
    subsample_indices,
)
from phasecov.numerics import interior
from phasecov.qubit_algebra import KET0_PROJ, KET1_PROJ, PAULI_BASIS, to_bloch


def bloch_generator(rates):
    """4x4 generator on Bloch vectors, column j = image of the j-th basis operator."""
    cols = [to_bloch(generator_action(rates, P)) / 2 for P in PAULI_BASIS]
    return np.array(cols).T


def channel_from_superop(S):
    return S[1, 1], S[3, 3], S[3, 0]


def test_generator_eigenrelations():
    gp, gm, g3 = 0.7, 0.2, 0.4
    L = bloch_generator((gp, gm, g3))
    expected = np.zeros((4, 4))
    expected[1, 1] = expected[2, 2] = -(gp + gm + g3) / 2
    expected[3, 3] = -(gp + gm)
    expected[3, 0] = gp - gm
    assert np.allclose(L, expected, atol=1e-14)


def test_gamma_plus_drives_to_ground_state():
    assert np.allclose(generator_action((1, 0, 0), KET1_PROJ), KET0_PROJ - KET1_PROJ)
    assert np.allclose(generator_action((1, 0, 0), KET0_PROJ), 0)


@pytest.mark.parametrize("rates", [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0), (0.3, 1.2, 0.5)])
def test_semigroup_matches_matrix_exponential(rates):
    L = bloch_generator(rates)
    traj = semigroup_trajectory(*rates, TimeGrid(4.0, 41))
    for i in (0, 7, 23, 40):
        S = expm(traj.times[i] * L)
        assert np.allclose(traj.channel(i).as_tuple(), channel_from_superop(S), atol=1e-13)
    ch = semigroup_channel(*rates, 1.3)
    assert np.allclose(ch.as_tuple(), channel_from_superop(expm(1.3 * L)), atol=1e-13)


def test_semigroup_rejects_negative_rates(small_grid):
    with pytest.raises(ValueError):
        semigroup_trajectory(-1, 0, 0, small_grid)


def test_semigroup_property(small_grid):
    traj = semigroup_trajectory(0.4, 0.9, 0.3, small_grid)
    a, b = traj.channel_at(1.0), traj.channel_at(2.5)
    assert np.allclose(compose(a, b).as_tuple(), traj.channel_at(3.5).as_tuple(), atol=1e-14)


def time_dependent_rates(t):
    return (0.5 + 0.5 * np.exp(-t), 0.3 * np.exp(-2 * t), 0.2 + 0.1 * np.sin(t) ** 2)


def test_eigenvalues_from_rates_match_ode_solution():
    grid = TimeGrid(5.0, 1001)
    rates = RateTrajectory(grid, *time_dependent_rates(grid.points))
    traj = eigenvalues_from_rates(rates)

    def rhs(t, y):
        return (bloch_generator(time_dependent_rates(t)) @ y.reshape(4, 4)).ravel()

    sol = solve_ivp(rhs, (0, 5.0), np.eye(4).ravel(), t_eval=grid.points[::100],
                    rtol=1e-12, atol=1e-13, method="DOP853")
    for k, y in enumerate(sol.y.T):
        expected = channel_from_superop(y.reshape(4, 4))
        assert np.allclose(traj.channel(100 * k).as_tuple(), expected, atol=1e-9)


def test_eigenvalues_from_rates_requires_odd_grid():
    grid = TimeGrid(1.0, 10)
    with pytest.raises(ValueError):
        eigenvalues_from_rates(RateTrajectory.constant(1, 0, 0, grid))


def test_constant_rates_round_trip(default_grid):
    rates = RateTrajectory.constant(0.3, 0.4, 0.25, default_grid)
    back, singular = rates_from_eigenvalues(eigenvalues_from_rates(rates))
    assert singular == ()
    assert np.all(back.valid)
    gap = np.abs(back.stacked() - rates.stacked())
    assert gap[:, interior(default_grid.n_points)].max() < 1e-10
    assert gap.max() < 1e-6


def test_time_dependent_round_trip():
    grid = TimeGrid(5.0, 1001)
    rates = RateTrajectory(grid, *time_dependent_rates(grid.points))
    back, _ = rates_from_eigenvalues(eigenvalues_from_rates(rates))
    inner = interior(grid.n_points)
    assert np.max(np.abs(back.stacked() - rates.stacked())[:, inner]) < 1e-6


def test_rates_from_closed_form_semigroup(default_grid):
    back, _ = rates_from_eigenvalues(semigroup_trajectory(1.0, 0.5, 0.2, default_grid))
    inner = interior(default_grid.n_points)
    assert np.allclose(back.gamma_plus[inner], 1.0, atol=1e-9)
    assert np.allclose(back.gamma_minus[inner], 0.5, atol=1e-9)
    assert np.allclose(back.gamma3[inner], 0.2, atol=1e-9)


def test_singular_times_are_excluded(default_grid):
    t = default_grid.points
    eta = np.exp(-t) * np.cos(t)
    traj = EigenvalueTrajectory(default_grid, eta, eta**2, 1 - eta**2)
    rates, singular = rates_from_eigenvalues(traj)
    assert singular
    assert all(abs(s - np.pi / 2 * k) < 0.02 for s, k in zip(singular[:2], (1, 1)))
    for name in ("gamma_plus", "gamma_minus", "gamma3"):
        values = getattr(rates, name)
        assert np.all(np.isfinite(values))
        assert np.all(values[~rates.valid] == 0.0)
    i = default_grid.index_of(round(np.pi / 2 / default_grid.step) * default_grid.step)
    assert not rates.valid[i - 2 : i + 3].any()


def test_singular_nodes_flags_sign_changes():
    assert singular_nodes([1.0, 0.5, -0.5, -1.0], 1e-8).tolist() == [False, True, True, False]
    assert singular_nodes([1.0, 1e-9, 1.0], 1e-8).tolist() == [False, True, False]


def test_propagator_semigroup(small_grid):
    traj = semigroup_trajectory(0.4, 0.9, 0.3, small_grid)
    V = propagator(traj, 3.0, 1.0)
    assert np.allclose(V.as_tuple(), traj.channel_at(2.0).as_tuple(), atol=1e-13)
    assert np.allclose(compose(V, traj.channel_at(1.0)).as_tuple(), traj.channel_at(3.0).as_tuple())
    with pytest.raises(ValueError):
        propagator(traj, 1.0, 3.0)


def test_propagator_rejects_singular_start():
    with pytest.raises(ValueError, match="non-invertible"):
        propagator_from_channels(PhaseCovariantChannel(0.1, 0.1, 0), PhaseCovariantChannel(0, 0.5, 0))


def test_rate_sign_criterion(small_grid):
    assert is_cp_divisible(RateTrajectory.constant(1, 0, 0, small_grid)).cp_divisible
    t = small_grid.points
    g3 = 1 - 1.5 * np.exp(-t)
    report = is_cp_divisible(RateTrajectory(small_grid, np.ones_like(t), np.zeros_like(t), g3))
    assert not report.cp_divisible
    assert report.first_violation_time == 0.0
    assert report.min_rate == pytest.approx(-0.5)


def test_choi_criterion_agrees_with_rate_sign():
    grid = TimeGrid(5.0, 1001)
    t = grid.points
    for g3, expected in ((0.2 + 0.1 * np.sin(t), True), (1 - 1.5 * np.exp(-t), False)):
        rates = RateTrajectory(grid, 0.5 * np.ones_like(t), 0.1 * np.ones_like(t), g3)
        traj = eigenvalues_from_rates(rates)
        assert is_cp_divisible(rates).cp_divisible is expected
        choi_report = cp_divisibility_via_choi(traj)
        assert choi_report.cp_divisible is expected
        assert choi_report.method == "choi-propagator"


def test_choi_steps_are_cp_for_semigroup(small_grid):
    traj = semigroup_trajectory(1.0, 0.2, 0.1, small_grid)
    idx, p1, p3, ps = step_propagators(traj)
    assert idx.size == small_grid.n_points - 1
    step = semigroup_channel(1.0, 0.2, 0.1, small_grid.step)
    assert np.allclose(p1, step.lambda1) and np.allclose(p3, step.lambda3)
    assert np.allclose(ps, step.lambda_star)


def test_choi_criterion_skips_non_invertible_steps(default_grid):
    t = default_grid.points
    eta = np.exp(-t) * np.cos(t)
    traj = EigenvalueTrajectory(default_grid, eta, eta**2, 1 - eta**2)
    report = cp_divisibility_via_choi(traj)
    assert not report.cp_divisible
    assert report.excluded_times


def test_semigroup_family_commutes(default_grid):
    ok, defect = is_commutative_family(semigroup_trajectory(0.3, 0.8, 0.1, default_grid))
    assert ok and defect < 1e-12


def test_commutativity_matches_composition():
    a = PhaseCovariantChannel(0.5, 0.3, 0.2)
    b = PhaseCovariantChannel(0.4, 0.6, -0.1)
    defect = commutativity_defect_matrix([a.lambda3, b.lambda3], [a.lambda_star, b.lambda_star])[0, 1]
    assert defect == pytest.approx(abs(composition_commutator(a, b)))


def test_subsample_indices():
    idx = subsample_indices(2001)
    assert idx.size == 200 and idx[0] == 0 and idx[-1] == 2000
    assert subsample_indices(5).tolist() == [0, 1, 2, 3, 4]


def test_time_grid_validation():
    grid = TimeGrid(10.0, 2001)
    assert grid.step == pytest.approx(0.005)
    assert grid.index_of(np.pi / 2 - np.pi / 2 % grid.step) == 314
    with pytest.raises(ValueError):
        grid.index_of(0.0012)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 11)
    with pytest.raises(ValueError):
        TimeGrid(1.0, 2)


def test_trajectory_validation(small_grid):
    ones = np.ones(small_grid.n_points)
    with pytest.raises(ValueError):
        EigenvalueTrajectory(small_grid, ones[:-1], ones, ones)
    with pytest.raises(ValueError):
        RateTrajectory(small_grid, ones * np.inf, ones, ones)
    traj = EigenvalueTrajectory(small_grid, ones, ones, 0 * ones)
    assert traj.initial_defect() == 0
    with pytest.raises(ValueError):
        traj.lambda1[0] = 2.0


def test_excluded_nodes_may_hold_non_finite_input(small_grid):
    ones = np.ones(small_grid.n_points)
    bad = ones.copy()
    bad[3] = np.nan
    valid = np.isfinite(bad)
    rates = RateTrajectory(small_grid, bad, ones, ones, valid=valid)
    assert rates.gamma_plus[3] == 0.0
    with pytest.raises(ValueError, match="excluded"):
        eigenvalues_from_rates(rates)


def test_cp_violations(small_grid):
    ones = np.ones(small_grid.n_points)
    traj = EigenvalueTrajectory(small_grid, 1.2 * ones, ones, 0 * ones)
    assert traj.cp_violations().size == small_grid.n_points

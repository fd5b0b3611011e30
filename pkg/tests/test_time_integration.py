"""Tests for the RK4 integrator, the stability checks and the change of frame."""

from math import exp, log

import numpy as np
import pytest

from coaglab.errors import CoagLabError, NegativeDensityError, ResolutionError, SolverDivergedError
from coaglab.grid_core import integrate
from coaglab.profiles_oracles import oracle_m0_physical, oracle_m0_selfsim, stationary_profile
from coaglab.time_integration import drift_cfl_number, evolve, frame_map, run_rk4
from coaglab.types import Direction, Grid, GridFunction, IntegratorConfig, RhsKind


@pytest.fixture(scope="module")
def selfsimilar_run(exponential: GridFunction):
    return evolve(exponential, RhsKind.SELFSIMILAR, IntegratorConfig(dt=1e-3, t_end=1.0, snapshot_stride=100))


def test_snapshots(selfsimilar_run):
    assert selfsimilar_run.frame is RhsKind.SELFSIMILAR
    assert len(selfsimilar_run.times) == 11
    assert selfsimilar_run.times[0] == 0.0
    assert selfsimilar_run.times[-1] == pytest.approx(1.0)
    assert set(selfsimilar_run.observables) >= {"m0", "m1", "mass_drift"}
    assert selfsimilar_run.clipped_mass < 1e-10


def test_final_snapshot_is_always_recorded(profile: GridFunction):
    cfg = IntegratorConfig(dt=0.01, t_end=0.1, snapshot_stride=3)
    trajectory = run_rk4(profile, lambda g: -g, cfg, RhsKind.PHYSICAL)
    assert trajectory.times == pytest.approx([0.0, 0.03, 0.06, 0.09, 0.1])


def test_mass_conservation(selfsimilar_run):
    assert max(abs(drift) for drift in selfsimilar_run.observables["mass_drift"]) < 5e-3


def test_zeroth_moment_follows_oracle(selfsimilar_run):
    m0_initial = selfsimilar_run.observables["m0"][0]
    for t, m0 in selfsimilar_run.series("m0"):
        assert m0 == pytest.approx(oracle_m0_selfsim(m0_initial, t), rel=2e-3)


def test_physical_zeroth_moment(exponential: GridFunction):
    trajectory = evolve(exponential, RhsKind.PHYSICAL, IntegratorConfig(dt=1e-3, t_end=0.5, snapshot_stride=100))
    m0_initial = trajectory.observables["m0"][0]
    for t, m0 in trajectory.series("m0"):
        assert m0 == pytest.approx(oracle_m0_physical(m0_initial, t), rel=2e-3)


def test_profile_stays_stationary(profile: GridFunction):
    trajectory = evolve(profile, RhsKind.SELFSIMILAR, IntegratorConfig(dt=1e-3, t_end=0.5, snapshot_stride=100))
    assert np.max(np.abs((trajectory.states[-1] - profile).values)) < 2e-3


def test_rk4_order_on_linear_decay(grid: Grid):
    initial = GridFunction(grid=grid, values=np.ones(grid.n_points))
    cfg = IntegratorConfig(dt=0.1, t_end=1.0, snapshot_stride=10)
    trajectory = run_rk4(initial, lambda g: -g, cfg, RhsKind.PHYSICAL)
    assert np.allclose(trajectory.states[-1].values, exp(-1.0), rtol=1e-6)


def test_rk4_diverges(grid: Grid):
    initial = GridFunction(grid=grid, values=np.ones(grid.n_points))
    with pytest.raises(SolverDivergedError) as info:
        _ = run_rk4(
            initial,
            lambda g: g.with_values(np.full(grid.n_points, np.inf)),
            IntegratorConfig(dt=0.1, t_end=1.0),
            RhsKind.PHYSICAL,
        )
    assert info.value.last_valid_time == 0.0


def test_rk4_clipping_limit(grid: Grid):
    initial = GridFunction.zeros(grid)
    with pytest.raises(ResolutionError) as info:
        _ = run_rk4(
            initial,
            lambda g: g.with_values(-np.ones(grid.n_points)),
            IntegratorConfig(dt=0.1, t_end=1.0),
            RhsKind.PHYSICAL,
            clip_mass_limit=1e-6,
        )
    assert info.value.clipped_mass > 1e-6
    assert info.value.time == pytest.approx(0.1)


def test_evolve_rejects_negative_datum(grid: Grid):
    negative = GridFunction(grid=grid, values=-np.exp(-grid.nodes))
    with pytest.raises(NegativeDensityError):
        _ = evolve(negative, RhsKind.SELFSIMILAR, IntegratorConfig(dt=1e-3, t_end=0.1))


def test_evolve_stability_checks(profile: GridFunction):
    with pytest.raises(CoagLabError):
        _ = evolve(profile, RhsKind.PHYSICAL, IntegratorConfig(dt=0.3, t_end=0.6))
    assert drift_cfl_number(profile, 3e-3) > 2.828
    with pytest.raises(CoagLabError):
        _ = evolve(profile, RhsKind.SELFSIMILAR, IntegratorConfig(dt=3e-3, t_end=0.03))
    with pytest.raises(CoagLabError):
        _ = evolve(GridFunction.zeros(profile.grid), RhsKind.PHYSICAL, IntegratorConfig(dt=1e-3, t_end=0.1))


def test_frame_map_round_trip(grid: Grid):
    state = stationary_profile(2.0, grid)
    t, mapped = frame_map((0.5, state), Direction.FW)
    assert t == pytest.approx(log(1.5))
    tau, back = frame_map((t, mapped), Direction.BW)
    assert tau == pytest.approx(0.5)
    inside = grid.nodes <= grid.y_max / 1.5
    assert np.max(np.abs(back.values[inside] - state.values[inside])) < 1e-3


def test_frame_map_scales_moments(grid: Grid):
    state = stationary_profile(2.0, grid)
    tau = 0.4
    _, mapped = frame_map((tau, state), Direction.FW)
    # M_0[g] = (1 + tau) M_0[f] and the mass is preserved
    assert integrate(mapped) == pytest.approx((1.0 + tau) * integrate(state), rel=1e-3)
    assert integrate(mapped, grid.nodes) == pytest.approx(integrate(state, grid.nodes), rel=1e-3)

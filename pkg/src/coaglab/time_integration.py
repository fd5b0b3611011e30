"""Fixed-step time integration of the coagulation equations and the change of frame."""

import logging
from math import exp, log
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from coaglab.coagulation_ops import rhs
from coaglab.errors import CoagLabError, NegativeDensityError, ResolutionError, SolverDivergedError
from coaglab.grid_core import dilate, integrate
from coaglab.types import Direction, FloatArray, GridFunction, IntegratorConfig, RhsKind, Trajectory

logger = logging.getLogger(__name__)

Observable = Callable[[GridFunction], float]
RightHandSide = Callable[[GridFunction], GridFunction]

# largest modulus of the symbol of the accuracy 4 central first-derivative stencil
CENTRAL_SYMBOL_MAX: float = 1.372
RK4_IMAGINARY_LIMIT: float = 2.828
CFL_WARNING: float = 2.6
CLIPPED_MASS_FRACTION: float = 1e-3


def drift_cfl_number(g: GridFunction, dt: float) -> float:
    """CFL number y_max * dt * |symbol| / spacing of the drift term y d/dy."""
    return CENTRAL_SYMBOL_MAX * g.grid.y_max * dt / g.grid.spacing


def check_stability(g0: GridFunction, kind: RhsKind, cfg: IntegratorConfig) -> None:
    """
    Check the loss term heuristic dt (2 + M0) < 1 and warn when the drift CFL number is close to the RK4 limit.

    Params:
        * g0: Initial state
        * kind: Frame of the equation
        * cfg: Integrator settings
    """
    m0 = integrate(g0.with_values(np.abs(g0.values)))
    if cfg.dt * (2.0 + m0) >= 1.0:
        raise CoagLabError(f"Time step dt={cfg.dt:g} violates dt*(2 + M0) < 1 with M0={m0:.4g}")
    if kind is RhsKind.SELFSIMILAR:
        check_drift_cfl(g0, cfg.dt)


def check_drift_cfl(g0: GridFunction, dt: float) -> None:
    """Raise above the RK4 limit for the drift term and warn close to it."""
    cfl = drift_cfl_number(g0, dt)
    if cfl > RK4_IMAGINARY_LIMIT:
        raise CoagLabError(
            f"Drift CFL number {cfl:.3g} exceeds the RK4 stability limit {RK4_IMAGINARY_LIMIT:g}; "
            "reduce dt or y_max, or refine the grid"
        )
    if cfl > CFL_WARNING:
        logger.warning(f"Drift CFL number {cfl:.3g} is close to the RK4 stability limit")


def _snapshot_steps(cfg: IntegratorConfig) -> List[int]:
    n_steps = cfg.n_steps()
    steps = list(range(0, n_steps + 1, cfg.snapshot_stride))
    if steps[-1] != n_steps:
        steps.append(n_steps)
    return steps


def run_rk4(
    initial: GridFunction,
    right_hand_side: RightHandSide,
    cfg: IntegratorConfig,
    frame: RhsKind,
    observables: Optional[Dict[str, Observable]] = None,
    clip_mass_limit: Optional[float] = None,
) -> Trajectory:
    """
    Classical RK4 with snapshots every ``snapshot_stride`` steps.

    Params:
        * initial: State at t = 0
        * right_hand_side: Map state -> time derivative
        * cfg: Integrator settings
        * frame: Frame recorded in the trajectory
        * observables: Functionals evaluated at each snapshot
        * clip_mass_limit: If given, negative values are clipped after each step and the clipped mass
          int y |g_-| is accumulated; exceeding the limit raises

    Returns
    -------
        * trajectory: Snapshots with their observables
    """
    observables = observables or {}
    grid = initial.grid
    nodes = grid.nodes
    dt = cfg.dt
    n_steps = cfg.n_steps()
    snapshot_steps = set(_snapshot_steps(cfg))

    times: List[float] = []
    states: List[GridFunction] = []
    series: Dict[str, List[float]] = {name: [] for name in observables}
    clipped_mass = 0.0

    def record(step: int, state: GridFunction) -> None:
        t = step * dt
        times.append(t)
        states.append(state)
        for name, observable in observables.items():
            series[name].append(float(observable(state)))
        logger.debug(
            f"t={t:.4f} "
            + " ".join(f"{name}={values[-1]:.10g}" for name, values in series.items())
            + f" clipped_mass={clipped_mass:.3g}"
        )

    state = initial
    record(0, state)
    for step in range(1, n_steps + 1):
        try:
            k1 = right_hand_side(state).values
            k2 = right_hand_side(state.with_values(state.values + 0.5 * dt * k1)).values
            k3 = right_hand_side(state.with_values(state.values + 0.5 * dt * k2)).values
            k4 = right_hand_side(state.with_values(state.values + dt * k3)).values
        except (ValidationError, FloatingPointError) as err:
            raise SolverDivergedError(
                f"Solver produced non-finite values after t = {(step - 1) * dt:.6g}",
                last_valid_time=(step - 1) * dt,
            ) from err
        values: FloatArray = state.values + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(values)):
            raise SolverDivergedError(
                f"Solver produced non-finite values after t = {(step - 1) * dt:.6g}",
                last_valid_time=(step - 1) * dt,
            )

        if clip_mass_limit is not None:
            negative = values < 0.0
            if np.any(negative):
                clipped_mass += grid.spacing * float(np.sum(-values[negative] * nodes[negative]))
                values = np.where(negative, 0.0, values)
                if clipped_mass > clip_mass_limit:
                    raise ResolutionError(
                        f"Clipped mass {clipped_mass:.3g} exceeds {clip_mass_limit:.3g} at t = {step * dt:.6g}; "
                        "the grid resolution is insufficient",
                        clipped_mass=clipped_mass,
                        time=step * dt,
                    )
        state = state.with_values(values)
        if step in snapshot_steps:
            record(step, state)

    return Trajectory(frame=frame, times=times, states=states, observables=series, clipped_mass=clipped_mass)


def evolve(
    g0: GridFunction,
    kind: RhsKind,
    cfg: IntegratorConfig,
    observables: Optional[Dict[str, Observable]] = None,
) -> Trajectory:
    """
    Evolve a nonnegative density with the physical or self-similar coagulation equation.

    The zeroth and first moments and the relative mass drift are always logged.

    Params:
        * g0: Nonnegative initial density
        * kind: Physical or self-similar frame
        * cfg: Integrator settings
        * observables: Additional functionals evaluated at each snapshot

    Returns
    -------
        * trajectory: Snapshots with the observables
    """
    if np.any(g0.values < 0.0):
        raise NegativeDensityError("Initial density has negative values")
    check_stability(g0, kind, cfg)
    nodes = g0.grid.nodes
    mass = integrate(g0, nodes)
    if mass <= 0.0:
        raise CoagLabError("Initial density has no mass")

    logged: Dict[str, Observable] = {
        "m0": integrate,
        "m1": lambda g: integrate(g, nodes),
        "mass_drift": lambda g: integrate(g, nodes) / mass - 1.0,
    }
    logged.update(observables or {})

    logger.info(
        f"Evolving {kind.value} equation on N={g0.grid.n_points}, y_max={g0.grid.y_max:g} "
        f"up to t={cfg.t_end:g} with dt={cfg.dt:g}"
    )
    trajectory = run_rk4(
        g0,
        lambda state: rhs(state, kind),
        cfg,
        kind,
        observables=logged,
        clip_mass_limit=CLIPPED_MASS_FRACTION * mass,
    )
    logger.info(
        f"Finished at t={trajectory.times[-1]:g}: mass drift {trajectory.observables['mass_drift'][-1]:.3g}, "
        f"clipped mass {trajectory.clipped_mass:.3g}"
    )
    return trajectory


def frame_map(traj_point: Tuple[float, GridFunction], direction: Direction) -> Tuple[float, GridFunction]:
    """
    Change of variables g(t, y) = e^{2t} f(e^t - 1, e^t y) between the frames.

    fw maps a physical state (tau, f) to (log(1 + tau), g); bw maps a self-similar state (t, g) to
    (e^t - 1, f). The dilated argument is resampled by linear interpolation; beyond y_max it is 0.

    Params:
        * traj_point: Time and state in the source frame
        * direction: fw or bw

    Returns
    -------
        * traj_point: Time and state in the target frame
    """
    t, state = traj_point
    assert t >= 0.0
    if direction is Direction.FW:
        scale = 1.0 + t
        return log(scale), dilate(state, scale**2, scale)
    scale = exp(t)
    return scale - 1.0, dilate(state, scale**-2, 1.0 / scale)

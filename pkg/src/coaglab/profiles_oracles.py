"""Closed-form ground truth: stationary profiles, moment evolution and the explicit Fourier solution."""

import logging
from math import exp, expm1, log
from typing import Callable, List, Optional, Sequence

import numpy as np

from coaglab.errors import BlowUpError, CoagLabError, SingularDenominatorError
from coaglab.grid_core import dilate, integrate, with_zero_node
from coaglab.types import (
    Direction,
    ExpMomentConditions,
    FloatArray,
    FourierState,
    Grid,
    GridFunction,
    MomentOracleInput,
    RhsKind,
)

logger = logging.getLogger(__name__)

ComplexArray = np.ndarray
FourierFunction = Callable[[FloatArray], ComplexArray]

N_THETA_SAMPLES: int = 200
MAX_BOUNDING_FACTOR: float = 64.0
BISECTION_STEPS: int = 60


def stationary_profile(rho: float, grid: Grid) -> GridFunction:
    """
    Self-similar profile g_rho(y) = (4/rho) e^{-2y/rho} of mass rho.

    Params:
        * rho: Mass of the profile
        * grid: Grid to evaluate on

    Returns
    -------
        * g_rho: Profile at the grid nodes
    """
    if rho <= 0.0:
        raise CoagLabError(f"rho must be positive, got {rho}")
    return GridFunction(grid=grid, values=(4.0 / rho) * np.exp(-2.0 * grid.nodes / rho))


def oracle_m0_selfsim(m0_initial: float, t: float) -> float:
    """Zeroth moment of the self-similar solution, 2 / (1 - e^{-t} + 2 e^{-t} / M0)."""
    assert m0_initial > 0.0 and t >= 0.0
    return 2.0 / (-expm1(-t) + 2.0 * exp(-t) / m0_initial)


def oracle_m0_physical(m0_initial: float, t: float) -> float:
    """Zeroth moment of the physical solution, 2 / (t + 2 / M0)."""
    assert m0_initial > 0.0 and t >= 0.0
    return 2.0 / (t + 2.0 / m0_initial)


def oracle_m2_selfsim(m2_initial: float, rho: float, t: float) -> float:
    """Second moment of the self-similar solution, relaxing to M_2[g_rho] = rho^2 at rate 1."""
    assert t >= 0.0
    return exp(-t) * m2_initial - rho**2 * expm1(-t)


def oracle_m2_physical(m2_initial: float, rho: float, t: float) -> float:
    """Second moment of the physical solution, growing linearly at rate M_1^2 = rho^2."""
    assert t >= 0.0
    return m2_initial + rho**2 * t


def exp_moment_blow_up_time(m0_initial: float, e_mu_initial: float) -> float:
    """Blow-up time 2 / (E_mu - M0) of the physical exponential moment (infinite when E_mu = M0)."""
    excess = e_mu_initial - m0_initial
    return float("inf") if excess <= 0.0 else 2.0 / excess


def _physical_exp_moment(m0_initial: float, e_mu_initial: float, t: float) -> float:
    blow_up_time = exp_moment_blow_up_time(m0_initial, e_mu_initial)
    if t >= blow_up_time:
        raise BlowUpError(
            f"Exponential moment blows up at t = {blow_up_time:.6g}; requested t = {t:.6g}",
            blow_up_time=blow_up_time,
        )
    value = 2.0 / (t + 2.0 / m0_initial)
    if np.isfinite(blow_up_time):
        value += 2.0 / (blow_up_time - t)
    return value


def oracle_exp_moment(
    inp: MomentOracleInput,
    t: float,
    frame: RhsKind,
    e_initial: Optional[Callable[[float], float]] = None,
) -> float:
    """
    Exponential moment E_mu along the exact solution.

    In the physical frame the closed form only needs M0 and E_mu of the datum. In the self-similar
    frame E_mu[g(t)] = e^t E_{mu/s}[f(s-1)] with s = e^t, which needs the initial exponential moment
    at the weight mu/s; it is provided by ``e_initial`` (theta -> E_theta[g0]).

    Params:
        * inp: Initial moments, weight and mass
        * t: Time in the given frame
        * frame: Physical or self-similar frame
        * e_initial: Initial exponential moment as a function of the weight (self-similar frame only)

    Returns
    -------
        * E_mu: Exponential moment at time t
    """
    assert t >= 0.0
    if frame is RhsKind.PHYSICAL:
        return _physical_exp_moment(inp.m0_initial, inp.e_mu_initial, t)

    if e_initial is None:
        raise CoagLabError("The self-similar exponential moment oracle needs e_initial(theta)")
    s = exp(t)
    theta = inp.mu / s
    e_theta = inp.e_mu_initial if t == 0.0 else e_initial(theta)
    try:
        return s * _physical_exp_moment(inp.m0_initial, e_theta, s - 1.0)
    except BlowUpError as err:
        raise BlowUpError(
            f"Self-similar exponential moment of order {inp.mu:g} blows up before t = {t:.6g}",
            blow_up_time=log(1.0 + err.blow_up_time),
        ) from err


def transform_moment(value: float, k: float, t: float, direction: Direction) -> float:
    """
    Transform a moment of order k between the physical and self-similar frames.

    fw: M_k[g(t)] = e^{t(1-k)} M_k[f(e^t - 1)] with t the self-similar time.
    bw: M_k[f(t)] = (t + 1)^{k-1} M_k[g(log(1 + t))] with t the physical time.

    Params:
        * value: Moment in the source frame
        * k: Moment order
        * t: Time in the source frame
        * direction: fw (physical to self-similar) or bw

    Returns
    -------
        * value: Moment in the target frame
    """
    assert t >= 0.0
    if direction is Direction.FW:
        return exp(t * (1.0 - k)) * value
    return (t + 1.0) ** (k - 1.0) * value


def transform_exp_moment(value: float, t: float, direction: Direction) -> float:
    """
    Transform an exponential moment between frames.

    fw: E_mu[g(t)] = e^t E_{mu e^{-t}}[f(e^t - 1)]; bw: E_mu[f(t)] = E_{mu(t+1)}[g(log(1+t))] / (t + 1).
    The caller is responsible for the matching change of the weight.
    """
    assert t >= 0.0
    if direction is Direction.FW:
        return exp(t) * value
    return value / (t + 1.0)


def equilibrium_fourier(mu: FloatArray) -> ComplexArray:
    """Fourier transform 2 / (1 + i mu) of the profile g_2."""
    return 2.0 / (1.0 + 1j * np.asarray(mu, dtype=np.float64))


def fourier_transform(g: GridFunction, mus: Sequence[float]) -> ComplexArray:
    """
    Fourier transform phi(mu) = int e^{-i mu y} g(y) dy by trapezoid quadrature.

    Params:
        * g: Density
        * mus: Frequencies

    Returns
    -------
        * phi: Complex values, one per frequency
    """
    mus = np.asarray(mus, dtype=np.float64)
    nodes = np.concatenate(([0.0], g.grid.nodes))
    kernel = np.exp(-1j * np.outer(mus, nodes))
    samples = kernel * with_zero_node(g.values)[np.newaxis, :]
    spacing = g.grid.spacing
    return spacing * (samples.sum(axis=1) - 0.5 * (samples[:, 0] + samples[:, -1]))


def oracle_fourier(phi0: FourierFunction, t: float, mu: FloatArray) -> ComplexArray:
    """
    Explicit Fourier transform of the self-similar solution with normalized datum.

    phi_t(mu) = 2 p / (2 + (tau - 1)(2 - p)) with p = phi0(mu / tau) and tau = e^t.

    Params:
        * phi0: Fourier transform of the datum, normalized to int g = int y g = 2
        * t: Self-similar time
        * mu: Frequencies

    Returns
    -------
        * phi_t: Complex values at the frequencies
    """
    assert t >= 0.0
    tau = exp(t)
    mu = np.asarray(mu, dtype=np.float64)
    p = np.asarray(phi0(mu / tau), dtype=np.complex128)
    denominator = 2.0 + (tau - 1.0) * (2.0 - p)
    if np.any(np.abs(denominator) < 1e-14):
        raise SingularDenominatorError(f"Fourier oracle denominator vanishes at t = {t:g}")
    return 2.0 * p / denominator


def fourier_states(g: GridFunction, mus: Sequence[float]) -> List[FourierState]:
    """Fourier transform of a grid function at each frequency."""
    values = fourier_transform(g, mus)
    return [FourierState(mu=float(mu), value=complex(value)) for mu, value in zip(mus, values)]


def grid_fourier(g: GridFunction) -> FourierFunction:
    """Fourier transform of a grid function as a callable of the frequency."""

    def phi(mu: FloatArray) -> ComplexArray:
        return fourier_transform(g, np.atleast_1d(mu))

    return phi


def normalize_unit_scale(g: GridFunction) -> GridFunction:
    """
    Rescale a density to a * g(b y) with int = int y = 2.

    Params:
        * g: Nonnegative density with positive zeroth and first moments

    Returns
    -------
        * g_normalized: Rescaled density resampled on the same grid
    """
    nodes = g.grid.nodes
    m0 = integrate(g)
    m1 = integrate(g, nodes)
    if m0 <= 0.0 or m1 <= 0.0:
        raise CoagLabError("Cannot normalize a density with non-positive moments")
    scale = m1 / m0
    amplitude = 2.0 * m1 / m0**2
    return dilate(g, amplitude, scale)


def check_exp_moment_conditions(g0: GridFunction, mu: float) -> ExpMomentConditions:
    """
    Sample the finiteness and uniform boundedness conditions of the exponential moment E_mu.

    The excess E_theta - M0 is evaluated on 200 logarithmically spaced theta in (1e-4 mu, mu). E_mu stays
    finite for all times when E_theta - M0 < 2/(mu/theta - 1) at every sample. It stays uniformly bounded
    when some nu > mu satisfies E_theta - M0 <= 2/(nu/theta - 1) on the same samples; the bound decreases
    in nu, so the largest such nu is found by bisection.

    Params:
        * g0: Nonnegative initial datum
        * mu: Exponential weight

    Returns
    -------
        * conditions: Sampled verdicts with the worst margin, its weight and the largest bounding nu
    """
    if np.any(g0.values < 0.0):
        raise CoagLabError("check_exp_moment_conditions needs a nonnegative datum")
    if mu <= 0.0:
        return ExpMomentConditions(
            finite_all_t=True, uniformly_bounded=True, worst_margin=float("inf"), n_samples=0
        )

    m0 = integrate(g0)
    nodes = g0.grid.nodes
    thetas = np.geomspace(1e-4 * mu, mu, N_THETA_SAMPLES + 1)[:-1]
    excess = np.array([integrate(g0, np.exp(theta * nodes)) - m0 for theta in thetas])

    def margins(nu: float) -> FloatArray:
        return 2.0 / (nu / thetas - 1.0) - excess

    at_mu = margins(mu)
    index = int(np.argmin(at_mu))
    worst_margin = float(at_mu[index])
    finite_all_t = worst_margin > 0.0

    bounding_nu = None
    if finite_all_t:
        lower, upper = mu, 2.0 * mu
        while np.min(margins(upper)) >= 0.0 and upper < MAX_BOUNDING_FACTOR * mu:
            lower, upper = upper, 2.0 * upper
        if np.min(margins(upper)) >= 0.0:
            lower = upper
        else:
            for _ in range(BISECTION_STEPS):
                middle = 0.5 * (lower + upper)
                if np.min(margins(middle)) >= 0.0:
                    lower = middle
                else:
                    upper = middle
        if lower > mu:
            bounding_nu = float(lower)
    logger.debug(
        f"Exponential moment conditions at mu={mu:g}: worst margin {worst_margin:.4g}, largest bounding nu {bounding_nu}"
    )
    return ExpMomentConditions(
        finite_all_t=finite_all_t,
        uniformly_bounded=bounding_nu is not None,
        worst_margin=worst_margin,
        worst_theta=float(thetas[index]),
        bounding_nu=bounding_nu,
        n_samples=N_THETA_SAMPLES,
    )


def initial_exp_moment_function(g0: GridFunction) -> Callable[[float], float]:
    """theta -> E_theta[g0] by quadrature."""
    nodes = g0.grid.nodes

    def e_initial(theta: float) -> float:
        return integrate(g0, np.exp(theta * nodes))

    return e_initial
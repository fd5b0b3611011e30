"""Utility functions that are used by several other functions."""

import logging
from math import gamma
from typing import List, Optional, Sequence, Tuple

import numpy as np

from coaglab.errors import RateFitError
from coaglab.profiles_oracles import stationary_profile
from coaglab.read_files import read_tabulated_datum
from coaglab.types import FloatArray, Grid, GridFunction, InitialDatum, RateFit

logger = logging.getLogger(__name__)

MIN_FIT_SAMPLES: int = 10


def initial_datum(datum: InitialDatum, grid: Grid) -> GridFunction:
    """
    Evaluate an initial datum descriptor on a grid.

    Params:
        * datum: Family name with its parameters, or a CSV file
        * grid: Grid to evaluate on

    Returns
    -------
        * g0: Initial density
    """
    y = grid.nodes
    p = datum.parameters
    if datum.family == "equilibrium":
        return stationary_profile(p["rho"], grid)
    if datum.family == "exponential":
        values = p["a"] * np.exp(-p["b"] * y)
    elif datum.family == "gamma":
        values = p["a"] * y ** p["p"] * np.exp(-p["b"] * y)
    elif datum.family == "bump":
        r = (y - p["center"]) / p["width"]
        inside = np.abs(r) < 1.0
        safe = np.where(inside, r, 0.0)
        values = np.where(inside, p["a"] * np.exp(1.0 - 1.0 / (1.0 - safe**2)), 0.0)
    else:
        assert datum.csv_path is not None
        y_table, value_table = read_tabulated_datum(datum.csv_path)
        values = np.interp(y, y_table, value_table, left=value_table[0], right=0.0)
    return GridFunction(grid=grid, values=values)


def gamma_fourier(a: float, p: float, b: float):
    """Closed-form Fourier transform a Gamma(p+1) / (b + i mu)^{p+1} of a y^p e^{-b y}."""

    def phi(mu: FloatArray) -> np.ndarray:
        return a * gamma(p + 1.0) / (b + 1j * np.asarray(mu, dtype=np.float64)) ** (p + 1.0)

    return phi


def normalized_datum(datum: InitialDatum) -> Optional[InitialDatum]:
    """
    Closed-form rescaling a g(b y) of an exponential or gamma datum with int g = int y g = 2.

    Params:
        * datum: Initial datum descriptor

    Returns
    -------
        * datum: Rescaled descriptor of the same family, None for families without closed-form moments
    """
    if datum.family not in ("exponential", "gamma"):
        return None
    p = datum.parameters
    power = p.get("p", 0.0)
    m0 = datum.closed_form_moment(0)
    m1 = datum.closed_form_moment(1)
    assert m0 is not None and m1 is not None
    scale = m1 / m0
    amplitude = 2.0 * m1 / m0**2
    parameters = {"a": amplitude * p["a"] * scale**power, "b": p["b"] * scale}
    if datum.family == "gamma":
        parameters["p"] = power
    return InitialDatum(family=datum.family, parameters=parameters)


def datum_fourier(datum: InitialDatum):
    """Closed-form Fourier transform of an exponential or gamma datum."""
    p = datum.parameters
    assert datum.family in ("exponential", "gamma")
    return gamma_fourier(p["a"], p.get("p", 0.0), p["b"])


def gaussian_bumps(rng: np.random.Generator, grid: Grid, max_terms: int = 3) -> GridFunction:
    """
    Random smooth signed function: a sum of c y^p exp(-(y - m)^2 / (2 s^2)).

    Centers m ~ U(0.5, 6), widths s ~ U(0.5, 2), coefficients c ~ N(0, 1), powers p in {0, 1, 2}.
    """
    y = grid.nodes
    values = np.zeros(grid.n_points)
    for _ in range(int(rng.integers(1, max_terms + 1))):
        center = rng.uniform(0.5, 6.0)
        width = rng.uniform(0.5, 2.0)
        coefficient = rng.normal()
        power = int(rng.integers(0, 3))
        values += coefficient * y**power * np.exp(-((y - center) ** 2) / (2.0 * width**2))
    return GridFunction(grid=grid, values=values)


def positive_profile(rng: np.random.Generator, grid: Grid, max_terms: int = 3) -> GridFunction:
    """Random strictly positive profile (1 + sum a_j sin^2(w_j y + phi_j)) e^{-b y}, a_j, b in [0.5, 2]."""
    y = grid.nodes
    modulation = np.ones(grid.n_points)
    for _ in range(int(rng.integers(1, max_terms + 1))):
        amplitude = rng.uniform(0.5, 2.0)
        frequency = rng.uniform(0.2, 2.0)
        phase = rng.uniform(0.0, np.pi)
        modulation += amplitude * np.sin(frequency * y + phase) ** 2
    decay = rng.uniform(0.5, 2.0)
    return GridFunction(grid=grid, values=modulation * np.exp(-decay * y))


def fit_rate(
    series: Sequence[Tuple[float, float]],
    window: Tuple[float, float],
    algebraic: bool = False,
) -> RateFit:
    """
    Least squares fit of log(value) against t (or log t) on a window; the rate is minus the slope.

    Values that are not positive mark the rounding floor: the fit is restricted to the samples before
    the first such value and flagged as truncated.

    Params:
        * series: (t, value) pairs
        * window: (t_lo, t_hi)
        * algebraic: Fit against log t, giving the exponent of a t^{-rate} decay

    Returns
    -------
        * fit: Rate, intercept, residual and sample count
    """
    t_lo, t_hi = window
    samples = [(t, v) for t, v in series if t_lo - 1e-12 <= t <= t_hi + 1e-12]
    truncated = False
    for index, (_, value) in enumerate(samples):
        if not value > 0.0:
            samples = samples[:index]
            truncated = True
            break
    if algebraic:
        samples = [(t, v) for t, v in samples if t > 0.0]
    if len(samples) < MIN_FIT_SAMPLES:
        raise RateFitError(
            f"Rate fit on window [{t_lo:g}, {t_hi:g}] has {len(samples)} usable samples, "
            f"at least {MIN_FIT_SAMPLES} are needed"
        )
    if truncated:
        logger.warning(f"Rate fit truncated at t={samples[-1][0]:g}: series reached the rounding floor")

    times = np.array([t for t, _ in samples])
    abscissa = np.log(times) if algebraic else times
    log_values = np.log(np.array([v for _, v in samples]))
    slope, intercept = np.polyfit(abscissa, log_values, 1)
    residual = log_values - (slope * abscissa + intercept)
    return RateFit(
        rate=float(-slope),
        intercept=float(intercept),
        window=(float(times[0]), float(times[-1])),
        rms_residual=float(np.sqrt(np.mean(residual**2))),
        n_samples=len(samples),
        truncated=truncated,
        constant=bool(np.ptp(log_values) == 0.0),
    )


def snapshot_times_within(times: Sequence[float], t_max: float) -> List[int]:
    """Indices of the snapshot times not exceeding t_max."""
    return [index for index, t in enumerate(times) if t <= t_max + 1e-12]

"""Moments, exponential moments, weighted norms and relative entropies."""

from math import log1p, sqrt
from typing import Tuple

import numpy as np

from coaglab.errors import CoagLabError, NegativeDensityError
from coaglab.grid_core import check_same_grid, check_truncation, derivative, dilate, integrate, tail_primitive
from coaglab.profiles_oracles import stationary_profile
from coaglab.types import EntropyReport, GridFunction, NormSpec

NEGATIVE_TOLERANCE: float = 1e-12


def psi(x: float) -> float:
    """Convex function (x + 1) log(x + 1) - x."""
    return (x + 1.0) * log1p(x) - x


def moment(g: GridFunction, k: float) -> float:
    """
    Moment M_k[g] = int y^k |g(y)| dy.

    Params:
        * g: Grid function
        * k: Order, k > -1

    Returns
    -------
        * M_k: Quadrature value
    """
    if k <= -1.0:
        raise CoagLabError(f"Moment order must be larger than -1, got {k}")
    return integrate(g.with_values(np.abs(g.values)), g.grid.nodes**k)


def exp_moment(g: GridFunction, mu: float, enforce_truncation: bool = True) -> float:
    """
    Exponential moment E_mu[g] = int e^{mu y} |g(y)| dy.

    Params:
        * g: Grid function
        * mu: Exponential weight
        * enforce_truncation: Raise TruncationRuleError when the tail of g is too heavy for the weight

    Returns
    -------
        * E_mu: Quadrature value
    """
    magnitude = g.with_values(np.abs(g.values))
    if enforce_truncation and mu > 0.0:
        check_truncation(magnitude, mu, power=1, what=f"exponential moment E_{mu:g}")
    return integrate(magnitude, np.exp(mu * g.grid.nodes))


def norm_factor(h: GridFunction, spec: NormSpec) -> GridFunction:
    """y^{power/2} D^k h with D^{-1} h = -H, the function whose weighted L2 norm is ||h||_{k,mu}."""
    if spec.k == -1:
        base = -tail_primitive(h)
    elif spec.k == 0:
        base = h
    else:
        base = derivative(h, spec.k)
    return base.with_values(h.grid.nodes ** (spec.power() // 2) * base.values)


def weighted_inner(
    h1: GridFunction, h2: GridFunction, spec: NormSpec, enforce_truncation: bool = True
) -> float:
    """
    Scalar product <h1, h2>_{k,mu} = int y^power D^k h1 D^k h2 e^{mu y} dy.

    Params:
        * h1, h2: Grid functions on the same grid
        * spec: Norm descriptor
        * enforce_truncation: Check the truncation rule on both factors

    Returns
    -------
        * inner: Quadrature value
    """
    check_same_grid(h1, h2)
    factor1 = norm_factor(h1, spec)
    factor2 = norm_factor(h2, spec)
    if enforce_truncation:
        check_truncation(factor1, spec.mu, power=2, what=spec.label())
        check_truncation(factor2, spec.mu, power=2, what=spec.label())
    return integrate(factor1.with_values(factor1.values * factor2.values), np.exp(spec.mu * h1.grid.nodes))


def weighted_norm(h: GridFunction, spec: NormSpec, enforce_truncation: bool = True) -> float:
    """
    Weighted norm ||h||_{k,mu}, the L2 norm of y^{k+1} D^k h (y^k D^k h for the alternative weight)
    against e^{mu y}.

    Params:
        * h: Grid function
        * spec: Norm descriptor
        * enforce_truncation: Check the truncation rule on the integrand

    Returns
    -------
        * norm: Nonnegative value
    """
    factor = norm_factor(h, spec)
    if enforce_truncation:
        check_truncation(factor, spec.mu, power=2, what=spec.label())
    squared = integrate(factor.with_values(factor.values**2), np.exp(spec.mu * h.grid.nodes))
    return sqrt(max(squared, 0.0))


def _nonnegative(g: GridFunction) -> GridFunction:
    scale = max(float(np.max(np.abs(g.values))), 1.0)
    if float(np.min(g.values)) < -NEGATIVE_TOLERANCE * scale:
        raise NegativeDensityError(f"Density has negative values down to {float(np.min(g.values)):.3g}")
    return g.with_values(np.maximum(g.values, 0.0))


def _entropy_report(density: GridFunction, reference: GridFunction) -> EntropyReport:
    x = density.values
    r = reference.values
    positive = (x > 0.0) & (r > 0.0)
    safe_x = np.where(positive, x, 1.0)
    safe_r = np.where(positive, r, 1.0)
    integrand = np.where(positive, x * np.log(safe_x / safe_r) - x + r, r)
    entropy = integrate(density.with_values(integrand))
    l1_distance = integrate(density.with_values(np.abs(x - r)))
    reference_mass = integrate(reference)
    return EntropyReport(
        entropy=entropy,
        l1_distance=l1_distance,
        csiszar_lower_bound=reference_mass * psi(l1_distance / reference_mass),
    )


def relative_entropy(g: GridFunction, rho: float, primitive_form: bool = False) -> EntropyReport:
    """
    Relative entropy F[g|g_rho] = int (g (log(g/g_rho) - 1) + g_rho), or F[G|G_rho] for the primitives.

    The integrand at g = 0 is its limit g_rho. The lower bound is m Psi(l1/m), with m the integral of the
    reference (2 for g_rho, rho for G_rho).

    Params:
        * g: Nonnegative density
        * rho: Mass of the reference profile
        * primitive_form: Compare the tail primitives G and G_rho instead of the densities

    Returns
    -------
        * report: Entropy, L1 distance and Csiszar-type lower bound
    """
    density = _nonnegative(g)
    reference = stationary_profile(rho, g.grid)
    if primitive_form:
        density = tail_primitive(density)
        reference = tail_primitive(reference)
    return _entropy_report(density, reference)


def primitive_relative_entropy(g: GridFunction, rho: float) -> EntropyReport:
    """Relative entropy F[G|G_rho] of the tail primitives."""
    return relative_entropy(g, rho, primitive_form=True)


def normalized_entropy(g: GridFunction, rho: float) -> float:
    """F[g|g_rho] / int g."""
    return relative_entropy(g, rho).entropy / integrate(_nonnegative(g))


def l2_distance(g: GridFunction, rho: float) -> float:
    """L2 distance between g and g_rho."""
    difference = g - stationary_profile(rho, g.grid)
    return sqrt(integrate(difference.with_values(difference.values**2)))


def physical_weighted_error(
    g: GridFunction, t: float, rho: float, mu: float, alternative: bool = False
) -> Tuple[float, float]:
    """
    Convergence of the physical solution in self-similar scaling, computed from the self-similar state.

    With tau = e^t - 1 the rescaled physical solution is u(y) = tau^2 f(tau, tau y)
    = (tau/(1+tau))^2 g(t, tau y/(1+tau)).

    Params:
        * g: Self-similar state at time t
        * t: Self-similar time, t > 0
        * rho: Mass
        * mu: Exponential weight
        * alternative: Use the power weights y^2 and y instead of y^4 and y^2

    Returns
    -------
        * weighted: int (u' - g_rho')^2 y^4 e^{mu y} dy
        * uniform: sup_y y^2 |u - g_rho|
    """
    if t <= 0.0:
        raise CoagLabError("physical_weighted_error needs t > 0")
    ratio = -np.expm1(-t)
    rescaled = dilate(g, ratio**2, ratio)
    difference = rescaled - stationary_profile(rho, g.grid)
    slope = derivative(difference, 1)
    nodes = g.grid.nodes
    weighted_power, uniform_power = (2, 1) if alternative else (4, 2)
    check_truncation(slope, mu, power=2, what="physical frame error")
    weighted = integrate(slope.with_values(slope.values**2 * nodes**weighted_power), np.exp(mu * nodes))
    uniform = float(np.max(nodes**uniform_power * np.abs(difference.values)))
    return weighted, uniform
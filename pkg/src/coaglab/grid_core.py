"""Quadrature, convolution, primitives and finite differences on the uniform grid."""

from functools import lru_cache
from math import factorial
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.signal import fftconvolve

from coaglab.errors import GridMismatchError, TruncationRuleError, UnsupportedOrderError
from coaglab.types import FloatArray, Grid, GridFunction

STENCIL_ACCURACY: int = 4
MAX_DERIVATIVE_ORDER: int = 4
UPWIND_OFFSETS: Tuple[int, ...] = (-1, 0, 1, 2)
TRUNCATION_EXPONENT: float = 20.0


def check_same_grid(*functions: GridFunction) -> Grid:
    """
    Check that all grid functions live on one grid.

    Params:
        * functions: Grid functions to compare

    Returns
    -------
        * grid: The common grid
    """
    grid = functions[0].grid
    for function in functions[1:]:
        if function.grid != grid:
            raise GridMismatchError(
                f"Grid (n_points={function.grid.n_points}, y_max={function.grid.y_max}) does not match "
                f"grid (n_points={grid.n_points}, y_max={grid.y_max})"
            )
    return grid


def value_at_zero(values: FloatArray) -> float:
    """Linear extrapolation of the nodal values to y = 0, falling back to the first node value."""
    extrapolated = 2.0 * values[0] - values[1]
    return float(extrapolated) if np.isfinite(extrapolated) else float(values[0])


def with_zero_node(values: FloatArray) -> FloatArray:
    """Prepend the extrapolated value at y = 0 to the nodal values."""
    return np.concatenate(([value_at_zero(values)], values))


def integrate(f: GridFunction, weight: Optional[FloatArray] = None) -> float:
    """
    Composite trapezoid approximation of the integral of f * weight over (0, y_max].

    Params:
        * f: Integrand
        * weight: Optional per node weight, same length as the grid

    Returns
    -------
        * integral: Quadrature value
    """
    values = f.values
    if weight is not None:
        weight = np.asarray(weight, dtype=np.float64)
        if weight.shape != values.shape:
            raise GridMismatchError(f"weight has shape {weight.shape}, expected {values.shape}")
        values = values * weight
    return float(trapezoid(with_zero_node(values), dx=f.grid.spacing))


def convolve(f: GridFunction, g: GridFunction, method: Literal["fft", "direct"] = "fft") -> GridFunction:
    """
    Linear convolution (f*g)(y) = int_0^y f(x) g(y - x) dx, truncated to (0, y_max].

    The trapezoid rule is applied to the convolution integral at every node, including the
    extrapolated values at y = 0.

    Params:
        * f, g: Grid functions on the same grid
        * method: "fft" for the zero padded fast transform, "direct" for the O(N^2) sum

    Returns
    -------
        * f*g: Convolution at the grid nodes
    """
    grid = check_same_grid(f, g)
    n = grid.n_points
    f_full = with_zero_node(f.values)
    g_full = with_zero_node(g.values)
    if method == "fft":
        full = fftconvolve(f_full, g_full)[: n + 1]
    elif method == "direct":
        full = np.convolve(f_full, g_full)[: n + 1]
    else:
        raise ValueError(f"Unknown convolution method '{method}'")
    endpoints = 0.5 * (f_full[0] * g_full + f_full * g_full[0])
    return GridFunction(grid=grid, values=grid.spacing * (full - endpoints)[1:])


def _cumulative(h: GridFunction) -> FloatArray:
    return cumulative_trapezoid(with_zero_node(h.values), dx=h.grid.spacing, initial=0.0)


def tail_primitive(h: GridFunction) -> GridFunction:
    """
    Tail primitive H(y) = int_y^{y_max} h, vanishing at y_max.

    Summed from y_max downwards.

    Params:
        * h: Grid function

    Returns
    -------
        * H: Tail primitive at the grid nodes
    """
    reversed_values = h.values[::-1]
    tail = cumulative_trapezoid(reversed_values, dx=h.grid.spacing, initial=0.0)[::-1]
    return h.with_values(tail)


def head_primitive(h: GridFunction) -> GridFunction:
    """Primitive int_0^y h vanishing at y = 0, equal to integrate(h) - tail_primitive(h)."""
    return h.with_values(_cumulative(h)[1:])


class DerivativeStencil(BaseModel):
    """Finite difference weights (in units of spacing^-order) of one derivative order.

    Row j of ``left`` holds the weights for node j on nodes 0..len-1; row j of ``right`` holds the
    weights for node n-1-j on the last len nodes, in increasing node order.
    """

    model_config = ConfigDict(frozen=True)

    order: int
    accuracy: int = STENCIL_ACCURACY
    interior: Tuple[float, ...]
    left: Tuple[Tuple[float, ...], ...]
    right: Tuple[Tuple[float, ...], ...]

    @property
    def half_width(self) -> int:
        return len(self.interior) // 2


def finite_difference_weights(order: int, offsets: List[int]) -> FloatArray:
    """
    Weights w with sum_j w_j p(x_j) = p^(order)(0) for every polynomial of degree < len(offsets).

    Params:
        * order: Derivative order
        * offsets: Stencil offsets in units of the spacing

    Returns
    -------
        * weights: One weight per offset
    """
    points = np.asarray(offsets, dtype=np.float64)
    size = len(points)
    assert size > order
    vandermonde = np.vander(points, size, increasing=True).T
    rhs = np.zeros(size)
    rhs[order] = factorial(order)
    return np.linalg.solve(vandermonde, rhs)


@lru_cache(maxsize=None)
def build_stencil(order: int) -> DerivativeStencil:
    """Central and one-sided stencils of accuracy 4 for the given derivative order."""
    if not 1 <= order <= MAX_DERIVATIVE_ORDER:
        raise UnsupportedOrderError(f"Derivative order {order} outside supported range 1..{MAX_DERIVATIVE_ORDER}")
    half_width = (order + 1) // 2 - 1 + STENCIL_ACCURACY // 2
    interior = finite_difference_weights(order, list(range(-half_width, half_width + 1)))
    size = order + STENCIL_ACCURACY
    left = []
    right = []
    for j in range(half_width):
        left.append(tuple(finite_difference_weights(order, [m - j for m in range(size)])))
        right.append(tuple(finite_difference_weights(order, [m - (size - 1 - j) for m in range(size)])))
    return DerivativeStencil(
        order=order,
        interior=tuple(interior),
        left=tuple(left),
        right=tuple(right),
    )


def derivative(
    h: GridFunction,
    k: int,
    right_boundary: Literal["one_sided", "zero_extension"] = "one_sided",
) -> GridFunction:
    """
    k-th derivative by finite differences of accuracy 4.

    Params:
        * h: Grid function
        * k: Derivative order, 1 <= k <= 4
        * right_boundary: "one_sided" uses one-sided stencils at the last nodes, "zero_extension"
          applies the central stencil with h = 0 beyond y_max

    Returns
    -------
        * D^k h: Derivative at the grid nodes
    """
    stencil = build_stencil(k)
    n = h.grid.n_points
    p = stencil.half_width
    size = k + STENCIL_ACCURACY
    if n < max(2 * p + 1, size):
        raise UnsupportedOrderError(f"Grid with {n} points is too small for a derivative of order {k}")

    values = h.values
    if right_boundary == "zero_extension":
        extended = np.concatenate((values, np.zeros(p)))
        interior_end = n
    else:
        extended = values
        interior_end = n - p

    result = np.zeros(n)
    for j, weight in enumerate(stencil.interior):
        offset = j - p
        result[p:interior_end] += weight * extended[p + offset : interior_end + offset]
    for j, weights in enumerate(stencil.left):
        result[j] = np.dot(weights, values[:size])
    if right_boundary == "one_sided":
        for j, weights in enumerate(stencil.right):
            result[n - 1 - j] = np.dot(weights, values[n - size :])
    return h.with_values(result / h.grid.spacing**k)


def upwind_derivative(h: GridFunction) -> GridFunction:
    """
    First derivative with the third order stencil biased towards larger y, zero beyond y_max.

    The bias follows the characteristics of dh/dt = y h', which carry values towards y = 0, and damps
    grid scale modes. The first node uses the forward stencil on nodes 0..3.

    Params:
        * h: Grid function with at least 4 nodes

    Returns
    -------
        * h': Derivative at the grid nodes
    """
    n = h.grid.n_points
    if n < len(UPWIND_OFFSETS):
        raise UnsupportedOrderError(f"Grid with {n} points is too small for the upwind derivative")
    weights = finite_difference_weights(1, list(UPWIND_OFFSETS))
    extended = np.concatenate(([0.0], h.values, np.zeros(UPWIND_OFFSETS[-1])))
    result = np.zeros(n)
    for weight, offset in zip(weights, UPWIND_OFFSETS):
        result += weight * extended[1 + offset : 1 + offset + n]
    forward = finite_difference_weights(1, [0, 1, 2, 3])
    result[0] = np.dot(forward, h.values[:4])
    return h.with_values(result / h.grid.spacing)


def dilate(f: GridFunction, amplitude: float, scale: float) -> GridFunction:
    """
    Resample y -> amplitude * f(scale * y) by linear interpolation; arguments beyond y_max give 0.

    Params:
        * f: Grid function
        * amplitude: Multiplicative factor
        * scale: Dilation of the argument, must be positive

    Returns
    -------
        * resampled: Dilated function on the same grid
    """
    assert scale > 0.0
    grid = f.grid
    nodes = np.concatenate(([0.0], grid.nodes))
    resampled = np.interp(scale * grid.nodes, nodes, with_zero_node(f.values), right=0.0)
    return f.with_values(amplitude * resampled)


def tail_decay_rate(f: GridFunction) -> float:
    """
    Estimated exponential decay rate of |f| from its last quarter of nodes.

    Nodes below the rounding floor 1e-12 * max(max|f|, 1) are ignored. With fewer than 8 nodes
    above the floor the tail is considered negligible and the rate is infinite.

    Params:
        * f: Grid function

    Returns
    -------
        * decay: Least squares decay rate (minus the slope of log|f|)
    """
    magnitude = np.abs(f.values)
    floor = 1e-12 * max(float(magnitude.max(initial=0.0)), 1.0)
    start = (3 * f.grid.n_points) // 4
    tail = magnitude[start:]
    nodes = f.grid.nodes[start:]
    above = tail > floor
    if np.count_nonzero(above) < 8:
        return float("inf")
    slope, _ = np.polyfit(nodes[above], np.log(tail[above]), 1)
    return float(-slope)


def check_truncation(f: GridFunction, mu: float, power: int = 1, what: str = "integrand") -> None:
    """
    Raise if e^{mu y}|f|^power is not small enough at y_max for the truncated integral to be trusted.

    The rule is (power * decay - mu) * y_max >= 20, up to a relative allowance of 1e-3.

    Params:
        * f: Grid function entering an exponentially weighted integral
        * mu: Exponential weight
        * power: 1 for integrals of |f|, 2 for integrals of f^2
        * what: Name of the quantity, used in the error message
    """
    decay = tail_decay_rate(f)
    if not np.isfinite(decay):
        return
    exponent = (power * decay - mu) * f.grid.y_max
    if exponent < TRUNCATION_EXPONENT * (1.0 - 1e-3):
        raise TruncationRuleError(
            f"Truncation rule violated for {what}: (power*decay - mu)*y_max = {exponent:.3g} < "
            f"{TRUNCATION_EXPONENT:g} (decay={decay:.4g}, mu={mu:g}, y_max={f.grid.y_max:g})",
            decay=decay,
            mu=mu,
            y_max=f.grid.y_max,
        )

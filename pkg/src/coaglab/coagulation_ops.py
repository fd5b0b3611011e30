"""The coagulation bilinear form, its primitive, and the right-hand sides of both equations."""

from math import comb

import numpy as np

from coaglab.errors import UnsupportedOrderError
from coaglab.grid_core import (
    check_same_grid,
    convolve,
    derivative,
    head_primitive,
    integrate,
    tail_primitive,
)
from coaglab.types import GridFunction, LeibnizReport, RhsKind


def coag_bilinear(g: GridFunction, h: GridFunction) -> GridFunction:
    """
    Symmetric coagulation form C(g, h) = 1/2 g*h - 1/2 g int h - 1/2 h int g.

    Params:
        * g, h: Grid functions on the same grid

    Returns
    -------
        * C(g, h): Nodal values
    """
    check_same_grid(g, h)
    gain = convolve(g, h).values
    loss = g.values * integrate(h) + h.values * integrate(g)
    return g.with_values(0.5 * (gain - loss))


def coag_primitive(g: GridFunction, h: GridFunction) -> GridFunction:
    """
    Tail primitive of C(g, h) from the compact formula 2 int_y^inf C(g, h) = g*H - H int g.

    Params:
        * g, h: Grid functions on the same grid

    Returns
    -------
        * int_y^inf C(g, h): Nodal values
    """
    check_same_grid(g, h)
    h_tail = tail_primitive(h)
    return g.with_values(0.5 * (convolve(g, h_tail).values - h_tail.values * integrate(g)))


def drift(g: GridFunction) -> GridFunction:
    """Dilation part D(g) = 2g + y g' of the self-similar equation; zero extension beyond y_max."""
    slope = derivative(g, 1, right_boundary="zero_extension")
    return g.with_values(2.0 * g.values + g.grid.nodes * slope.values)


def rhs(state: GridFunction, kind: RhsKind) -> GridFunction:
    """
    Right-hand side of the physical (C(g, g)) or self-similar (2g + y g' + C(g, g)) equation.

    Params:
        * state: Current density
        * kind: Physical or self-similar frame

    Returns
    -------
        * dg/dt: Nodal values
    """
    collision = coag_bilinear(state, state)
    if kind is RhsKind.PHYSICAL:
        return collision
    return drift(state) + collision


def _power_derivative(f: GridFunction, power: int, order: int) -> GridFunction:
    """D^order (y^power f) with D^0 the identity and D^-1 the primitive vanishing at y = 0."""
    weighted = f.with_values(f.grid.nodes**power * f.values)
    if order == 0:
        return weighted
    if order == -1:
        return head_primitive(weighted)
    return derivative(weighted, order)


def leibniz_convolution_identity_check(g: GridFunction, h: GridFunction, k: int) -> LeibnizReport:
    """
    Compare both sides of D^k(y^{k+1}(g*h)) = sum_i binom(k+1, i) D^{k+1-i}(y^{k+1-i} g) * D^{i-1}(y^i h).

    Params:
        * g, h: Smooth decaying grid functions on the same grid
        * k: Derivative order, 1 or 2

    Returns
    -------
        * report: Maximum nodal discrepancy over the first half of the grid
    """
    if k not in (1, 2):
        raise UnsupportedOrderError(f"Leibniz identity check supports k in (1, 2), got {k}")
    grid = check_same_grid(g, h)
    lhs = _power_derivative(convolve(g, h), k + 1, k).values
    rhs_values = np.zeros(grid.n_points)
    for i in range(k + 2):
        left = _power_derivative(g, k + 1 - i, k + 1 - i)
        right = _power_derivative(h, i, i - 1)
        rhs_values += comb(k + 1, i) * convolve(left, right).values

    # one-sided stencils near y_max are left out
    half = grid.n_points // 2
    return LeibnizReport(
        k=k,
        discrepancy=float(np.max(np.abs(lhs[:half] - rhs_values[:half]))),
        lhs_max=float(np.max(np.abs(lhs[:half]))),
        rhs_max=float(np.max(np.abs(rhs_values[:half]))),
    )

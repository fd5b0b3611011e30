"""Quadrature checks of the functional inequalities behind the convergence proofs."""

import concurrent.futures as cf
import logging
from math import log, sqrt
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from coaglab.coagulation_ops import coag_primitive
from coaglab.errors import CoagLabError, NegativeDensityError, UnsupportedOrderError
from coaglab.grid_core import (
    check_truncation,
    convolve,
    derivative,
    integrate,
    tail_primitive,
    with_zero_node,
)
from coaglab.observables import weighted_norm
from coaglab.types import Grid, GridFunction, InequalityCase, NormSpec

logger = logging.getLogger(__name__)

ABSOLUTE_TOLERANCE: float = 1e-8
RELATIVE_TOLERANCE: float = 1e-5
EQUALITY_TOLERANCE: float = 1e-4
REFINEMENT_TOLERANCE: float = 0.05

Partition = Tuple[int, int, int, int]
NORM_PARTITIONS: List[Partition] = [(2, 0, 0, 2), (1, 1, 0, 2), (2, 0, 1, 1)]


def tolerance(lhs: float, rhs: float) -> float:
    """Quadrature allowance 1e-8 + 1e-5 (|lhs| + |rhs|) of a check lhs <= rhs."""
    return ABSOLUTE_TOLERANCE + RELATIVE_TOLERANCE * (abs(lhs) + abs(rhs))


def _case(
    name: str, lhs: float, rhs: float, parameters: Optional[Dict[str, Any]] = None, allowance: Optional[float] = None
) -> InequalityCase:
    margin = rhs - lhs
    allowed = tolerance(lhs, rhs) if allowance is None else allowance
    return InequalityCase(
        name=name,
        parameters=parameters or {},
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        tolerance=allowed,
        passed=bool(margin >= -allowed),
    )


def _square(h: GridFunction, power: float, mu: float) -> float:
    """int h^2 y^power e^{mu y} dy."""
    y = h.grid.nodes
    return integrate(h.with_values(h.values**2), y**power * np.exp(mu * y))


def _positive_log(f: GridFunction) -> np.ndarray:
    if np.any(f.values <= 0.0):
        first = int(np.argmax(f.values <= 0.0))
        raise NegativeDensityError(
            f"Aizenman-Bak check needs f > 0, found f = {f.values[first]:.3g} at y = {f.grid.nodes[first]:.4g}"
        )
    return np.log(f.values)


def check_aizenman_bak(f: GridFunction) -> InequalityCase:
    """
    Aizenman-Bak inequality int (f*f) log f <= (int f)(int f log f) - (int f)^2.

    The double integral int int f(x) f(y) log f(x + y) is contracted to int (f*f)(z) log f(z) dz with the
    fast convolution. Equality holds exactly for exponentials.

    Params:
        * f: Strictly positive density

    Returns
    -------
        * case: Both sides and the margin
    """
    log_f = _positive_log(f)
    check_truncation(f, 0.0, power=1, what="Aizenman-Bak integrand")
    self_convolution = convolve(f, f)
    lhs = integrate(self_convolution, log_f)
    total = integrate(f)
    rhs = total * integrate(f, log_f) - total**2
    return _case("aizenman_bak", lhs, rhs)


def check_aizenman_bak_direct(f: GridFunction) -> InequalityCase:
    """
    O(N^2) cross-check of check_aizenman_bak.

    Every product f(x_i) f(x_j) is summed explicitly into the node x_i + x_j with the trapezoid weights of
    the convolution; the separable right-hand side is an explicit outer sum. Meant for small grids.

    Params:
        * f: Strictly positive density

    Returns
    -------
        * case: Both sides and the margin
    """
    log_f = _positive_log(f)
    grid = f.grid
    n = grid.n_points
    full = with_zero_node(f.values)
    index = np.arange(n + 1)
    weights = 1.0 - 0.5 * (index == 0)
    products = np.outer(full * weights, full * weights)
    triangle = np.add.outer(index, index)
    self_convolution = grid.spacing * np.bincount(
        triangle.ravel(), weights=products.ravel(), minlength=2 * n + 1
    )[1 : n + 1]
    lhs = integrate(f.with_values(self_convolution), log_f)

    trapezoid = np.full(n + 1, grid.spacing)
    trapezoid[[0, -1]] *= 0.5
    density = trapezoid * full
    entropy_density = trapezoid * with_zero_node(f.values * log_f)
    total = float(np.sum(density))
    rhs = float(np.sum(np.outer(density, entropy_density))) - total**2
    return _case("aizenman_bak_direct", lhs, rhs, {"n_points": n})


def check_linear_aizenman_bak(h: GridFunction, mu: float) -> InequalityCase:
    """
    Linearized Aizenman-Bak inequality
    4 int h H e^{mu y} <= 2 mu (int h)(int y h) + int h^2 y e^{mu y} + (1/mu) int h^2 e^{mu y}.

    Params:
        * h: Perturbation
        * mu: Exponential weight, mu > 0

    Returns
    -------
        * case: Both sides and the margin
    """
    if mu <= 0.0:
        raise CoagLabError(f"Linearized Aizenman-Bak check needs mu > 0, got {mu:g}")
    check_truncation(h, mu, power=2, what="linearized Aizenman-Bak integrand")
    y = h.grid.nodes
    h_tail = tail_primitive(h)
    lhs = 4.0 * integrate(h.with_values(h.values * h_tail.values), np.exp(mu * y))
    rhs = (
        2.0 * mu * integrate(h) * integrate(h, y)
        + _square(h, 1.0, mu)
        + _square(h, 0.0, mu) / mu
    )
    return _case("linear_aizenman_bak", lhs, rhs, {"mu": mu})


def check_hardy(h: GridFunction, n: int, mu: float) -> InequalityCase:
    """
    Weighted Hardy inequality int H^2 y^{2n} e^{mu y} <= 4 int h^2 y^{2(n+1)} e^{mu y}.

    Params:
        * h: Perturbation
        * n: Power, 0, 1 or 2
        * mu: Exponential weight, mu >= 0

    Returns
    -------
        * case: Both sides and the margin
    """
    if n not in (0, 1, 2):
        raise UnsupportedOrderError(f"Hardy check supports n in (0, 1, 2), got {n}")
    if mu < 0.0:
        raise CoagLabError(f"Hardy check needs mu >= 0, got {mu:g}")
    check_truncation(h, mu, power=2, what=f"Hardy integrand n={n}")
    lhs = _square(tail_primitive(h), 2.0 * n, mu)
    rhs = 4.0 * _square(h, 2.0 * (n + 1), mu)
    return _case("hardy", lhs, rhs, {"n": n, "mu": mu})


def check_weighted_poincare(h: GridFunction, mu: float) -> InequalityCase:
    """Weighted Poincare inequality int H^2 e^{mu y} <= (4/mu^2) int h^2 e^{mu y}."""
    if mu <= 0.0:
        raise CoagLabError(f"Weighted Poincare check needs mu > 0, got {mu:g}")
    check_truncation(h, mu, power=2, what="weighted Poincare integrand")
    lhs = _square(tail_primitive(h), 0.0, mu)
    rhs = 4.0 / mu**2 * _square(h, 0.0, mu)
    return _case("weighted_poincare", lhs, rhs, {"mu": mu})


def check_bilinear_bound(h: GridFunction, rho: float, mu: float) -> InequalityCase:
    """
    Bound ||C(h, h)||_{-1,mu} <= K ||h||_{-1,mu} int |h| e^{mu y/2} with K = 1.

    Params:
        * h: Perturbation
        * rho: Mass of the profile, mu < 4/rho
        * mu: Exponential weight

    Returns
    -------
        * case: Both sides and the margin
    """
    if not 0.0 < mu < 4.0 / rho:
        raise CoagLabError(f"Bilinear bound needs 0 < mu < 4/rho = {4.0 / rho:g}, got mu={mu:g}")
    check_truncation(h, mu, power=2, what="bilinear bound integrand")
    y = h.grid.nodes
    primitive = coag_primitive(h, h)
    lhs = sqrt(max(integrate(primitive.with_values(primitive.values**2), np.exp(mu * y)), 0.0))
    spec = NormSpec(k=-1, mu=mu)
    rhs = weighted_norm(h, spec, enforce_truncation=False) * integrate(
        h.with_values(np.abs(h.values)), np.exp(0.5 * mu * y)
    )
    return _case("bilinear_bound", lhs, rhs, {"rho": rho, "mu": mu, "K": 1.0})


def _power_norm(h: GridFunction, k: int, outer: int, inner: int, mu: float) -> float:
    """|| y^outer D^k (y^inner h) || in L2(e^{mu y})."""
    y = h.grid.nodes
    slope = derivative(h.with_values(y**inner * h.values), k)
    return sqrt(max(_square(slope, 2.0 * outer, mu), 0.0))


def _norm_ratio(h: GridFunction, k: int, partition: Partition, mu: float) -> float:
    a, b, n, m = partition
    numerator = _power_norm(h, k, a, b, mu)
    denominator = _power_norm(h, k, n, m, mu)
    if denominator == 0.0:
        return 0.0 if numerator == 0.0 else float("inf")
    return numerator / denominator


def coarsen(h: GridFunction) -> GridFunction:
    """Restriction of h to every second node."""
    grid = Grid(n_points=h.grid.n_points // 2, y_max=2 * (h.grid.n_points // 2) * h.grid.spacing)
    return GridFunction(grid=grid, values=h.values[1 : 2 * grid.n_points : 2])


def check_norm_equivalence(
    h: GridFunction, k: int, partition: Partition, mu: float = 1.0
) -> InequalityCase:
    """
    Equivalence ||y^a D^k(y^b h)|| <= K ||y^n D^k(y^m h)|| with a + b = n + m = k + 1.

    The constant is not asserted: K_fit is the ratio on the grid of h, and the case passes when the ratio
    moves by at most 5% on the grid coarsened by two.

    Params:
        * h: Smooth function vanishing at 0 like y^2 or faster in its derivatives
        * k: Derivative order, 1 or 2
        * partition: (a, b, n, m)
        * mu: Exponential weight of the L2 norms

    Returns
    -------
        * case: lhs = |ratio_fine - ratio_coarse|, rhs = 5% of ratio_fine
    """
    if k not in (1, 2):
        raise UnsupportedOrderError(f"Norm equivalence check supports k in (1, 2), got {k}")
    a, b, n, m = partition
    if a + b != k + 1 or n + m != k + 1:
        raise CoagLabError(f"Partition {partition} must satisfy a + b = n + m = k + 1 = {k + 1}")
    fine = _norm_ratio(h, k, partition, mu)
    coarse = _norm_ratio(coarsen(h), k, partition, mu)
    parameters = {"k": k, "partition": list(partition), "mu": mu, "K_fit": fine, "K_coarse": coarse}
    if not np.isfinite(fine) or not np.isfinite(coarse):
        return InequalityCase(
            name="norm_equivalence",
            parameters=parameters,
            lhs=float("inf"),
            rhs=0.0,
            margin=float("-inf"),
            tolerance=0.0,
            passed=False,
        )
    return _case("norm_equivalence", abs(fine - coarse), REFINEMENT_TOLERANCE * fine, parameters, allowance=0.0)


def exponential_equality_cases(
    grid: Grid, rates: Sequence[float], equality_tolerance: float = EQUALITY_TOLERANCE
) -> List[InequalityCase]:
    """
    Aizenman-Bak on f = e^{-rate y}; the case passes when |margin| <= equality_tolerance.

    Params:
        * grid: Grid to evaluate on
        * rates: Decay rates
        * equality_tolerance: Allowed deviation from equality

    Returns
    -------
        * cases: One "aizenman_bak_equality" case per rate
    """
    cases = []
    for rate in rates:
        exponential = GridFunction.from_function(grid, lambda y, rate=rate: np.exp(-rate * y))
        inequality = check_aizenman_bak(exponential)
        cases.append(
            _case(
                "aizenman_bak_equality",
                abs(inequality.margin),
                equality_tolerance,
                {
                    "rate": rate,
                    "lhs": inequality.lhs,
                    "rhs": inequality.rhs,
                    "exact": exponential_equality_value(1.0, rate),
                },
                allowance=0.0,
            )
        )
    return cases


def _member_cases(
    index: int, h: GridFunction, mus: Sequence[float], rho: float, hardy_orders: Sequence[int]
) -> List[InequalityCase]:
    cases: List[InequalityCase] = []
    for mu in mus:
        cases.append(check_linear_aizenman_bak(h, mu))
        cases.extend(check_hardy(h, n, mu) for n in hardy_orders)
        cases.append(check_weighted_poincare(h, mu))
        if mu < 4.0 / rho:
            cases.append(check_bilinear_bound(h, rho, mu))
    cases.extend(check_norm_equivalence(h, 1, partition) for partition in NORM_PARTITIONS)
    return [case.model_copy(update={"parameters": {"member": index, **case.parameters}}) for case in cases]


def sweep(
    corpus: Sequence[GridFunction],
    positive_corpus: Sequence[GridFunction],
    mus: Sequence[float],
    rho: float,
    hardy_orders: Sequence[int] = (0, 1, 2),
    equality_rates: Sequence[float] = (0.5, 1.0, 2.0),
    equality_tolerance: float = EQUALITY_TOLERANCE,
    jobs: int = 1,
) -> List[InequalityCase]:
    """
    Run every inequality over seeded corpora.

    Aizenman-Bak runs on the strictly positive corpus and on exponentials; the quadratic and bilinear
    inequalities and the norm equivalence run on the signed corpus for every weight in mus. The order of
    the cases depends only on the inputs.

    Params:
        * corpus: Signed smooth functions
        * positive_corpus: Strictly positive profiles
        * mus: Exponential weights
        * rho: Mass of the profile bounding the weights of the bilinear bound
        * hardy_orders: Powers n of the Hardy inequality
        * equality_rates: Decay rates of the exponential equality cases
        * equality_tolerance: Allowed |margin| in the equality cases
        * jobs: Worker threads over the corpus

    Returns
    -------
        * cases: All inequality cases
    """
    cases: List[InequalityCase] = []
    for index, f in enumerate(positive_corpus):
        case = check_aizenman_bak(f)
        cases.append(case.model_copy(update={"parameters": {"member": index}}))
    if positive_corpus:
        cases.extend(exponential_equality_cases(positive_corpus[0].grid, equality_rates, equality_tolerance))

    with cf.ThreadPoolExecutor(max_workers=max(jobs, 1)) as executor:
        member_cases = executor.map(
            lambda item: _member_cases(item[0], item[1], mus, rho, hardy_orders), enumerate(corpus)
        )
        for member in member_cases:
            cases.extend(member)

    failed = [case for case in cases if not case.passed]
    logger.info(f"Inequality sweep: {len(cases)} cases, {len(failed)} failed")
    for case in failed:
        logger.warning(f"{case.name} {case.parameters}: margin {case.margin:.3g} below -{case.tolerance:.3g}")
    return cases


def worst_margin(cases: Sequence[InequalityCase], name: str) -> float:
    """Smallest margin among the cases of one inequality, +inf when there are none."""
    margins = [case.margin for case in cases if case.name == name]
    return min(margins) if margins else float("inf")


def margin_summary(cases: Sequence[InequalityCase]) -> List[str]:
    """Worst margin of every inequality in the sweep, one logged line per inequality."""
    names = sorted({case.name for case in cases})
    lines = [f"{name}: worst margin {worst_margin(cases, name):.3g}" for name in names]
    for line in lines:
        logger.info(line)
    return lines


def exponential_equality_value(c: float, rate: float) -> float:
    """Common value c^2 (log c - 2)/rate^2 of both sides for f = c e^{-rate y}."""
    return c**2 * (log(c) - 2.0) / rate**2 if c > 0.0 else float("nan")

"""The linearized operator around g_rho, its primitive, and spectral gap measurements."""

import concurrent.futures as cf
import logging
from math import ceil, log
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from coaglab.coagulation_ops import coag_bilinear
from coaglab.errors import CoagLabError, ZeroNormError
from coaglab.grid_core import convolve, derivative, integrate, tail_primitive, upwind_derivative
from coaglab.observables import weighted_inner, weighted_norm
from coaglab.profiles_oracles import stationary_profile
from coaglab.time_integration import check_drift_cfl, run_rk4
from coaglab.types import GapReport, Grid, GridFunction, IntegratorConfig, NormSpec, RhsKind, Trajectory
from coaglab.utils import fit_rate, gaussian_bumps

logger = logging.getLogger(__name__)

ORTHOGONALITY_TOLERANCE: float = 1e-8


def apply_L(h: GridFunction, rho: float, upwind: bool = False) -> GridFunction:
    """
    Linearized operator Lh = y h' - (4/rho) H + (2/rho) (H * g_rho).

    Only the tail primitive H enters besides h', so h need not be integrable at 0. The drift uses zero
    extension beyond y_max.

    Params:
        * h: Perturbation
        * rho: Mass of the profile
        * upwind: Differentiate the drift with the upwind biased stencil used for time stepping

    Returns
    -------
        * Lh: Nodal values
    """
    profile = stationary_profile(rho, h.grid)
    h_tail = tail_primitive(h)
    slope = upwind_derivative(h) if upwind else derivative(h, 1, right_boundary="zero_extension")
    values = (
        h.grid.nodes * slope.values
        - (4.0 / rho) * h_tail.values
        + (2.0 / rho) * convolve(h_tail, profile).values
    )
    return h.with_values(values)


def apply_L_bilinear_form(h: GridFunction, rho: float) -> GridFunction:
    """Linearized operator in its original form Lh = 2h + y h' + 2 C(g_rho, h)."""
    profile = stationary_profile(rho, h.grid)
    slope = derivative(h, 1, right_boundary="zero_extension")
    return h.with_values(
        2.0 * h.values + h.grid.nodes * slope.values + 2.0 * coag_bilinear(profile, h).values
    )


def apply_L_primitive(h: GridFunction, rho: float) -> GridFunction:
    """
    Tail primitive of Lh: -H - y h + g_rho * H.

    Params:
        * h: Perturbation
        * rho: Mass of the profile

    Returns
    -------
        * primitive: Nodal values
    """
    profile = stationary_profile(rho, h.grid)
    h_tail = tail_primitive(h)
    return h.with_values(-h_tail.values - h.grid.nodes * h.values + convolve(profile, h_tail).values)


def mass_direction(rho: float, grid: Grid) -> GridFunction:
    """Derivative of the profile family in rho, (-4/rho^2 + 8y/rho^3) e^{-2y/rho}; its first moment is 1."""
    y = grid.nodes
    return GridFunction(grid=grid, values=(-4.0 / rho**2 + 8.0 * y / rho**3) * np.exp(-2.0 * y / rho))


def project_mass_orthogonal(h: GridFunction, rho: float) -> GridFunction:
    """Remove the multiple of the mass direction that carries the first moment of h."""
    direction = mass_direction(rho, h.grid)
    nodes = h.grid.nodes
    coefficient = integrate(h, nodes) / integrate(direction, nodes)
    return h - coefficient * direction


def _mass_orthogonal(h: GridFunction, rho: float, spec: NormSpec) -> Tuple[GridFunction, float]:
    """Project h when its first moment exceeds the orthogonality tolerance; return it with its norm."""
    norm = weighted_norm(h, spec)
    if norm == 0.0:
        raise ZeroNormError("Rayleigh quotient of a function with zero norm")
    first_moment = integrate(h, h.grid.nodes)
    if abs(first_moment) > ORTHOGONALITY_TOLERANCE * norm:
        logger.debug(f"Projecting out the mass direction: |int y h| = {abs(first_moment):.3g}")
        h = project_mass_orthogonal(h, rho)
        norm = weighted_norm(h, spec)
        if norm == 0.0:
            raise ZeroNormError("Function is a multiple of the mass direction")
    return h, norm


def rayleigh_quotient(h: GridFunction, rho: float, spec: NormSpec) -> float:
    """
    Rayleigh quotient <h, Lh>_spec / ||h||^2_spec on mass orthogonal h.

    A function whose first moment exceeds 1e-8 ||h|| is first projected along the mass direction, so the
    quotient is invariant under scaling and under adding multiples of that direction.

    For k = -1 the scalar product is int H (primitive of Lh) e^{mu y} dy.

    Params:
        * h: Perturbation, projected to mass orthogonality if necessary
        * rho: Mass of the profile
        * spec: Norm of the scalar product

    Returns
    -------
        * quotient: Real number, bounded by -1 for spec (-1, 2/rho)
    """
    h, norm = _mass_orthogonal(h, rho, spec)
    if spec.k == -1:
        h_tail = tail_primitive(h)
        primitive = apply_L_primitive(h, rho)
        nodes = h.grid.nodes
        inner = integrate(
            h.with_values(nodes ** spec.power() * h_tail.values * primitive.values), np.exp(spec.mu * nodes)
        )
    else:
        inner = weighted_inner(h, apply_L(h, rho), spec, enforce_truncation=False)
    return inner / norm**2


def evolve_linear(
    h0: GridFunction,
    rho: float,
    cfg: IntegratorConfig,
    specs: Sequence[NormSpec] = (),
) -> Trajectory:
    """
    RK4 trajectory of the linear equation dh/dt = Lh.

    The drift is differentiated with the upwind biased stencil. The quadrature defect of int y Lh is
    removed along the null direction of L at every stage, so the discrete first moment stays at its
    initial value. Logged at every snapshot: the first moment, the unprojected flux int y Lh and the
    norms of the given specs.

    Params:
        * h0: Initial perturbation, projected to mass orthogonality if necessary
        * rho: Mass of the profile
        * cfg: Integrator settings
        * specs: Norms to log

    Returns
    -------
        * trajectory: Snapshots with the observables
    """
    nodes = h0.grid.nodes
    if np.any(h0.values != 0.0):
        h0, _ = _mass_orthogonal(h0, rho, NormSpec(k=-1, mu=2.0 / rho))
    check_drift_cfl(h0, cfg.dt)
    direction = mass_direction(rho, h0.grid)
    direction_moment = integrate(direction, nodes)

    def right_hand_side(h: GridFunction) -> GridFunction:
        image = apply_L(h, rho, upwind=True)
        return image - (integrate(image, nodes) / direction_moment) * direction

    observables = {
        "first_moment": lambda h: integrate(h, nodes),
        "first_moment_flux": lambda h: integrate(apply_L(h, rho, upwind=True), nodes),
    }
    for spec in specs:
        observables[spec.label()] = lambda h, spec=spec: weighted_norm(h, spec, enforce_truncation=False)
    return run_rk4(h0, right_hand_side, cfg, RhsKind.SELFSIMILAR, observables=observables)


def build_corpus(grid: Grid, seed: int, size: int, rho: Optional[float] = None) -> List[GridFunction]:
    """
    Seeded corpus of random smooth functions, projected to mass orthogonality when rho is given.

    Params:
        * grid: Grid to evaluate on
        * seed: Seed of the random generator
        * size: Number of functions
        * rho: Mass of the profile used for the projection; None keeps the functions as drawn

    Returns
    -------
        * corpus: List of grid functions
    """
    rng = np.random.default_rng(seed)
    corpus = [gaussian_bumps(rng, grid) for _ in range(size)]
    if rho is not None:
        corpus = [project_mass_orthogonal(h, rho) for h in corpus]
    return corpus


def _linear_decays(
    h0: GridFunction, rho: float, cfg: IntegratorConfig, specs: Sequence[NormSpec], window: Tuple[float, float]
) -> Dict[str, float]:
    trajectory = evolve_linear(h0, rho, cfg, specs)
    return {spec.label(): fit_rate(trajectory.series(spec.label()), window).rate for spec in specs}


def comparison_spec(spec: NormSpec, ratio: float) -> NormSpec:
    """The same norm with the weaker exponential weight ratio * mu."""
    return spec.model_copy(update={"mu": ratio * spec.mu})


def gap_survey(
    rho: float,
    specs: Sequence[NormSpec],
    corpus_seed: int,
    grid: Grid,
    cfg: IntegratorConfig,
    corpus_size: int = 50,
    window: Tuple[float, float] = (1.0, 5.0),
    comparison_ratio: Optional[float] = None,
    jobs: int = 1,
) -> List[GapReport]:
    """
    Worst Rayleigh quotient and slowest fitted semigroup decay of each norm over a seeded corpus.

    Every corpus member is evolved with the linear semigroup. With a comparison ratio r, the decay in
    each norm (k, mu) is also fitted in (k, r mu); the gap size does not depend on the weight, so the
    largest difference over the corpus is reported.

    Params:
        * rho: Mass of the profile
        * specs: Norms to survey, mu <= 2/rho
        * corpus_seed: Seed of the corpus
        * grid: Grid of the corpus
        * cfg: Integrator settings of the semigroup runs
        * corpus_size: Number of corpus functions
        * window: Fit window of the decay rates
        * comparison_ratio: Ratio 0 < r < 1 of the comparison weights; None skips the comparison
        * jobs: Worker threads for the semigroup runs

    Returns
    -------
        * reports: One report per norm, in the order of specs
    """
    for spec in specs:
        if spec.mu > 2.0 / rho * (1.0 + 1e-12):
            raise CoagLabError(f"Norm {spec.label()} has mu above 2/rho = {2.0 / rho:g}")
    if comparison_ratio is not None and not 0.0 < comparison_ratio < 1.0:
        raise CoagLabError(f"Comparison ratio must lie in (0, 1), got {comparison_ratio:g}")
    corpus = build_corpus(grid, corpus_seed, corpus_size, rho)
    quotients = {spec.label(): max(rayleigh_quotient(h, rho, spec) for h in corpus) for spec in specs}

    comparisons = {}
    if comparison_ratio is not None:
        comparisons = {spec.label(): comparison_spec(spec, comparison_ratio) for spec in specs}
    fitted = list(specs) + list(comparisons.values())
    with cf.ThreadPoolExecutor(max_workers=max(jobs, 1)) as executor:
        decays = list(executor.map(lambda h: _linear_decays(h, rho, cfg, fitted, window), corpus))

    reports = []
    for spec in specs:
        label = spec.label()
        report = GapReport(
            spec=spec,
            rho=rho,
            quotient_max=quotients[label],
            fitted_decay=min(decay[label] for decay in decays),
            corpus_size=corpus_size,
            seed=corpus_seed,
        )
        if label in comparisons:
            weaker = comparisons[label].label()
            report.comparison_mu = comparisons[label].mu
            report.comparison_decay = min(decay[weaker] for decay in decays)
            report.comparison_gap = max(abs(decay[label] - decay[weaker]) for decay in decays)
        logger.info(
            f"{label}: max Rayleigh quotient {report.quotient_max:.4f}, slowest fitted decay {report.fitted_decay:.4f}"
        )
        reports.append(report)
    return reports


def exponent_growth(
    h0: GridFunction, rho: float, k: int, mu: float, nu: float, cfg: IntegratorConfig
) -> float:
    """
    Fitted exponent K with ||e^{t0 L} h0||_{k,nu} = (nu/mu)^K ||h0||_{k,mu} at t0 = log(nu/mu).

    Params:
        * h0: Mass orthogonal initial perturbation
        * rho: Mass of the profile
        * k: Derivative order of the norms
        * mu, nu: Weights with 0 < mu < nu
        * cfg: Integrator settings; only dt is used

    Returns
    -------
        * exponent: Measured K
    """
    if not 0.0 < mu < nu:
        raise CoagLabError(f"exponent_growth needs 0 < mu < nu, got mu={mu:g}, nu={nu:g}")
    t0 = log(nu / mu)
    n_steps = max(ceil(t0 / cfg.dt - 1e-9), 1)
    run_cfg = IntegratorConfig(dt=t0 / n_steps, t_end=t0, snapshot_stride=n_steps)
    trajectory = evolve_linear(h0, rho, run_cfg)
    initial = weighted_norm(h0, NormSpec(k=k, mu=mu), enforce_truncation=False)
    final = weighted_norm(trajectory.states[-1], NormSpec(k=k, mu=nu), enforce_truncation=False)
    if initial == 0.0:
        raise ZeroNormError("exponent_growth of a function with zero norm")
    return log(final / initial) / log(nu / mu)

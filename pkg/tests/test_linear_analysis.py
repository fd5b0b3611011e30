"""Tests for the linearized operator, the Rayleigh quotients and the gap survey."""

from typing import List

import numpy as np
import pytest

from coaglab.errors import CoagLabError, ZeroNormError
from coaglab.grid_core import integrate, tail_primitive
from coaglab.linear_analysis import (
    apply_L,
    apply_L_bilinear_form,
    apply_L_primitive,
    evolve_linear,
    exponent_growth,
    gap_survey,
    mass_direction,
    project_mass_orthogonal,
    rayleigh_quotient,
)
from coaglab.types import Grid, GridFunction, IntegratorConfig, NormSpec, Thresholds

GAP_NORM = NormSpec(k=-1, mu=1.0)


def test_primitive_and_bilinear_forms_agree(orthogonal_corpus: List[GridFunction]):
    for h in orthogonal_corpus[:3]:
        primitive_form = apply_L(h, 2.0).values
        bilinear_form = apply_L_bilinear_form(h, 2.0).values
        assert np.max(np.abs(primitive_form - bilinear_form)) < 1e-4 * np.max(np.abs(bilinear_form))


def test_primitive_of_image(orthogonal_corpus: List[GridFunction]):
    h = orthogonal_corpus[0]
    image = apply_L(h, 2.0)
    from_image = tail_primitive(image).values
    direct = apply_L_primitive(h, 2.0).values
    assert np.max(np.abs(from_image - direct)) < 1e-2 * np.max(np.abs(direct))


def test_mass_direction_is_in_kernel(grid: Grid):
    direction = mass_direction(2.0, grid)
    assert integrate(direction, grid.nodes) == pytest.approx(1.0, rel=1e-3)
    assert np.max(np.abs(apply_L(direction, 2.0).values)) < 1e-2 * np.max(np.abs(direction.values))


def test_project_mass_orthogonal(corpus: List[GridFunction]):
    for h in corpus:
        projected = project_mass_orthogonal(h, 2.0)
        scale = max(np.max(np.abs(h.values)), 1.0)
        assert abs(integrate(projected, projected.grid.nodes)) < 1e-12 * scale


def test_rayleigh_quotient_bounded_by_minus_one(orthogonal_corpus: List[GridFunction]):
    for h in orthogonal_corpus:
        assert rayleigh_quotient(h, 2.0, GAP_NORM) <= -0.98


def test_rayleigh_quotient_of_polynomial_exponential(fine_grid: Grid):
    h = GridFunction.from_function(fine_grid, lambda y: (4.0 + y - y**2) * np.exp(-y))
    assert abs(integrate(h, fine_grid.nodes)) < 1e-6
    quotient = rayleigh_quotient(h, 2.0, GAP_NORM)
    assert quotient <= -0.98
    assert rayleigh_quotient(3.0 * h, 2.0, GAP_NORM) == pytest.approx(quotient, rel=1e-10)
    assert rayleigh_quotient(-0.5 * h, 2.0, GAP_NORM) == pytest.approx(quotient, rel=1e-10)


def test_rayleigh_quotient_projects_mass_direction(corpus: List[GridFunction], grid: Grid):
    non_orthogonal = corpus[0] + mass_direction(2.0, grid)
    projected = project_mass_orthogonal(non_orthogonal, 2.0)
    quotient = rayleigh_quotient(non_orthogonal, 2.0, GAP_NORM)
    assert quotient == pytest.approx(rayleigh_quotient(projected, 2.0, GAP_NORM), rel=1e-10)
    assert quotient <= -0.98


def test_rayleigh_quotient_zero_norm(grid: Grid):
    with pytest.raises(ZeroNormError):
        _ = rayleigh_quotient(GridFunction.zeros(grid), 2.0, GAP_NORM)
    with pytest.raises(ZeroNormError):
        _ = rayleigh_quotient(mass_direction(2.0, grid), 2.0, GAP_NORM)


def test_evolve_linear_flux_and_decay(orthogonal_corpus: List[GridFunction]):
    h0 = orthogonal_corpus[1]
    cfg = IntegratorConfig(dt=2e-3, t_end=0.2, snapshot_stride=20)
    trajectory = evolve_linear(h0, 2.0, cfg, specs=[GAP_NORM])
    nodes = h0.grid.nodes
    image = apply_L(h0, 2.0, upwind=True)
    flux_scale = integrate(image.with_values(np.abs(image.values)), nodes)
    fluxes = trajectory.observables["first_moment_flux"]
    assert max(abs(flux) for flux in fluxes) <= 1e-2 * flux_scale
    scale = np.max(np.abs(h0.values))
    assert max(abs(value) for value in trajectory.observables["first_moment"]) < 1e-10 * scale

    norms = trajectory.observables[GAP_NORM.label()]
    for t, norm in zip(trajectory.times, norms):
        assert norm <= 1.05 * norms[0] * np.exp(-t)


def test_upwind_and_central_images_agree(orthogonal_corpus: List[GridFunction]):
    h = orthogonal_corpus[0]
    central = apply_L(h, 2.0).values
    upwind = apply_L(h, 2.0, upwind=True).values
    assert np.max(np.abs(central - upwind)) < 1e-3 * np.max(np.abs(central))


def test_gap_survey():
    grid = Grid(n_points=512, y_max=30.0)
    cfg = IntegratorConfig(dt=2e-3, t_end=3.0, snapshot_stride=25)
    reports = gap_survey(2.0, [GAP_NORM], 0, grid, cfg, corpus_size=4, window=(1.0, 3.0))
    assert len(reports) == 1
    report = reports[0]
    assert report.spec == GAP_NORM
    assert report.corpus_size == 4
    assert report.quotient_max <= -0.98
    assert report.fitted_decay > 0.9
    assert report.comparison_gap is None
    with pytest.raises(CoagLabError):
        _ = gap_survey(2.0, [GAP_NORM], 0, grid, cfg, corpus_size=1, comparison_ratio=1.5)


def test_gap_survey_on_reference_grid():
    """Decay rates on the grid of the shipped acceptance configuration, in both weights of each norm."""
    grid = Grid(n_points=1024, y_max=30.0)
    cfg = IntegratorConfig(dt=1e-3, t_end=5.0, snapshot_stride=50)
    thresholds = Thresholds()
    specs = [NormSpec(k=-1, mu=1.0), NormSpec(k=0, mu=0.8), NormSpec(k=1, mu=0.8)]
    reports = gap_survey(
        2.0, specs, 0, grid, cfg, corpus_size=3, window=(1.0, 5.0), comparison_ratio=0.75, jobs=3
    )
    for report in reports:
        label = report.spec.label()
        assert report.fitted_decay >= thresholds.gap_decay[label]
        assert report.comparison_mu == pytest.approx(0.75 * report.spec.mu)
        assert report.comparison_decay > 0.0
        assert report.comparison_gap <= thresholds.gap_comparison



def test_gap_survey_rejects_large_weight(grid: Grid):
    cfg = IntegratorConfig(dt=2e-3, t_end=1.0)
    with pytest.raises(CoagLabError):
        _ = gap_survey(2.0, [NormSpec(k=0, mu=1.5)], 0, grid, cfg, corpus_size=2)


def test_exponent_growth_needs_ordered_weights(orthogonal_corpus: List[GridFunction]):
    cfg = IntegratorConfig(dt=2e-3, t_end=1.0)
    with pytest.raises(CoagLabError):
        _ = exponent_growth(orthogonal_corpus[0], 2.0, 0, 0.8, 0.5, cfg)
    with pytest.raises(CoagLabError):
        _ = exponent_growth(orthogonal_corpus[0], 2.0, 0, 0.5, 0.5, cfg)

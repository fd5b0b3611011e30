"""Tests for rate fits, checks and the end-to-end experiments on small configurations."""

from math import exp, log, sin
from pathlib import Path
from typing import Set

import numpy as np
import pytest

from coaglab.errors import CoagLabError, RateFitError
from coaglab.experiments import (
    make_check,
    run_acceptance,
    run_convergence,
    run_discretization,
    run_fourier_l2,
    run_frame_consistency,
    run_gap,
    run_inequalities,
    run_local_basin,
    run_moment_creation,
    run_oracle_moments,
)
from coaglab.read_files import read_experiment_config
from coaglab.time_integration import evolve
from coaglab.types import ExperimentConfig, ExperimentReport, InitialDatum, Trajectory
from coaglab.utils import fit_rate, initial_datum, normalized_datum


BUMP = InitialDatum(family="bump", parameters={"a": 1.0, "center": 3.0, "width": 1.0})


@pytest.fixture(scope="module")
def small_config(small_config_file: Path) -> ExperimentConfig:
    return read_experiment_config(small_config_file)


@pytest.fixture(scope="module")
def small_trajectory(small_config: ExperimentConfig) -> Trajectory:
    g0 = initial_datum(small_config.initial_datum, small_config.grid.to_grid())
    return evolve(g0, small_config.frame, small_config.integrator)


def check_names(report: ExperimentReport) -> Set[str]:
    return {check.name for check in report.checks}


def test_fit_rate_exponential():
    series = [(0.1 * i, 3.0 * exp(-0.1 * i)) for i in range(51)]
    fit = fit_rate(series, (1.0, 4.0))
    assert fit.rate == pytest.approx(1.0, abs=1e-10)
    assert fit.intercept == pytest.approx(log(3.0), abs=1e-10)
    assert fit.window == pytest.approx((1.0, 4.0))
    assert fit.n_samples == 31
    assert not fit.truncated


def test_fit_rate_constant_and_perturbed():
    constant = fit_rate([(0.1 * i, 2.0) for i in range(20)], (0.0, 2.0))
    assert constant.rate == pytest.approx(0.0, abs=1e-12)
    assert constant.constant
    perturbed = [(0.1 * i, exp(-0.1 * i) * (1.0 + 0.01 * sin(0.1 * i))) for i in range(61)]
    assert fit_rate(perturbed, (0.0, 6.0)).rate == pytest.approx(1.0, abs=0.02)


def test_fit_rate_truncated_at_floor():
    series = [(0.1 * i, exp(-0.1 * i) if i <= 30 else 0.0) for i in range(51)]
    fit = fit_rate(series, (0.0, 5.0))
    assert fit.truncated
    assert fit.n_samples == 31
    assert fit.rate == pytest.approx(1.0, abs=1e-10)


def test_fit_rate_algebraic():
    series = [(float(t), t**-2.0) for t in range(1, 21)]
    assert fit_rate(series, (1.0, 20.0), algebraic=True).rate == pytest.approx(2.0, abs=1e-10)


def test_fit_rate_needs_samples():
    with pytest.raises(RateFitError):
        _ = fit_rate([(0.1 * i, exp(-0.1 * i)) for i in range(51)], (1.0, 1.5))


def test_make_check():
    assert make_check("a", 1.0, 2.0, "<=", "anchor").passed
    assert not make_check("b", 1.0, 2.0, ">=", "anchor").passed
    assert make_check("c", 2.0, 2.0, ">=", "anchor").passed
    nan = make_check("d", float("nan"), 2.0, "<=", "anchor")
    assert not nan.passed
    assert nan.threshold == 2.0


def test_normalized_datum():
    normalized = normalized_datum(InitialDatum(family="exponential", parameters={"a": 8.0, "b": 2.0}))
    assert normalized is not None
    assert normalized.parameters == pytest.approx({"a": 2.0, "b": 1.0})
    gamma = InitialDatum(family="gamma", parameters={"a": 8.0, "p": 1.0, "b": 2.0})
    normalized_gamma = normalized_datum(gamma)
    assert normalized_gamma is not None
    assert normalized_gamma.parameters == pytest.approx({"a": 8.0, "p": 1.0, "b": 2.0})
    assert normalized_datum(BUMP) is None


def test_initial_datum_bump(small_config: ExperimentConfig):
    grid = small_config.grid.to_grid()
    bump = initial_datum(BUMP, grid)
    outside = np.abs(grid.nodes - 3.0) >= 1.0
    assert np.all(bump.values[outside] == 0.0)
    assert np.max(bump.values) == pytest.approx(1.0, rel=1e-3)


def test_run_convergence(small_config: ExperimentConfig, small_trajectory: Trajectory):
    report = run_convergence(small_config, small_trajectory)
    assert report.name == "convergence"
    labels = [spec.label() for spec in small_config.norms]
    assert {f"err_{label}" for label in labels} <= set(report.table)
    columns = {"t", "tau", "m0", "m1", "m2", "entropy", "primitive_entropy", "physical_error"}
    assert columns <= set(report.table)
    assert len(report.table["t"]) == len(small_trajectory.times)
    assert check_names(report) == {f"rate_{label}" for label in labels} | {
        "entropy_primitive_monotone",
        "entropy_normalized_monotone",
        "csiszar_bound",
        "mass_conservation",
        "clipped_mass",
    }
    rate_names = [record.name for record in report.rates]
    assert rate_names[-3:] == ["l2_distance", "primitive_entropy", "physical_error"]
    passed = {check.name: check.passed for check in report.checks}
    assert passed["mass_conservation"]
    assert passed["clipped_mass"]


def test_run_convergence_at_equilibrium(equilibrium_config_file: Path):
    cfg = read_experiment_config(equilibrium_config_file)
    report = run_convergence(cfg)
    assert all(record.status == "constant" for record in report.rates)
    assert not any(name.startswith("rate_") for name in check_names(report))
    assert any("self-similar profile" in note for note in report.summary)


def test_run_convergence_tabulated(tabulated_config_file: Path):
    cfg = read_experiment_config(tabulated_config_file)
    report = run_convergence(cfg)
    assert report.table["m1"][0] == pytest.approx(2.0, rel=0.15)
    assert "mass_conservation" in check_names(report)


def test_run_oracle_moments(small_config: ExperimentConfig, small_trajectory: Trajectory):
    report = run_oracle_moments(small_config, small_trajectory)
    assert report.name == "moments"
    expected = {"m0_oracle", "mass_oracle", "m2_oracle", "exp_moment_oracle", "m0_rate"}
    assert check_names(report) == expected
    passed = {check.name: check.passed for check in report.checks}
    assert passed["m0_oracle"]
    assert passed["mass_oracle"]
    assert len(report.table["m2_oracle"]) == len(small_trajectory.times)
    assert report.table["m2_oracle"][0] == pytest.approx(report.table["m2"][0])


def test_run_moment_creation(small_config: ExperimentConfig, small_trajectory: Trajectory):
    report = run_moment_creation(small_config, small_trajectory)
    assert report.name == "moment_creation"
    rows = report.tables["plateaus"]
    assert [row["nu"] for row in rows] == pytest.approx([0.3, 0.5])
    assert {"exp_moment_nu0.3", "exp_moment_nu0.5"} <= set(report.table)
    assert not report.checks


def test_run_fourier_l2(small_config: ExperimentConfig):
    report = run_fourier_l2(small_config)
    assert report.name == "fourier"
    assert len(report.tables["fourier_checks"]) == 3
    assert check_names(report) == {
        "fourier_oracle_t0.5",
        "fourier_oracle_t1",
        "fourier_oracle_t2",
        "fourier_modulus_t0.5",
        "fourier_modulus_t1",
        "fourier_modulus_t2",
        "rate_l2_solver",
        "rate_l2_oracle",
    }
    assert report.table["l2_oracle"][0] > report.table["l2_oracle"][-1]


def test_run_frame_consistency(small_config: ExperimentConfig):
    report = run_frame_consistency(small_config)
    assert check_names(report) == {"frame_m0", "frame_m2", "frame_final_state", "frame_error_series"}
    assert report.table["tau"][-1] == pytest.approx(small_config.physical_t_end)
    assert max(report.table["error_deviation"]) <= small_config.thresholds.frame_error_series


def test_run_local_basin(small_config: ExperimentConfig):
    report = run_local_basin(small_config)
    rows = report.tables["basin"]
    assert [row["amplitude"] for row in rows] == [0.1, 0.4]
    assert rows[0]["initial_entropy"] < rows[1]["initial_entropy"]
    with pytest.raises(CoagLabError):
        _ = run_local_basin(small_config, amplitudes=[1.5])


def test_run_gap(small_config: ExperimentConfig):
    report = run_gap(small_config)
    assert report.name == "gap"
    labels = ["norm_k-1_mu1", "norm_k0_mu0.8", "norm_k1_mu0.8"]
    assert [row["norm"] for row in report.tables["gap_reports"]] == labels
    passed = {check.name: check.passed for check in report.checks}
    assert passed["gap_quotient_norm_k-1_mu1"]
    assert {f"gap_decay_{label}" for label in labels} <= check_names(report)
    assert {f"gap_comparison_{label}" for label in labels} <= check_names(report)
    assert all(row["comparison_mu"] == pytest.approx(0.75 * row["mu"]) for row in report.tables["gap_reports"])


def test_run_inequalities(small_config: ExperimentConfig):
    report = run_inequalities(small_config)
    assert report.name == "inequalities"
    assert any(line.startswith("hardy: worst margin") for line in report.summary)
    passed = {check.name: check.passed for check in report.checks}
    assert passed["inequality_aizenman_bak"]
    assert passed["inequality_hardy"]
    assert passed["inequality_weighted_poincare"]
    assert "inequality_norm_equivalence" in passed


def test_run_discretization(small_config: ExperimentConfig):
    report = run_discretization(small_config)
    assert check_names(report) == {
        "convolution_n128",
        "convolution_n512",
        "aizenman_bak_direct",
        "quadrature_order_exponential",
        "quadrature_order_gamma",
        "convolution_order",
    }
    assert report.passed()


@pytest.mark.slow
def test_run_acceptance(small_config: ExperimentConfig):
    reports = run_acceptance(small_config, jobs=2)
    assert [report.name for report in reports] == [
        "convergence",
        "moments",
        "moment_creation",
        "frame_consistency",
        "fourier",
        "gap",
        "inequalities",
        "discretization",
    ]


@pytest.mark.slow
def test_run_acceptance_reference_configuration(proj_data_folder: Path):
    """The shipped acceptance configuration passes every check."""
    cfg = read_experiment_config(proj_data_folder / "acceptance.json")
    reports = run_acceptance(cfg, jobs=4)
    assert "frame_consistency" in [report.name for report in reports]
    gap = next(report for report in reports if report.name == "gap")
    assert all(row["fitted_decay"] > 0.0 for row in gap.tables["gap_reports"])
    failed = [f"{report.name}:{check.name}" for report in reports for check in report.checks if not check.passed]
    assert not failed

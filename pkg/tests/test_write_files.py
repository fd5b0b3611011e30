"""Tests writing files."""

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from coaglab.experiments import make_check
from coaglab.profiles_oracles import stationary_profile
from coaglab.types import ExperimentReport, Grid, RateFit, RateRecord, RhsKind, Trajectory
from coaglab.write_results_to_file import write_report, write_reports


@pytest.fixture
def report() -> ExperimentReport:
    """Small hand-made report with a two snapshot trajectory."""
    grid = Grid(n_points=32, y_max=8.0)
    states = [stationary_profile(2.0, grid), stationary_profile(2.0, grid) * 1.01]
    trajectory = Trajectory(frame=RhsKind.SELFSIMILAR, times=[0.0, 0.5], states=states)
    fit = RateFit(rate=1.0, intercept=0.1, window=(0.0, 0.5), rms_residual=0.0, n_samples=10)
    return ExperimentReport(
        name="example",
        trajectory=trajectory,
        table={"t": [0.0, 0.5], "m0": [2.0, 2.02]},
        rates=[RateRecord(name="m0", fit=fit), RateRecord(name="m2", status="not_computed")],
        checks=[
            make_check("small_value", 1e-5, 1e-4, "<=", "value below threshold"),
            make_check("large_value", 0.5, 0.9, ">=", "value above threshold"),
        ],
        tables={"extra": [{"nu": 0.3, "parameters": {"member": 0}}]},
        summary=["hand-made report"],
    )


def test_write_report(report: ExperimentReport, output_folder: Path):
    """Test writing one report into a folder."""
    folder = output_folder / "example"
    write_report(report, folder)

    observables = pd.read_csv(folder / "observables.csv")
    assert list(observables.columns) == ["t", "m0"]
    assert observables["m0"].tolist() == [2.0, 2.02]

    snapshots = sorted((folder / "snapshots").glob("t_*.csv"))
    assert [path.name for path in snapshots] == ["t_0000.csv", "t_0001.csv"]
    first = pd.read_csv(snapshots[0])
    assert np.array_equal(first["value"].to_numpy(), report.trajectory.states[0].values)

    rates = pd.read_csv(folder / "rates.csv")
    assert rates["series"].tolist() == ["m0", "m2"]
    assert rates["status"].tolist() == ["fitted", "not_computed"]
    assert np.isnan(rates["rate"][1])

    checks = pd.read_csv(folder / "checks.csv")
    assert checks["name"].tolist() == ["small_value", "large_value"]
    assert checks["passed"].tolist() == [True, False]

    extra = pd.read_csv(folder / "extra.csv")
    assert extra["parameters"][0] == '{"member": 0}'

    summary = (folder / "summary.txt").read_text(encoding="utf-8")
    assert "Experiment: example" in summary
    assert "[PASS] small_value" in summary
    assert "[FAIL] large_value" in summary
    assert "hand-made report" in summary


def test_write_reports(report: ExperimentReport, output_folder: Path):
    """Test writing several reports with a collected checks file."""
    other = ExperimentReport(name="other", checks=[make_check("other_check", 1.0, 2.0, "<=", "anchor")])
    folders = write_reports([report, other], output_folder)
    assert folders == {"example": output_folder / "example", "other": output_folder / "other"}
    assert (output_folder / "other" / "checks.csv").exists()
    assert not (output_folder / "other" / "observables.csv").exists()

    checks = pd.read_csv(output_folder / "checks.csv")
    assert checks["experiment"].tolist() == ["example", "example", "other"]
    assert checks["name"].tolist() == ["small_value", "large_value", "other_check"]
    summary = (output_folder / "summary.txt").read_text(encoding="utf-8")
    assert "Experiment: example" in summary and "Experiment: other" in summary

"""Functions to write experiment reports to CSV files and a text summary."""

import json
from pathlib import Path
from typing import Any, Dict, List, Sequence

import pandas as pd

from coaglab.types import CheckResult, ExperimentReport, RateRecord

FLOAT_FORMAT: str = "%.17g"


def _write_csv(frame: pd.DataFrame, output_file_path: Path) -> None:
    frame.to_csv(output_file_path, index=False, float_format=FLOAT_FORMAT, encoding="utf-8")


def _cell(value: Any) -> Any:
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return value


def rates_to_frame(rates: Sequence[RateRecord]) -> pd.DataFrame:
    """One row per fitted series: rate, intercept, window, residual, sample count and status."""
    rows = []
    for record in rates:
        fit = record.fit
        rows.append(
            {
                "series": record.name,
                "status": record.status,
                "algebraic": record.algebraic,
                "rate": fit.rate if fit else float("nan"),
                "intercept": fit.intercept if fit else float("nan"),
                "t_lo": fit.window[0] if fit else float("nan"),
                "t_hi": fit.window[1] if fit else float("nan"),
                "rms_residual": fit.rms_residual if fit else float("nan"),
                "n_samples": fit.n_samples if fit else 0,
            }
        )
    columns = ["series", "status", "algebraic", "rate", "intercept", "t_lo", "t_hi", "rms_residual", "n_samples"]
    return pd.DataFrame(rows, columns=columns)


def checks_to_frame(checks: Sequence[CheckResult]) -> pd.DataFrame:
    """One row per asserted check."""
    columns = ["name", "value", "comparison", "threshold", "anchor", "passed"]
    return pd.DataFrame([check.model_dump() for check in checks], columns=columns)


def summary_lines(report: ExperimentReport) -> List[str]:
    """Human readable summary of a report: rates, check verdicts and free-form notes."""
    lines = [f"Experiment: {report.name}"]
    for record in report.rates:
        if record.fit is not None:
            kind = "t^-rate" if record.algebraic else "e^-rate t"
            lines.append(f"  rate {record.name}: {record.fit.rate:.6g} ({kind}, {record.status})")
        else:
            lines.append(f"  rate {record.name}: {record.status}")
    for check in report.checks:
        verdict = "PASS" if check.passed else "FAIL"
        lines.append(
            f"  [{verdict}] {check.name}: {check.value:.6g} {check.comparison} {check.threshold:g}  ({check.anchor})"
        )
    lines.extend(f"  {note}" for note in report.summary)
    return lines


def write_report(report: ExperimentReport, write_folder: Path) -> None:
    """
    Write one experiment report.

    Files: observables.csv (the per-snapshot table), snapshots/t_<index>.csv (y, value) when the report
    carries a trajectory, rates.csv, checks.csv, summary.txt and one <name>.csv per extra table.

    Params:
        * report: Experiment report
        * write_folder: Folder the files are written to, created when missing
    """
    Path(write_folder).mkdir(parents=True, exist_ok=True)
    if report.table:
        _write_csv(pd.DataFrame(report.table), write_folder / "observables.csv")

    if report.trajectory is not None:
        snapshot_folder = write_folder / "snapshots"
        snapshot_folder.mkdir(exist_ok=True)
        for index, state in enumerate(report.trajectory.states):
            frame = pd.DataFrame({"y": state.grid.nodes, "value": state.values})
            _write_csv(frame, snapshot_folder / f"t_{index:04d}.csv")

    _write_csv(rates_to_frame(report.rates), write_folder / "rates.csv")
    _write_csv(checks_to_frame(report.checks), write_folder / "checks.csv")
    for name, rows in report.tables.items():
        frame = pd.DataFrame([{key: _cell(value) for key, value in row.items()} for row in rows])
        _write_csv(frame, write_folder / f"{name}.csv")

    with open(write_folder / "summary.txt", "w", encoding="utf-8") as outfile:
        _ = outfile.write("\n".join(summary_lines(report)) + "\n")


def write_reports(reports: Sequence[ExperimentReport], write_folder: Path) -> Dict[str, Path]:
    """
    Write several reports into one sub folder each, with all checks collected in a top level checks.csv.

    Params:
        * reports: Experiment reports
        * write_folder: Top level output folder

    Returns
    -------
        * folders: Output folder per report name
    """
    Path(write_folder).mkdir(parents=True, exist_ok=True)
    folders: Dict[str, Path] = {}
    for report in reports:
        folders[report.name] = write_folder / report.name
        write_report(report, folders[report.name])

    checks = checks_to_frame([check for report in reports for check in report.checks])
    checks.insert(0, "experiment", [report.name for report in reports for _ in report.checks])
    _write_csv(checks, write_folder / "checks.csv")
    with open(write_folder / "summary.txt", "w", encoding="utf-8") as outfile:
        for report in reports:
            _ = outfile.write("\n".join(summary_lines(report)) + "\n\n")
    return folders

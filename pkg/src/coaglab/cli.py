# pyright: reportMissingParameterType=false
# pyright: reportUnknownParameterType=false
# The click package is unfortunately not typed. Hence the following pyright exemption.
# pyright: reportUnknownMemberType=false
"""CLI for coaglab package."""

import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import click
import click_log

from coaglab.errors import CheckFailedError, CoagLabError, ConfigError
from coaglab.experiments import (
    run_acceptance,
    run_convergence,
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
from coaglab.types import ExperimentConfig, ExperimentReport
from coaglab.utils import initial_datum
from coaglab.write_results_to_file import write_reports

package_logger = logging.getLogger("coaglab")
logger = logging.getLogger(__name__)
_ = click_log.basic_config(package_logger)

Experiment = Callable[[ExperimentConfig, int], List[ExperimentReport]]


def _options(function: Callable[..., Any]) -> Callable[..., Any]:
    """Options shared by every subcommand."""
    options = [
        click_log.simple_verbosity_option(package_logger),
        click.option(
            "-c",
            "--config",
            help="Path to the experiment configuration (JSON)",
            type=click.Path(exists=True, dir_okay=False),
            required=True,
        ),
        click.option(
            "-o",
            "--out",
            help="Output folder, overrides outputDir of the configuration",
            type=click.Path(file_okay=False),
            default=None,
        ),
        click.option(
            "-j",
            "--jobs",
            help="Worker threads for independent runs",
            type=click.IntRange(min=1),
            default=1,
            show_default=True,
        ),
        click.option(
            "--seed",
            help="Seed of the random corpora, overrides the configuration",
            type=click.IntRange(min=0),
            default=None,
        ),
    ]
    for option in reversed(options):
        function = option(function)
    return function


def run_experiment(config: str, out: Optional[str], seed: Optional[int], jobs: int, experiment: Experiment) -> None:
    """
    Read the configuration, run the experiment, write the reports and exit with the check status.

    Exit codes: 0 when every check passes, 1 on a failed check or a numerical error, 2 on a bad
    configuration.
    """
    overrides: Dict[str, Any] = {}
    if out is not None:
        overrides["output_dir"] = out
    if seed is not None:
        overrides["seed"] = seed
    try:
        cfg = read_experiment_config(Path(config), overrides=overrides)
        reports = experiment(cfg, jobs)
        click.echo(f"Writing results to {cfg.output_dir}")
        _ = write_reports(reports, Path(cfg.output_dir))
        failed = [check.name for report in reports for check in report.failed_checks()]
        if failed:
            raise CheckFailedError(f"Failed checks: {', '.join(failed)}", check_name=failed[0])
    except ConfigError as err:
        click.echo(f"Error: {err}", err=True)
        sys.exit(2)
    except CheckFailedError as err:
        click.echo(f"Error: {err}", err=True)
        sys.exit(1)
    except CoagLabError as err:
        click.echo(f"Error: {type(err).__name__}: {err}", err=True)
        sys.exit(1)


@click.group()
@click_log.simple_verbosity_option(package_logger)
def main(args=None):
    """Entry point for console script as configured in pyproject.toml.

    Runs the command line interface and parses arguments and options entered on the console.
    """
    return 0


@click.command()
@_options
@click.option("--basin", is_flag=True, default=False, help="Also run the local basin experiment")
@click.option("--frames", is_flag=True, default=False, help="Also compare the physical and self-similar frames")
def simulate(config, out, jobs, seed, basin, frames):
    r"""Evolve the configured datum and measure its convergence to the self-similar profile.
    Example: \n
    coaglab simulate -c ./data/default.json -o ./output/simulate
    """
    click.echo("Running convergence experiment")

    def experiment(cfg: ExperimentConfig, jobs: int) -> List[ExperimentReport]:
        reports = [run_convergence(cfg, jobs=jobs)]
        if basin:
            click.echo("Running local basin experiment")
            reports.append(run_local_basin(cfg, jobs=jobs))
        if frames:
            click.echo("Running frame consistency experiment")
            reports.append(run_frame_consistency(cfg))
        return reports

    run_experiment(config, out, seed, jobs, experiment)


@click.command()
@_options
def fourier(config, out, jobs, seed):
    """L2 convergence from the solver and from the explicit Fourier solution."""
    click.echo("Running Fourier experiment")
    run_experiment(config, out, seed, jobs, lambda cfg, _: [run_fourier_l2(cfg)])


@click.command()
@_options
def moments(config, out, jobs, seed):
    """Solver moments against their closed forms, and creation of exponential moments."""
    click.echo("Running moment experiments")

    def experiment(cfg: ExperimentConfig, _: int) -> List[ExperimentReport]:
        g0 = initial_datum(cfg.initial_datum, cfg.grid.to_grid())
        trajectory = evolve(g0, cfg.frame, cfg.integrator)
        return [run_oracle_moments(cfg, trajectory), run_moment_creation(cfg, trajectory)]

    run_experiment(config, out, seed, jobs, experiment)


@click.command()
@_options
def gap(config, out, jobs, seed):
    """Spectral gap survey of the linearized operator."""
    click.echo("Running spectral gap survey")
    run_experiment(config, out, seed, jobs, lambda cfg, jobs: [run_gap(cfg, jobs)])


@click.command()
@_options
def inequalities(config, out, jobs, seed):
    """Sweep of the functional inequalities over seeded corpora."""
    click.echo("Running inequality sweep")
    run_experiment(config, out, seed, jobs, lambda cfg, jobs: [run_inequalities(cfg, jobs)])


@click.command(name="all")
@_options
def all_experiments(config, out, jobs, seed):
    """Full acceptance suite."""
    click.echo("Running acceptance suite")
    run_experiment(config, out, seed, jobs, run_acceptance)


main.add_command(simulate)
main.add_command(fourier)
main.add_command(moments)
main.add_command(gap)
main.add_command(inequalities)
main.add_command(all_experiments)

if __name__ == "__main__":
    sys.exit(main())  # pragma: no cover

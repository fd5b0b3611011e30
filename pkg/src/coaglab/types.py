"""Domain specific data types used in coaglab."""

from enum import Enum
from functools import lru_cache
from math import gamma
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

FloatArray = npt.NDArray[np.float64]


def to_camel(string: str) -> str:
    """Return a camel case formated string from snake case string."""

    words = string.split("_")
    return words[0] + "".join(word.capitalize() for word in words[1:])


class CamelModel(BaseModel):
    """Base model accepting both snake case and camel case keys."""

    model_config = ConfigDict(alias_generator=to_camel, populate_by_name=True, extra="forbid")


class RhsKind(Enum):
    """Enumeration of the two forms of the coagulation equation."""

    PHYSICAL = "physical"
    SELFSIMILAR = "selfsimilar"


class Direction(Enum):
    """Direction of a change of variables between the physical and self-similar frames."""

    FW = "fw"
    BW = "bw"


class PowerVariant(Enum):
    """Power weight used by the weighted norms."""

    STANDARD = "standard"
    ALTERNATIVE = "alternative"


@lru_cache(maxsize=64)
def _nodes(n_points: int, y_max: float) -> FloatArray:
    nodes = np.arange(1, n_points + 1, dtype=np.float64) * (y_max / n_points)
    nodes.flags.writeable = False
    return nodes


class Grid(BaseModel):
    """Uniform grid y_i = i * spacing, i = 1..n_points, on (0, y_max]."""

    model_config = ConfigDict(frozen=True)

    n_points: int = Field(gt=1)
    y_max: float = Field(gt=0.0)

    @property
    def spacing(self) -> float:
        return self.y_max / self.n_points

    @property
    def nodes(self) -> FloatArray:
        return _nodes(self.n_points, self.y_max)


class GridFunction(BaseModel):
    """Values of a real function at the nodes of a grid.

    The values are stored read-only. Nonnegativity is not required, perturbations may be signed.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _as_float_array(cls, values: Any) -> FloatArray:
        array = np.array(values, dtype=np.float64)
        array.flags.writeable = False
        return array

    @model_validator(mode="after")
    def _check_values(self) -> "GridFunction":
        if self.values.shape != (self.grid.n_points,):
            raise ValueError(
                f"values has shape {self.values.shape}, expected ({self.grid.n_points},) for the grid"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values contain NaN or infinite entries")
        return self

    @classmethod
    def from_function(cls, grid: Grid, function: Any) -> "GridFunction":
        """Evaluate a vectorized callable at the grid nodes."""
        return cls(grid=grid, values=function(grid.nodes))

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid=grid, values=np.zeros(grid.n_points))

    def with_values(self, values: Any) -> "GridFunction":
        return GridFunction(grid=self.grid, values=values)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return self.with_values(self.values - other.values)

    def __neg__(self) -> "GridFunction":
        return self.with_values(-self.values)

    def __mul__(self, factor: float) -> "GridFunction":
        return self.with_values(self.values * factor)

    __rmul__ = __mul__


class NormSpec(CamelModel):
    """Weighted norm ||.||_{k,mu}: power weight, derivative order k and exponential weight mu."""

    model_config = ConfigDict(frozen=True)

    k: int = Field(ge=-1, le=4)
    mu: float = Field(gt=0.0)
    power_variant: PowerVariant = PowerVariant.STANDARD

    def power(self) -> int:
        """Exponent of the power weight y^power."""
        if self.power_variant is PowerVariant.ALTERNATIVE and self.k >= 0:
            return 2 * self.k
        return 2 * (self.k + 1)

    def label(self) -> str:
        suffix = "_alt" if self.power_variant is PowerVariant.ALTERNATIVE and self.k >= 0 else ""
        return f"norm_k{self.k}_mu{self.mu:g}{suffix}"


class MomentOracleInput(BaseModel):
    """Initial data entering the closed-form moment evolution."""

    m0_initial: float = Field(gt=0.0)
    e_mu_initial: float
    mu: float = Field(ge=0.0)
    mass: float = Field(gt=0.0)

    @model_validator(mode="after")
    def _check_exp_moment(self) -> "MomentOracleInput":
        if self.e_mu_initial < self.m0_initial * (1.0 - 1e-12):
            raise ValueError("e_mu_initial must be at least m0_initial for mu >= 0")
        return self


class FourierState(BaseModel):
    """Value of a Fourier transform at one frequency."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    mu: float
    value: complex


class EntropyReport(BaseModel):
    """Relative entropy with its L1 distance and the Csiszar-type lower bound."""

    entropy: float
    l1_distance: float = Field(ge=0.0)
    csiszar_lower_bound: float


class ExpMomentConditions(BaseModel):
    """Sampled verdict on the finiteness and boundedness conditions of exponential moments."""

    finite_all_t: bool
    uniformly_bounded: bool
    worst_margin: float
    worst_theta: Optional[float] = None
    bounding_nu: Optional[float] = None
    n_samples: int
    sampled: bool = True


class LeibnizReport(BaseModel):
    """Discrepancy between the two sides of the convolution Leibniz identity."""

    k: int
    discrepancy: float
    lhs_max: float
    rhs_max: float


class IntegratorConfig(CamelModel):
    """Fixed-step integrator settings."""

    dt: float = Field(gt=0.0)
    t_end: float = Field(gt=0.0)
    snapshot_stride: int = Field(default=100, gt=0)
    scheme: Literal["rk4"] = "rk4"

    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


class Trajectory(BaseModel):
    """Time ordered snapshots of a solution together with their observables."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    frame: RhsKind
    times: List[float]
    states: List[GridFunction]
    observables: Dict[str, List[float]] = Field(default_factory=dict)
    clipped_mass: float = 0.0

    @model_validator(mode="after")
    def _check_consistency(self) -> "Trajectory":
        assert len(self.times) == len(self.states)
        assert all(len(series) == len(self.times) for series in self.observables.values())
        return self

    def series(self, name: str) -> List[Tuple[float, float]]:
        return list(zip(self.times, self.observables[name]))


class GapReport(BaseModel):
    """Spectral gap measurements for one norm."""

    spec: NormSpec
    rho: float
    quotient_max: float
    fitted_decay: float
    corpus_size: int
    seed: int
    comparison_mu: Optional[float] = None
    comparison_decay: Optional[float] = None
    comparison_gap: Optional[float] = None


class InequalityCase(BaseModel):
    """Both sides of one functional inequality lhs <= rhs."""

    name: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    passed: bool


class RateFit(BaseModel):
    """Least squares fit of log(value) against time (or log time)."""

    rate: float
    intercept: float
    window: Tuple[float, float]
    rms_residual: float
    n_samples: int = Field(ge=10)
    truncated: bool = False
    constant: bool = False


class CheckResult(BaseModel):
    """Outcome of one asserted numerical check."""

    name: str
    value: float
    threshold: float
    comparison: Literal["<=", ">="]
    anchor: str
    passed: bool


class RateRecord(BaseModel):
    """Fitted rate of one series, or the reason it was not fitted."""

    name: str
    fit: Optional[RateFit] = None
    status: Literal["fitted", "truncated", "constant", "not_computed"] = "fitted"
    algebraic: bool = False


class ExperimentReport(BaseModel):
    """Everything one experiment produces: series, rates, asserted checks and extra tables."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    trajectory: Optional[Trajectory] = None
    table: Dict[str, List[float]] = Field(default_factory=dict)
    rates: List[RateRecord] = Field(default_factory=list)
    checks: List[CheckResult] = Field(default_factory=list)
    tables: Dict[str, List[Dict[str, Any]]] = Field(default_factory=dict)
    summary: List[str] = Field(default_factory=list)

    def failed_checks(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def passed(self) -> bool:
        return not self.failed_checks()


# ------------------------------------------------------------------------------------------------
# Experiment configuration
# ------------------------------------------------------------------------------------------------


class GridSettings(CamelModel):
    """Grid resolution."""

    n_points: int = Field(gt=16)
    y_max: float = Field(gt=0.0)

    def to_grid(self) -> Grid:
        return Grid(n_points=self.n_points, y_max=self.y_max)


class InitialDatum(CamelModel):
    """Initial datum descriptor: a named family with parameters, or tabulated data from a CSV file."""

    family: Literal["equilibrium", "exponential", "gamma", "bump", "csv"]
    parameters: Dict[str, float] = Field(default_factory=dict)
    csv_path: Optional[Path] = None

    @model_validator(mode="after")
    def _check_parameters(self) -> "InitialDatum":
        required = {
            "equilibrium": {"rho"},
            "exponential": {"a", "b"},
            "gamma": {"a", "p", "b"},
            "bump": {"a", "center", "width"},
            "csv": set(),
        }[self.family]
        missing = required - set(self.parameters)
        if missing:
            raise ValueError(f"family '{self.family}' needs parameters {sorted(missing)}")
        if self.family == "csv" and self.csv_path is None:
            raise ValueError("family 'csv' needs csv_path")
        return self

    def decay(self) -> float:
        """Exponential decay rate of the datum (infinite for compact support or unknown tails)."""
        if self.family == "equilibrium":
            return 2.0 / self.parameters["rho"]
        if self.family in ("exponential", "gamma"):
            return self.parameters["b"]
        return float("inf")

    def closed_form_moment(self, k: int) -> Optional[float]:
        """Moment of order k of the datum when a closed form exists."""
        p = self.parameters
        if self.family == "equilibrium":
            rho = p["rho"]
            return (4.0 / rho) * gamma(k + 1.0) * (rho / 2.0) ** (k + 1)
        if self.family == "exponential":
            return p["a"] * gamma(k + 1.0) / p["b"] ** (k + 1)
        if self.family == "gamma":
            return p["a"] * gamma(p["p"] + k + 1.0) / p["b"] ** (p["p"] + k + 1)
        return None


class RateWindow(CamelModel):
    """Time window used for rate fits."""

    t_lo: float = Field(ge=0.0)
    t_hi: float = Field(gt=0.0)

    @model_validator(mode="after")
    def _check_order(self) -> "RateWindow":
        if self.t_hi <= self.t_lo:
            raise ValueError("t_hi must be larger than t_lo")
        return self

    def as_tuple(self) -> Tuple[float, float]:
        return (self.t_lo, self.t_hi)


class FourierSettings(CamelModel):
    """Frequency grid and check times of the Fourier experiment."""

    n_frequencies: int = Field(default=256, gt=1)
    mu_max: float = Field(default=20.0, gt=0.0)
    check_times: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0])
    initial_datum: Optional[InitialDatum] = None


class MomentSettings(CamelModel):
    """Exponential moment orders used by the moment experiments."""

    exp_mu: float = Field(default=0.5, gt=0.0)
    exp_t_max: float = Field(default=3.0, gt=0.0)
    compare_t_max: float = Field(default=5.0, gt=0.0)
    nu_fractions: List[float] = Field(default_factory=lambda: [0.3, 0.5, 0.7, 0.9])
    plateau_tolerance: float = Field(default=1e-2, gt=0.0)
    m0_rate_window: RateWindow = Field(default_factory=lambda: RateWindow(t_lo=3.0, t_hi=6.0))


class GapSettings(CamelModel):
    """Corpus, grid and semigroup settings of the gap survey."""

    corpus_size: int = Field(default=50, gt=0)
    specs: List[NormSpec] = Field(
        default_factory=lambda: [NormSpec(k=-1, mu=1.0), NormSpec(k=0, mu=0.8), NormSpec(k=1, mu=0.8)]
    )
    grid: GridSettings = Field(default_factory=lambda: GridSettings(n_points=1024, y_max=30.0))
    dt: float = Field(default=1e-3, gt=0.0)
    snapshot_stride: int = Field(default=50, gt=0)
    rate_window: RateWindow = Field(default_factory=lambda: RateWindow(t_lo=1.0, t_hi=5.0))
    growth_mu: float = Field(default=0.5, gt=0.0)
    growth_nu: float = Field(default=0.8, gt=0.0)
    comparison_ratio: float = Field(default=0.75, gt=0.0, lt=1.0)

    def integrator(self) -> "IntegratorConfig":
        return IntegratorConfig(dt=self.dt, t_end=self.rate_window.t_hi, snapshot_stride=self.snapshot_stride)


class InequalitySettings(CamelModel):
    """Corpora, grids and parameters of the inequality sweep.

    The signed corpus lives on grid; the strictly positive corpus and the exponential equality cases on
    positive_grid, long enough for slowly decaying exponentials.
    """

    corpus_size: int = Field(default=50, gt=0)
    mus: List[float] = Field(default_factory=lambda: [0.5, 1.0, 1.5])
    hardy_orders: List[int] = Field(default_factory=lambda: [0, 1, 2])
    grid: GridSettings = Field(default_factory=lambda: GridSettings(n_points=4096, y_max=30.0))
    positive_grid: GridSettings = Field(default_factory=lambda: GridSettings(n_points=8192, y_max=80.0))
    equality_rates: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    direct_check_points: int = Field(default=128, gt=16)


class Thresholds(CamelModel):
    """Acceptance thresholds."""

    mass_rel: float = 1e-4
    m0_rel: float = 1e-4
    m0_rate_tol: float = 0.02
    m2_rel: float = 1e-3
    exp_moment_rel: float = 1e-3
    fourier_abs: float = 5e-3
    l2_rate: float = 0.45
    gap_quotient: float = -0.98
    gap_decay: Dict[str, float] = Field(
        default_factory=lambda: {"norm_k-1_mu1": 0.95, "norm_k0_mu0.8": 0.90, "norm_k1_mu0.8": 0.85}
    )
    gap_comparison: float = 0.1
    norm_rate: float = 0.9
    norm_rate_alternative: float = 0.45
    entropy_increase: float = 1e-6
    csiszar_slack: float = 1e-8
    aizenman_bak_equality: float = 1e-4
    convolution_rel: float = 1e-10
    quadrature_order: float = 1.9
    clipped_mass_fraction: float = 1e-3
    frame_consistency: float = 1e-3
    frame_error_series: float = 1e-2


class ExperimentConfig(CamelModel):
    """Full description of one run: grid, datum, integrator, observables and thresholds."""

    name: str = "experiment"
    grid: GridSettings
    initial_datum: InitialDatum
    frame: RhsKind = RhsKind.SELFSIMILAR
    integrator: IntegratorConfig
    norms: List[NormSpec] = Field(default_factory=list)
    rho: Optional[float] = Field(default=None, gt=0.0)
    rate_window: RateWindow
    output_dir: Path = Path("output")
    seed: int = Field(default=0, ge=0)
    fourier: FourierSettings = Field(default_factory=FourierSettings)
    moments: MomentSettings = Field(default_factory=MomentSettings)
    gap: GapSettings = Field(default_factory=GapSettings)
    inequalities: InequalitySettings = Field(default_factory=InequalitySettings)
    thresholds: Thresholds = Field(default_factory=Thresholds)
    basin_amplitudes: List[float] = Field(default_factory=lambda: [0.05, 0.1, 0.2, 0.4, 0.8])
    physical_t_end: float = Field(default=1.0, gt=0.0)

    @model_validator(mode="after")
    def _check_window(self) -> "ExperimentConfig":
        if self.rate_window.t_hi > self.integrator.t_end + 1e-12:
            raise ValueError("rate_window.t_hi must not exceed integrator.t_end")
        if self.moments.m0_rate_window.t_hi > self.integrator.t_end + 1e-12:
            raise ValueError("moments.m0_rate_window.t_hi must not exceed integrator.t_end")
        return self

    def resolved_rho(self) -> Optional[float]:
        """Mass of the reference profile: the override, or the closed-form mass of the datum."""
        return self.rho if self.rho is not None else self.initial_datum.closed_form_moment(1)

    @model_validator(mode="after")
    def _check_weights(self) -> "ExperimentConfig":
        rho = self.resolved_rho()
        decay = self.initial_datum.decay()
        if rho is not None:
            for spec in list(self.norms) + list(self.gap.specs):
                # the endpoint mu = 2/rho is admissible for k = -1 and k = 0 only
                limit = 2.0 / rho * (1.0 + 1e-12) if spec.k <= 0 else 2.0 / rho * (1.0 - 1e-12)
                if spec.mu > limit:
                    raise ValueError(f"norm {spec.label()} has mu above the limit 2/rho = {2.0 / rho:g} for k={spec.k}")
            # solutions relax to g_rho, whose tail decays at rate 2/rho
            decay = min(decay, 2.0 / rho)
        y_max = self.grid.y_max
        for spec in self.norms:
            if (2.0 * decay - spec.mu) * y_max < 20.0 * (1.0 - 1e-3):
                raise ValueError(f"norm {spec.label()} violates y_max*(2*decay - mu) >= 20 with decay={decay:g}")
        if (decay - self.moments.exp_mu) * y_max < 20.0 * (1.0 - 1e-3):
            raise ValueError(
                f"moments.exp_mu={self.moments.exp_mu:g} violates y_max*(decay - mu) >= 20 with decay={decay:g}"
            )
        m0 = self.initial_datum.closed_form_moment(0)
        if m0 is not None and self.integrator.dt * (2.0 + m0) >= 1.0:
            raise ValueError(f"integrator.dt violates dt*(2 + M0) < 1 with M0={m0:g}")
        return self

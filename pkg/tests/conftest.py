# -*- coding: utf-8 -*-
"""Root level fixtures for `coaglab`"""
from pathlib import Path
from typing import List

import numpy as np
import pytest
from pytest import TempPathFactory

from coaglab.linear_analysis import build_corpus
from coaglab.profiles_oracles import stationary_profile
from coaglab.types import Grid, GridFunction
from coaglab.utils import positive_profile


@pytest.fixture(scope="session")
def data_folder() -> Path:
    """Path to test data folder"""
    return Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def proj_data_folder() -> Path:
    """Path to project data folder"""
    return Path(__file__).parent.parent / "data"


@pytest.fixture(scope="session")
def small_config_file(data_folder: Path) -> Path:
    """Path to a small configuration that runs every experiment in seconds"""
    return data_folder / "small.json"


@pytest.fixture(scope="session")
def equilibrium_config_file(data_folder: Path) -> Path:
    """Path to a configuration starting from the self-similar profile"""
    return data_folder / "equilibrium.json"


@pytest.fixture(scope="session")
def tabulated_config_file(data_folder: Path) -> Path:
    """Path to a configuration with a tabulated initial datum"""
    return data_folder / "tabulated.json"


@pytest.fixture(scope="session")
def bad_syntax_file(data_folder: Path) -> Path:
    """Path to a configuration with a JSON syntax error"""
    return data_folder / "bad_syntax.json"


@pytest.fixture(scope="session")
def invalid_values_file(data_folder: Path) -> Path:
    """Path to a configuration failing validation"""
    return data_folder / "invalid_values.json"


@pytest.fixture(scope="session")
def grid() -> Grid:
    """Grid of moderate resolution used by most unit tests"""
    return Grid(n_points=1024, y_max=30.0)


@pytest.fixture(scope="session")
def fine_grid() -> Grid:
    """Fine grid for quadrature sensitive identities"""
    return Grid(n_points=16384, y_max=40.0)


@pytest.fixture(scope="session")
def positive_grid() -> Grid:
    """Long grid for slowly decaying positive profiles"""
    return Grid(n_points=8192, y_max=80.0)


@pytest.fixture(scope="session")
def profile(grid: Grid) -> GridFunction:
    """Self-similar profile of mass 2"""
    return stationary_profile(2.0, grid)


@pytest.fixture(scope="session")
def exponential(grid: Grid) -> GridFunction:
    """The datum 8 e^{-2y}"""
    return GridFunction.from_function(grid, lambda y: 8.0 * np.exp(-2.0 * y))


@pytest.fixture(scope="session")
def corpus(grid: Grid) -> List[GridFunction]:
    """Seeded signed corpus, not projected"""
    return build_corpus(grid, seed=0, size=8)


@pytest.fixture(scope="session")
def orthogonal_corpus(grid: Grid) -> List[GridFunction]:
    """Seeded mass orthogonal corpus around g_2"""
    return build_corpus(grid, seed=0, size=8, rho=2.0)


@pytest.fixture(scope="session")
def positive_corpus(positive_grid: Grid) -> List[GridFunction]:
    """Seeded strictly positive profiles"""
    rng = np.random.default_rng([0, 1])
    return [positive_profile(rng, positive_grid) for _ in range(6)]


@pytest.fixture(scope="function")
def output_folder(tmp_path_factory: TempPathFactory) -> Path:
    """Path to temporary data folder used to write output files to in a test"""
    return tmp_path_factory.mktemp("output_", numbered=True)

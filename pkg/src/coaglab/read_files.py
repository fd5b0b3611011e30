"""Functions to read experiment configurations and tabulated initial data."""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union, cast

import numpy as np
import pandas as pd
from pydantic import ValidationError

from coaglab.errors import ConfigError
from coaglab.types import ExperimentConfig, FloatArray

default_settings_file: Path = Path(__file__).parent / "settings" / "default_settings.json"


def read_json_file(file_path: Path) -> Dict[str, Any]:
    """
    Read a JSON file, reporting syntax errors with line and column.

    Params:
        * file_path: Path to the JSON file

    Returns
    -------
        * data: Parsed content with snake case keys
    """
    try:
        with open(file_path, encoding="utf-8") as f:
            data = json.load(f)
    except OSError as err:
        raise ConfigError(f"{file_path}: cannot read file ({err.strerror})") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"{file_path}:{err.lineno}:{err.colno}: {err.msg}") from err
    if not isinstance(data, dict):
        raise ConfigError(f"{file_path}: top level must be a JSON object")
    return convert_keys_to_snake_case(cast(Dict[str, Any], data))


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Merge nested dictionaries; values in override win, nested objects are merged key by key."""
    merged: Dict[str, Any] = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(cast(Dict[str, Any], merged[key]), cast(Dict[str, Any], value))
        else:
            merged[key] = value
    return merged


def format_validation_error(err: ValidationError) -> str:
    """One line per failing field, each prefixed with the dotted key path."""
    lines: List[str] = []
    for error in err.errors():
        location = ".".join(str(part) for part in error["loc"]) or "<root>"
        lines.append(f"{location}: {error['msg']}")
    return "\n".join(lines)


def read_experiment_config(
    config_file: Path,
    overrides: Optional[Dict[str, Any]] = None,
    settings_file: Path = default_settings_file,
) -> ExperimentConfig:
    """
    Read an experiment configuration on top of the packaged defaults.

    Params:
        * config_file: Path to the JSON configuration
        * overrides: Values that replace the file content (e.g. output_dir and seed from the CLI)
        * settings_file: Path to the default settings

    Returns
    -------
        * config: Validated experiment configuration
    """
    data = deep_merge(read_json_file(settings_file), read_json_file(config_file))
    if overrides:
        data = deep_merge(data, convert_keys_to_snake_case(overrides))
    csv_path = data.get("initial_datum", {}).get("csv_path")
    if csv_path is not None and not Path(csv_path).is_absolute():
        data["initial_datum"]["csv_path"] = str(Path(config_file).parent / csv_path)
    try:
        return ExperimentConfig(**data)
    except ValidationError as err:
        raise ConfigError(f"{config_file}: invalid configuration\n{format_validation_error(err)}") from err


def read_tabulated_datum(csv_file: Path) -> Tuple[FloatArray, FloatArray]:
    """
    Read a tabulated density with columns y and value.

    Params:
        * csv_file: Path to the CSV file

    Returns
    -------
        * y: Increasing abscissae
        * values: Density values
    """
    try:
        table = pd.read_csv(csv_file)
    except (OSError, pd.errors.ParserError) as err:
        raise ConfigError(f"{csv_file}: cannot read tabulated datum ({err})") from err
    if not {"y", "value"} <= set(table.columns):
        raise ConfigError(f"{csv_file}: expected columns 'y' and 'value', found {list(table.columns)}")
    table = table.sort_values("y")
    y = table["y"].to_numpy(dtype=np.float64)
    values = table["value"].to_numpy(dtype=np.float64)
    if len(y) < 2 or not np.all(np.isfinite(values)) or np.any(values < 0.0):
        raise ConfigError(f"{csv_file}: tabulated datum needs at least two finite nonnegative values")
    return y, values


def camel_to_snake(string: str) -> str:
    """Convert a camel case string to snake case."""
    return "".join([f"_{c.lower()}" if c.isupper() else c for c in string]).lstrip("_")


def convert_keys_to_snake_case(data: Dict[str, Any]) -> Dict[str, Any]:
    """Convert keys in a nested dictionary from camel case to snake case."""
    return cast(Dict[str, Any], _convert_keys_to_snake_case(data))


def _convert_keys_to_snake_case(
    data: Union[Dict[str, Any], List[Any]],
) -> Union[Dict[str, Any], List[Any]]:
    if isinstance(data, dict):
        return {
            camel_to_snake(key): _convert_keys_to_snake_case(value) if isinstance(value, (dict, list)) else value
            for key, value in data.items()
        }
    return [_convert_keys_to_snake_case(value) if isinstance(value, (dict, list)) else value for value in data]

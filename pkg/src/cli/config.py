"""
Experiment Configuration Module

This module loads, merges and validates the JSON experiment configuration
used by every CLI command. User values are merged over DEFAULT_CONFIG;
validation reports offending schema paths such as `$.grid.points`.
"""

import copy
import json
import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

from src.harmonic_analysis.algebra import DEFAULT_AXIS_CAP, PRESETS, RootSystem, WeightedGrid, build_root_system
from src.harmonic_analysis.exceptions import ConfigInvalid, DunklError
from src.harmonic_analysis.semigroups import TimeLadder
from src.harmonic_analysis.transform import DEFAULT_BOUNDARY_TOL, DunklTransformer

# Default experiment configuration
DEFAULT_CONFIG = {
    "experiment_id": None,
    "root_system": {"preset": "rank1", "k": 1.0},
    "grid": {"extent": 8.0, "points": 256},
    "ladder": {"t_min": 1e-3, "t_max": 10.0, "count": 24},
    "tolerances": {"quadrature": 1e-8, "boundary": DEFAULT_BOUNDARY_TOL, "series": 1e-9},
    "kernel": {"nmax": 24, "radius": 6.0, "mode": None},
    "seed": 0,
    "workers": None,
    "output_dir": "runs",
    "suite": {"refine": True},
    "atoms": {"count": 50, "q": 2.0, "M": 1, "radius_min": 0.5, "radius_max": 1.5},
    "decomposition": {"M": 1, "j_floor": 1e-6, "slack": 1.2, "extent": 32.0, "points": 512},
}

REQUIRED_KEYS = ["experiment_id", "root_system", "grid"]

# Expected type of every leaf under each section
SECTION_TYPES = {
    "root_system": {"preset": str, "k": (int, float, list), "dimension": int, "roots": list, "multiplicities": list},
    "grid": {"extent": (int, float), "points": int},
    "ladder": {"t_min": (int, float), "t_max": (int, float), "count": int},
    "tolerances": {"quadrature": (int, float), "boundary": (int, float), "series": (int, float)},
    "kernel": {"nmax": int, "radius": (int, float), "mode": (str, type(None))},
    "suite": {"refine": bool},
    "atoms": {"count": int, "q": (int, float), "M": int, "radius_min": (int, float), "radius_max": (int, float)},
    "decomposition": {"M": int, "j_floor": (int, float), "slack": (int, float), "extent": (int, float),
                      "points": int},
}


def merge_config(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """
    Recursively merge user values over a base configuration.

    Args:
        base (Dict[str, Any]): Base configuration (not modified)
        override (Dict[str, Any]): User configuration

    Returns:
        Dict[str, Any]: Merged configuration
    """
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def validate_config(raw: Dict[str, Any]) -> Tuple[bool, List[str]]:
    """
    Validate a raw (unmerged) configuration.

    Args:
        raw (Dict[str, Any]): Parsed JSON configuration

    Returns:
        Tuple[bool, List[str]]: (is_valid, list_of_offending_paths)
    """
    if not isinstance(raw, dict):
        return False, ["$"]
    errors = [f"$.{key}" for key in REQUIRED_KEYS if key not in raw]
    if "experiment_id" in raw and not (isinstance(raw["experiment_id"], str) and raw["experiment_id"]):
        errors.append("$.experiment_id")

    for section, fields in SECTION_TYPES.items():
        if section not in raw:
            continue
        value = raw[section]
        if not isinstance(value, dict):
            errors.append(f"$.{section}")
            continue
        for key, item in value.items():
            expected = fields.get(key)
            allowed = expected if isinstance(expected, tuple) else (expected,)
            if expected is None or isinstance(item, bool) and bool not in allowed:
                errors.append(f"$.{section}.{key}")
            elif not isinstance(item, expected):
                errors.append(f"$.{section}.{key}")

    system = raw.get("root_system")
    if isinstance(system, dict):
        family = str(system.get("preset", "")).partition(":")[0]
        if family not in PRESETS:
            errors.append("$.root_system.preset")
    grid = raw.get("grid")
    if isinstance(grid, dict):
        if _is_number(grid.get("extent")) and grid["extent"] <= 0:
            errors.append("$.grid.extent")
        if isinstance(grid.get("points"), int) and not 5 <= grid["points"] <= DEFAULT_AXIS_CAP:
            errors.append("$.grid.points")
    decomposition = raw.get("decomposition")
    if isinstance(decomposition, dict):
        if _is_number(decomposition.get("extent")) and decomposition["extent"] <= 0:
            errors.append("$.decomposition.extent")
        if isinstance(decomposition.get("points"), int) and not 5 <= decomposition["points"] <= DEFAULT_AXIS_CAP:
            errors.append("$.decomposition.points")
    ladder = raw.get("ladder")
    if isinstance(ladder, dict):
        t_min, t_max = ladder.get("t_min", 1e-3), ladder.get("t_max", 10.0)
        if _is_number(t_min) and _is_number(t_max) and not 0 < t_min < t_max:
            errors.append("$.ladder.t_max")
        if isinstance(ladder.get("count"), int) and ladder["count"] < 2:
            errors.append("$.ladder.count")
    for key in ("seed", "workers"):
        if key == "workers" and raw.get(key, 0) is None:
            continue
        if key in raw and not (isinstance(raw[key], int) and not isinstance(raw[key], bool) and raw[key] >= 0):
            errors.append(f"$.{key}")
    if "output_dir" in raw and not isinstance(raw["output_dir"], str):
        errors.append("$.output_dir")

    errors = sorted(set(errors), key=errors.index)
    if errors:
        logging.warning(f"Invalid configuration entries: {errors}")
    return len(errors) == 0, errors


def load_config(path: str) -> Dict[str, Any]:
    """
    Read, validate and merge a JSON configuration file.

    Args:
        path (str): Path to the JSON file

    Returns:
        Dict[str, Any]: Configuration merged over DEFAULT_CONFIG

    Raises:
        ConfigInvalid: If the file is missing, not JSON, or fails validation
    """
    try:
        if not os.path.exists(path):
            raise ConfigInvalid(f"Configuration file not found: {path}", "$")
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except json.JSONDecodeError as e:
        logging.error(f"Error parsing configuration {path}: {str(e)}")
        raise ConfigInvalid(f"Configuration is not valid JSON: {str(e)}", "$")

    is_valid, errors = validate_config(raw)
    if not is_valid:
        raise ConfigInvalid(f"Invalid configuration at {errors[0]}", errors[0])
    logging.info(f"Loaded configuration '{raw['experiment_id']}' from {path}")
    return merge_config(DEFAULT_CONFIG, raw)


@dataclass
class ExperimentConfig:
    """Merged configuration with builders for the library objects it describes."""

    values: Dict[str, Any]

    @classmethod
    def from_file(cls, path: str, overrides: Optional[Dict[str, Any]] = None) -> "ExperimentConfig":
        values = load_config(path)
        return cls(merge_config(values, {k: v for k, v in (overrides or {}).items() if v is not None}))

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "ExperimentConfig":
        is_valid, errors = validate_config(raw)
        if not is_valid:
            raise ConfigInvalid(f"Invalid configuration at {errors[0]}", errors[0])
        return cls(merge_config(DEFAULT_CONFIG, raw))

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @property
    def experiment_id(self) -> str:
        return self.values["experiment_id"]

    @property
    def seed(self) -> int:
        return int(self.values["seed"])

    @property
    def workers(self) -> int:
        workers = self.values["workers"]
        return max(1, int(workers)) if workers else max(1, os.cpu_count() or 1)

    def root_system(self) -> RootSystem:
        """
        Build the configured root system.

        Raises:
            ConfigInvalid: If the preset parameters do not define a root system
        """
        spec = self.values["root_system"]
        try:
            return build_root_system(spec["preset"], spec.get("k"), roots=spec.get("roots"),
                                     multiplicities=spec.get("multiplicities"), dimension=spec.get("dimension"))
        except (DunklError, ValueError) as e:
            logging.error(f"Error building root system {spec['preset']}: {str(e)}")
            raise ConfigInvalid(f"Invalid root system: {str(e)}", "$.root_system")

    def grid(self, rs: Optional[RootSystem] = None) -> WeightedGrid:
        spec = self.values["grid"]
        return WeightedGrid.build(rs or self.root_system(), float(spec["extent"]), int(spec["points"]))

    def decomposition_grid(self, rs: Optional[RootSystem] = None) -> WeightedGrid:
        """Grid for atomic decomposition, wide enough for the tallest tents."""
        spec = self.values["decomposition"]
        return WeightedGrid.build(rs or self.root_system(), float(spec["extent"]), int(spec["points"]))

    def transformer(self, rs: RootSystem, grid: WeightedGrid) -> DunklTransformer:
        """Transform matrices whose decay checks use tolerances.boundary."""
        return DunklTransformer.build(rs, grid, boundary_tol=float(self.values["tolerances"]["boundary"]))

    def ladder(self) -> TimeLadder:
        spec = self.values["ladder"]
        return TimeLadder.geometric(float(spec["t_min"]), float(spec["t_max"]), int(spec["count"]))

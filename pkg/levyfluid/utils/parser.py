"""Run config parsing: TOML configs, network documents and query vectors.

The main methods here are:
- expand_variables_in_dict()
- load_run_config()
- parse_vector().
"""

import copy
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import tomli

from ..model import DimensionError, PrioritySpec, SpecError, TreeNetworkSpec


logger = logging.getLogger(__name__)


# Keys whose values are never treated as variable names.
NETWORK_KEY = 'network'
PRIORITY_KEY = 'rate'
VECTOR_SEP = ','


class ConfigError(SpecError):
    """A run config or command argument is malformed."""

    pass


def expand_variables_in_dict(config_dict: dict) -> dict:
    """Replace any 'variable' values in a dict with their values.

    Given a dictionary of key:val pairs where some values are the names of
    top-level keys, this method will replace those values with the
    top-level values, at any depth (including inside lists).

    E.g.: Given:
        seed = 7
        [mc-compare]
        seed = 'seed'
    , it will expand out into:
        seed = 7
        [mc-compare]
        seed = 7

    Args:
        config_dict: dictionary to expand variables in.

    Returns:
        a copy of config_dict, with variables expanded out.
    """
    expanded = copy.deepcopy(config_dict)
    return _expand_recursively(expanded, expanded)


def _expand_recursively(top: dict, node: Any) -> Any:
    if isinstance(node, dict):
        for key in node:
            node[key] = _expand_recursively(top, node[key])
        return node
    if isinstance(node, list):
        return [_expand_recursively(top, item) for item in node]
    if isinstance(node, str) and node in top and \
            not isinstance(top[node], str):
        logger.debug(f"Expanding {node} into {top[node]}.")
        return copy.deepcopy(top[node])
    return node


@dataclass
class RunConfig:
    """A parsed run config.

    Attributes:
        network: the network (or priority system) to analyse.
        options: top-level scalar options (seed, paths, delta, out, ...).
        sections: per-command option tables, keyed by command name.
    """

    network: Optional[TreeNetworkSpec | PrioritySpec] = None
    options: dict = field(default_factory=dict)
    sections: dict = field(default_factory=dict)

    def for_command(self, command: str) -> dict:
        """Options for command: top-level values overridden by its table."""
        merged = dict(self.options)
        merged.update(self.sections.get(command, {}))
        return merged


def load_run_config(path: str) -> RunConfig:
    """Load a TOML run config.

    Args:
        path: config file path. A string 'network' entry is a JSON path,
            resolved relative to the config file.

    Returns:
        RunConfig.

    Raises:
        ConfigError if the file cannot be read or parsed.
    """
    logger.debug(f"Loading run config from {path}")
    try:
        with open(path, 'rb') as file:
            raw = tomli.load(file)
    except (OSError, tomli.TOMLDecodeError) as err:
        reason = f"Cannot read run config {path}: {err}"
        logger.error(reason)
        raise ConfigError(reason) from err

    config_dict = expand_variables_in_dict(raw)
    base_dir = os.path.dirname(os.path.abspath(path))

    network = None
    if NETWORK_KEY in config_dict:
        network = load_network(config_dict.pop(NETWORK_KEY), base_dir)
    options = {key: val for key, val in config_dict.items()
               if not isinstance(val, dict)}
    sections = {key: val for key, val in config_dict.items()
                if isinstance(val, dict)}
    return RunConfig(network, options, sections)


def load_network(value: Any, base_dir: str = '.'
                 ) -> TreeNetworkSpec | PrioritySpec:
    """Build a network from an inline dict or a JSON file path.

    Documents with a 'rate' key describe a priority system.
    """
    if isinstance(value, str):
        file_path = value if os.path.isabs(value) \
            else os.path.join(base_dir, value)
        try:
            with open(file_path, 'r') as file:
                value = json.load(file)
        except (OSError, json.JSONDecodeError) as err:
            reason = f"Cannot read network {file_path}: {err}"
            logger.error(reason)
            raise ConfigError(reason) from err
    if not isinstance(value, dict):
        reason = f"network must be a table or a JSON path, got {value!r}"
        logger.error(reason)
        raise ConfigError(reason)
    if PRIORITY_KEY in value:
        return PrioritySpec.from_dict(value)
    return TreeNetworkSpec.from_dict(value)


def parse_vector(value: Any, n: Optional[int] = None,
                 name: str = 'vector') -> np.ndarray:
    """Parse a query vector.

    Accepts comma-separated decimals ('0.5,1'), sequences or a scalar.

    Args:
        value: the raw argument.
        n: expected dimension, if known.
        name: argument name, for error messages.

    Returns:
        float array.

    Raises:
        ConfigError if value is not numeric or negative.
        DimensionError if the length does not match n.
    """
    try:
        if isinstance(value, str):
            items = [item for item in value.split(VECTOR_SEP) if item.strip()]
            vector = np.array([float(item) for item in items])
        else:
            vector = np.atleast_1d(np.asarray(value, dtype=float)).reshape(-1)
    except (TypeError, ValueError) as err:
        reason = f"{name} must be comma-separated decimals, got {value!r}"
        logger.error(reason)
        raise ConfigError(reason) from err

    if np.any(np.isnan(vector)) or np.any(vector < 0):
        reason = f"{name} entries must be >= 0, got {vector.tolist()}"
        logger.error(reason)
        raise ConfigError(reason)
    if n is not None and vector.shape[0] != n:
        reason = (f"{name} has {vector.shape[0]} entries but the network has "
                  f"{n} stations")
        logger.error(reason)
        raise DimensionError(reason)
    return vector

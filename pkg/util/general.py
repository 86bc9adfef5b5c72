"""Utility module for general functions"""

import json
import numpy as np


def log_dict(dict: dict, file: str, mode: str = "w"):
    """
    This function is used for logging a dict.
    Mainly, we may use it for logging {paths} and {settings}.
    """
    with open(file, mode) as f:
        json.dump(dict, f, indent=4)


def check_type(var, var_type, name: str = "Variable"):
    """
    This function checks whether a variable is of the appropriate type.
    `var_type` may be a type or a tuple of types. Booleans never pass
    as numbers.
    """

    types = var_type if isinstance(var_type, tuple) else (var_type,)
    is_bool = isinstance(var, bool) and bool not in types

    if is_bool or not isinstance(var, types):
        raise TypeError(f"{name} is not of the appropriate type. "
                        f"Should be {var_type}, not {type(var)}")
    else:
        return True


def extract_json(json_path: str, verbose: bool = False):
    """
    This function is used for extracting data from .json files.
    Primarily, it is used for extracting config file data.
    Parse errors are reported with their line and column.
    """

    if not json_path.endswith('.json'):
        raise ValueError("\nThe config file should be of the .json type")
    else:
        with open(json_path) as json_data_file:
            try:
                data = json.load(json_data_file)
            except json.JSONDecodeError as err:
                raise ValueError(f"\nMalformed JSON in '{json_path}' "
                                 f"(line {err.lineno}, column {err.colno}): "
                                 f"{err.msg}") from err

        if verbose: print(data)

        return data


def parse_override(item: str) -> tuple[str, object]:
    """
    This function parses a `key=value` command-line override.
    Values are read as JSON when possible (numbers, lists, booleans)
    and kept as plain strings otherwise.
    """

    if "=" not in item:
        raise ValueError(f"\nOverride '{item}' should be of the form "
                         "key=value.")

    key, raw = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ValueError(f"\nOverride '{item}' has an empty key.")

    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw

    return key, value


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """
    This function derives an independent random stream from a master
    seed and a tuple of integer keys (stage, instance, ...).
    """

    return np.random.default_rng([int(seed), *[int(key) for key in keys]])

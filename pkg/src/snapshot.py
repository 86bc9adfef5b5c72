"""BEE - Snapshot module

This module saves and loads pretrained bandit states (one per metric)
together with the context-network parameters theta as versioned JSON.
Floats are written at full precision, so save -> load -> save produces
byte-identical files.
"""

# Path setup
import os
import sys

root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
src = os.path.join(root, "src")
if root not in sys.path: sys.path.append(root)
if src not in sys.path: sys.path.append(src)

# File-specific imports
import json                                                     # noqa: E402
from dataclasses import dataclass                               # noqa: E402
from typing import Optional                                     # noqa: E402
import numpy as np                                              # noqa: E402
from attribution.baselines import BaselineType, BASELINE_TYPES  # noqa: E402
from bandit.thompson import (ArmState, BanditState,             # noqa: E402
                             SolverSettings)
from metrics.ids import Direction, RewardKind                   # noqa: E402
from models.context import ContextNetwork, build_context_network  # noqa

SNAPSHOT_VERSION = 1


@dataclass
class Snapshot:
    """Pretrained states per metric id and the model seed they belong to."""

    states: dict
    model_seed: int


def _theta_dict(network: ContextNetwork) -> dict:
    return {name: value.tolist()
            for name, value in network.parameters.items()}


def snapshot_dict(states: dict, model_seed: int) -> dict:
    """
    This function converts bandit states into the snapshot layout.
    A network shared by every state is stored once at the top level;
    otherwise every metric carries its own theta.
    """

    if not states:
        raise ValueError("Cannot snapshot an empty set of states.")

    networks = [state.network for state in states.values()]
    shared = all(network is networks[0] for network in networks)

    data = {"version": SNAPSHOT_VERSION, "model_seed": int(model_seed)}
    if shared and networks[0] is not None:
        data["context"] = {"inputShape": list(networks[0].input_shape)}
        data["theta"] = _theta_dict(networks[0])
    data["metrics"] = {}

    for metric_id, state in states.items():
        entry = {
            "direction": state.direction.value,
            "kind": state.kind.value,
            "arms": {kind.value: {"g": state.arms[kind].g.tolist(),
                                  "q": state.arms[kind].q.tolist()}
                     for kind in BASELINE_TYPES},
            "history": [float(score) for score in state.score_history],
        }
        if not shared and state.network is not None:
            entry["context"] = {"inputShape": list(state.network.input_shape)}
            entry["theta"] = _theta_dict(state.network)
        data["metrics"][metric_id] = entry

    return data


def save_snapshot(states: dict, model_seed: int, path: str):
    """This function writes the snapshot JSON file."""

    data = snapshot_dict(states, model_seed)

    try:
        text = json.dumps(data, indent=4, allow_nan=False)
    except ValueError as err:
        raise ValueError("Snapshot contains non-finite values and can't be "
                         "saved.") from err

    with open(path, "w") as f:
        f.write(text + "\n")


def _reject_constant(name: str):
    raise ValueError(f"Non-finite value '{name}' in snapshot.")


def _array(values, name: str) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(array)):
        raise ValueError(f"Non-finite values in snapshot field '{name}'.")
    return array


def _network_from(entry: dict, name: str) -> Optional[ContextNetwork]:
    if "theta" not in entry:
        return None

    theta = {key: _array(value, f"{name}.{key}")
             for key, value in entry["theta"].items()}
    input_shape = tuple(entry["context"]["inputShape"])

    # Structure follows from the parameter shapes
    channels = (theta["stage1.weight"].shape[0],
                theta["stage3.weight"].shape[0])
    network = build_context_network(0, input_shape,
                                     theta["head.weight"].shape[0], channels)
    network.set_parameters(theta)

    return network


def load_snapshot(path: str, seed: int = 0,
                  solver: Optional[SolverSettings] = None) -> Snapshot:
    """
    This function reads a snapshot file back into bandit states. Every
    state gets a fresh random stream seeded by `seed` and its metric id
    position. Version mismatches, truncated files and non-finite values
    are rejected with a ValueError.
    """

    if not os.path.exists(path):
        raise FileNotFoundError(f"Snapshot '{path}' doesn't exist. "
                                "Run the 'pretrain' command first.")

    with open(path) as f:
        text = f.read()

    try:
        data = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as err:
        raise ValueError(f"Snapshot '{path}' is truncated or malformed "
                         f"(line {err.lineno}, column {err.colno}): "
                         f"{err.msg}") from err

    if not isinstance(data, dict) or "version" not in data:
        raise ValueError(f"Snapshot '{path}' has no version field.")
    if data["version"] != SNAPSHOT_VERSION:
        raise ValueError(f"Snapshot version {data['version']} doesn't match "
                         f"the supported version {SNAPSHOT_VERSION}.")

    if not isinstance(data.get("metrics"), dict):
        raise ValueError(f"Snapshot '{path}' should hold a 'metrics' "
                         "object.")

    try:
        shared = _network_from(data, "theta")
        states = {}
        for index, (metric_id, entry) in enumerate(data["metrics"].items()):
            arms = {}
            for kind in BASELINE_TYPES:
                arm = entry["arms"][kind.value]
                arms[BaselineType(kind)] = ArmState(
                    _array(arm["g"], f"{metric_id}.{kind.value}.g"),
                    _array(arm["q"], f"{metric_id}.{kind.value}.q"))

            network = _network_from(entry, metric_id) or shared
            history = _array(entry["history"], f"{metric_id}.history")

            states[metric_id] = BanditState(
                metric_id, Direction(entry["direction"]),
                RewardKind(entry["kind"]), arms, network,
                history.tolist(), np.random.default_rng([seed, index]),
                False, solver or SolverSettings())
    except KeyError as err:
        raise ValueError(f"Snapshot '{path}' misses field {err}.") from err

    return Snapshot(states, int(data["model_seed"]))

"""BEE - Initialization module

This module performs several tasks, which may all
be called from the `initialization` function:
- Extract settings from a `config.json` file and merge them with the
  built-in defaults, the BEE_SEED environment variable and the
  command-line overrides.
- Check the settings, including the layer set against the model.
- Setup the paths dictionary inside the output directory.

`prepare_run` then builds the shared objects of a run (model, data
splits, TrainData pools, map builder and metrics) from the settings.
"""

# Path setup
import os
import sys

root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
src = os.path.join(root, "src")
if root not in sys.path: sys.path.append(root)
if src not in sys.path: sys.path.append(src)

# File-specific imports
import copy                                                     # noqa: E402
import warnings                                                 # noqa: E402
from dataclasses import dataclass                               # noqa: E402
from typing import Optional                                     # noqa: E402
from util.general import extract_json, log_dict                 # noqa: E402
from util.style import print_result, print_header               # noqa: E402
from util.checks import check_settings                          # noqa: E402
from models import build_model, DifferentiableModel             # noqa: E402
from attribution.builder import (MapBuilder, build_pools,       # noqa: E402
                                 resolve_layers, check_layer_set)
from metrics import get_metric                                  # noqa: E402
from dataset import synth_dataset, Dataset                      # noqa: E402

DEFAULT_SETTINGS = {
    "model": "tiny_cnn",
    "modelSeed": 0,
    "masterSeed": 0,
    "metric": "NEG",
    "metrics": ["POS", "NEG", "INS", "DEL", "ADP", "PIC", "SIC", "AIC"],
    "strategy": "fBEE",
    "T": 8,
    "n": 10,
    "layers": [-1],
    "psi": "product",
    "epochs": 20,
    "trainSize": 256,
    "testSize": 32,
    "noise": 0.05,
    "jitter": 1.0,
    "trainDataPool": 16,
    "trainDataAverage": 4,
    "contextDim": 16,
    "normalSigmaRange": [0.1, 0.5],
    "blurSigmaRange": [0.0, 50.0],
    "sicBlurSigma": 2.0,
    "maskFill": 0.0,
    "classReference": "target",
    "percentScale": True,
    "stepSize": 0.001,
    "solverIterations": 25,
    "solverTolerance": 1e-6,
    "sharedContext": True,
    "historyTail": 100,
    "methods": ["IG", "ACT-IG", "IG-fBEE", "pBEE", "fBEE", "nBEE", "ncBEE"],
    "strategies": ["fBEE", "pBEE", "nBEE", "ncBEE", "Normal", "Uniform",
                   "Blur", "Constant", "TrainData"],
    "iterations": 20,
    "ablationT": [1, 2, 4, 8],
    "ablationN": [2, 5, 10],
    "outputDir": "output",
}


@dataclass
class RunContext:
    """Shared objects of a run, derived from the settings."""

    model: DifferentiableModel
    train: Dataset
    test: Dataset
    pools: dict
    builder: MapBuilder
    metrics: dict

    def builder_for(self, settings: dict) -> MapBuilder:
        """
        This function returns a map builder for other map settings
        (e.g. layer 0 for IG-fBEE), gathering missing TrainData pools.
        """

        layers = resolve_layers(self.model, settings["layers"])
        missing = [layer for layer in layers if layer not in self.pools]
        if missing:
            self.pools.update(build_pools(
                self.model, self.train.inputs, missing,
                settings["trainDataPool"]))

        return MapBuilder(self.model, settings, self.pools)


def extract_settings(config_data: dict, overrides: Optional[dict] = None) \
        -> dict:
    """
    This function merges the built-in defaults, the config file data,
    the BEE_SEED environment variable and the command-line overrides
    (in that order of precedence). Missing keys take their default with
    a warning; unknown keys are rejected.
    """

    settings = copy.deepcopy(DEFAULT_SETTINGS)

    for source, data in (("config file", config_data),
                         ("overrides", overrides or {})):
        for key, value in data.items():
            if key.startswith("_"):
                continue
            if key not in DEFAULT_SETTINGS:
                raise ValueError(f"\nUnknown setting '{key}' in {source}. "
                                 "Check config_template.json for the "
                                 "available keys.")
            if source == "overrides" and key == "masterSeed":
                continue
            settings[key] = value

    # Check for the existence of some needed vars
    # If they're not there, take the default and give a warning.
    missing = [key for key in DEFAULT_SETTINGS
               if key not in config_data and key not in (overrides or {})]
    if missing:
        warnings.warn("\n" + "\n".join(
            f"{key} not defined. Using {DEFAULT_SETTINGS[key]}."
            for key in missing))

    env_seed = os.environ.get("BEE_SEED")
    if env_seed is not None:
        try:
            settings["masterSeed"] = int(env_seed)
        except ValueError:
            raise ValueError(f"\nBEE_SEED should be an integer, got "
                             f"'{env_seed}'.")

    if overrides and "masterSeed" in overrides:
        settings["masterSeed"] = overrides["masterSeed"]

    return settings


def setup_paths(settings: dict) -> dict:
    """
    This function sets up all output paths of the pipeline. Only the
    output directory and its logs directory are created.
    """

    output_dir = os.path.abspath(settings["outputDir"])

    paths = {
        "root": root,
        "outputDir": output_dir,
        "logsDir": os.path.join(output_dir, "logs"),
        "snapshot": os.path.join(output_dir, "snapshot.json"),
        "trainingLog": os.path.join(output_dir, "training_log.csv"),
        "explainDir": os.path.join(output_dir, "explain"),
        "results": os.path.join(output_dir, "results.csv"),
        "curves": os.path.join(output_dir, "curves.csv"),
        "ablation": os.path.join(output_dir, "ablation.csv"),
        "winRates": os.path.join(output_dir, "win_rates.csv"),
        "armScores": os.path.join(output_dir, "arm_scores.csv"),
        "selftestDir": os.path.join(output_dir, "selftest"),
    }

    for folder in ("outputDir", "logsDir"):
        if not os.path.isdir(paths[folder]): os.makedirs(paths[folder])

    return paths


def initialization(config_path: Optional[str] = None,
                   overrides: Optional[dict] = None,
                   verbose: bool = True) -> tuple[dict, dict]:
    """
    This function is the main initialization function of the pipeline.
    It takes the path of the config file (None for the built-in
    defaults) and the command-line overrides.
    """

    if verbose: print_header("\n==== MODULE 0 - INITIALIZATION ====\n")

    # Extract config data
    if verbose: print("Extracting config data...\t", end="", flush=True)
    config_data = extract_json(config_path) if config_path else {}
    if not isinstance(config_data, dict):
        raise ValueError("\nThe config file should hold a JSON object.")
    if verbose: print_result()

    # Setup settings
    if verbose: print("Creating settings dict...\t", end="", flush=True)
    if config_path:
        settings = extract_settings(config_data, overrides)
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            settings = extract_settings(config_data, overrides)
    check_settings(settings)
    check_layer_set(build_model(settings["model"], settings["modelSeed"]),
                    settings["layers"])
    if verbose: print_result()

    # Setup paths
    if verbose: print("Setting up paths...\t\t", end="", flush=True)
    paths = setup_paths(settings)
    if verbose: print_result()

    # Log paths and settings
    log_dict(paths, os.path.join(paths["logsDir"], "paths.json"))
    log_dict(settings, os.path.join(paths["logsDir"], "settings.json"))

    if verbose: print_header("\nINITIALIZATION FINISHED")

    return paths, settings


def prepare_run(settings: dict, verbose: bool = True) -> RunContext:
    """
    This function builds the model, the train/test splits, the
    TrainData pools, the map builder and the metric records of a run.
    """

    if verbose: print("Preparing model and data...\t", end="", flush=True)

    model = build_model(settings["model"], settings["modelSeed"])

    data_options = {"input_shape": model.input_shape,
                    "class_count": model.class_count,
                    "noise": settings["noise"],
                    "jitter": settings["jitter"]}
    train = synth_dataset(settings["masterSeed"], settings["trainSize"],
                          "train", **data_options)
    test = synth_dataset(settings["masterSeed"], settings["testSize"],
                         "test", **data_options)

    layers = resolve_layers(model, settings["layers"])
    pools = build_pools(model, train.inputs, layers,
                        settings["trainDataPool"])
    builder = MapBuilder(model, settings, pools)

    metrics = {metric_id: get_metric(metric_id, settings)
               for metric_id in settings["metrics"]}
    if settings["metric"] not in metrics:
        metrics[settings["metric"]] = get_metric(settings["metric"], settings)

    if verbose: print_result()

    return RunContext(model, train, test, pools, builder, metrics)


if __name__ == "__main__":
    initialization()

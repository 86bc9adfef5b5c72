"""BEE - Pretraining module

This module learns the per-metric bandit states on the training split.
For every epoch and every instance, each metric's bandit runs one round
of the exploration-exploitation procedure:
- select a baseline type (Thompson sampling on c_theta(x))
- sample a baseline of that type and build the map
- score the map and extract a reward
- jointly update the arm mean and theta
- update the arm precision
"""

# Path setup
import os
import sys

root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
src = os.path.join(root, "src")
if root not in sys.path: sys.path.append(root)
if src not in sys.path: sys.path.append(src)

# File-specific imports
import warnings                                                 # noqa: E402
from collections import Counter                                 # noqa: E402
from dataclasses import dataclass, field                        # noqa: E402
from typing import Optional                                     # noqa: E402
import numpy as np                                              # noqa: E402
from attribution.baselines import BASELINE_TYPES                # noqa: E402
from attribution.builder import MapBuilder                      # noqa: E402
from bandit.thompson import (BanditState, SolverSettings,       # noqa: E402
                             init_state)
from bandit.samplers import ContextualSampler                   # noqa: E402
from models.context import ContextNetwork, build_context_network  # noqa
from dataset import Dataset                                     # noqa: E402
from snapshot import save_snapshot                              # noqa: E402
from util.general import derive_rng, log_dict                   # noqa: E402
from util.export import write_csv                               # noqa: E402
from util.style import print_header, print_result, progress     # noqa: E402

TRAINING_LOG_HEADER = ["epoch", "metric", "mean_reward", "selections"]

# Stream keys of the master seed
PRETRAIN_STREAM = 1
CONTEXT_STREAM = 2


@dataclass
class PretrainResult:
    """Learned states per metric id and the per-epoch training log."""

    states: dict
    log: list = field(default_factory=list)
    skipped: int = 0


def solver_settings(settings: dict) -> SolverSettings:
    return SolverSettings(float(settings["stepSize"]),
                          int(settings["solverIterations"]),
                          float(settings["solverTolerance"]))


def init_states(metrics: dict, network: ContextNetwork, settings: dict) \
        -> dict:
    """
    This function creates a fresh state per metric. With
    `sharedContext`, all metrics train the same context network;
    otherwise every metric gets its own copy.
    """

    solver = solver_settings(settings)
    states = {}
    for index, (metric_id, metric) in enumerate(metrics.items()):
        metric_network = (network if settings["sharedContext"]
                          else network.copy())
        states[metric_id] = init_state(
            metric, metric_network, seed=settings["masterSeed"] + index,
            solver=solver)

    return states


def selection_summary(selections: list) -> str:
    """Type counts in enumeration order, e.g. 'Normal:3;Uniform:0;...'."""

    counts = Counter(selections)
    return ";".join(f"{kind.value}:{counts[kind]}" for kind in BASELINE_TYPES)


def pretrain(builder: MapBuilder, dataset: Dataset, metrics: dict,
             settings: dict, states: Optional[dict] = None,
             network: Optional[ContextNetwork] = None,
             verbose: bool = True) -> PretrainResult:
    """
    This function runs `settings['epochs']` epochs over the dataset
    (re-shuffled per epoch) and performs a single bandit update per
    instance, metric and epoch. Instances with a non-finite score are
    skipped with a warning.
    """

    model = builder.model

    if states is None:
        if network is None:
            network = build_context_network(
                input_shape=model.input_shape,
                output_dim=settings["contextDim"],
                rng=derive_rng(settings["masterSeed"], CONTEXT_STREAM))
        states = init_states(metrics, network, settings)

    rng = derive_rng(settings["masterSeed"], PRETRAIN_STREAM)
    result = PretrainResult(states)

    for epoch in range(1, settings["epochs"] + 1):
        rewards = {metric_id: [] for metric_id in metrics}
        selections = {metric_id: [] for metric_id in metrics}

        order = rng.permutation(len(dataset))
        for index in progress(order, verbose, f"Epoch {epoch}"):
            x, y = dataset[int(index)]

            for metric_id, metric in metrics.items():
                state = states[metric_id]
                sampler = ContextualSampler(state, adaptive=True)

                context = state.context(x)
                kind = sampler.select(context)
                explanation = builder.build(x, y, kind, rng)
                score = metric.score(model, x, explanation, y)

                if not np.isfinite(score):
                    result.skipped += 1
                    warnings.warn(f"Skipped instance {int(index)} in epoch "
                                  f"{epoch}: non-finite {metric_id} score.")
                    continue

                reward = sampler.observe(kind, score, x=x, context=context)
                rewards[metric_id].append(reward.y)
                selections[metric_id].append(kind)

        for metric_id in metrics:
            mean_reward = (float(np.mean(rewards[metric_id]))
                           if rewards[metric_id] else float("nan"))
            result.log.append([epoch, metric_id, mean_reward,
                               selection_summary(selections[metric_id])])

    return result


def pretraining(paths: dict, settings: dict, run, verbose: bool = True) \
        -> tuple[dict, dict, PretrainResult]:
    """
    This function is the main function of the pretraining step.
    It pretrains one bandit per configured metric, then writes the
    snapshot and the training log.
    """

    if verbose: print_header("\n==== MODULE 1 - PRETRAINING ====")

    result = pretrain(run.builder, run.train,
                      {metric_id: run.metrics[metric_id]
                       for metric_id in settings["metrics"]},
                      settings, verbose=verbose)

    if verbose: print("\nSaving snapshot...\t\t", end="", flush=True)
    save_snapshot(result.states, settings["modelSeed"], paths["snapshot"])
    write_csv(paths["trainingLog"], TRAINING_LOG_HEADER, result.log)
    if verbose: print_result()

    if result.skipped:
        warnings.warn(f"{result.skipped} instance(s) were skipped during "
                      "pretraining.")

    if verbose: print_header("\nPRETRAINING FINISHED")

    # Log paths and settings
    log_dict(paths, os.path.join(paths["logsDir"], "paths.json"))
    log_dict(settings, os.path.join(paths["logsDir"], "settings.json"))

    return paths, settings, result

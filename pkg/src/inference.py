"""BEE - Inference module

This module explains test instances with the pretrained bandits:
- pBEE: T baselines are drawn from the frozen pretrained state and the
  best map on the metric is returned (no state update).
- fBEE: T sequential rounds of the bandit procedure on an instance-local
  copy of the pretrained state, with theta frozen.
`run_trials` is the shared trial loop, also used with the ncBEE, nBEE
and single-type samplers by the experiments.
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
from dataclasses import dataclass, field                        # noqa: E402
from typing import Optional                                     # noqa: E402
import numpy as np                                              # noqa: E402
from attribution.baselines import BaselineType                  # noqa: E402
from attribution.builder import MapBuilder                      # noqa: E402
from attribution.selection import (ExplanationMap, MapPool,     # noqa: E402
                                   adjusted_score, select_best)
from bandit.thompson import BanditState                         # noqa: E402
from dataset import Dataset                                     # noqa: E402
from bandit.samplers import (TypeSampler, ContextualSampler,    # noqa: E402
                             BetaSampler, UniformSampler, FixedSampler)
from metrics import score_map                                   # noqa: E402
from metrics.ids import Direction                               # noqa: E402
from util.general import derive_rng, log_dict                   # noqa: E402
from util.export import (write_csv, save_map_csv,               # noqa: E402
                         save_map_pgm, save_curve_csv)
from util.style import print_header, print_result               # noqa: E402

TRIALS_HEADER = ["trial", "type", "score", "reward", "h", "best"]

# Stream key of the master seed
INFERENCE_STREAM = 3


@dataclass
class Trial:
    """One round: selected type, its score, reward and best-so-far score."""

    trial: int
    kind: BaselineType
    score: float
    reward: Optional[int] = None
    h: Optional[float] = None
    best: float = float("nan")

    def row(self) -> list:
        return [self.trial, self.kind.value, self.score,
                "" if self.reward is None else self.reward,
                "" if self.h is None else self.h, self.best]


@dataclass
class InferenceResult:
    best: ExplanationMap
    pool: MapPool
    trials: list = field(default_factory=list)


def run_trials(sampler: TypeSampler, builder: MapBuilder, metric,
               x: np.ndarray, y: int, T: int, rng: np.random.Generator,
               context: Optional[np.ndarray] = None) -> InferenceResult:
    """
    This function runs T rounds of: select a type, build its maps (one
    per layer of the builder), score them and let the sampler observe the
    best score of the round. The best map of the whole pool is returned.
    Maps with a non-finite score are left out of the pool.
    """

    if T < 1:
        raise ValueError(f"T should be at least 1, got {T}.")

    direction = Direction(metric.direction)
    pool = MapPool()
    scores = []
    trials = []
    best = None

    for t in range(1, T + 1):
        kind = sampler.select(context)

        round_scores = []
        for layer in builder.layers:
            explanation = builder.build(x, y, kind, rng, layer)
            score = metric.score(builder.model, x, explanation, y)
            if not np.isfinite(score):
                warnings.warn(f"Non-finite {metric.name} score in trial {t} "
                              "left out of the pool.")
                continue
            pool.maps.append(explanation)
            pool.layers.append(layer)
            scores.append((score, direction))
            round_scores.append(score)

        if not round_scores:
            trials.append(Trial(t, kind, float("nan"),
                                best=float("nan") if best is None else best))
            continue

        score = max(round_scores, key=lambda s: adjusted_score(s, direction))
        reward = sampler.observe(kind, score, x=x, context=context)

        if best is None or (adjusted_score(score, direction)
                            > adjusted_score(best, direction)):
            best = score

        trials.append(Trial(t, kind, score,
                            None if reward is None else reward.y,
                            None if reward is None else reward.h, best))

    if len(pool) == 0:
        raise ValueError(f"No map obtained a finite {metric.name} score.")

    return InferenceResult(select_best(pool, scores), pool, trials)


def finetune_copy(state: BanditState, rng: np.random.Generator,
                  history_tail: Optional[int] = None) -> BanditState:
    """
    This function returns an instance-local copy of a pretrained state:
    copied arms, the tail of the score history, frozen theta (the network
    is shared by reference, it is never updated in finetune mode) and the
    given random stream.
    """

    history = list(state.score_history)
    if history_tail is not None:
        history = history[-history_tail:] if history_tail > 0 else []

    return BanditState(state.metric, state.direction, state.kind,
                       copy.deepcopy(state.arms), state.network, history,
                       rng, True, copy.deepcopy(state.solver))


def explain_pbee(state: BanditState, builder: MapBuilder, x: np.ndarray,
                 y: int, metric, T: int,
                 rng: Optional[np.random.Generator] = None) \
        -> InferenceResult:
    """
    This function draws T baselines from the frozen pretrained state
    and returns the best of the T maps. The state is never updated, and
    its own random stream is not advanced.
    """

    rng = np.random.default_rng(0) if rng is None else rng
    sampler = ContextualSampler(state, adaptive=False, rng=rng)

    return run_trials(sampler, builder, metric, x, y, T, rng,
                      state.context(x))


def explain_fbee(state: BanditState, builder: MapBuilder, x: np.ndarray,
                 y: int, metric, T: int,
                 rng: Optional[np.random.Generator] = None,
                 history_tail: Optional[int] = None) -> InferenceResult:
    """
    This function refines a copy of the pretrained state on x over T
    sequential rounds (theta frozen) and returns the best-so-far map
    with the per-trial log. The pretrained state is never mutated.
    """

    rng = np.random.default_rng(0) if rng is None else rng
    local = finetune_copy(state, rng, history_tail)
    sampler = ContextualSampler(local, adaptive=True, rng=rng)

    return run_trials(sampler, builder, metric, x, y, T, rng,
                      local.context(x))


def make_sampler(strategy: str, metric, rng: np.random.Generator,
                 state: Optional[BanditState] = None,
                 history_tail: Optional[int] = None) -> TypeSampler:
    """
    This function builds the sampler of a strategy name: 'fBEE', 'pBEE',
    'ncBEE', 'nBEE' or a baseline type name.
    """

    if strategy in ("fBEE", "pBEE"):
        if state is None:
            raise ValueError(f"Strategy '{strategy}' needs a pretrained "
                             "bandit state.")
        if strategy == "pBEE":
            return ContextualSampler(state, adaptive=False, rng=rng)
        return ContextualSampler(finetune_copy(state, rng, history_tail),
                                 adaptive=True, rng=rng)
    elif strategy == "ncBEE":
        return BetaSampler(metric.kind, metric.direction, rng)
    elif strategy == "nBEE":
        return UniformSampler(rng)
    else:
        try:
            return FixedSampler(BaselineType(strategy))
        except ValueError:
            raise ValueError(f"Unknown strategy '{strategy}'.")


def explain_instance(strategy: str, builder: MapBuilder, metric,
                     x: np.ndarray, y: int, T: int,
                     rng: np.random.Generator,
                     state: Optional[BanditState] = None,
                     history_tail: Optional[int] = None) -> InferenceResult:
    """This function explains one instance with any strategy."""

    sampler = make_sampler(strategy, metric, rng, state, history_tail)
    context = None
    if isinstance(sampler, ContextualSampler):
        context = sampler.state.context(x)

    return run_trials(sampler, builder, metric, x, y, T, rng, context)


def explain(paths: dict, settings: dict, run, states: dict,
            index: int = 0, verbose: bool = True,
            dataset: Optional[Dataset] = None) \
        -> tuple[dict, dict, InferenceResult]:
    """
    This function is the main function of the explain step. It explains
    instance `index` of `dataset` (the test split by default) with the
    configured strategy and metric and writes the map (CSV and PGM), the
    per-trial log and, for the curve metrics, the metric curve of the
    best map.
    """

    if verbose: print_header("\n==== MODULE 2 - EXPLANATION ====")

    dataset = run.test if dataset is None else dataset
    if not 0 <= index < len(dataset):
        raise ValueError(f"Instance index {index} outside "
                         f"[0, {len(dataset)}).")

    metric_id = settings["metric"]
    strategy = settings["strategy"]
    if strategy in ("fBEE", "pBEE") and metric_id not in states:
        raise ValueError(f"The snapshot holds no state for metric "
                         f"'{metric_id}'.")

    x, y = dataset[index]
    rng = derive_rng(settings["masterSeed"], INFERENCE_STREAM, index)

    if verbose: print(f"\nExplaining instance {index} ({strategy}, "
                      f"{metric_id})...\t", end="", flush=True)
    result = explain_instance(strategy, run.builder, run.metrics[metric_id],
                              x, y, settings["T"], rng,
                              states.get(metric_id), settings["historyTail"])
    if verbose: print_result()

    explain_dir = paths["explainDir"]
    if not os.path.isdir(explain_dir): os.makedirs(explain_dir)

    save_map_csv(result.best.map, os.path.join(explain_dir, "map.csv"))
    save_map_pgm(result.best.map, os.path.join(explain_dir, "map.pgm"))
    write_csv(os.path.join(explain_dir, "trials.csv"), TRIALS_HEADER,
              [trial.row() for trial in result.trials])

    # Only the curve-based metrics carry a curve
    curve = score_map(metric_id, run.model, x, result.best, y,
                      settings).curve
    if curve is not None:
        save_curve_csv(curve, os.path.join(explain_dir, "curve.csv"))

    if verbose: print_header("\nEXPLANATION FINISHED")

    # Log paths and settings
    log_dict(paths, os.path.join(paths["logsDir"], "paths.json"))
    log_dict(settings, os.path.join(paths["logsDir"], "settings.json"))

    return paths, settings, result

"""BEE - Experiments module

This module runs the experiments on the test split:
- `convergence_experiment`: mean best-so-far curves per strategy
- `evaluate_suite`: all metric means per explanation method
- `win_rate_experiment`: how often every baseline type wins under pBEE
- `ablation_sweep`: fBEE over lists of T and n values
- `arm_score_experiment`: the learned success-probability distribution
  of every baseline type over the test split
- `rigged_metric`: a synthetic metric favouring one baseline type, for
  controlled checks of the above
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
from typing import Optional                                     # noqa: E402
import numpy as np                                              # noqa: E402
from attribution.baselines import (BaselineType,                # noqa: E402
                                   BASELINE_TYPES, fixed_baseline)
from attribution.builder import MapBuilder, layer_representation  # noqa
from attribution.paths import (integrated_gradients,            # noqa: E402
                               bee_map_cnn, bee_map_vit)
from bandit.analysis import (WinRecord, win_rate_table,         # noqa: E402
                             arm_score_distribution)
from metrics import Metric                                      # noqa: E402
from metrics.ids import Direction, RewardKind, MetricId         # noqa: E402
from inference import explain_instance, explain_pbee            # noqa: E402
from util.general import derive_rng, log_dict                   # noqa: E402
from util.export import write_csv                               # noqa: E402
from util.style import print_header, print_result, progress     # noqa: E402

CURVES_HEADER = ["strategy", "iteration", "mean_score"]
RESULTS_HEADER = ["method", "metric", "direction", "mean", "stderr", "n"]
ABLATION_HEADER = ["parameter", "value", "metric", "mean", "stderr", "n"]
WIN_RATES_HEADER = ["metric", "type", "rate"]
ARM_SCORES_HEADER = ["metric", "type", "mean", "std", "samples"]

BANDIT_STRATEGIES = ("fBEE", "pBEE")

# Stream keys of the master seed
CURVES_STREAM = 4
SUITE_STREAM = 5
WIN_RATE_STREAM = 6
ABLATION_STREAM = 7
ARM_SCORE_STREAM = 8


def rigged_metric(winner: BaselineType, gap: float = 0.6,
                  noise: float = 0.1, kind: str = "continuous",
                  seed: int = 0) -> Metric:
    """
    This function builds a synthetic higher-is-better metric whose
    score only depends on the baseline type that produced the map. The
    winning type has mean 0.5 + gap/2, every other type 0.5 - gap/2.
    Continuous scores add Gaussian noise of standard deviation `noise`;
    binary scores are +1 with probability equal to the mean, -1 otherwise.
    """

    if not 0.0 <= gap <= 1.0:
        raise ValueError(f"gap should be in [0, 1], got {gap}.")

    winner = BaselineType(winner)
    reward_kind = RewardKind(kind)
    rng = np.random.default_rng(seed)

    def evaluate(model, x, explanation, y):
        mean = 0.5 + gap / 2 if explanation.kind == winner else 0.5 - gap / 2
        if reward_kind == RewardKind.BINARY:
            return 1.0 if rng.random() < mean else -1.0
        return mean + noise * rng.standard_normal()

    return Metric("RIGGED", Direction.HIGHER, reward_kind, evaluate)


def mean_stderr(values: list) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return float("nan"), float("nan")
    if values.size == 1:
        return float(values[0]), 0.0
    return (float(values.mean()),
            float(values.std(ddof=1) / np.sqrt(values.size)))


def convergence_experiment(builder: MapBuilder, dataset, metric,
                           strategies: list, iterations: int,
                           states: Optional[dict] = None, seed: int = 0,
                           history_tail: Optional[int] = None,
                           verbose: bool = False) -> dict:
    """
    This function runs every strategy for `iterations` rounds on every
    instance and averages the best-so-far score curves over the
    instances. `states` maps metric names to pretrained states.
    """

    if iterations < 1:
        raise ValueError(f"iterations should be at least 1, got {iterations}.")

    state = (states or {}).get(metric.name)

    curves = {}
    for s_i, strategy in enumerate(strategies):
        if strategy in BANDIT_STRATEGIES and state is None:
            raise ValueError(f"Strategy '{strategy}' needs a pretrained "
                             f"state for metric '{metric.name}'.")

        per_instance = []
        for index in progress(range(len(dataset)), verbose, strategy):
            x, y = dataset[index]
            rng = derive_rng(seed, CURVES_STREAM, s_i, index)
            result = explain_instance(strategy, builder, metric, x, y,
                                      iterations, rng, state, history_tail)
            per_instance.append([trial.best for trial in result.trials])

        curves[strategy] = np.nanmean(np.array(per_instance, dtype=float),
                                      axis=0)

    return curves


def curve_rows(curves: dict) -> list:
    return [[strategy, iteration, float(value)]
            for strategy, curve in curves.items()
            for iteration, value in enumerate(curve, start=1)]


def baseline_map(method: str, builder: MapBuilder, x: np.ndarray, y: int):
    """
    This function builds the map of a fixed-baseline method: IG (input,
    black baseline) or ACT-IG (last builder layer, black baseline, plain
    gradient integrand).
    """

    model = builder.model

    if method == "IG":
        return integrated_gradients(model, x, fixed_baseline(x), y, builder.n)

    layer = builder.layers[-1]
    x_l = layer_representation(model, x, layer)
    if layer in model.attention_layers:
        return bee_map_vit(model, layer, x, fixed_baseline(x_l), y, builder.n)

    return bee_map_cnn(model, layer, x, fixed_baseline(x_l), y, builder.n,
                       psi="gradient")


def evaluate_suite(builder: MapBuilder, dataset, metrics: dict,
                   methods: list, T: int, states: Optional[dict] = None,
                   input_builder: Optional[MapBuilder] = None,
                   seed: int = 0, percent_scale: bool = True,
                   history_tail: Optional[int] = None,
                   verbose: bool = False) -> list:
    """
    This function evaluates every method on every metric over the
    dataset and returns rows of (method, metric, direction, mean,
    stderr, n). Bandit-driven methods select their map per metric;
    IG-fBEE runs fBEE with `input_builder` (input-space maps). With
    `percent_scale`, curve metrics are reported on a 0-100 scale.
    """

    states = states or {}
    rows = []

    for m_i, method in enumerate(methods):
        scores = {metric_id: [] for metric_id in metrics}

        for index in progress(range(len(dataset)), verbose, method):
            x, y = dataset[index]

            if method in ("IG", "ACT-IG"):
                explanation = baseline_map(method, builder, x, y)

            for k_i, (metric_id, metric) in enumerate(metrics.items()):
                if method not in ("IG", "ACT-IG"):
                    strategy = "fBEE" if method == "IG-fBEE" else method
                    method_builder = (input_builder if method == "IG-fBEE"
                                      else builder)
                    if method_builder is None:
                        raise ValueError("IG-fBEE needs an input-space "
                                         "map builder.")
                    rng = derive_rng(seed, SUITE_STREAM, m_i, k_i, index)
                    result = explain_instance(
                        strategy, method_builder, metric, x, y, T, rng,
                        states.get(metric_id), history_tail)
                    explanation = result.best

                score = metric.score(builder.model, x, explanation, y)
                if not np.isfinite(score):
                    warnings.warn(f"Non-finite {metric_id} score of {method} "
                                  f"on instance {index} skipped.")
                    continue
                scores[metric_id].append(score)

        for metric_id, metric in metrics.items():
            values = np.array(scores[metric_id], dtype=float)
            percent = metric_id in MetricId.__members__ and \
                MetricId(metric_id).percent
            if percent_scale and not percent:
                values = 100.0 * values
            mean, stderr = mean_stderr(values)
            rows.append([method, metric_id, Direction(metric.direction).value,
                         mean, stderr, len(values)])

    return rows


def win_rate_experiment(builder: MapBuilder, dataset, metrics: dict,
                        states: dict, T: int, seed: int = 0) \
        -> tuple[list, dict]:
    """
    This function runs pBEE on every instance for every metric,
    records the type of the winning map and returns the records with
    the normalized win-rate table.
    """

    records = []
    for k_i, (metric_id, metric) in enumerate(metrics.items()):
        for index in range(len(dataset)):
            x, y = dataset[index]
            rng = derive_rng(seed, WIN_RATE_STREAM, k_i, index)
            result = explain_pbee(states[metric_id], builder, x, y, metric,
                                  T, rng)
            records.append(WinRecord(metric_id, result.best.kind))

    return records, win_rate_table(records)


def arm_score_experiment(dataset, states: dict, samples: int = 100,
                         seed: int = 0) -> list:
    """
    This function approximates, per metric and baseline type, the
    distribution of sigmoid(c . w) under the learned posterior, pooled
    over the instances of the dataset. Rows are (metric, type, mean,
    std, samples).
    """

    rows = []
    for k_i, (metric_id, state) in enumerate(states.items()):
        values = {kind: [] for kind in BASELINE_TYPES}
        for index in range(len(dataset)):
            x, _ = dataset[index]
            rng = derive_rng(seed, ARM_SCORE_STREAM, k_i, index)
            distributions = arm_score_distribution(state, state.context(x),
                                                   samples, rng=rng)
            for kind, distribution in distributions.items():
                values[kind].append(distribution.values)

        for kind in BASELINE_TYPES:
            pooled = np.concatenate(values[kind])
            rows.append([metric_id, kind.value, float(pooled.mean()),
                         float(pooled.std()), pooled.size])

    return rows


def ablation_sweep(builder: MapBuilder, dataset, metrics: dict,
                   states: dict, T_values: list, n_values: list,
                   settings: dict, seed: int = 0,
                   history_tail: Optional[int] = None) -> list:
    """
    This function evaluates fBEE for every T in `T_values` (at the
    configured n) and every n in `n_values` (at the configured T).
    Rows are (parameter, value, metric, mean, stderr, n).
    """

    rows = []
    sweeps = [("T", value, builder, value) for value in T_values]
    for value in n_values:
        n_builder = MapBuilder(builder.model, {**settings, "n": value},
                               builder.pools)
        sweeps.append(("n", value, n_builder, settings["T"]))

    for s_i, (parameter, value, sweep_builder, T) in enumerate(sweeps):
        for k_i, (metric_id, metric) in enumerate(metrics.items()):
            scores = []
            for index in range(len(dataset)):
                x, y = dataset[index]
                rng = derive_rng(seed, ABLATION_STREAM, s_i, k_i, index)
                result = explain_instance("fBEE", sweep_builder, metric, x, y,
                                          T, rng, states[metric_id],
                                          history_tail)
                scores.append(result.best.score)
            mean, stderr = mean_stderr(scores)
            rows.append([parameter, value, metric_id, mean, stderr,
                         len(scores)])

    return rows


def evaluation(paths: dict, settings: dict, run, states: dict,
               verbose: bool = True) -> tuple[dict, dict, list]:
    """
    This function is the main function of the eval step. It writes the
    results table of all configured methods and metrics and, when the
    snapshot covers every metric, the pBEE win rates and the learned
    arm-score distributions.
    """

    if verbose: print_header("\n==== MODULE 3 - EVALUATION ====")

    methods = settings["methods"]
    needs_state = any(method in ("fBEE", "pBEE", "IG-fBEE")
                      for method in methods)
    missing = [metric_id for metric_id in settings["metrics"]
               if metric_id not in states]
    if needs_state and missing:
        raise ValueError(f"The snapshot holds no state for metric(s) "
                         f"{missing}.")

    input_builder = None
    if "IG-fBEE" in methods:
        input_builder = run.builder_for({**settings, "layers": [0],
                                         "psi": "gradient"})

    metrics = {metric_id: run.metrics[metric_id]
               for metric_id in settings["metrics"]}
    rows = evaluate_suite(run.builder, run.test, metrics, methods,
                          settings["T"], states, input_builder,
                          settings["masterSeed"], settings["percentScale"],
                          settings["historyTail"], verbose)

    if verbose: print("\nSaving results...\t\t", end="", flush=True)
    write_csv(paths["results"], RESULTS_HEADER, rows)
    if not missing:
        _, table = win_rate_experiment(run.builder, run.test, metrics,
                                       states, settings["T"],
                                       settings["masterSeed"])
        write_csv(paths["winRates"], WIN_RATES_HEADER,
                  [[metric_id, kind.value, rate]
                   for metric_id, row in table.items()
                   for kind, rate in row.items()])
        write_csv(paths["armScores"], ARM_SCORES_HEADER,
                  arm_score_experiment(
                      run.test, {metric_id: states[metric_id]
                                 for metric_id in settings["metrics"]},
                      seed=settings["masterSeed"]))
    if verbose: print_result()

    if verbose: print_header("\nEVALUATION FINISHED")

    # Log paths and settings
    log_dict(paths, os.path.join(paths["logsDir"], "paths.json"))
    log_dict(settings, os.path.join(paths["logsDir"], "settings.json"))

    return paths, settings, rows


def curves(paths: dict, settings: dict, run, states: dict,
           verbose: bool = True) -> tuple[dict, dict, dict]:
    """
    This function is the main function of the curves step. It writes
    the mean best-so-far curve of every configured strategy.
    """

    if verbose: print_header("\n==== MODULE 4 - CONVERGENCE CURVES ====")

    metric = run.metrics[settings["metric"]]
    result = convergence_experiment(run.builder, run.test, metric,
                                    settings["strategies"],
                                    settings["iterations"], states,
                                    settings["masterSeed"],
                                    settings["historyTail"], verbose)

    if verbose: print("\nSaving curves...\t\t", end="", flush=True)
    write_csv(paths["curves"], CURVES_HEADER, curve_rows(result))
    if verbose: print_result()

    if verbose: print_header("\nCONVERGENCE CURVES FINISHED")

    # Log paths and settings
    log_dict(paths, os.path.join(paths["logsDir"], "paths.json"))
    log_dict(settings, os.path.join(paths["logsDir"], "settings.json"))

    return paths, settings, result


def ablation(paths: dict, settings: dict, run, states: dict,
             verbose: bool = True) -> tuple[dict, dict, list]:
    """
    This function runs the trial-count and step-count ablations of
    fBEE on the configured metric and writes them as CSV.
    """

    if verbose: print_header("\n==== MODULE 5 - ABLATION ====")

    metric_id = settings["metric"]
    if metric_id not in states:
        raise ValueError(f"The snapshot holds no state for metric "
                         f"'{metric_id}'.")

    if verbose: print("\nRunning ablations...\t\t", end="", flush=True)
    rows = ablation_sweep(run.builder, run.test,
                          {metric_id: run.metrics[metric_id]}, states,
                          settings["ablationT"], settings["ablationN"],
                          settings, settings["masterSeed"],
                          settings["historyTail"])
    write_csv(paths["ablation"], ABLATION_HEADER, rows)
    if verbose: print_result()

    if verbose: print_header("\nABLATION FINISHED")

    # Log paths and settings
    log_dict(paths, os.path.join(paths["logsDir"], "paths.json"))
    log_dict(settings, os.path.join(paths["logsDir"], "settings.json"))

    return paths, settings, rows

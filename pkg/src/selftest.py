"""BEE - Selftest module

This module re-runs a fast subset of the property checks in-process
and reports pass/fail per property.
"""

# Path setup
import os
import sys

root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
src = os.path.join(root, "src")
if root not in sys.path: sys.path.append(root)
if src not in sys.path: sys.path.append(src)

# File-specific imports
import filecmp                                                  # noqa: E402
import numpy as np                                              # noqa: E402
from scipy.optimize import brentq                               # noqa: E402
from scipy.special import expit                                 # noqa: E402
from attribution.baselines import BaselineType, BASELINE_TYPES  # noqa: E402
from attribution.paths import (integrated_gradients,            # noqa: E402
                               bee_map_cnn, bee_map_vit)
from attribution.selection import (ExplanationMap, MapPool,     # noqa: E402
                                   select_best)
from bandit.thompson import (SolverSettings, init_state,        # noqa: E402
                             extract_reward, map_update,
                             precision_update, thompson_select)
from bandit.analysis import WinRecord, win_rate_table           # noqa: E402
from metrics import get_metric                                  # noqa: E402
from metrics.ids import Direction, MetricId, RewardKind         # noqa: E402
from models import (build_tiny_cnn, build_tiny_attention,       # noqa: E402
                    build_context_network, grad_wrt_layer,
                    model_finite_diff_grad)
from snapshot import save_snapshot, load_snapshot               # noqa: E402
from util.style import print_header, print_property             # noqa: E402
from util.general import log_dict                               # noqa: E402


def check_gradients() -> bool:
    """Reverse-mode gradients against central finite differences."""

    rng = np.random.default_rng(0)
    for model in (build_tiny_cnn(0), build_tiny_attention(0)):
        x = rng.normal(0.0, 0.5, model.input_shape)
        for layer in range(model.layer_count + 1):
            r = model.forward(x).representations[layer]
            analytic = grad_wrt_layer(model, layer, r, 1)
            numeric = model_finite_diff_grad(model, layer, r, 1, 1e-5)
            if not np.allclose(analytic, numeric, rtol=1e-5, atol=1e-8):
                return False

    return True


def check_zero_path() -> bool:
    """All map constructors return zero maps for b = x."""

    cnn = build_tiny_cnn(0)
    # Single block: the integrated factor is the whole rollout
    vit = build_tiny_attention(0, blocks=1)
    x = np.random.default_rng(1).normal(0.0, 0.5, cnn.input_shape)
    x_vit = np.random.default_rng(1).normal(0.0, 0.5, vit.input_shape)

    ig = integrated_gradients(cnn, x, x.copy(), 0, 5)
    x_l = cnn.forward(x).representations[cnn.layer_count]
    layer_map = bee_map_cnn(cnn, cnn.layer_count, x, x_l.copy(), 0, 5)
    block = vit.attention_layers[-1]
    attention = vit.forward(x_vit).caches[block - 1]["attention"]
    attention_map = bee_map_vit(vit, block, x_vit, attention.copy(), 0, 5)

    return all(np.all(m.map == 0.0) for m in (ig, layer_map, attention_map))


def check_precision_update() -> bool:
    """The precision update on g = 0, c = (1, 2) gives q = (1.25, 2.0)."""

    state = init_state(get_metric("NEG"), context_dim=2)
    q = precision_update(state, BaselineType.NORMAL, np.array([1.0, 2.0]))

    return bool(np.array_equal(q, [1.25, 2.0]))


def check_map_fixed_point() -> bool:
    """The K = 1 update converges to the root of sigmoid(-u) = u."""

    state = init_state(get_metric("NEG"), context_dim=1,
                       solver=SolverSettings(0.5, 500, 1e-12))
    map_update(state, BaselineType.NORMAL, 1, context=np.ones(1))
    root = brentq(lambda u: expit(-u) - u, 0.0, 1.0)

    return abs(state.arms[BaselineType.NORMAL].g[0] - root) < 1e-4


def check_rank_reward() -> bool:
    """Normalized-rank rewards on dominating and tied scores."""

    rng = np.random.default_rng(0)
    top = extract_reward(RewardKind.CONTINUOUS, Direction.HIGHER, 0.4,
                         [0.1, 0.2, 0.3], rng)
    tie = extract_reward(RewardKind.CONTINUOUS, Direction.LOWER, 0.5,
                         [0.5], rng)

    return top.h == 1.0 and top.y == 1 and tie.h == 0.5


def check_selection() -> bool:
    """Selection returns the direction-adjusted pool maximum."""

    rng = np.random.default_rng(2)
    for direction in (Direction.HIGHER, Direction.LOWER):
        for _ in range(20):
            values = rng.normal(size=6)
            pool = MapPool([ExplanationMap(np.zeros((2, 2)), 1)
                            for _ in values], [1] * len(values))
            best = select_best(pool, [(v, direction) for v in values])
            target = (values.max() if direction == Direction.HIGHER
                      else values.min())
            if best.score != target:
                return False

    return True


def check_thompson_uniform() -> bool:
    """Fresh arms are selected uniformly."""

    state = init_state(get_metric("NEG"), context_dim=3)
    rng = np.random.default_rng(3)
    picks = [thompson_select(state, np.ones(3), rng) for _ in range(5000)]
    frequencies = [picks.count(kind) / len(picks) for kind in BASELINE_TYPES]

    return all(0.17 <= f <= 0.23 for f in frequencies)


def check_win_rates() -> bool:
    """Win-rate rows sum to one."""

    rng = np.random.default_rng(4)
    records = [WinRecord(metric.value,
                         BASELINE_TYPES[int(rng.integers(5))])
               for metric in MetricId for _ in range(50)]
    table = win_rate_table(records)

    return all(abs(sum(row.values()) - 1.0) < 1e-12 for row in table.values())


def check_snapshot(directory: str) -> bool:
    """Snapshot save -> load -> save is byte-identical."""

    network = build_context_network(0, (3, 16, 16), 4)
    states = {"NEG": init_state(get_metric("NEG"), network)}
    map_update(states["NEG"], BaselineType.BLUR, 1, context=np.ones(4))
    states["NEG"].score_history.extend([0.25, 1.0 / 3.0])

    first = os.path.join(directory, "snapshot_a.json")
    second = os.path.join(directory, "snapshot_b.json")
    save_snapshot(states, 0, first)
    save_snapshot(load_snapshot(first).states, 0, second)

    return filecmp.cmp(first, second, shallow=False)


def selftest(paths: dict, settings: dict, verbose: bool = True) \
        -> tuple[dict, dict, dict]:
    """
    This function runs every property check and reports the results.
    A UserWarning is raised when any property fails.
    """

    if verbose: print_header("\n==== SELFTEST ====\n")

    directory = paths["selftestDir"]
    if not os.path.isdir(directory): os.makedirs(directory)

    checks = {
        "gradient correctness": check_gradients,
        "zero path": check_zero_path,
        "precision update": check_precision_update,
        "mean update fixed point": check_map_fixed_point,
        "normalized-rank reward": check_rank_reward,
        "selection optimality": check_selection,
        "uniform fresh selection": check_thompson_uniform,
        "win-rate normalization": check_win_rates,
        "snapshot round-trip": lambda: check_snapshot(directory),
    }

    results = {}
    for name, check in checks.items():
        try:
            passed = bool(check())
        except Exception:
            passed = False
        results[name] = passed
        if verbose: print_property(name, passed)

    log_dict(results, os.path.join(paths["logsDir"], "selftest.json"))

    if not all(results.values()):
        failed = [name for name, passed in results.items() if not passed]
        raise UserWarning(f"Selftest failed for: {', '.join(failed)}")

    if verbose: print_header("\nSELFTEST FINISHED")

    return paths, settings, results

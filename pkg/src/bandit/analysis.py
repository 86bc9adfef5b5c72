"""Analysis of learned bandits: win rates and arm-score distributions"""

from dataclasses import dataclass
from typing import Optional
import numpy as np
from scipy.special import expit
from attribution.baselines import BaselineType, BASELINE_TYPES
from bandit.thompson import BanditState


@dataclass
class WinRecord:
    """The baseline type whose map won one instance under one metric."""

    metric: str
    winner: BaselineType


@dataclass
class ArmScoreDistribution:
    values: np.ndarray
    counts: np.ndarray
    edges: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))


def win_rate_table(records: list) -> dict:
    """
    This function counts the wins of every type per metric and
    normalizes every metric row to sum to 1.
    """

    if not records:
        raise ValueError("Cannot build a win-rate table without records.")

    counts = {}
    for record in records:
        row = counts.setdefault(record.metric,
                                {kind: 0 for kind in BASELINE_TYPES})
        row[BaselineType(record.winner)] += 1

    table = {}
    for metric, row in counts.items():
        total = sum(row.values())
        table[metric] = {kind: count / total for kind, count in row.items()}

    return table


def arm_score_distribution(state: BanditState, context: np.ndarray,
                           samples: int = 1000, bins: int = 20,
                           rng: Optional[np.random.Generator] = None) -> dict:
    """
    This function approximates, per arm, the distribution of
    sigmoid(c . w) under w ~ N(g, diag(1/q)) with Monte Carlo draws.
    """

    if samples < 1:
        raise ValueError(f"samples should be at least 1, got {samples}.")

    rng = np.random.default_rng(0) if rng is None else rng
    context = np.asarray(context, dtype=float)

    distributions = {}
    for kind in BASELINE_TYPES:
        arm = state.arms[kind]
        draws = arm.g + rng.standard_normal((samples, len(arm.g))) \
            / np.sqrt(arm.q)
        values = expit(draws @ context)
        counts, edges = np.histogram(values, bins=bins, range=(0.0, 1.0))
        distributions[kind] = ArmScoreDistribution(values, counts, edges)

    return distributions

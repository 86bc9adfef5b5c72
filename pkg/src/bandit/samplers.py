"""Baseline-type samplers with a common select / observe surface

The experiment loops only talk to samplers, so the contextual strategy
(fBEE / pBEE) and its ablations (ncBEE, nBEE, single type) are
interchangeable.
"""

from abc import ABC, abstractmethod
from typing import Optional
import numpy as np
from attribution.baselines import BaselineType
from bandit.thompson import (BanditState, Reward, thompson_select,
                             extract_reward, map_update, precision_update)
from bandit.alternatives import (BetaCounts, beta_select, beta_update,
                                 uniform_select)
from metrics.ids import Direction, RewardKind


class TypeSampler(ABC):
    """Selects a baseline type per trial and learns from its score."""

    name = "sampler"

    @abstractmethod
    def select(self, context: Optional[np.ndarray]) -> BaselineType:
        pass

    def observe(self, kind: BaselineType, score: float,
                x: Optional[np.ndarray] = None,
                context: Optional[np.ndarray] = None) -> Optional[Reward]:
        """Non-learning samplers ignore the observed score."""
        return None


class ContextualSampler(TypeSampler):
    """
    Thompson sampling on a `BanditState`. With `adaptive=False` the state
    is only read (pBEE); otherwise every observation runs the reward and
    posterior updates.
    """

    def __init__(self, state: BanditState, adaptive: bool = True,
                 rng: Optional[np.random.Generator] = None):
        self.state = state
        self.adaptive = adaptive
        self.rng = state.rng if rng is None else rng
        self.name = "fBEE" if adaptive else "pBEE"

    def select(self, context):
        return thompson_select(self.state, context, self.rng)

    def observe(self, kind, score, x=None, context=None):
        if not self.adaptive:
            return None

        state = self.state
        reward = extract_reward(state.kind, state.direction, score,
                                state.score_history, self.rng)
        map_update(state, kind, reward.y, context=context, x=x)

        # theta may have moved during a joint update
        if x is not None and state.network is not None and not state.finetune:
            context = state.context(x)
        precision_update(state, kind, context)

        return reward


class BetaSampler(TypeSampler):
    """Context-free Thompson sampling on Beta counts (ncBEE)."""

    name = "ncBEE"

    def __init__(self, kind: RewardKind, direction: Direction,
                 rng: np.random.Generator,
                 counts: Optional[BetaCounts] = None):
        self.kind = RewardKind(kind)
        self.direction = Direction(direction)
        self.rng = rng
        self.counts = counts or BetaCounts()
        self.history = []

    def select(self, context=None):
        return beta_select(self.counts, self.rng)

    def observe(self, kind, score, x=None, context=None):
        reward = extract_reward(self.kind, self.direction, score,
                                self.history, self.rng)
        beta_update(self.counts, kind, reward.y)
        return reward


class UniformSampler(TypeSampler):
    """Uniformly random baseline types (nBEE)."""

    name = "nBEE"

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def select(self, context=None):
        return uniform_select(self.rng)


class FixedSampler(TypeSampler):
    """Always the same baseline type."""

    def __init__(self, kind: BaselineType):
        self.kind = BaselineType(kind)
        self.name = self.kind.value

    def select(self, context=None):
        return self.kind

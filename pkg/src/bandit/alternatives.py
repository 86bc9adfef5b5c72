"""Context-free selection strategies

- ncBEE: Thompson sampling over per-type Beta(alpha, beta) success counts
- nBEE: uniformly random type selection (no learning)
"""

from dataclasses import dataclass, field
import numpy as np
from attribution.baselines import BaselineType, BASELINE_TYPES

STRATEGIES = ("ncBEE", "nBEE")


@dataclass
class BetaCounts:
    """Beta posterior counts per baseline type, starting at (1, 1)."""

    alpha: dict = field(
        default_factory=lambda: {kind: 1.0 for kind in BASELINE_TYPES})
    beta: dict = field(
        default_factory=lambda: {kind: 1.0 for kind in BASELINE_TYPES})

    def mean(self, kind: BaselineType) -> float:
        kind = BaselineType(kind)
        return self.alpha[kind] / (self.alpha[kind] + self.beta[kind])


def beta_select(counts: BetaCounts, rng: np.random.Generator) \
        -> BaselineType:
    """Thompson selection on the Beta posteriors, ties to the first type."""

    draws = [rng.beta(counts.alpha[kind], counts.beta[kind])
             for kind in BASELINE_TYPES]
    return BASELINE_TYPES[int(np.argmax(draws))]


def beta_update(counts: BetaCounts, kind: BaselineType, y: int):
    """Increments alpha on a +1 reward and beta on a -1 reward."""

    kind = BaselineType(kind)
    if y == 1:
        counts.alpha[kind] += 1.0
    elif y == -1:
        counts.beta[kind] += 1.0
    else:
        raise ValueError(f"Reward should be +1 or -1, got {y}.")


def uniform_select(rng: np.random.Generator) -> BaselineType:
    return BASELINE_TYPES[int(rng.integers(len(BASELINE_TYPES)))]


def alt_select(mode: str, rng: np.random.Generator,
               counts: BetaCounts = None) -> BaselineType:
    """This function dispatches selection for the context-free modes."""

    if mode == "ncBEE":
        if counts is None:
            raise ValueError("ncBEE selection requires Beta counts.")
        return beta_select(counts, rng)
    elif mode == "nBEE":
        return uniform_select(rng)
    else:
        raise ValueError(f"Unknown strategy '{mode}'. "
                         f"Expected one of {STRATEGIES}.")

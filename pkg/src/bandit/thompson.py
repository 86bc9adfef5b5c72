"""Contextual exploration-exploitation over baseline types

Every baseline type is an arm with a diagonal Gaussian posterior
N(g, diag(1/q)) over a K-dimensional classifier w. The probability that
a type yields a positive reward under context c is sigmoid(c . w).

- Thompson selection (`thompson_select`)
- reward extraction (`extract_reward`)
- MAP update of g (and theta) (`map_update`)
- Laplace precision update (`precision_update`)
"""

from dataclasses import dataclass, field
from typing import Optional
import numpy as np
from scipy.special import expit, log_expit
from attribution.baselines import BaselineType, BASELINE_TYPES
from metrics.ids import Direction, RewardKind
from models.context import ContextNetwork


@dataclass
class ArmState:
    """Posterior mean g and diagonal precision q of one arm."""

    g: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        if self.g.shape != self.q.shape:
            raise ValueError("Arm mean and precision shapes differ.")
        if np.any(self.q <= 0.0):
            raise ValueError("Arm precision should be elementwise positive.")


@dataclass
class SolverSettings:
    """Gradient-descent settings of the MAP optimization."""

    step_size: float = 1e-3
    iterations: int = 25
    tolerance: float = 1e-6


@dataclass
class Reward:
    """Two-point reward y in {+1, -1} with its success parameter h."""

    y: int
    h: float


@dataclass
class UpdateResult:
    converged: bool
    iterations: int
    loss: float


@dataclass
class BanditState:
    """Per-metric bandit over the five baseline types."""

    metric: str
    direction: Direction
    kind: RewardKind
    arms: dict
    network: Optional[ContextNetwork] = None
    score_history: list = field(default_factory=list)
    rng: np.random.Generator = field(
        default_factory=lambda: np.random.default_rng(0))
    finetune: bool = False
    solver: SolverSettings = field(default_factory=SolverSettings)

    @property
    def context_dim(self) -> int:
        return len(self.arms[BASELINE_TYPES[0]].g)

    def context(self, x: np.ndarray) -> np.ndarray:
        if self.network is None:
            raise ValueError("This bandit state has no context network.")
        return self.network.embed(x)


def init_state(metric, network: Optional[ContextNetwork] = None,
               context_dim: Optional[int] = None, seed: int = 0,
               solver: Optional[SolverSettings] = None) -> BanditState:
    """
    This function creates a fresh bandit state for a metric: every arm
    starts at g = 0, q = 1. `metric` is any record with `name`,
    `direction` and `kind` (see `metrics.Metric`).
    """

    if network is not None:
        context_dim = network.output_dim
    if not context_dim or context_dim < 1:
        raise ValueError("A context dimension (or network) is required.")

    arms = {kind: ArmState(np.zeros(context_dim), np.ones(context_dim))
            for kind in BASELINE_TYPES}

    return BanditState(metric.name, Direction(metric.direction),
                       RewardKind(metric.kind), arms, network, [],
                       np.random.default_rng(seed), False,
                       solver or SolverSettings())


def sample_logits(state: BanditState, context: np.ndarray,
                  rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """
    This function draws w ~ N(g, diag(1/q)) for every arm (in
    enumeration order) and returns the logits c . w.
    """

    rng = state.rng if rng is None else rng
    context = np.asarray(context, dtype=float)

    if not np.all(np.isfinite(context)):
        raise ValueError("Context contains non-finite values.")

    logits = []
    for kind in BASELINE_TYPES:
        arm = state.arms[kind]
        w = arm.g + rng.standard_normal(arm.g.shape) / np.sqrt(arm.q)
        logits.append(float(context @ w))

    return np.array(logits)


def thompson_select(state: BanditState, context: np.ndarray,
                    rng: Optional[np.random.Generator] = None) \
        -> BaselineType:
    """
    This function selects the type maximizing sigmoid(c . w) over
    posterior draws. The sigmoid is monotonic, so the argmax is taken on
    the logits. Exact ties (e.g. a zero context) are broken uniformly at
    random; without ties no extra draw is consumed.
    """

    rng = state.rng if rng is None else rng
    logits = sample_logits(state, context, rng)

    tied = np.flatnonzero(logits == logits.max())
    if len(tied) == 1:
        return BASELINE_TYPES[int(tied[0])]

    return BASELINE_TYPES[int(rng.choice(tied))]


def normalized_rank(score: float, history: list,
                    direction: Direction) -> float:
    """
    This function computes the normalized rank of a score among the
    previous scores: strictly worse scores count 1, ties count 1/2.
    """

    if not history:
        return 0.5

    previous = np.asarray(history, dtype=float)
    if direction == Direction.HIGHER:
        worse = np.sum(previous < score)
    else:
        worse = np.sum(previous > score)
    ties = np.sum(previous == score)

    return float((worse + 0.5 * ties) / max(1, len(previous)))


def extract_reward(kind: RewardKind, direction: Direction, score: float,
                   history: list, rng: np.random.Generator) -> Reward:
    """
    This function maps a metric score to a two-point reward.
    Binary metrics map success (positive score) to +1 and failure to -1.
    Continuous metrics draw +1 with probability h, the normalized rank of
    the score w.r.t. `history`; the score is then appended to `history`.
    """

    if not np.isfinite(score):
        raise ValueError(f"Cannot extract a reward from score {score}.")

    if RewardKind(kind) == RewardKind.BINARY:
        success = score > 0.0
        return Reward(1 if success else -1, 1.0 if success else 0.0)

    h = normalized_rank(score, history, Direction(direction))
    history.append(float(score))
    y = 1 if rng.random() < h else -1

    return Reward(y, h)


def map_update(state: BanditState, arm: BaselineType, y: int,
               context: Optional[np.ndarray] = None,
               x: Optional[np.ndarray] = None) -> UpdateResult:
    """
    This function minimizes
        -log sigmoid(y u . c_theta(x)) + 1/2 sum_i q_i (u_i - g_i)^2
    by gradient descent, starting at u = g, and sets g to the best
    iterate. When an input x is given and the state is not in finetune
    mode, theta is optimized jointly; otherwise the context is fixed
    (either `context` or c_theta(x) with theta frozen).
    """

    if y not in (1, -1):
        raise ValueError(f"Reward should be +1 or -1, got {y}.")

    record = state.arms[BaselineType(arm)]
    network = state.network
    train_theta = (x is not None and network is not None
                   and not state.finetune)

    if not train_theta:
        if context is None:
            if x is None:
                raise ValueError("map_update needs a context or an input.")
            context = state.context(x)
        context = np.asarray(context, dtype=float)

    solver = state.solver
    g0 = record.g.copy()
    q = record.q
    u = g0.copy()

    best_loss, best_u, best_theta = np.inf, u.copy(), None
    converged = False
    iteration = 0

    for iteration in range(solver.iterations + 1):
        if train_theta:
            context, caches = network.forward(x)

        margin = y * float(u @ context)
        loss = -float(log_expit(margin)) \
            + 0.5 * float(np.sum(q * (u - g0) ** 2))

        # d loss / d (u . c)
        weight = -y * float(expit(-margin))
        grad_u = weight * context + q * (u - g0)
        grads = network.gradient(caches, weight * u) if train_theta else {}

        squared = float(np.sum(grad_u ** 2))
        squared += sum(float(np.sum(grad ** 2)) for grad in grads.values())

        if loss < best_loss:
            best_loss, best_u = loss, u.copy()
            if train_theta:
                best_theta = {name: value.copy()
                              for name, value in network.parameters.items()}

        if np.sqrt(squared) < solver.tolerance:
            converged = True
            break
        if iteration == solver.iterations:
            break

        u = u - solver.step_size * grad_u
        if train_theta:
            network.step(grads, solver.step_size)

    record.g = best_u
    if train_theta and best_theta is not None:
        network.set_parameters(best_theta)

    return UpdateResult(converged, iteration, best_loss)


def precision_update(state: BanditState, arm: BaselineType,
                     context: np.ndarray) -> np.ndarray:
    """
    This function applies the Laplace-approximation precision update
    q_i <- q_i + sigmoid(g . c) sigmoid(-g . c) c_i^2.
    """

    record = state.arms[BaselineType(arm)]
    context = np.asarray(context, dtype=float)

    logit = float(record.g @ context)
    record.q = record.q + expit(logit) * expit(-logit) * context ** 2

    return record.q

"""Faithfulness metrics

`get_metric` returns a `Metric` record (direction, reward kind and a
single-instance evaluator) for any of the eight metric identifiers.
"""

from dataclasses import dataclass
from typing import Callable, Optional
from metrics.ids import Direction, RewardKind, MetricId      # noqa: F401
from metrics.masking import MetricScore, apply_mask          # noqa: F401
from metrics.confidence import average_drop, pct_increase
from metrics.curves import (perturbation_auc, insertion_deletion_auc,
                            information_curves)

METRIC_DEFAULTS = {
    "maskFill": 0.0,
    "sicBlurSigma": 2.0,
    "classReference": "target",
}


@dataclass(frozen=True)
class Metric:
    """Metric record used by the bandit and the experiments."""

    name: str
    direction: Direction
    kind: RewardKind
    evaluate: Callable

    def score(self, model, x, explanation, y) -> float:
        return float(self.evaluate(model, x, explanation, y))


def score_map(metric_id: MetricId, model, x, explanation, y: int,
              settings: Optional[dict] = None) -> MetricScore:
    """
    This function evaluates a single explanation map of a single
    instance on one of the eight metrics. ADP and PIC are evaluated on a
    one-item batch.
    """

    settings = {**METRIC_DEFAULTS, **(settings or {})}
    metric_id = MetricId(metric_id)
    fill = settings["maskFill"]

    if metric_id in (MetricId.POS, MetricId.NEG):
        return perturbation_auc(model, x, explanation, y, metric_id.value,
                                settings["classReference"], fill)
    elif metric_id in (MetricId.INS, MetricId.DEL):
        return insertion_deletion_auc(model, x, explanation, y,
                                      metric_id.value, fill)
    elif metric_id in (MetricId.SIC, MetricId.AIC):
        return information_curves(model, x, explanation, y, metric_id.value,
                                  settings["sicBlurSigma"])
    elif metric_id == MetricId.ADP:
        return average_drop(model, [x], [explanation], [y])
    else:
        return pct_increase(model, [x], [explanation], [y])


def get_metric(metric_id, settings: Optional[dict] = None) -> Metric:
    """This function returns the metric record of a metric identifier."""

    metric_id = MetricId(metric_id)

    def evaluate(model, x, explanation, y):
        return score_map(metric_id, model, x, explanation, y, settings).value

    return Metric(metric_id.value, metric_id.direction, metric_id.kind,
                  evaluate)

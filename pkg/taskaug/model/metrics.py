from typing import Sequence

import numpy as np
from sklearn.metrics import average_precision_score, roc_auc_score

from taskaug.error import UndefinedMetricError


def _validate(labels: Sequence[int], scores: Sequence[float]):
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape or labels.ndim != 1:
        raise ValueError(f'labels {labels.shape} and scores {scores.shape} must be vectors of equal length')
    if not np.isin(labels, (0, 1)).all():
        raise ValueError('labels must be 0 or 1')
    if labels.min(initial=1) == labels.max(initial=0) or len(labels) == 0:
        raise UndefinedMetricError()

    return labels.astype(np.int64), scores


def auroc(labels: Sequence[int], scores: Sequence[float]) -> float:
    """Returns the area under the ROC curve, with tied scores given half credit.

    :param labels: The binary labels; both classes must be present.
    :param scores: The predicted scores.
    :return: A value in [0, 1].
    """
    labels, scores = _validate(labels, scores)
    return float(roc_auc_score(labels, scores))


def auprc(labels: Sequence[int], scores: Sequence[float]) -> float:
    """Returns the average precision ``Σ (R_k − R_{k−1})·P_k`` over descending score thresholds, with tied scores
    grouped into one threshold.

    :param labels: The binary labels; both classes must be present.
    :param scores: The predicted scores.
    :return: A value in [0, 1].
    """
    labels, scores = _validate(labels, scores)
    return float(average_precision_score(labels, scores))


class MetricRecord:
    """The metrics of one evaluation.

    :param epoch: The 1-based epoch index.
    :param loss: The mean binary cross-entropy.
    :param auroc: The AUROC.
    :param auprc: The AUPRC.
    """

    def __init__(self, epoch: int, loss: float, auroc: float, auprc: float):
        self.epoch = epoch
        self.loss = loss
        self.auroc = auroc
        self.auprc = auprc

    def __eq__(self, other):
        if not isinstance(other, MetricRecord):
            return False

        return (self.epoch == other.epoch and
                self.loss == other.loss and
                self.auroc == other.auroc and
                self.auprc == other.auprc)

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'epoch={self.epoch}, loss={self.loss}, auroc={self.auroc}, auprc={self.auprc})'

    def to_json(self) -> dict:
        return {'epoch': self.epoch, 'loss': self.loss, 'auroc': self.auroc, 'auprc': self.auprc}

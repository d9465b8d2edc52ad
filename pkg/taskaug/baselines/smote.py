import logging
from typing import Optional, Tuple

import numpy as np
from sklearn.neighbors import NearestNeighbors

from taskaug.data import LabeledDataset, Record, Signal
from taskaug.diff import RngStream
from taskaug.error import InsufficientMinorityError

logger = logging.getLogger(__name__)

DEFAULT_NEIGHBORS = 5


def interpolate(a: np.ndarray, b: np.ndarray, lam: float) -> np.ndarray:
    """Returns the point at fraction `lam` of the segment from `a` to `b`.
    """
    return a + lam * (b - a)


def smote_samples(
    minority: np.ndarray, count: int, k: int, rng: RngStream,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draws `count` synthetic points by interpolating minority points towards one of their k nearest minority
    neighbours.

    :param minority: The [n, D] minority points, n >= 2.
    :param count: The number of points to draw.
    :param k: The number of neighbours; reduced to n - 1 when larger.
    :param rng: The :class:`RngStream <taskaug.diff.rng.RngStream>` to draw from.
    :return: A tuple of the [count, D] points, the [count, 2] (base, neighbour) parent indices and the [count]
        interpolation fractions.
    """
    n = len(minority)
    if n < 2:
        raise InsufficientMinorityError(n)

    k = min(k, n - 1)
    index = NearestNeighbors(n_neighbors=k + 1).fit(minority)
    _, neighbours = index.kneighbors(minority)

    # a point is normally its own first neighbour, but exact duplicates can displace it
    own = [row[row != i][:k] for i, row in enumerate(neighbours)]

    gen = rng.generator()
    bases = gen.integers(0, n, size=count)
    choices = gen.integers(0, k, size=count)
    lams = gen.random(count)

    parents = np.array([[b, own[b][c]] for b, c in zip(bases, choices)], dtype=np.int64).reshape(count, 2)
    points = np.array([interpolate(minority[b], minority[nn], lam) for (b, nn), lam in zip(parents, lams)])
    return points.reshape(count, minority.shape[1]), parents, lams


def smote(dataset: LabeledDataset, k: int = DEFAULT_NEIGHBORS, rng: Optional[RngStream] = None) -> LabeledDataset:
    """Oversamples the minority class with synthetic records until both classes have the same count.

    Synthetic records carry the minority label, a fresh ``smote-NNNNN`` patient id and the synthetic flag. The
    original records come first, in their original order.

    :param dataset: The training :class:`LabeledDataset <taskaug.data.dataset.LabeledDataset>`.
    :param k: (optional) The number of nearest neighbours. Defaults to 5.
    :param rng: (optional) The :class:`RngStream <taskaug.diff.rng.RngStream>` to draw from. Defaults to seed 0.
    :return: The balanced dataset.
    """
    labels = dataset.labels()
    positives = int(labels.sum())
    negatives = len(labels) - positives
    if positives == negatives:
        return dataset

    minority_label = 1 if positives < negatives else 0
    indices = np.flatnonzero(labels == minority_label)
    values = dataset.values()
    shape = values.shape[1:]

    count = abs(positives - negatives)
    points, _, _ = smote_samples(values[indices].reshape(len(indices), -1), count, k, rng or RngStream(0))
    logger.info(f'smote: adding {count} synthetic records of class {minority_label}')

    synthetic = [
        Record(Signal(p.reshape(shape), dataset.fs), minority_label, f'smote-{i:05d}', synthetic=True)
        for i, p in enumerate(points)
    ]
    return LabeledDataset(dataset.records + synthetic, dataset.task)

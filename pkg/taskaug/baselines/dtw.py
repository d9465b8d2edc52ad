"""Dynamic time warping and discriminative guided warping.
"""
import logging
from typing import List, Optional, Tuple

import numpy as np
from numba import njit
from scipy.spatial.distance import cdist

from taskaug.error import ContractViolationError

logger = logging.getLogger(__name__)


class DtwResult:
    """A minimal-cost monotone alignment.

    :param cost: The sum of the local distances along the path.
    :param path: The aligned (i, j) index pairs, from (0, 0) to (n - 1, m - 1).
    """

    def __init__(self, cost: float, path: List[Tuple[int, int]]):
        self.cost = cost
        self.path = path

    def __eq__(self, other):
        if not isinstance(other, DtwResult):
            return False

        return self.cost == other.cost and self.path == other.path

    def __repr__(self):
        return f'{self.__class__.__name__}(cost={self.cost}, path={self.path})'


@njit(cache=True)
def _accumulate(cost: np.ndarray) -> np.ndarray:
    n, m = cost.shape
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            acc[i, j] = cost[i - 1, j - 1] + min(acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])
    return acc


def _backtrack(acc: np.ndarray) -> List[Tuple[int, int]]:
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    path = [(i - 1, j - 1)]
    while (i, j) != (1, 1):
        # the diagonal wins ties
        candidates = [(acc[i - 1, j - 1], i - 1, j - 1), (acc[i - 1, j], i - 1, j), (acc[i, j - 1], i, j - 1)]
        _, i, j = min(candidates, key=lambda c: c[0])
        path.append((i - 1, j - 1))
    path.reverse()
    return path


def _as_sequence(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    return a[:, None] if a.ndim == 1 else a


def dtw(a, b, metric: str = 'euclidean') -> DtwResult:
    """Aligns two sequences with dynamic time warping over the full window.

    :param a: The first sequence, [n] or [n, C] (time-major).
    :param b: The second sequence, [m] or [m, C].
    :param metric: (optional) The local distance, any :func:`scipy.spatial.distance.cdist` metric. Defaults to
        Euclidean distance between the C-dimensional sample vectors.
    :return: The :class:`DtwResult <DtwResult>`.
    """
    a, b = _as_sequence(a), _as_sequence(b)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ContractViolationError(f'dtw: sequences must be non-empty, got lengths {a.shape[0]} and {b.shape[0]}')
    if a.shape[1] != b.shape[1]:
        raise ContractViolationError(f'dtw: sequences have {a.shape[1]} and {b.shape[1]} channels')

    acc = _accumulate(cdist(a, b, metric=metric))
    return DtwResult(float(acc[-1, -1]), _backtrack(acc))


def pairwise_dtw(batch: np.ndarray) -> np.ndarray:
    """Returns the symmetric matrix of DTW costs between the [C, T] signals of a [B, C, T] batch.
    """
    n = len(batch)
    distances = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            distances[i, j] = distances[j, i] = dtw(batch[i].T, batch[j].T).cost
    return distances


def reference_scores(distances: np.ndarray, labels: np.ndarray, label: int) -> np.ndarray:
    """Scores each batch member of class `label` as a warping reference: its mean DTW cost to the other class minus its
    mean DTW cost to the rest of its own class. Members of the other class score -inf.
    """
    labels = np.asarray(labels)
    same = np.flatnonzero(labels == label)
    other = np.flatnonzero(labels != label)

    scores = np.full(len(labels), -np.inf)
    for c in same:
        peers = same[same != c]
        within = distances[c, peers].mean() if len(peers) else 0.0
        scores[c] = distances[c, other].mean() - within
    return scores


def select_reference(distances: np.ndarray, labels: np.ndarray, label: int) -> int:
    """Returns the batch index of the reference for class `label`.

    When the batch holds no example of the other class, the class medoid (minimal total DTW cost to its own class) is
    used instead and a warning is logged.
    """
    labels = np.asarray(labels)
    same = np.flatnonzero(labels == label)
    if len(same) == 0:
        raise ContractViolationError(f'dgw: the batch holds no example of class {label}')

    if len(same) == len(labels):
        logger.warning(f'dgw: batch holds only class {label}; falling back to the class medoid as reference')
        return int(same[np.argmin(distances[np.ix_(same, same)].sum(axis=1))])

    return int(np.argmax(reference_scores(distances, labels, label)))


def warp_to(x: np.ndarray, reference: np.ndarray, path: Optional[List[Tuple[int, int]]] = None) -> np.ndarray:
    """Warps `x` onto the time base of `reference` along their DTW path; each reference sample takes the mean of the
    `x` samples aligned to it.

    :param x: The [C, T] signal to warp.
    :param reference: The [C, T'] reference.
    :param path: (optional) A precomputed alignment of `x` to `reference`.
    :return: The warped [C, T'] signal.
    """
    if path is None:
        path = dtw(x.T, reference.T).path

    pairs = np.asarray(path)
    length = reference.shape[1]
    counts = np.bincount(pairs[:, 1], minlength=length)
    out = np.zeros((x.shape[0], length))
    for c in range(x.shape[0]):
        out[c] = np.bincount(pairs[:, 1], weights=x[c, pairs[:, 0]], minlength=length) / counts
    return out


def dgw_augment(x: np.ndarray, y: int, batch: np.ndarray, labels: np.ndarray,
                distances: Optional[np.ndarray] = None) -> np.ndarray:
    """Discriminative guided warping: warps `x` onto the batch member of its class that is most dissimilar to the
    other class.

    :param x: The [C, T] signal.
    :param y: Its label.
    :param batch: The [B, C, T] batch to choose the reference from.
    :param labels: The [B] labels of the batch.
    :param distances: (optional) The :func:`pairwise_dtw` matrix of the batch, when already computed.
    :return: The warped [C, T] signal.
    """
    if distances is None:
        distances = pairwise_dtw(batch)

    reference = batch[select_reference(distances, labels, y)]
    return warp_to(np.asarray(x, dtype=np.float64), reference)

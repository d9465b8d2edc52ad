from enum import Enum
from typing import Optional

import numpy as np

from taskaug.baselines.dtw import dgw_augment, pairwise_dtw
from taskaug.baselines.smote import DEFAULT_NEIGHBORS, smote
from taskaug.baselines.spectral import spec_augment
from taskaug.baselines.timemask import time_mask_baseline
from taskaug.data import LabeledDataset
from taskaug.diff import RngStream

# The mask fraction used when none is given.
DEFAULT_MASK_FRACTION = 0.1


class AugStrategy(Enum):
    """The augmentation strategy of a training run.
    """

    # No augmentation.
    NONE = 'none'

    # The learned TaskAug policy.
    TASKAUG = 'taskaug'

    # Baselines.
    TIMEMASK = 'timemask'
    SPECAUG = 'specaug'
    DGW = 'dgw'
    SMOTE = 'smote'


class BatchAugmenter:
    """Augments training batches with a fixed strategy. Labels pass through untouched.
    """

    def augment(self, x: np.ndarray, y: np.ndarray, rng: RngStream) -> np.ndarray:
        """Returns the augmented batch.

        :param x: The [B, C, T] batch.
        :param y: The [B] labels.
        :param rng: The :class:`RngStream <taskaug.diff.rng.RngStream>` of the batch. Example e draws from
            ``rng.split(e)``.
        :return: The augmented [B, C, T] batch.
        """
        raise NotImplementedError('BatchAugmenter is an abstract class. Subclasses must implement augment().')


class IdentityAugmenter(BatchAugmenter):
    """Leaves batches unchanged.
    """

    def augment(self, x: np.ndarray, y: np.ndarray, rng: RngStream) -> np.ndarray:
        return x


class TimeMaskAugmenter(BatchAugmenter):
    """Masks a contiguous fraction of every example.

    :param w: The masked fraction.
    """

    def __init__(self, w: float = DEFAULT_MASK_FRACTION):
        self.w = w

    def augment(self, x: np.ndarray, y: np.ndarray, rng: RngStream) -> np.ndarray:
        return np.stack([time_mask_baseline(xe, self.w, rng.split(e)) for e, xe in enumerate(x)])


class SpecAugmenter(BatchAugmenter):
    """Masks a contiguous fraction of the STFT frames and frequency bins of every example.

    :param w: The masked fraction of each axis.
    """

    def __init__(self, w: float = DEFAULT_MASK_FRACTION):
        self.w = w

    def augment(self, x: np.ndarray, y: np.ndarray, rng: RngStream) -> np.ndarray:
        return np.stack([spec_augment(xe, self.w, rng.split(e)) for e, xe in enumerate(x)])


class DgwAugmenter(BatchAugmenter):
    """Warps every example onto the discriminative reference of its class within the batch.
    """

    def augment(self, x: np.ndarray, y: np.ndarray, rng: RngStream) -> np.ndarray:
        distances = pairwise_dtw(x)
        return np.stack([dgw_augment(xe, int(ye), x, y, distances) for xe, ye in zip(x, y)])


def batch_augmenter(strategy: AugStrategy, mask_frac: Optional[float] = None) -> BatchAugmenter:
    """Returns the batch augmenter of a fixed strategy. SMOTE and TaskAug batches are not augmented here: SMOTE acts on
    the training set once before training and TaskAug runs inside the bilevel objective.
    """
    strategy = AugStrategy(strategy)
    w = DEFAULT_MASK_FRACTION if mask_frac is None else mask_frac
    if strategy is AugStrategy.TIMEMASK:
        return TimeMaskAugmenter(w)
    if strategy is AugStrategy.SPECAUG:
        return SpecAugmenter(w)
    if strategy is AugStrategy.DGW:
        return DgwAugmenter()
    return IdentityAugmenter()


def prepare_training_set(
    strategy: AugStrategy, train: LabeledDataset, rng: RngStream, k: int = DEFAULT_NEIGHBORS,
) -> LabeledDataset:
    """Applies the dataset-level part of a strategy, which is SMOTE oversampling for :attr:`AugStrategy.SMOTE` and
    nothing otherwise.
    """
    if AugStrategy(strategy) is AugStrategy.SMOTE:
        return smote(train, k, rng)
    return train

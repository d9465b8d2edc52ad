import logging
from enum import Enum
from typing import Optional

import numpy as np

from taskaug.data.dataset import LabeledDataset

logger = logging.getLogger(__name__)

# Lead standard deviations are floored at this value.
STD_FLOOR = 1e-8


class NormalizeMode(Enum):
    """How signals are normalized before training.
    """

    DIVIDE_BY_1000 = 'divide_by_1000'
    ZSCORE_PER_LEAD = 'zscore_per_lead'
    NONE = 'none'


class Normalizer:
    """Normalizes datasets with statistics fitted on a training split.

    :param mode: The :class:`NormalizeMode <NormalizeMode>`.
    """

    def __init__(self, mode: NormalizeMode):
        self.mode = NormalizeMode(mode)
        self.mean: Optional[np.ndarray] = None
        self.std: Optional[np.ndarray] = None

    def __repr__(self):
        return f'{self.__class__.__name__}(mode={self.mode}, fitted={self.mean is not None})'

    def fit(self, train: LabeledDataset) -> 'Normalizer':
        """Computes the per-lead mean and standard deviation over every record and sample of `train`.
        """
        if self.mode is not NormalizeMode.ZSCORE_PER_LEAD:
            return self

        values = train.values()
        self.mean = values.mean(axis=(0, 2))
        std = values.std(axis=(0, 2))
        flat = std < STD_FLOOR
        if flat.any():
            logger.warning(
                f'leads {np.flatnonzero(flat).tolist()} have zero standard deviation; flooring at {STD_FLOOR}'
            )
        self.std = np.maximum(std, STD_FLOOR)
        return self

    def apply(self, dataset: LabeledDataset) -> LabeledDataset:
        """Returns a normalized copy of `dataset`.
        """
        if self.mode is NormalizeMode.NONE or not dataset.records:
            return dataset
        if self.mode is NormalizeMode.DIVIDE_BY_1000:
            return dataset.with_values(dataset.values() / 1000.0)

        if self.mean is None:
            raise ValueError('z-scoring requires fit() on the training split first')
        return dataset.with_values((dataset.values() - self.mean[None, :, None]) / self.std[None, :, None])

    def to_json(self) -> dict:
        return {
            'mode': self.mode.value,
            'mean': self.mean.tolist() if self.mean is not None else None,
            'std': self.std.tolist() if self.std is not None else None,
        }

    @classmethod
    def from_json(cls, data: dict) -> 'Normalizer':
        normalizer = cls(NormalizeMode(data['mode']))
        if data.get('mean') is not None:
            normalizer.mean = np.asarray(data['mean'], dtype=np.float64)
            normalizer.std = np.asarray(data['std'], dtype=np.float64)
        return normalizer


def normalize(
    dataset: LabeledDataset, mode: NormalizeMode, reference: Optional[LabeledDataset] = None,
) -> LabeledDataset:
    """Normalizes `dataset`, z-scoring with the statistics of `reference` (the training split; defaults to `dataset`).

    :param dataset: The :class:`LabeledDataset <taskaug.data.dataset.LabeledDataset>` to normalize.
    :param mode: The :class:`NormalizeMode <NormalizeMode>`.
    :param reference: (optional) The dataset the z-score statistics are computed on.
    :return: The normalized dataset.
    """
    return Normalizer(mode).fit(reference if reference is not None else dataset).apply(dataset)

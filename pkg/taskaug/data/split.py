from collections import OrderedDict
from typing import Dict, List, Sequence, Tuple

import numpy as np

from taskaug.data.dataset import LabeledDataset
from taskaug.diff import RngStream
from taskaug.error import ContractViolationError


def _allocate(total: int, sizes: Sequence[int]) -> List[int]:
    # largest-remainder apportionment; ties go to the earlier stratum
    n = sum(sizes)
    quotas = [total * s / n for s in sizes]
    counts = [int(np.floor(q)) for q in quotas]
    order = sorted(range(len(sizes)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:total - sum(counts)]:
        counts[i] += 1
    return counts


def _holdout(
    patients: List[str], strata: Dict[str, int], fraction: float, rng: RngStream, stratify: bool,
) -> Tuple[List[str], List[str]]:
    """Splits patients into (kept, held out), holding out round(fraction · n) of them, at least one and never all.
    """
    total = min(max(int(round(fraction * len(patients))), 1), len(patients) - 1)

    groups: Dict[int, List[str]] = OrderedDict()
    for p in patients:
        groups.setdefault(strata[p] if stratify else 0, []).append(p)
    keys = sorted(groups)
    counts = _allocate(total, [len(groups[k]) for k in keys])

    held = set()
    for key, count in zip(keys, counts):
        members = groups[key]
        order = rng.permutation(len(members))
        held.update(members[i] for i in order[:count])

    return [p for p in patients if p not in held], [p for p in patients if p in held]


def split(
    dataset: LabeledDataset, ratios: Tuple[float, float] = (0.2, 0.2), seed: int = 0, stratify: bool = True,
) -> Tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    """Splits a dataset by patient into training, validation and test sets.

    The test patients are held out first; the validation patients are then held out of the remaining development
    patients. No patient appears in more than one split. With `stratify`, patients with and without a positive record
    are held out in proportion.

    :param dataset: The :class:`LabeledDataset <taskaug.data.dataset.LabeledDataset>` to split.
    :param ratios: (optional) The test fraction of all patients and the validation fraction of the development
        patients. Defaults to (0.2, 0.2).
    :param seed: (optional) The shuffling seed. Defaults to 0.
    :param stratify: (optional) Whether to stratify by patient label. Defaults to True.
    :return: A tuple of (train, val, test) datasets.
    """
    test_fraction, val_fraction = ratios
    if not (0 < test_fraction < 1 and 0 < val_fraction < 1):
        raise ValueError(f'split fractions must be in (0, 1), got {ratios}')

    patients = list(OrderedDict.fromkeys(dataset.patient_ids()))
    if len(patients) < 3:
        raise ContractViolationError(f'split: {len(patients)} patients cannot fill 3 splits')

    strata: Dict[str, int] = {}
    for r in dataset.records:
        strata[r.patient_id] = max(strata.get(r.patient_id, 0), r.label)

    rng = RngStream(seed)
    dev, test = _holdout(patients, strata, test_fraction, rng.split(0), stratify)
    train, val = _holdout(dev, strata, val_fraction, rng.split(1), stratify)

    def select(ids: List[str]) -> LabeledDataset:
        wanted = set(ids)
        return dataset.subset([i for i, r in enumerate(dataset.records) if r.patient_id in wanted])

    return select(train), select(val), select(test)

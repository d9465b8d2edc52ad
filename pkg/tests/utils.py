from typing import List, Optional

import numpy as np

from taskaug.data import LabeledDataset, Record, Signal


def gen_smooth_signal(seed: int, leads: int = 3, length: int = 64) -> np.ndarray:
    """Generates a [leads, length] sum of random low-frequency sinusoids.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(length) / length
    x = np.zeros((leads, length))
    for c in range(leads):
        for _ in range(3):
            x[c] += rng.uniform(0.5, 1.5) * np.sin(2 * np.pi * rng.uniform(0.5, 3.0) * t + rng.uniform(0, 2 * np.pi))
    return x


def gen_dataset(
    n: int, leads: int = 2, length: int = 64, fs: float = 100.0, positives: Optional[int] = None, seed: int = 0,
    patient_ids: Optional[List[str]] = None,
) -> LabeledDataset:
    """Generates a dataset of random float32-representable signals. The first `positives` records are labeled 1.
    """
    rng = np.random.default_rng(seed)
    positives = n // 2 if positives is None else positives
    records = []
    for i in range(n):
        values = rng.standard_normal((leads, length)).astype(np.float32).astype(np.float64)
        pid = patient_ids[i] if patient_ids else f'p{i:03d}'
        records.append(Record(Signal(values, fs), 1 if i < positives else 0, pid))
    return LabeledDataset(records, task='test')

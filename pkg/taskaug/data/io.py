"""Dataset files.

A dataset is stored as a JSON header and a binary payload next to it (same stem, ``.bin`` suffix). The payload holds
little-endian 32-bit floats, record-major then lead-major.
"""
import csv
import json
import logging
import os

import numpy as np

from taskaug.data.dataset import LabeledDataset, Record, Signal
from taskaug.error import CorruptDatasetError

logger = logging.getLogger(__name__)

PAYLOAD_DTYPE = '<f4'


def payload_path(path: str) -> str:
    return os.path.splitext(path)[0] + '.bin'


def save_dataset(dataset: LabeledDataset, path: str):
    """Writes a dataset header to `path` and its payload next to it.

    :param dataset: The non-empty :class:`LabeledDataset <taskaug.data.dataset.LabeledDataset>`.
    :param path: The header path, e.g. ``data/train.json``.
    """
    if not dataset.records:
        raise ValueError('cannot save an empty dataset')

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    payload = dataset.values().astype(PAYLOAD_DTYPE).tobytes()
    header = {
        'n': len(dataset),
        'leads': dataset.leads,
        'length': dataset.length,
        'fs': dataset.fs,
        'task': dataset.task,
        'dtype': PAYLOAD_DTYPE,
        'payload': os.path.basename(payload_path(path)),
        'labels': dataset.labels().tolist(),
        'patient_ids': dataset.patient_ids(),
        'synthetic': [r.synthetic for r in dataset.records],
    }
    with open(path, 'w') as f:
        json.dump(header, f, indent=2)
    with open(payload_path(path), 'wb') as f:
        f.write(payload)

    logger.debug(f'wrote {len(dataset)} records to {path}')


def load_dataset(path: str) -> LabeledDataset:
    """Reads a dataset written by :func:`save_dataset`.

    :param path: The header path.
    :return: The :class:`LabeledDataset <taskaug.data.dataset.LabeledDataset>`.
    """
    with open(path) as f:
        header = json.load(f)

    n, leads, length = int(header['n']), int(header['leads']), int(header['length'])
    expected = n * leads * length * np.dtype(PAYLOAD_DTYPE).itemsize
    data_path = os.path.join(os.path.dirname(path), header.get('payload', os.path.basename(payload_path(path))))
    with open(data_path, 'rb') as f:
        payload = f.read()
    if len(payload) != expected:
        raise CorruptDatasetError(data_path, expected, len(payload))

    values = np.frombuffer(payload, dtype=PAYLOAD_DTYPE).astype(np.float64).reshape(n, leads, length)
    synthetic = header.get('synthetic', [False] * n)
    records = [
        Record(Signal(values[i], header['fs']), header['labels'][i], header['patient_ids'][i], bool(synthetic[i]))
        for i in range(n)
    ]
    return LabeledDataset(records, header['task'])


def load_csv(path: str, leads: int, fs: float, task: str = 'csv') -> LabeledDataset:
    """Reads recordings from a CSV file with one ``patient_id,label,v0,...,v{C·T−1}`` row per record.

    Values are lead-major. A first row starting with ``patient_id`` is treated as a header.

    :param path: The CSV path.
    :param leads: The number of leads C; each row must hold a multiple of C values.
    :param fs: The sampling rate in Hz.
    :param task: (optional) The task name. Defaults to ``csv``.
    :return: The :class:`LabeledDataset <taskaug.data.dataset.LabeledDataset>`.
    """
    records = []
    with open(path, newline='') as f:
        for i, row in enumerate(csv.reader(f)):
            if not row or (i == 0 and row[0] == 'patient_id'):
                continue

            values = np.asarray([float(v) for v in row[2:]], dtype=np.float64)
            if values.size == 0 or values.size % leads != 0:
                raise ValueError(f'{path}:{i + 1}: {values.size} values do not divide into {leads} leads')
            records.append(Record(Signal(values.reshape(leads, -1), fs), int(row[1]), row[0]))

    return LabeledDataset(records, task)

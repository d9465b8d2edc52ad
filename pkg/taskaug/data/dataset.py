from typing import List, Sequence

import numpy as np

from taskaug.error import ContractViolationError

MIN_SAMPLES = 64


class Signal:
    """A multichannel recording.

    :param values: The [C, T] samples, stored as float64.
    :param fs: The sampling rate, in Hz.
    """

    def __init__(self, values, fs: float):
        values = np.array(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < MIN_SAMPLES:
            raise ContractViolationError(f'signal: expected [C >= 1, T >= {MIN_SAMPLES}] values, got {values.shape}')
        if not fs > 0:
            raise ContractViolationError(f'signal: sampling rate must be positive, got {fs}')
        if not np.all(np.isfinite(values)):
            raise ContractViolationError('signal: values must be finite')

        self.values = values
        self.fs = float(fs)

    def __eq__(self, other):
        if not isinstance(other, Signal):
            return False

        return self.fs == other.fs and self.values.shape == other.values.shape and \
            self.values.tobytes() == other.values.tobytes()

    def __repr__(self):
        return f'{self.__class__.__name__}(shape={self.values.shape}, fs={self.fs})'

    @property
    def leads(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]


class Record:
    """One labeled example.

    :param signal: The :class:`Signal <Signal>`.
    :param label: The binary label.
    :param patient_id: The non-empty identifier of the patient the recording belongs to.
    :param synthetic: (optional) Whether the record was created by an oversampler. Defaults to False.
    """

    def __init__(self, signal: Signal, label: int, patient_id: str, synthetic: bool = False):
        if label not in (0, 1):
            raise ContractViolationError(f'record: label must be 0 or 1, got {label}')
        if not patient_id:
            raise ContractViolationError('record: patient id must be non-empty')

        self.signal = signal
        self.label = int(label)
        self.patient_id = patient_id
        self.synthetic = synthetic

    def __eq__(self, other):
        if not isinstance(other, Record):
            return False

        return (self.signal == other.signal and
                self.label == other.label and
                self.patient_id == other.patient_id and
                self.synthetic == other.synthetic)

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'signal={self.signal!r}, label={self.label}, patient_id={self.patient_id!r}, ' \
               f'synthetic={self.synthetic})'


class LabeledDataset:
    """A collection of records sharing one lead count, length and sampling rate.

    :param records: The :class:`Record <Record>` objects.
    :param task: The name of the labeling task.
    """

    def __init__(self, records: Sequence[Record], task: str):
        records = list(records)
        shapes = {(r.signal.values.shape, r.signal.fs) for r in records}
        if len(shapes) > 1:
            raise ContractViolationError(f'dataset: records differ in shape or sampling rate: {sorted(shapes)}')

        self.records: List[Record] = records
        self.task = task

    def __len__(self):
        return len(self.records)

    def __eq__(self, other):
        if not isinstance(other, LabeledDataset):
            return False

        return self.task == other.task and self.records == other.records

    def __repr__(self):
        return f'{self.__class__.__name__}(task={self.task!r}, n={len(self.records)}, prevalence={self.prevalence})'

    @property
    def prevalence(self) -> float:
        """The fraction of positive records; 0 for an empty dataset.
        """
        if not self.records:
            return 0.0
        return sum(r.label for r in self.records) / len(self.records)

    @property
    def leads(self) -> int:
        return self.records[0].signal.leads

    @property
    def length(self) -> int:
        return self.records[0].signal.length

    @property
    def fs(self) -> float:
        return self.records[0].signal.fs

    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.records], dtype=np.int64)

    def patient_ids(self) -> List[str]:
        return [r.patient_id for r in self.records]

    def values(self) -> np.ndarray:
        """Returns the [N, C, T] array of all signals.
        """
        if not self.records:
            return np.zeros((0, 0, 0))
        return np.stack([r.signal.values for r in self.records])

    def subset(self, indices: Sequence[int]) -> 'LabeledDataset':
        return LabeledDataset([self.records[i] for i in indices], self.task)

    def with_values(self, values: np.ndarray) -> 'LabeledDataset':
        """Returns a copy of this dataset whose signals hold `values` ([N, C, T]), keeping labels and ids.
        """
        return LabeledDataset(
            [Record(Signal(v, r.signal.fs), r.label, r.patient_id, r.synthetic) for v, r in zip(values, self.records)],
            self.task,
        )

"""Synthetic ECG-like recordings with controllable label-encoding features.

Beats are sums of Gaussian bumps (P, Q, R, S and T waves) placed at RR-interval spacing. Each task encodes the label in
one feature:

* ``rr_irregularity``: positives have five times the RR-interval jitter.
* ``amplitude_ratio``: positives have R waves 1.5 times taller on the first half of the leads.
* ``st_offset``: positives carry a constant offset between the QRS complex and the T wave.
"""
import math
from enum import Enum
from typing import Tuple

import numpy as np
from scipy.signal import find_peaks

from taskaug.data.dataset import LabeledDataset, Record, Signal
from taskaug.diff import RngStream
from taskaug.error import ContractViolationError

MIN_RECORDS = 10

# Coefficient of variation of the RR intervals of negatives.
RR_JITTER = 0.02

# Multipliers applied to positives.
RR_JITTER_FACTOR = 5.0
AMPLITUDE_FACTOR = 1.5
ST_OFFSET = 0.1

# (offset from the R peak in seconds, amplitude, width in seconds) per wave.
_WAVES = {
    'p': (-0.16, 0.15, 0.025),
    'q': (-0.03, -0.1, 0.01),
    'r': (0.0, 1.0, 0.012),
    's': (0.03, -0.2, 0.01),
    't': (0.28, 0.3, 0.05),
}

# The ST segment spans this window after the R peak, in seconds.
_ST_WINDOW = (0.05, 0.2)


class SynthTask(Enum):
    """A synthetic labeling task.
    """

    # Irregular RR intervals, resembling atrial fibrillation.
    RR_IRREGULARITY = 'rr_irregularity'

    # Tall R waves on some leads, resembling hypertrophy.
    AMPLITUDE_RATIO = 'amplitude_ratio'

    # Elevated ST segment.
    ST_OFFSET = 'st_offset'


class SynthTaskConfig:
    """The :class:`SynthTaskConfig <SynthTaskConfig>` object, which configures :func:`generate_synthetic`.

    :param task: The :class:`SynthTask <SynthTask>`.
    :param leads: (optional) The number of leads C. Defaults to 4.
    :param length: (optional) The number of samples T. Defaults to 512.
    :param fs: (optional) The sampling rate in Hz. Defaults to 100.
    :param prevalence: (optional) The fraction of positives, in (0, 1). Defaults to 0.2.
    :param noise_floor: (optional) The standard deviation of the additive white noise. Defaults to 0.02.
    :param seed: (optional) The generator seed. Defaults to 0.
    """

    def __init__(
        self, task: SynthTask, leads: int = 4, length: int = 512, fs: float = 100.0, prevalence: float = 0.2,
        noise_floor: float = 0.02, seed: int = 0,
    ):
        if not 0 < prevalence < 1:
            raise ValueError(f'prevalence must be in (0, 1), got {prevalence}')
        if leads < 1 or length < 64 or not fs > 0:
            raise ValueError(f'invalid signal shape: leads={leads}, length={length}, fs={fs}')
        if noise_floor < 0:
            raise ValueError(f'noise floor must be non-negative, got {noise_floor}')

        self.task = SynthTask(task)
        self.leads = leads
        self.length = length
        self.fs = float(fs)
        self.prevalence = prevalence
        self.noise_floor = noise_floor
        self.seed = seed

    def __eq__(self, other):
        if not isinstance(other, SynthTaskConfig):
            return False

        return self.to_json() == other.to_json()

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'task={self.task}, leads={self.leads}, length={self.length}, fs={self.fs}, ' \
               f'prevalence={self.prevalence}, noise_floor={self.noise_floor}, seed={self.seed})'

    def to_json(self) -> dict:
        return {
            'task': self.task.value,
            'leads': self.leads,
            'length': self.length,
            'fs': self.fs,
            'prevalence': self.prevalence,
            'noise_floor': self.noise_floor,
            'seed': self.seed,
        }

    @classmethod
    def from_json(cls, data: dict) -> 'SynthTaskConfig':
        return cls(
            SynthTask(data['task']),
            leads=int(data.get('leads', 4)),
            length=int(data.get('length', 512)),
            fs=float(data.get('fs', 100.0)),
            prevalence=float(data.get('prevalence', 0.2)),
            noise_floor=float(data.get('noise_floor', 0.02)),
            seed=int(data.get('seed', 0)),
        )


def positive_count(prevalence: float, n: int) -> int:
    """Returns the number of positives for `n` records: the rounded count, kept within [1, n - 1].
    """
    return min(max(int(round(prevalence * n)), 1), n - 1)


def _bump(t: np.ndarray, center: float, amplitude: float, width: float) -> np.ndarray:
    return amplitude * np.exp(-0.5 * ((t - center) / width) ** 2)


def _synthesize(cfg: SynthTaskConfig, positive: bool, rng: RngStream) -> np.ndarray:
    gen = rng.generator()
    duration = cfg.length / cfg.fs
    t = np.arange(cfg.length) / cfg.fs

    base_rr = gen.uniform(0.7, 1.0)
    jitter = RR_JITTER * (RR_JITTER_FACTOR if positive and cfg.task is SynthTask.RR_IRREGULARITY else 1.0)
    peaks = [gen.uniform(0.0, base_rr) - 0.5]
    while peaks[-1] < duration + 0.5:
        peaks.append(peaks[-1] + max(base_rr * (1.0 + jitter * gen.standard_normal()), 0.3))

    gains = gen.uniform(0.6, 1.2, size=cfg.leads)
    tall = max(1, cfg.leads // 2)
    values = np.zeros((cfg.leads, cfg.length))
    for c in range(cfg.leads):
        r_amplitude = _WAVES['r'][1]
        if positive and cfg.task is SynthTask.AMPLITUDE_RATIO and c < tall:
            r_amplitude *= AMPLITUDE_FACTOR

        lead = np.zeros(cfg.length)
        for peak in peaks:
            for name, (offset, amplitude, width) in _WAVES.items():
                lead += _bump(t, peak + offset, r_amplitude if name == 'r' else amplitude, width)
            if positive and cfg.task is SynthTask.ST_OFFSET:
                lead += ST_OFFSET * ((t >= peak + _ST_WINDOW[0]) & (t < peak + _ST_WINDOW[1]))
        values[c] = gains[c] * lead

    values += cfg.noise_floor * gen.standard_normal(values.shape)
    # stored datasets hold 32-bit samples; quantizing here keeps save/load exact
    return values.astype(np.float32).astype(np.float64)


def generate_synthetic(cfg: SynthTaskConfig, n: int) -> LabeledDataset:
    """Generates `n` single-record synthetic patients.

    The positives are a seeded random subset of exactly :func:`positive_count` records. Every patient draws from its
    own stream split off the configured seed, so the output depends only on (cfg, n).

    :param cfg: The :class:`SynthTaskConfig <SynthTaskConfig>`.
    :param n: The number of records, at least 10.
    :return: The :class:`LabeledDataset <taskaug.data.dataset.LabeledDataset>`.
    """
    if n < MIN_RECORDS:
        raise ContractViolationError(f'generate_synthetic: at least {MIN_RECORDS} records are required, got {n}')

    root = RngStream(cfg.seed)
    positives = set(root.split(0).permutation(n)[:positive_count(cfg.prevalence, n)].tolist())
    records = []
    for i in range(n):
        label = 1 if i in positives else 0
        values = _synthesize(cfg, label == 1, root.split(1, i))
        records.append(Record(Signal(values, cfg.fs), label, f'synth-{i:05d}'))

    return LabeledDataset(records, cfg.task.value)


def detect_r_peaks(lead: np.ndarray, fs: float, height: float = 0.5) -> np.ndarray:
    """Returns the sample indices of the R peaks of one lead.
    """
    peaks, _ = find_peaks(lead, height=height, distance=max(1, int(0.3 * fs)))
    return peaks


def rr_variation(signal: Signal, lead: int = 0) -> Tuple[float, int]:
    """Returns the coefficient of variation of the detected RR intervals and the number of intervals.
    """
    peaks = detect_r_peaks(signal.values[lead], signal.fs)
    intervals = np.diff(peaks) / signal.fs
    if len(intervals) < 2:
        return math.nan, len(intervals)

    return float(np.std(intervals) / np.mean(intervals)), len(intervals)

"""Short-time Fourier analysis and SpecAugment-style masking of 1D signals.
"""
import logging

import numpy as np
from scipy import signal as sps

from taskaug.diff import RngStream
from taskaug.error import ContractViolationError

logger = logging.getLogger(__name__)

WINDOW = 256
HOP = 64


class Spectrogram:
    """The STFT of one lead.

    :param bins: The complex [frames, window // 2 + 1] coefficients.
    :param window: The window length, in samples.
    :param hop: The hop between frames, in samples.
    :param length: The length of the analyzed signal; :func:`istft` restores it.
    :param window_name: (optional) The window function. Defaults to ``hann``.
    """

    def __init__(self, bins: np.ndarray, window: int, hop: int, length: int, window_name: str = 'hann'):
        if bins.ndim != 2 or bins.shape[1] != window // 2 + 1:
            raise ContractViolationError(
                f'spectrogram: expected [frames, {window // 2 + 1}] bins for window {window}, got {bins.shape}'
            )

        self.bins = bins
        self.window = window
        self.hop = hop
        self.length = length
        self.window_name = window_name

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'shape={self.bins.shape}, window={self.window}, hop={self.hop}, length={self.length}, ' \
               f'window_name={self.window_name!r})'

    @property
    def frames(self) -> int:
        return self.bins.shape[0]

    @property
    def freq_bins(self) -> int:
        return self.bins.shape[1]


def stft(x: np.ndarray, window: int = WINDOW, hop: int = HOP) -> Spectrogram:
    """Computes the Hann-windowed STFT of one lead. The signal is zero-extended at both ends so that every sample is
    covered by a full set of overlapping frames.

    :param x: The [T] lead.
    :param window: (optional) The window length. Defaults to 256.
    :param hop: (optional) The hop. Defaults to 64.
    :return: The :class:`Spectrogram <Spectrogram>`.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ContractViolationError(f'stft: expected a single lead, got shape {x.shape}')
    if hop < 1 or hop > window:
        raise ContractViolationError(f'stft: hop {hop} must be in [1, window={window}]')
    if window > x.shape[0]:
        raise ContractViolationError(f'stft: window {window} exceeds the signal length {x.shape[0]}')

    _, _, z = sps.stft(x, window='hann', nperseg=window, noverlap=window - hop, boundary='zeros', padded=True)
    return Spectrogram(z.T, window, hop, x.shape[0])


def istft(spec: Spectrogram) -> np.ndarray:
    """Inverts a spectrogram by weighted overlap-add and returns the real signal at its original length.
    """
    _, x = sps.istft(
        spec.bins.T, window=spec.window_name, nperseg=spec.window, noverlap=spec.window - spec.hop, boundary=True,
    )
    return np.real(x)[:spec.length]


def mask_bins(spec: Spectrogram, axis: int, start: int, width: int) -> Spectrogram:
    """Returns a copy of `spec` with `width` consecutive frames (axis 0) or frequency bins (axis 1) set to 0 + 0j.
    """
    bins = spec.bins.copy()
    index = [slice(None), slice(None)]
    index[axis] = slice(start, start + width)
    bins[tuple(index)] = 0
    return Spectrogram(bins, spec.window, spec.hop, spec.length, spec.window_name)


def spec_augment(x: np.ndarray, w: float, rng: RngStream, window: int = WINDOW, hop: int = HOP) -> np.ndarray:
    """Masks a contiguous fraction `w` of the frames and of the frequency bins of each lead's STFT, with independent
    random starts, and maps the result back to the time domain.

    Leads shorter than `window` are analyzed with a window equal to their length and a hop of at most half of it.

    :param x: The [C, T] signal.
    :param w: The masked fraction of each axis, in [0, 1].
    :param rng: The :class:`RngStream <taskaug.diff.rng.RngStream>` the mask starts are drawn from.
    :param window: (optional) The window length. Defaults to 256.
    :param hop: (optional) The hop. Defaults to 64.
    :return: The augmented [C, T] signal.
    """
    if not 0 <= w <= 1:
        raise ContractViolationError(f'spec_augment: mask fraction must be in [0, 1], got {w}')
    if hop > window:
        raise ContractViolationError(f'spec_augment: hop {hop} exceeds window {window}')

    x = np.asarray(x, dtype=np.float64)
    length = x.shape[-1]
    if window > length:
        window, hop = length, min(hop, length // 2)
        logger.debug(f'spec_augment: signal of {length} samples, using window {window} and hop {hop}')

    out = np.empty_like(x)
    for c in range(x.shape[0]):
        spec = stft(x[c], window, hop)
        for axis, size in ((0, spec.frames), (1, spec.freq_bins)):
            width = int(round(w * size))
            spec = mask_bins(spec, axis, rng.integers(0, size - width + 1), width)
        out[c] = istft(spec)

    return out

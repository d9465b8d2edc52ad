import numpy as np

from taskaug.diff import RngStream
from taskaug.error import ContractViolationError


def time_mask_baseline(x: np.ndarray, w: float, rng: RngStream) -> np.ndarray:
    """Zeroes a contiguous window of round(w · T) samples on every lead.

    :param x: The [C, T] signal.
    :param w: The masked fraction, in [0, 1].
    :param rng: The :class:`RngStream <taskaug.diff.rng.RngStream>` the window start is drawn from.
    :return: The masked copy of `x`.
    """
    if not 0 <= w <= 1:
        raise ContractViolationError(f'time_mask_baseline: mask fraction must be in [0, 1], got {w}')

    out = np.array(x, dtype=np.float64)
    length = out.shape[-1]
    width = int(round(w * length))
    start = rng.integers(0, length - width + 1)
    out[..., start:start + width] = 0.0
    return out

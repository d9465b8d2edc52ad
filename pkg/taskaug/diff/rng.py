from typing import Optional, Tuple

import numpy as np

# Every draw call starts a fresh block of the Philox counter space. Blocks are 2^192 counter values apart, so the
# draws of one call never run into the next.
_BLOCK_SHIFT = 192


class RngStream:
    """A counter-based random stream.

    A stream is identified by its seed and a split path; each call that draws randomness consumes one counter value, so
    the draws of a call depend only on (seed, path, counter) and never on how many values earlier calls consumed.
    Streams produced by :meth:`split` are keyed by a different Philox key and do not overlap with their parent.

    :param seed: A non-negative 64-bit integer seed.
    :param counter: (optional) The index of the next draw call. Defaults to 0.
    :param path: (optional) The split keys that derived this stream from the root stream of `seed`.
    """

    def __init__(self, seed: int, counter: int = 0, path: Tuple[int, ...] = ()):
        if not 0 <= seed < 2 ** 64:
            raise ValueError(f'seed must be a non-negative 64-bit integer, got {seed}')
        if counter < 0:
            raise ValueError(f'counter must be non-negative, got {counter}')
        if any(k < 0 for k in path):
            raise ValueError(f'split keys must be non-negative, got {path}')

        self.seed = int(seed)
        self.counter = int(counter)
        self.path = tuple(int(k) for k in path)
        self._key = np.random.SeedSequence(self.seed, spawn_key=self.path).generate_state(2, np.uint64)

    def __eq__(self, other):
        if not isinstance(other, RngStream):
            return False

        return self.seed == other.seed and self.counter == other.counter and self.path == other.path

    def __repr__(self):
        return f'{self.__class__.__name__}(seed={self.seed}, counter={self.counter}, path={self.path})'

    def generator(self) -> np.random.Generator:
        """Returns a generator positioned at the current counter and advances the counter by one.
        """
        bit_generator = np.random.Philox(key=self._key, counter=self.counter << _BLOCK_SHIFT)
        self.counter += 1
        return np.random.Generator(bit_generator)

    def split(self, *keys: int) -> 'RngStream':
        """Derives an independent child stream. The child starts at counter 0 and does not affect this stream.

        :param keys: One or more non-negative integers, e.g. an epoch and a batch index.
        :return: The child :class:`RngStream <RngStream>`.
        """
        if not keys:
            raise ValueError('split requires at least one key')

        return RngStream(self.seed, 0, self.path + tuple(keys))

    def copy(self) -> 'RngStream':
        return RngStream(self.seed, self.counter, self.path)

    def uniform(self, size: Optional[int] = None) -> np.ndarray:
        """Draws uniforms on [0, 1) in one call.
        """
        return self.generator().random(size)

    def standard_normal(self, size: Optional[int] = None) -> np.ndarray:
        return self.generator().standard_normal(size)

    def integers(self, low: int, high: int) -> int:
        """Draws one integer uniformly from [low, high).
        """
        return int(self.generator().integers(low, high))

    def permutation(self, n: int) -> np.ndarray:
        return self.generator().permutation(n)

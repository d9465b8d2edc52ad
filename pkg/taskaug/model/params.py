from typing import Dict, List, Sequence, Tuple

import numpy as np


class ParameterLayout:
    """Maps named parameter arrays to and from a flat float64 vector.

    :param entries: The (name, shape) pairs, in vector order.
    """

    def __init__(self, entries: Sequence[Tuple[str, Tuple[int, ...]]]):
        self.entries: List[Tuple[str, Tuple[int, ...]]] = [(name, tuple(shape)) for name, shape in entries]
        self.offsets = {}
        offset = 0
        for name, shape in self.entries:
            size = int(np.prod(shape, dtype=np.int64))
            self.offsets[name] = (offset, offset + size)
            offset += size
        self.size = offset

    def __eq__(self, other):
        if not isinstance(other, ParameterLayout):
            return False

        return self.entries == other.entries

    def __repr__(self):
        return f'{self.__class__.__name__}(entries={self.entries!r}, size={self.size})'

    @property
    def names(self) -> List[str]:
        return [name for name, _ in self.entries]

    def unflatten(self, theta: np.ndarray) -> Dict[str, np.ndarray]:
        """Returns the named arrays held by `theta`. The arrays are views into `theta`.
        """
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.size,):
            raise ValueError(f'parameter vector has shape {theta.shape}, expected ({self.size},)')

        return {name: theta[slice(*self.offsets[name])].reshape(shape) for name, shape in self.entries}

    def flatten(self, arrays: Dict[str, np.ndarray]) -> np.ndarray:
        """Concatenates named arrays (for example gradients) in layout order.
        """
        parts = []
        for name, shape in self.entries:
            a = np.asarray(arrays[name], dtype=np.float64)
            if a.shape != shape:
                raise ValueError(f'{name}: shape {a.shape}, expected {shape}')
            parts.append(a.reshape(-1))
        return np.concatenate(parts) if parts else np.zeros(0)

from typing import List, Optional, Sequence

# Channel widths of the full-size classifier.
FULL_WIDTHS = (32, 64, 128, 256)

# Channel widths used by default, small enough to train on one CPU core.
DESK_WIDTHS = (16, 32)


class ModelConfig:
    """The :class:`ModelConfig <ModelConfig>` object, which describes the 1D convolutional classifier.

    :param leads: The number of input leads C.
    :param length: The number of input samples T.
    :param kernel: (optional) The odd convolution kernel size. Defaults to 15.
    :param stride: (optional) The stride of the first convolution of each block. Defaults to 2.
    :param widths: (optional) The channel width of each residual block. Defaults to [16, 32].
    """

    def __init__(self, leads: int, length: int, kernel: int = 15, stride: int = 2, widths: Sequence[int] = DESK_WIDTHS):
        if leads < 1 or length < 1:
            raise ValueError(f'leads and length must be positive, got {leads} and {length}')
        if kernel < 1 or kernel % 2 == 0:
            raise ValueError(f'kernel must be odd and positive, got {kernel}')
        if stride < 1:
            raise ValueError(f'stride must be at least 1, got {stride}')
        if not widths or any(w < 1 for w in widths):
            raise ValueError(f'widths must be a non-empty list of positive integers, got {list(widths)}')

        self.leads = leads
        self.length = length
        self.kernel = kernel
        self.stride = stride
        self.widths = tuple(int(w) for w in widths)

    def __eq__(self, other):
        if not isinstance(other, ModelConfig):
            return False

        return (self.leads == other.leads and
                self.length == other.length and
                self.kernel == other.kernel and
                self.stride == other.stride and
                self.widths == other.widths)

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'leads={self.leads}, length={self.length}, kernel={self.kernel}, stride={self.stride}, ' \
               f'widths={list(self.widths)})'

    def to_json(self) -> dict:
        return {
            'leads': self.leads,
            'length': self.length,
            'kernel': self.kernel,
            'stride': self.stride,
            'widths': list(self.widths),
        }

    @classmethod
    def from_json(cls, data: dict) -> 'ModelConfig':
        return cls(
            int(data['leads']),
            int(data['length']),
            kernel=int(data.get('kernel', 15)),
            stride=int(data.get('stride', 2)),
            widths=data.get('widths', DESK_WIDTHS),
        )

    def block_lengths(self, length: Optional[int] = None) -> List[int]:
        """Returns the input length of each block for an input of `length` samples (defaults to the configured T).
        """
        current = self.length if length is None else length
        lengths = []
        for _ in self.widths:
            lengths.append(current)
            current = (current - 1) // self.stride + 1
        return lengths

    def output_length(self) -> int:
        """Returns the temporal length entering the global average pool.
        """
        return (self.block_lengths()[-1] - 1) // self.stride + 1

    def minimal_length(self) -> int:
        """Returns the smallest T for which every block's input is at least one kernel long.
        """
        t = self.kernel
        while min(self.block_lengths(t)) < self.kernel:
            t += 1
        return t

import math
from typing import Dict, Optional, Sequence

import numpy as np

from taskaug.diff import Node, RngStream, ops
from taskaug.error import ContractViolationError

# Number of scaling-and-squaring steps used to integrate the warp velocity field.
WARP_SQUARING_STEPS = 8

# Warp smoothing kernel standard deviation, as a fraction of the signal length.
WARP_SMOOTHING_FRACTION = 1.0 / 64.0

# Fraction of the signal zeroed by the time mask operator.
TIME_MASK_FRACTION = 0.1


def _per_example(v: Node, ndim: int) -> Node:
    return ops.reshape(v, (v.shape[0],) + (1,) * (ndim - 1))


def _stack_draws(draws: Sequence['AugDraw'], key: str) -> np.ndarray:
    return np.stack([d[key] for d in draws])


class AugDraw:
    """The strength-independent random draws of one operator application.

    :param op_id: The identifier of the operator the draws belong to.
    :param values: A mapping of draw names to arrays (or floats).
    """

    def __init__(self, op_id: str, values: Dict[str, np.ndarray]):
        self.op_id = op_id
        self.values = {k: np.asarray(v, dtype=np.float64) for k, v in values.items()}

    def __getitem__(self, key: str) -> np.ndarray:
        return self.values[key]

    def __eq__(self, other):
        if not isinstance(other, AugDraw):
            return False

        return (self.op_id == other.op_id and
                self.values.keys() == other.values.keys() and
                all(np.array_equal(v, other.values[k]) for k, v in self.values.items()))

    def __repr__(self):
        return f'{self.__class__.__name__}(op_id={self.op_id!r}, values={sorted(self.values)!r})'


class Operation:
    """A differentiable signal transformation ``t(x; s)`` with reparameterized randomness.

    :param name: The operator identifier.
    :param initial_strength: The initial value of the learnable strength, or None if the strength is not learnable.
    """

    def __init__(self, name: str, initial_strength: Optional[float]):
        self.name = name
        self.initial_strength = initial_strength

    @property
    def learnable(self) -> bool:
        return self.initial_strength is not None

    def __repr__(self):
        return f'{self.__class__.__name__}(name={self.name!r}, initial_strength={self.initial_strength})'

    def draw(self, rng: RngStream, leads: int, length: int) -> AugDraw:
        """Draws the randomness of one application from a single counter of `rng`.

        :param rng: The :class:`RngStream <taskaug.diff.rng.RngStream>` to draw from.
        :param leads: The number of leads of the signal.
        :param length: The number of samples of the signal.
        :return: The :class:`AugDraw <AugDraw>`.
        """
        raise NotImplementedError('Operation is an abstract class. Subclasses must implement draw().')

    def apply(self, x: Node, s: Optional[Node], draw: AugDraw, fs: Optional[float] = None) -> Node:
        """Applies the operator to a [C, T] signal node.

        :param x: The signal node.
        :param s: The scalar strength node. Ignored by operators whose strength is not learnable.
        :param draw: The :class:`AugDraw <AugDraw>` of this application.
        :param fs: (optional) The sampling rate in Hz.
        :return: The transformed [C, T] signal node.
        """
        raise NotImplementedError('Operation is an abstract class. Subclasses must implement apply().')

    def apply_batch(
        self, x: Node, s: Optional[Node], draws: Sequence[AugDraw], fs: Optional[float] = None,
    ) -> Node:
        """Applies the operator to every example of a [B, C, T] batch node at once.

        Example b is transformed with strength ``s[b]`` and ``draws[b]``, exactly as :meth:`apply` would transform it
        on its own.

        :param x: The batch node.
        :param s: The [B] strength node. Ignored by operators whose strength is not learnable.
        :param draws: One :class:`AugDraw <AugDraw>` per example.
        :param fs: (optional) The sampling rate in Hz.
        :return: The transformed [B, C, T] batch node.
        """
        raise NotImplementedError('Operation is an abstract class. Subclasses must implement apply_batch().')


class TimeMask(Operation):
    """Zeroes a contiguous 10% of the signal on all leads. The strength is not learnable.
    """

    def __init__(self):
        super().__init__('time_mask', None)

    def draw(self, rng: RngStream, leads: int, length: int) -> AugDraw:
        return AugDraw(self.name, {'u': rng.uniform()})

    def mask(self, draw: AugDraw, length: int) -> np.ndarray:
        width = int(math.floor(TIME_MASK_FRACTION * length))
        start = int(math.floor(float(draw['u']) * (length - width)))
        m = np.ones(length)
        m[start:start + width] = 0.0
        return m

    def apply(self, x: Node, s: Optional[Node], draw: AugDraw, fs: Optional[float] = None) -> Node:
        return ops.mul(x, x.tape.constant(self.mask(draw, x.shape[-1])))

    def apply_batch(
        self, x: Node, s: Optional[Node], draws: Sequence[AugDraw], fs: Optional[float] = None,
    ) -> Node:
        masks = np.stack([self.mask(d, x.shape[-1]) for d in draws])
        return ops.mul(x, x.tape.constant(masks[:, None, :]))


class GaussianNoise(Operation):
    """Adds ``0.25·σ·sigmoid(s)·ξ`` with σ the standard deviation of each lead.
    """

    def __init__(self):
        super().__init__('noise', 0.0)

    def draw(self, rng: RngStream, leads: int, length: int) -> AugDraw:
        return AugDraw(self.name, {'xi': rng.standard_normal((leads, length))})

    def apply(self, x: Node, s: Optional[Node], draw: AugDraw, fs: Optional[float] = None) -> Node:
        amplitude = ops.scale(ops.sigmoid(s), 0.25)
        sigma = ops.mul(ops.std(x), amplitude)
        return ops.add(x, ops.mul(sigma, x.tape.constant(draw['xi'])))

    def apply_batch(
        self, x: Node, s: Optional[Node], draws: Sequence[AugDraw], fs: Optional[float] = None,
    ) -> Node:
        amplitude = _per_example(ops.scale(ops.sigmoid(s), 0.25), 3)
        sigma = ops.mul(ops.std(x), amplitude)
        return ops.add(x, ops.mul(sigma, x.tape.constant(_stack_draws(draws, 'xi'))))


class TemporalWarp(Operation):
    """Resamples all leads along a smooth random displacement field.

    The velocity field ``10·s·ξ`` is integrated by scaling and squaring and smoothed with a Gaussian kernel.
    """

    def __init__(self):
        super().__init__('warp', 1.0)

    def draw(self, rng: RngStream, leads: int, length: int) -> AugDraw:
        return AugDraw(self.name, {'xi': rng.standard_normal(length)})

    @staticmethod
    def _integrate(s: Node, xi: np.ndarray) -> Node:
        velocity = ops.scale(ops.mul(s, s.tape.constant(xi)), 10.0)
        phi = ops.scale(velocity, 1.0 / 2 ** WARP_SQUARING_STEPS)
        for _ in range(WARP_SQUARING_STEPS):
            phi = ops.add(phi, ops.linear_resample(phi, phi))

        return ops.gaussian_smooth(phi, xi.shape[-1] * WARP_SMOOTHING_FRACTION)

    def field(self, s: Node, draw: AugDraw) -> Node:
        """Returns the [T] displacement field for strength `s`.
        """
        return self._integrate(s, draw['xi'])

    def apply(self, x: Node, s: Optional[Node], draw: AugDraw, fs: Optional[float] = None) -> Node:
        return ops.linear_resample(x, self.field(s, draw))

    def apply_batch(
        self, x: Node, s: Optional[Node], draws: Sequence[AugDraw], fs: Optional[float] = None,
    ) -> Node:
        return ops.linear_resample(x, self._integrate(_per_example(s, 2), _stack_draws(draws, 'xi')))


class BaselineWander(Operation):
    """Adds a low-frequency sinusoid ``A·sin(2πft/fs + phase)`` to every lead.

    The frequency lies between 10 and 30 cycles per minute.
    """

    def __init__(self):
        super().__init__('wander', 0.0)

    def draw(self, rng: RngStream, leads: int, length: int) -> AugDraw:
        u = rng.uniform(3)
        return AugDraw(self.name, {'amplitude': u[0], 'frequency': u[1], 'phase': u[2]})

    @staticmethod
    def _angle(draw: AugDraw, length: int, fs: Optional[float]) -> np.ndarray:
        if fs is None or not fs > 0:
            raise ContractViolationError(f'wander: a positive sampling rate is required, got {fs}')

        frequency = (20.0 * float(draw['frequency']) + 10.0) / 60.0
        phase = 2.0 * math.pi * float(draw['phase'])
        return 2.0 * math.pi * frequency * np.arange(length) / fs + phase

    def apply(self, x: Node, s: Optional[Node], draw: AugDraw, fs: Optional[float] = None) -> Node:
        wave = ops.sin(x.tape.constant(self._angle(draw, x.shape[-1], fs)))
        amplitude = ops.scale(ops.sigmoid(s), 0.25 * float(draw['amplitude']))
        return ops.add(x, ops.mul(amplitude, wave))

    def apply_batch(
        self, x: Node, s: Optional[Node], draws: Sequence[AugDraw], fs: Optional[float] = None,
    ) -> Node:
        angles = np.stack([self._angle(d, x.shape[-1], fs) for d in draws])
        wave = ops.sin(x.tape.constant(angles[:, None, :]))
        amplitude = ops.mul(ops.sigmoid(s), 0.25 * _stack_draws(draws, 'amplitude'))
        return ops.add(x, ops.mul(_per_example(amplitude, 3), wave))


class MagnitudeScale(Operation):
    """Multiplies all leads by ``sigmoid(s)·U(0.75, 1.25)``.
    """

    def __init__(self):
        super().__init__('scale', 0.0)

    def draw(self, rng: RngStream, leads: int, length: int) -> AugDraw:
        return AugDraw(self.name, {'u': rng.uniform()})

    def apply(self, x: Node, s: Optional[Node], draw: AugDraw, fs: Optional[float] = None) -> Node:
        factor = ops.scale(ops.sigmoid(s), 0.75 + 0.5 * float(draw['u']))
        return ops.mul(x, factor)

    def apply_batch(
        self, x: Node, s: Optional[Node], draws: Sequence[AugDraw], fs: Optional[float] = None,
    ) -> Node:
        factor = ops.mul(ops.sigmoid(s), 0.75 + 0.5 * _stack_draws(draws, 'u'))
        return ops.mul(x, _per_example(factor, 3))


class TemporalDisplacement(Operation):
    """Translates all leads by ``100·s²·(2U − 1)`` samples, zero-filling vacated positions.
    """

    def __init__(self):
        super().__init__('displacement', 0.5)

    def draw(self, rng: RngStream, leads: int, length: int) -> AugDraw:
        return AugDraw(self.name, {'u': rng.uniform()})

    @staticmethod
    def _shift(x: Node, offset: Node) -> Node:
        """Moves every row of `x` by its entry of `offset`: a scalar for a [C, T] signal, [B] for a batch.
        """
        length = x.shape[-1]
        width = int(math.ceil(float(np.max(np.abs(offset.value))))) + 1
        padded = ops.pad(x, width, width)
        shift = ops.reshape(ops.scale(offset, -1.0), offset.shape + (1,))
        field = ops.mul(shift, x.tape.constant(np.ones(offset.shape + (length + 2 * width,))))
        return ops.crop(ops.linear_resample(padded, field), width, width + length)

    def apply(self, x: Node, s: Optional[Node], draw: AugDraw, fs: Optional[float] = None) -> Node:
        offset = ops.scale(ops.mul(s, s), 100.0 * (2.0 * float(draw['u']) - 1.0))
        return self._shift(x, offset)

    def apply_batch(
        self, x: Node, s: Optional[Node], draws: Sequence[AugDraw], fs: Optional[float] = None,
    ) -> Node:
        offset = ops.mul(ops.mul(s, s), 100.0 * (2.0 * _stack_draws(draws, 'u') - 1.0))
        return self._shift(x, offset)


OPERATORS: Dict[str, Operation] = {
    op.name: op for op in (
        TimeMask(), GaussianNoise(), TemporalWarp(), BaselineWander(), MagnitudeScale(), TemporalDisplacement(),
    )
}

DEFAULT_OPERATORS = tuple(OPERATORS)


def get_operator(name: str) -> Operation:
    op = OPERATORS.get(name)
    if op is None:
        raise ContractViolationError(f'unknown augmentation operator {name!r}; expected one of {list(OPERATORS)}')

    return op

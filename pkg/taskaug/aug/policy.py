from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from taskaug.aug.ops import DEFAULT_OPERATORS, Operation, get_operator
from taskaug.diff import Node, RngStream, Tape, ops
from taskaug.error import ContractViolationError, MalformedTrajectoryError

# Uniform draws for the Gumbel noise are kept away from 0 so that -log(-log(U)) stays finite.
_TINY = np.finfo(np.float64).tiny


def _softmax(logits: np.ndarray) -> np.ndarray:
    e = np.exp(logits - logits.max())
    return e / e.sum()


def _gumbel(rng: RngStream, size: int) -> np.ndarray:
    u = np.clip(rng.uniform(size), _TINY, None)
    return -np.log(-np.log(u))


class StageParams:
    """The parameters of one augmentation stage.

    :param logits: The operation-selection logits, length M. The selection probabilities are their softmax.
    :param mu0: The per-operator strengths applied to examples of class 0, length M.
    :param mu1: The per-operator strengths applied to examples of class 1, length M.
    """

    def __init__(self, logits: Sequence[float], mu0: Sequence[float], mu1: Sequence[float]):
        self.logits = np.array(logits, dtype=np.float64)
        self.mu0 = np.array(mu0, dtype=np.float64)
        self.mu1 = np.array(mu1, dtype=np.float64)
        if not (self.logits.ndim == 1 and self.logits.shape == self.mu0.shape == self.mu1.shape):
            raise ValueError(
                f'stage parameters must be vectors of equal length, got {self.logits.shape}, {self.mu0.shape}, '
                f'{self.mu1.shape}'
            )

    def __eq__(self, other):
        if not isinstance(other, StageParams):
            return False

        return (np.array_equal(self.logits, other.logits) and
                np.array_equal(self.mu0, other.mu0) and
                np.array_equal(self.mu1, other.mu1))

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'logits={self.logits.tolist()}, mu0={self.mu0.tolist()}, mu1={self.mu1.tolist()})'

    @property
    def size(self) -> int:
        return self.logits.shape[0]

    def probabilities(self) -> np.ndarray:
        """Returns the selection probabilities π.
        """
        return _softmax(self.logits)


class AttachedStage:
    """The nodes of one stage recorded on a tape. With a shared magnitude, `mu1` is the same node as `mu0`.
    """

    def __init__(self, logits: Node, mu0: Node, mu1: Node):
        self.logits = logits
        self.mu0 = mu0
        self.mu1 = mu1


class AttachedPolicy:
    """A :class:`PolicyParams <PolicyParams>` recorded on a tape, ready to be applied and differentiated.
    """

    def __init__(self, params: 'PolicyParams', stages: List[AttachedStage]):
        self.params = params
        self.stages = stages

    @property
    def operators(self) -> Tuple[Operation, ...]:
        return self.params.operator_objects

    @property
    def temperature(self) -> float:
        return self.params.temperature

    def nodes(self) -> List[Node]:
        """Returns the distinct nodes holding φ, in the order :meth:`flatten_gradients` expects.
        """
        out = []
        for stage in self.stages:
            out.extend([stage.logits, stage.mu0])
            if not self.params.global_magnitude:
                out.append(stage.mu1)
        return out

    def flatten_gradients(self, grads: Sequence[np.ndarray]) -> np.ndarray:
        """Packs the gradients of :meth:`nodes` into a vector laid out like :meth:`PolicyParams.to_vector`.
        """
        learnable = self.params.learnable_indices()
        parts = []
        per_stage = 2 if self.params.global_magnitude else 3
        for k in range(len(self.stages)):
            g = grads[k * per_stage:(k + 1) * per_stage]
            parts.append(g[0])
            parts.extend(gi[learnable] for gi in g[1:])
        if not parts:
            return np.zeros(0)
        return np.concatenate(parts)


class PolicyParams:
    """The TaskAug policy φ: K stages of selection logits and per-class strengths.

    The learnable vector φ holds, per stage, the M logits followed by μ0 and μ1 of every operator with a learnable
    strength. With `global_magnitude` a single strength per operator is shared by both classes, μ1 mirrors μ0 and only
    μ0 is part of φ.

    :param stages: The :class:`StageParams <StageParams>` of each stage.
    :param temperature: (optional) The Gumbel-Softmax temperature τ > 0. Defaults to 1.
    :param operators: (optional) The operator identifiers, in selection order. Defaults to all six operators.
    :param global_magnitude: (optional) Whether strengths are shared between the classes. Defaults to False.
    """

    def __init__(
        self, stages: List[StageParams], temperature: float = 1.0, operators: Sequence[str] = DEFAULT_OPERATORS,
        global_magnitude: bool = False,
    ):
        if not temperature > 0:
            raise ContractViolationError(f'policy: temperature must be positive, got {temperature}')
        if not operators:
            raise ContractViolationError('policy: operator set is empty')

        self.operators = tuple(operators)
        self.operator_objects = tuple(get_operator(name) for name in self.operators)
        for stage in stages:
            if stage.size != len(self.operators):
                raise ContractViolationError(
                    f'policy: stage has {stage.size} entries but the operator set has {len(self.operators)}'
                )
            if global_magnitude and not np.array_equal(stage.mu0, stage.mu1):
                raise ContractViolationError('policy: shared-magnitude stages must have mu0 == mu1')

        self.stages = list(stages)
        self.temperature = float(temperature)
        self.global_magnitude = global_magnitude

    def __eq__(self, other):
        if not isinstance(other, PolicyParams):
            return False

        return (self.stages == other.stages and
                self.temperature == other.temperature and
                self.operators == other.operators and
                self.global_magnitude == other.global_magnitude)

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'stages={self.stages!r}, temperature={self.temperature}, operators={list(self.operators)!r}, ' \
               f'global_magnitude={self.global_magnitude})'

    @property
    def parameter_count(self) -> int:
        """The number of stored parameters, K × 3M.
        """
        return len(self.stages) * 3 * len(self.operators)

    def learnable_indices(self) -> np.ndarray:
        """Returns the indices of the operators whose strength is learnable.
        """
        return np.array([i for i, op in enumerate(self.operator_objects) if op.learnable], dtype=np.int64)

    def to_vector(self) -> np.ndarray:
        """Returns the learnable vector φ.
        """
        learnable = self.learnable_indices()
        parts = []
        for stage in self.stages:
            parts.extend([stage.logits, stage.mu0[learnable]])
            if not self.global_magnitude:
                parts.append(stage.mu1[learnable])
        if not parts:
            return np.zeros(0)
        return np.concatenate(parts)

    def with_vector(self, phi: np.ndarray) -> 'PolicyParams':
        """Returns a copy of this policy with the learnable entries replaced by `phi`.
        """
        phi = np.asarray(phi, dtype=np.float64)
        if phi.shape != (self.vector_size,):
            raise ContractViolationError(f'policy: vector of shape {phi.shape}, expected ({self.vector_size},)')

        m = len(self.operators)
        learnable = self.learnable_indices()
        n = len(learnable)
        stages = []
        pos = 0
        for stage in self.stages:
            logits = phi[pos:pos + m]
            pos += m
            mu0 = stage.mu0.copy()
            mu0[learnable] = phi[pos:pos + n]
            pos += n
            if self.global_magnitude:
                mu1 = mu0.copy()
            else:
                mu1 = stage.mu1.copy()
                mu1[learnable] = phi[pos:pos + n]
                pos += n
            stages.append(StageParams(logits, mu0, mu1))

        return PolicyParams(stages, self.temperature, self.operators, self.global_magnitude)

    @property
    def vector_size(self) -> int:
        per_stage = len(self.operators) + len(self.learnable_indices()) * (1 if self.global_magnitude else 2)
        return len(self.stages) * per_stage

    def attach(self, tape: Tape, learnable: bool = True) -> AttachedPolicy:
        """Records the policy on a tape.

        :param tape: The :class:`Tape <taskaug.diff.tape.Tape>`.
        :param learnable: (optional) Whether the policy nodes receive gradients. Defaults to True.
        :return: The :class:`AttachedPolicy <AttachedPolicy>`.
        """
        leaf = tape.parameter if learnable else tape.constant
        stages = []
        for stage in self.stages:
            logits = leaf(stage.logits)
            mu0 = leaf(stage.mu0)
            mu1 = mu0 if self.global_magnitude else leaf(stage.mu1)
            stages.append(AttachedStage(logits, mu0, mu1))

        return AttachedPolicy(self, stages)

    def to_json(self) -> dict:
        return {
            'stages': [
                {
                    'pi': stage.probabilities().tolist(),
                    'logits': stage.logits.tolist(),
                    'mu0': stage.mu0.tolist(),
                    'mu1': stage.mu1.tolist(),
                } for stage in self.stages
            ],
            'operators': list(self.operators),
            'temperature': self.temperature,
            'global_magnitude': self.global_magnitude,
        }

    @classmethod
    def from_json(cls, data: dict) -> 'PolicyParams':
        """Parses a policy document. Stages without `logits` are read from `pi` (as log-probabilities).
        """
        try:
            stages = []
            for stage in data['stages']:
                if 'logits' in stage:
                    logits = np.asarray(stage['logits'], dtype=np.float64)
                else:
                    with np.errstate(divide='ignore'):
                        logits = np.log(np.asarray(stage['pi'], dtype=np.float64))
                stages.append(StageParams(logits, stage['mu0'], stage['mu1']))

            return cls(
                stages,
                temperature=float(data.get('temperature', 1.0)),
                operators=tuple(data['operators']),
                global_magnitude=bool(data.get('global_magnitude', False)),
            )
        except (KeyError, TypeError, ValueError, ContractViolationError) as e:
            raise MalformedTrajectoryError(f'invalid policy document: {e}')


def init_policy(
    operators: Sequence[str] = DEFAULT_OPERATORS, stages: int = 2, temperature: float = 1.0,
    global_magnitude: bool = False,
) -> PolicyParams:
    """Returns a policy with uniform selection probabilities and each operator's initial strength for both classes.

    :param operators: (optional) The operator identifiers. Defaults to all six operators.
    :param stages: (optional) The number of stages K. Defaults to 2. K = 0 yields the identity policy.
    :param temperature: (optional) The Gumbel-Softmax temperature. Defaults to 1.
    :param global_magnitude: (optional) Whether strengths are shared between the classes. Defaults to False.
    """
    if not operators:
        raise ContractViolationError('init_policy: operator set is empty')
    if stages < 0:
        raise ContractViolationError(f'init_policy: stage count must be non-negative, got {stages}')

    initial = np.array([get_operator(name).initial_strength or 0.0 for name in operators], dtype=np.float64)
    return PolicyParams(
        [StageParams(np.zeros(len(operators)), initial, initial.copy()) for _ in range(stages)],
        temperature=temperature, operators=operators, global_magnitude=global_magnitude,
    )


def sample_stage(stage: AttachedStage, temperature: float, rng: RngStream) -> Tuple[int, Node]:
    """Selects one operator by a Gumbel-Softmax draw.

    :param stage: The :class:`AttachedStage <AttachedStage>` to sample from.
    :param temperature: The temperature τ > 0.
    :param rng: The :class:`RngStream <taskaug.diff.rng.RngStream>` to draw the Gumbel noise from.
    :return: A tuple of the selected operator index and the straight-through factor ``u_i / stop_grad(u_i)``, whose
        value is exactly 1.
    """
    if not temperature > 0:
        raise ContractViolationError(f'sample_stage: temperature must be positive, got {temperature}')

    logits = stage.logits
    relaxed = ops.softmax(ops.scale(ops.add(logits, _gumbel(rng, logits.shape[0])), 1.0 / temperature))
    index = int(np.argmax(relaxed.value))
    factor = ops.divide(ops.take(relaxed, index), relaxed.value[index])
    return index, factor


def compute_strength(y, mu0: Node, mu1: Node) -> Node:
    """Routes the per-class strengths: ``s = y·μ1 + (1 − y)·μ0``.

    :param y: The binary label.
    :param mu0: The class-0 strength node.
    :param mu1: The class-1 strength node.
    :return: The strength node.
    """
    if y not in (0, 1):
        raise ContractViolationError(f'compute_strength: label must be 0 or 1, got {y}')

    y = float(y)
    return ops.add(ops.scale(mu1, y), ops.scale(mu0, 1.0 - y))


def apply_policy(
    x: Node, y, policy: Union[PolicyParams, AttachedPolicy], rng: RngStream, fs: Optional[float] = None,
) -> Node:
    """Applies the K stages of a policy in sequence to one [C, T] signal.

    A plain :class:`PolicyParams <PolicyParams>` is recorded as constants on the tape of `x`.

    :param x: The signal node.
    :param y: The example's binary label.
    :param policy: The policy.
    :param rng: The :class:`RngStream <taskaug.diff.rng.RngStream>` of this example.
    :param fs: (optional) The sampling rate in Hz.
    :return: The augmented signal node.
    """
    if isinstance(policy, PolicyParams):
        policy = policy.attach(x.tape, learnable=False)

    leads, length = x.shape
    for stage in policy.stages:
        index, factor = sample_stage(stage, policy.temperature, rng)
        op = policy.operators[index]
        s = None
        if op.learnable:
            s = compute_strength(y, ops.take(stage.mu0, index), ops.take(stage.mu1, index))
        draw = op.draw(rng, leads, length)
        x = ops.mul(op.apply(x, s, draw, fs), factor)

    return x


def _select(values: Node, one_hot: np.ndarray) -> Node:
    # row b of one_hot picks one entry of values, exactly
    return ops.sum(ops.mul(values, one_hot), axis=1)


def sample_stage_batch(
    stage: AttachedStage, temperature: float, rngs: Sequence[RngStream],
) -> Tuple[np.ndarray, Node]:
    """Selects one operator per example, drawing each example's Gumbel noise from its own stream.

    Row b makes the same selection as ``sample_stage(stage, temperature, rngs[b])``.

    :return: A tuple of the [B] selected indices and the [B] straight-through factors, whose values are exactly 1.
    """
    if not temperature > 0:
        raise ContractViolationError(f'sample_stage: temperature must be positive, got {temperature}')

    logits = stage.logits
    gumbel = np.stack([_gumbel(rng, logits.shape[0]) for rng in rngs])
    relaxed = ops.softmax(ops.scale(ops.add(logits, gumbel), 1.0 / temperature))
    index = np.argmax(relaxed.value, axis=1)
    picked = _select(relaxed, np.eye(logits.shape[0])[index])
    return index, ops.divide(picked, picked.value)


def apply_policy_batch(
    x: Node, y, policy: Union[PolicyParams, AttachedPolicy], rngs: Sequence[RngStream], fs: Optional[float] = None,
) -> Node:
    """Applies the K stages of a policy to every example of a [B, C, T] batch.

    Example b draws from ``rngs[b]`` and ends up as ``apply_policy(x[b], y[b], policy, rngs[b], fs)`` would leave it.
    Each stage is recorded once per selected operator rather than once per example.

    :param x: The batch node.
    :param y: The [B] binary labels.
    :param policy: The policy.
    :param rngs: The :class:`RngStream <taskaug.diff.rng.RngStream>` of each example.
    :param fs: (optional) The sampling rate in Hz.
    :return: The augmented batch node.
    """
    if isinstance(policy, PolicyParams):
        policy = policy.attach(x.tape, learnable=False)

    y = np.asarray(y)
    if x.value.ndim != 3 or y.shape != (x.shape[0],) or len(rngs) != x.shape[0]:
        raise ContractViolationError(
            f'apply_policy_batch: batch {x.shape}, {y.shape} labels and {len(rngs)} streams do not conform'
        )
    if not np.all((y == 0) | (y == 1)):
        raise ContractViolationError(f'apply_policy_batch: labels must be 0 or 1, got {sorted(set(y.tolist()))}')

    batch, leads, length = x.shape
    label = y.astype(np.float64)
    for stage in policy.stages:
        index, factor = sample_stage_batch(stage, policy.temperature, rngs)
        one_hot = np.eye(len(policy.operators))[index]
        strength = ops.add(
            ops.mul(_select(stage.mu1, one_hot), label), ops.mul(_select(stage.mu0, one_hot), 1.0 - label),
        )

        parts, order = [], []
        for i, op in enumerate(policy.operators):
            rows = np.flatnonzero(index == i)
            if not len(rows):
                continue

            draws = [op.draw(rngs[b], leads, length) for b in rows]
            s = ops.gather(strength, rows) if op.learnable else None
            parts.append(op.apply_batch(ops.gather(x, rows), s, draws, fs))
            order.append(rows)

        merged = ops.gather(ops.concat(parts), np.argsort(np.concatenate(order)))
        x = ops.mul(merged, ops.reshape(factor, (batch, 1, 1)))

    return x

"""The gradient-check suite run by the ``gradcheck`` command.

Every registered op, every learnable operator strength, the straight-through selection factor and the bilevel
machinery are compared against finite-difference or closed-form oracles.
"""
import csv
import logging
import os
from typing import Callable, Dict, List, Optional

import numpy as np

from taskaug.aug import PolicyParams, StageParams, compute_strength, get_operator, sample_stage
from taskaug.diff import RngStream, Tape, backward, check_node_gradients, numeric_gradient, ops, registered_ops, \
    relative_error
from taskaug.error import CheckFailedError
from taskaug.hypergrad import HyperConfig, QuadraticObjective, hypergradient, neumann_inverse_hvp

logger = logging.getLogger(__name__)

REPORT_FILE = 'gradcheck.csv'
REPORT_HEADER = ['check', 'family', 'runs', 'max_relative_error', 'tolerance', 'passed']

DEFAULT_TOLERANCE = 1e-4


class GradientCheck:
    """A named check computing one relative error per seed.

    :param name: The check's name.
    :param family: The group the check belongs to: ``op``, ``strength``, ``policy`` or ``bilevel``.
    :param run: A function of the seed returning the relative error.
    :param tolerance: (optional) The largest passing error. Defaults to 1e-4.
    :param seeded: (optional) Whether the check depends on the seed. Unseeded checks run once. Defaults to True.
    """

    def __init__(
        self, name: str, family: str, run: Callable[[int], float], tolerance: float = DEFAULT_TOLERANCE,
        seeded: bool = True,
    ):
        self.name = name
        self.family = family
        self.run = run
        self.tolerance = tolerance
        self.seeded = seeded

    def __repr__(self):
        return f'{self.__class__.__name__}(name={self.name!r}, family={self.family!r}, tolerance={self.tolerance})'


class CheckResult:
    """The errors of one check over its runs.
    """

    def __init__(self, check: GradientCheck, errors: List[float], tolerance: float):
        self.check = check
        self.errors = errors
        self.tolerance = tolerance

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'check={self.check.name!r}, max_error={self.max_error}, tolerance={self.tolerance})'

    @property
    def max_error(self) -> float:
        return max(self.errors)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_error)) and self.max_error <= self.tolerance

    def to_row(self) -> List:
        return [self.check.name, self.check.family, len(self.errors), repr(self.max_error), repr(self.tolerance),
                int(self.passed)]


def _gen(seed: int, *shape, low=None, high=None) -> np.ndarray:
    rng = np.random.default_rng(1000 + seed)
    if low is not None:
        return rng.uniform(low, high, size=shape)
    return rng.standard_normal(shape)


def _smooth(seed: int, leads: int = 2, length: int = 64) -> np.ndarray:
    rng = np.random.default_rng(seed)
    t = np.arange(length) / length
    x = np.zeros((leads, length))
    for c in range(leads):
        for _ in range(3):
            x[c] += rng.uniform(0.5, 1.5) * np.sin(2 * np.pi * rng.uniform(0.5, 3.0) * t + rng.uniform(0, 2 * np.pi))
    return x


# op name -> (build(nodes...), inputs(seed))
_OP_CASES = {
    'add': (lambda a, b: ops.add(a, b), lambda s: [_gen(s, 3, 4), _gen(s + 50, 4)]),
    'sub': (lambda a, b: ops.sub(a, b), lambda s: [_gen(s, 3, 4), _gen(s + 50, 3, 1)]),
    'mul': (lambda a, b: ops.mul(a, b), lambda s: [_gen(s, 3, 4), _gen(s + 50, 3, 4)]),
    'scale': (lambda a: ops.scale(a, -1.7), lambda s: [_gen(s, 5)]),
    'divide': (lambda a: ops.divide(a, 2.5), lambda s: [_gen(s, 5)]),
    'matmul': (lambda a, b: ops.matmul(a, b), lambda s: [_gen(s, 3, 4), _gen(s + 50, 4, 2)]),
    'conv1d': (
        lambda x, w, b: ops.conv1d(x, w, b, stride=2),
        lambda s: [_gen(s, 2, 3, 17), _gen(s + 50, 4, 3, 5), _gen(s + 60, 4)],
    ),
    'avgpool1d': (lambda x: ops.avgpool1d(x, 3, 2), lambda s: [_gen(s, 2, 3, 11)]),
    'relu': (lambda x: ops.relu(x), lambda s: [_gen(s, 12)]),
    'sigmoid': (lambda x: ops.sigmoid(x), lambda s: [_gen(s, 12)]),
    'softmax': (lambda x: ops.softmax(x), lambda s: [_gen(s, 3, 6)]),
    'sum': (lambda x: ops.sum(x, axis=1), lambda s: [_gen(s, 3, 6)]),
    'mean': (lambda x: ops.mean(x, axis=-1, keepdims=True), lambda s: [_gen(s, 3, 6)]),
    'std': (lambda x: ops.std(x), lambda s: [_gen(s, 3, 16)]),
    'sin': (lambda x: ops.sin(x), lambda s: [_gen(s, 12)]),
    'take': (lambda x: ops.take(x, 2), lambda s: [_gen(s, 5)]),
    'stack': (lambda a, b: ops.stack([a, b]), lambda s: [_gen(s, 4), _gen(s + 50, 4)]),
    'concat': (lambda a, b: ops.concat([a, b]), lambda s: [_gen(s, 2, 4), _gen(s + 50, 3, 4)]),
    'gather': (lambda x: ops.gather(x, [2, 0, 2]), lambda s: [_gen(s, 4, 3)]),
    'pad': (lambda x: ops.pad(x, 2, 3), lambda s: [_gen(s, 2, 6)]),
    'crop': (lambda x: ops.crop(x, 1, 5), lambda s: [_gen(s, 2, 8)]),
    'reshape': (lambda x: ops.reshape(x, (4, 3)), lambda s: [_gen(s, 2, 6)]),
    'linear_resample': (
        lambda x, d: ops.linear_resample(x, d),
        lambda s: [_gen(s, 3, 32), _gen(s + 50, 32, low=-3.3, high=3.3)],
    ),
    'gaussian_smooth': (lambda x: ops.gaussian_smooth(x, 1.5), lambda s: [_gen(s, 40)]),
    'bce_loss': (lambda p: ops.bce_loss(p, [1.0, 0.0, 1.0, 0.0]), lambda s: [_gen(s, 4, low=0.1, high=0.9)]),
}

# operator -> (strength, tolerance, finite-difference step)
_STRENGTH_CASES = {
    'noise': (0.3, 1e-4, 1e-6),
    'warp': (0.8, 1e-4, 1e-7),
    'wander': (-0.4, 1e-4, 1e-6),
    'scale': (0.2, 1e-4, 1e-6),
    'displacement': (0.35, 1e-3, 1e-7),
}


def _op_check(name: str) -> Callable[[int], float]:
    build, inputs = _OP_CASES[name]

    def run(seed: int) -> float:
        return max(check_node_gradients(build, inputs(seed), seed=seed))
    return run


def _strength_check(name: str) -> Callable[[int], float]:
    op = get_operator(name)
    s, _, h = _STRENGTH_CASES[name]

    def run(seed: int) -> float:
        x = _smooth(seed)
        draw = op.draw(RngStream(seed), *x.shape)

        def build(strength):
            return op.apply(strength.tape.constant(x), strength, draw, 100.0)

        err, = check_node_gradients(build, [s], seed=seed, h=h)
        return err
    return run


def _factor_check(seed: int) -> float:
    logits = np.random.default_rng(seed).standard_normal(2)
    rng = RngStream(seed)
    gumbel = -np.log(-np.log(rng.copy().uniform(2)))

    policy = PolicyParams([StageParams(logits, np.zeros(2), np.zeros(2))], operators=['time_mask', 'noise'])
    stage = policy.attach(Tape()).stages[0]
    index, factor = sample_stage(stage, 1.0, rng)
    analytic = backward(factor, [stage.logits])[0]

    z = logits + gumbel
    const = np.exp(z[index]) / np.exp(z).sum()

    def relaxed(l):
        e = np.exp(l + gumbel)
        return float(e[index] / e.sum() / const)

    return relative_error(analytic, numeric_gradient(relaxed, logits))


def _routing_check(seed: int) -> float:
    y = seed % 2

    def build(mu0, mu1):
        return compute_strength(y, mu0, mu1)

    return max(check_node_gradients(build, [_gen(seed, 1), _gen(seed + 50, 1)], seed=seed))


def _hypergradient_check(seed: int) -> float:
    phi = np.array([0.7])
    objective = QuadraticObjective(np.eye(1))
    cfg = HyperConfig(neumann_terms=50, alpha=0.5, fd_epsilon=1e-3)
    _, grad = hypergradient(objective.inner_minimum(phi), phi, objective, cfg)
    return relative_error(grad, phi)


def _neumann_check(seed: int) -> float:
    v = np.array([1.0, -2.0])
    objective = QuadraticObjective(np.diag([1.0, 2.0]))
    q = neumann_inverse_hvp(v, np.zeros(2), objective, np.zeros(2), 50, 0.5)
    return relative_error(q, v / np.array([1.0, 2.0]))


def _neumann_zero_check(seed: int) -> float:
    v = np.array([1.0, -2.0])
    objective = QuadraticObjective(np.diag([1.0, 2.0]))
    q = neumann_inverse_hvp(v, np.zeros(2), objective, np.zeros(2), 0, 0.5)
    return float(np.max(np.abs(q - 0.5 * v)))


def registered_checks() -> List[GradientCheck]:
    """Returns the checks of the suite, one per registered op and operator strength plus the policy and bilevel
    oracles.
    """
    checks = [GradientCheck(f'op.{name}', 'op', _op_check(name)) for name in registered_ops()]
    checks += [
        GradientCheck(f'strength.{name}', 'strength', _strength_check(name), tolerance=tol)
        for name, (_, tol, _) in _STRENGTH_CASES.items()
    ]
    checks += [
        GradientCheck('policy.factor', 'policy', _factor_check),
        GradientCheck('policy.routing', 'policy', _routing_check),
        GradientCheck('bilevel.hypergradient', 'bilevel', _hypergradient_check, seeded=False),
        GradientCheck('bilevel.neumann', 'bilevel', _neumann_check, tolerance=1e-6, seeded=False),
        GradientCheck('bilevel.neumann_zero', 'bilevel', _neumann_zero_check, tolerance=0.0, seeded=False),
    ]
    return checks


def run_checks(seeds: int = 20, tolerance: Optional[float] = None) -> List[CheckResult]:
    """Runs every registered check.

    :param seeds: (optional) The number of seeds of each seeded check. Defaults to 20.
    :param tolerance: (optional) A tolerance replacing every check's own.
    :return: One :class:`CheckResult <CheckResult>` per check.
    """
    results = []
    for check in registered_checks():
        errors = [float(check.run(seed)) for seed in (range(seeds) if check.seeded else [0])]
        result = CheckResult(check, errors, check.tolerance if tolerance is None else tolerance)
        logger.debug(f'{check.name}: max relative error {result.max_error:.3e}')
        if not result.passed:
            logger.warning(f'{check.name}: max relative error {result.max_error:.3e} exceeds {result.tolerance:.1e}')
        results.append(result)
    return results


def write_report(results: List[CheckResult], path: str):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(REPORT_HEADER)
        for result in results:
            writer.writerow(result.to_row())


def check_results(results: List[CheckResult]) -> Dict[str, int]:
    """Raises :class:`CheckFailedError <taskaug.error.CheckFailedError>` naming the failed checks, if any.

    :return: The number of passed and failed checks.
    """
    failures = [r.check.name for r in results if not r.passed]
    if failures:
        raise CheckFailedError(failures)
    return {'passed': len(results), 'failed': 0}


def report_path(out: Optional[str]) -> str:
    directory = out or '.'
    os.makedirs(directory, exist_ok=True)
    return os.path.join(directory, REPORT_FILE)

"""Central finite-difference oracles for gradient checks.
"""
from typing import Callable, List, Sequence

import numpy as np

from taskaug.diff import ops
from taskaug.diff.tape import Node, Tape

# Below this norm both gradients are treated as zero and the absolute error is reported instead.
_TINY_NORM = 1e-7


def numeric_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Returns the central finite-difference gradient of a scalar function.

    :param f: A function of a float64 array returning a float.
    :param x: The point to differentiate at. It is not modified.
    :param h: (optional) The step. Defaults to 1e-6.
    :return: An array with the shape of `x`.
    """
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        plus = f(x)
        flat[i] = orig - h
        minus = f(x)
        flat[i] = orig
        out[i] = (plus - minus) / (2.0 * h)

    return grad


def directional_derivative(
    f: Callable[[np.ndarray], float], x: np.ndarray, direction: np.ndarray, h: float = 1e-6,
) -> float:
    """Returns the central finite-difference derivative of `f` at `x` along `direction`.
    """
    x = np.asarray(x, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    return (f(x + h * direction) - f(x - h * direction)) / (2.0 * h)


def check_node_gradients(
    build: Callable[..., Node], inputs: Sequence[np.ndarray], seed: int = 0, h: float = 1e-6,
) -> List[float]:
    """Compares reverse-mode gradients of a recorded computation against central finite differences.

    The output of `build` is reduced to a scalar with a fixed random projection, so every output element contributes.

    :param build: A function taking one parameter node per input and returning the output node.
    :param inputs: The input values.
    :param seed: (optional) Seeds the projection. Defaults to 0.
    :param h: (optional) The finite-difference step. Defaults to 1e-6.
    :return: The relative error of each input's gradient.
    """
    values = [np.array(v, dtype=np.float64) for v in inputs]

    tape = Tape()
    nodes = [tape.parameter(v) for v in values]
    out = build(*nodes)
    projection = np.random.default_rng(seed).standard_normal(out.shape)
    loss = ops.sum(ops.mul(out, tape.constant(projection)))
    analytic = tape.backward(loss, nodes)

    def projected(i: int, v: np.ndarray) -> float:
        t = Tape()
        args = [t.parameter(v if j == i else values[j]) for j in range(len(values))]
        return float(np.sum(build(*args).value * projection))

    errors = []
    for i, value in enumerate(values):
        numeric = numeric_gradient(lambda v, i=i: projected(i, v), value, h=h)
        errors.append(relative_error(analytic[i], numeric))
    return errors


def relative_error(analytic, numeric) -> float:
    """Returns ``‖a − n‖ / max(‖a‖, ‖n‖)``, or the absolute error when both norms are negligible.
    """
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    n = np.asarray(numeric, dtype=np.float64).reshape(-1)
    diff = float(np.linalg.norm(a - n))
    scale = max(float(np.linalg.norm(a)), float(np.linalg.norm(n)))
    if scale < _TINY_NORM:
        return diff

    return diff / scale

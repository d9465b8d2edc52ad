"""Forward operations with registered vector-Jacobian products.

Every operation takes :class:`Node <taskaug.diff.tape.Node>` inputs (plain numbers and arrays are recorded as constants
on the tape of the first node input), computes its float64 output and records it together with its VJP. Binary
elementwise operations accept operands whose shapes broadcast into the shape of the larger operand; anything else is a
contract violation.
"""
import math
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from taskaug.diff.tape import Node, Tape
from taskaug.error import ContractViolationError

# Probabilities entering the binary cross-entropy are clamped to [BCE_EPS, 1 - BCE_EPS].
BCE_EPS = 1e-7

_OPS: Dict[str, Callable[..., Node]] = {}


def register(name: str):
    def decorator(fn):
        _OPS[name] = fn
        return fn

    return decorator


def registered_ops() -> Tuple[str, ...]:
    """Returns the identifiers of all registered operations, in registration order.
    """
    return tuple(_OPS)


def forward_op(name: str, *inputs, **attrs) -> Node:
    """Applies the registered operation `name` to the provided inputs.

    :param name: The operation identifier, e.g. ``conv1d``.
    :param inputs: The operation inputs.
    :param attrs: Operation attributes such as ``stride`` or ``kernel_std``.
    :return: The recorded output :class:`Node <taskaug.diff.tape.Node>`.
    """
    fn = _OPS.get(name)
    if fn is None:
        raise ContractViolationError(f'unknown operation {name!r}')

    return fn(*inputs, **attrs)


def _tape_of(name: str, *inputs) -> Tape:
    for x in inputs:
        if isinstance(x, Node):
            return x.tape

    raise ContractViolationError(f'{name}: at least one input must be a tape node')


def _lift(tape: Tape, x) -> Node:
    if isinstance(x, Node):
        return x

    return tape.constant(x)


def _broadcast_shape(name: str, a: Node, b: Node) -> Tuple[int, ...]:
    try:
        shape = tuple(np.broadcast_shapes(a.shape, b.shape))
    except ValueError:
        raise ContractViolationError(f'{name}: shapes {a.shape} and {b.shape} do not conform')

    if shape != a.shape and shape != b.shape:
        raise ContractViolationError(f'{name}: shapes {a.shape} and {b.shape} do not conform')

    return shape


def _unbroadcast(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)

    return g


@register('add')
def add(a, b) -> Node:
    tape = _tape_of('add', a, b)
    a, b = _lift(tape, a), _lift(tape, b)
    _broadcast_shape('add', a, b)

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return tape.record('add', a.value + b.value, (a, b), vjp)


@register('sub')
def sub(a, b) -> Node:
    tape = _tape_of('sub', a, b)
    a, b = _lift(tape, a), _lift(tape, b)
    _broadcast_shape('sub', a, b)

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return tape.record('sub', a.value - b.value, (a, b), vjp)


@register('mul')
def mul(a, b) -> Node:
    tape = _tape_of('mul', a, b)
    a, b = _lift(tape, a), _lift(tape, b)
    _broadcast_shape('mul', a, b)

    def vjp(g):
        ga = _unbroadcast(g * b.value, a.shape) if a.requires_grad else None
        gb = _unbroadcast(g * a.value, b.shape) if b.requires_grad else None
        return ga, gb

    return tape.record('mul', a.value * b.value, (a, b), vjp)


@register('scale')
def scale(x: Node, factor: float) -> Node:
    factor = float(factor)

    def vjp(g):
        return g * factor,

    return x.tape.record('scale', x.value * factor, (x,), vjp)


@register('divide')
def divide(x: Node, denominator) -> Node:
    """Divides by a constant scalar or array. ``divide(u, u.value)`` realizes ``u / stop_grad(u)``: value exactly 1,
    gradient 1/u.
    """
    denominator = np.asarray(denominator, dtype=np.float64)
    if np.any(denominator == 0.0) or not np.all(np.isfinite(denominator)):
        raise ContractViolationError(f'divide: invalid denominator {denominator}')
    try:
        conforms = np.broadcast_shapes(x.shape, denominator.shape) == x.shape
    except ValueError:
        conforms = False
    if not conforms:
        raise ContractViolationError(f'divide: denominator {denominator.shape} does not conform to {x.shape}')

    def vjp(g):
        return g / denominator,

    return x.tape.record('divide', x.value / denominator, (x,), vjp)


@register('matmul')
def matmul(a: Node, b: Node) -> Node:
    tape = _tape_of('matmul', a, b)
    a, b = _lift(tape, a), _lift(tape, b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ContractViolationError(f'matmul: shapes {a.shape} and {b.shape} do not conform')

    def vjp(g):
        ga = g @ b.value.T if a.requires_grad else None
        gb = a.value.T @ g if b.requires_grad else None
        return ga, gb

    return tape.record('matmul', a.value @ b.value, (a, b), vjp)


@register('conv1d')
def conv1d(x: Node, weight: Node, bias: Optional[Node] = None, stride: int = 1, padding: Optional[int] = None) -> Node:
    """One-dimensional cross-correlation over the last axis.

    :param x: Input of shape [B, C, T] or [C, T].
    :param weight: Kernel of shape [O, C, K].
    :param bias: (optional) Bias of shape [O].
    :param stride: The temporal stride, at least 1.
    :param padding: (optional) Zeros added at both ends of the time axis. Defaults to K // 2 ("same" for stride 1).
    :return: Output of shape [B, O, T_out] (or [O, T_out] for unbatched input).
    """
    tape = _tape_of('conv1d', x, weight)
    x, weight = _lift(tape, x), _lift(tape, weight)
    unbatched = x.value.ndim == 2
    xv = x.value[None] if unbatched else x.value
    if xv.ndim != 3 or weight.value.ndim != 3 or xv.shape[1] != weight.shape[1]:
        raise ContractViolationError(f'conv1d: input {x.shape} and weight {weight.shape} do not conform')
    if stride < 1:
        raise ContractViolationError(f'conv1d: stride must be at least 1, got {stride}')

    n_batch, channels, length = xv.shape
    out_channels, _, kernel = weight.shape
    pad = kernel // 2 if padding is None else padding
    out_length = (length + 2 * pad - kernel) // stride + 1
    if out_length < 1:
        raise ContractViolationError(f'conv1d: input length {length} is shorter than kernel {kernel}')

    xp = np.pad(xv, ((0, 0), (0, 0), (pad, pad)))
    windows = sliding_window_view(xp, kernel, axis=2)[:, :, ::stride, :][:, :, :out_length, :]
    cols = windows.transpose(0, 2, 1, 3).reshape(n_batch, out_length, channels * kernel)
    wmat = weight.value.reshape(out_channels, channels * kernel)
    out = (cols @ wmat.T).transpose(0, 2, 1)

    parents = [x, weight]
    if bias is not None:
        bias = _lift(tape, bias)
        if bias.shape != (out_channels,):
            raise ContractViolationError(f'conv1d: bias {bias.shape} does not match {out_channels} output channels')
        out = out + bias.value[None, :, None]
        parents.append(bias)

    def vjp(g):
        gb = g[None] if unbatched else g
        gt = gb.transpose(0, 2, 1)

        gw = None
        if weight.requires_grad:
            gw = (gt.reshape(-1, out_channels).T @ cols.reshape(-1, channels * kernel)).reshape(weight.shape)

        gx = None
        if x.requires_grad:
            gcols = (gt @ wmat).reshape(n_batch, out_length, channels, kernel).transpose(0, 2, 1, 3)
            gxp = np.zeros_like(xp)
            stop = stride * (out_length - 1) + 1
            for k in range(kernel):
                gxp[:, :, k:k + stop:stride] += gcols[:, :, :, k]
            gx = gxp[:, :, pad:pad + length]
            if unbatched:
                gx = gx[0]

        grads = [gx, gw]
        if bias is not None:
            grads.append(gb.sum(axis=(0, 2)) if bias.requires_grad else None)
        return grads

    return tape.record('conv1d', out[0] if unbatched else out, parents, vjp)


@register('avgpool1d')
def avgpool1d(x: Node, kernel: int, stride: Optional[int] = None) -> Node:
    """Average pooling over the last axis. ``kernel`` equal to the length gives global temporal pooling.
    """
    stride = kernel if stride is None else stride
    length = x.shape[-1]
    if kernel < 1 or stride < 1 or kernel > length:
        raise ContractViolationError(f'avgpool1d: kernel {kernel}, stride {stride} invalid for length {length}')

    out_length = (length - kernel) // stride + 1
    windows = sliding_window_view(x.value, kernel, axis=-1)[..., ::stride, :][..., :out_length, :]
    out = windows.mean(axis=-1)

    def vjp(g):
        gx = np.zeros_like(x.value)
        stop = stride * (out_length - 1) + 1
        for k in range(kernel):
            gx[..., k:k + stop:stride] += g / kernel
        return gx,

    return x.tape.record('avgpool1d', out, (x,), vjp)


@register('relu')
def relu(x: Node) -> Node:
    mask = x.value > 0

    def vjp(g):
        return g * mask,

    return x.tape.record('relu', np.where(mask, x.value, 0.0), (x,), vjp)


@register('sigmoid')
def sigmoid(x: Node) -> Node:
    s = expit(x.value)

    def vjp(g):
        return g * s * (1.0 - s),

    return x.tape.record('sigmoid', s, (x,), vjp)


@register('softmax')
def softmax(x: Node) -> Node:
    """Softmax over the last axis, computed with max-subtraction.
    """
    shifted = x.value - x.value.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    u = e / e.sum(axis=-1, keepdims=True)

    def vjp(g):
        return u * (g - (g * u).sum(axis=-1, keepdims=True)),

    return x.tape.record('softmax', u, (x,), vjp)


def _reduce_vjp(x: Node, g: np.ndarray, axis, keepdims: bool, divisor: float) -> np.ndarray:
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g / divisor, x.shape).copy()


@register('sum')
def sum(x: Node, axis: Optional[int] = None, keepdims: bool = False) -> Node:
    def vjp(g):
        return _reduce_vjp(x, g, axis, keepdims, 1.0),

    return x.tape.record('sum', x.value.sum(axis=axis, keepdims=keepdims), (x,), vjp)


@register('mean')
def mean(x: Node, axis: Optional[int] = None, keepdims: bool = False) -> Node:
    count = x.value.size if axis is None else x.shape[axis]

    def vjp(g):
        return _reduce_vjp(x, g, axis, keepdims, float(count)),

    return x.tape.record('mean', x.value.mean(axis=axis, keepdims=keepdims), (x,), vjp)


@register('std')
def std(x: Node) -> Node:
    """Population standard deviation over the last axis, keeping that axis with size 1.
    """
    n = x.shape[-1]
    centered = x.value - x.value.mean(axis=-1, keepdims=True)
    sd = np.sqrt((centered ** 2).mean(axis=-1, keepdims=True))
    safe = np.where(sd > 0, sd, 1.0)

    def vjp(g):
        return np.where(sd > 0, g * centered / (n * safe), 0.0),

    return x.tape.record('std', sd, (x,), vjp)


@register('sin')
def sin(x: Node) -> Node:
    def vjp(g):
        return g * np.cos(x.value),

    return x.tape.record('sin', np.sin(x.value), (x,), vjp)


@register('take')
def take(x: Node, index: int) -> Node:
    """Selects one element of a vector as a scalar node.
    """
    if x.value.ndim != 1 or not 0 <= index < x.shape[0]:
        raise ContractViolationError(f'take: index {index} invalid for shape {x.shape}')

    def vjp(g):
        gx = np.zeros_like(x.value)
        gx[index] = g
        return gx,

    return x.tape.record('take', x.value[index], (x,), vjp)


@register('stack')
def stack(nodes: Sequence[Node]) -> Node:
    """Stacks equally shaped nodes along a new leading axis.
    """
    if not nodes:
        raise ContractViolationError('stack: no inputs')
    shapes = {n.shape for n in nodes}
    if len(shapes) != 1:
        raise ContractViolationError(f'stack: input shapes {sorted(shapes)} differ')

    tape = nodes[0].tape

    def vjp(g):
        return [g[i] for i in range(len(nodes))]

    return tape.record('stack', np.stack([n.value for n in nodes]), tuple(nodes), vjp)


@register('concat')
def concat(nodes: Sequence[Node]) -> Node:
    """Joins nodes along their leading axis. All other axes must agree.
    """
    if not nodes:
        raise ContractViolationError('concat: no inputs')
    trailing = {n.shape[1:] for n in nodes}
    if len(trailing) != 1 or any(n.value.ndim == 0 for n in nodes):
        raise ContractViolationError(f'concat: input shapes {[n.shape for n in nodes]} do not conform')

    tape = nodes[0].tape
    bounds = np.cumsum([0] + [n.shape[0] for n in nodes])

    def vjp(g):
        return [g[bounds[i]:bounds[i + 1]] for i in range(len(nodes))]

    return tape.record('concat', np.concatenate([n.value for n in nodes]), tuple(nodes), vjp)


@register('gather')
def gather(x: Node, indices: Sequence[int]) -> Node:
    """Selects entries of the leading axis, e.g. a subset of the examples of a batch. Indices may repeat.
    """
    indices = np.asarray(indices, dtype=np.int64)
    if x.value.ndim == 0 or indices.ndim != 1 or np.any(indices < 0) or np.any(indices >= x.shape[0]):
        raise ContractViolationError(f'gather: indices {indices.tolist()} invalid for shape {x.shape}')

    def vjp(g):
        gx = np.zeros_like(x.value)
        np.add.at(gx, indices, g)
        return gx,

    return x.tape.record('gather', x.value[indices], (x,), vjp)


@register('pad')
def pad(x: Node, before: int, after: int) -> Node:
    """Zero-extends the last axis.
    """
    if before < 0 or after < 0:
        raise ContractViolationError(f'pad: negative widths ({before}, {after})')

    widths = [(0, 0)] * (x.value.ndim - 1) + [(before, after)]
    length = x.shape[-1]

    def vjp(g):
        return g[..., before:before + length],

    return x.tape.record('pad', np.pad(x.value, widths), (x,), vjp)


@register('crop')
def crop(x: Node, start: int, stop: int) -> Node:
    """Keeps samples [start, stop) of the last axis.
    """
    if not 0 <= start < stop <= x.shape[-1]:
        raise ContractViolationError(f'crop: window [{start}, {stop}) invalid for shape {x.shape}')

    def vjp(g):
        gx = np.zeros_like(x.value)
        gx[..., start:stop] = g
        return gx,

    return x.tape.record('crop', x.value[..., start:stop], (x,), vjp)


@register('reshape')
def reshape(x: Node, shape: Tuple[int, ...]) -> Node:
    try:
        out = x.value.reshape(shape)
    except ValueError:
        raise ContractViolationError(f'reshape: cannot reshape {x.shape} into {tuple(shape)}')

    def vjp(g):
        return g.reshape(x.shape),

    return x.tape.record('reshape', out, (x,), vjp)


@register('linear_resample')
def linear_resample(x: Node, displacement: Node) -> Node:
    """Samples `x` at position ``t + displacement[..., t]`` by linear interpolation along the last axis.

    A field with the same shape as `x` moves every row on its own. A field without the channel axis (shape [T] for a
    [C, T] signal, [B, T] for a [B, C, T] batch) is shared by all channels. Source positions outside [0, T - 1] clamp to
    the boundary sample; the clamped samples carry no gradient to the displacement.

    :param x: Signal of shape [..., C, T] or [..., T].
    :param displacement: Field in samples.
    """
    tape = _tape_of('linear_resample', x, displacement)
    x, displacement = _lift(tape, x), _lift(tape, displacement)
    length = x.shape[-1]
    shared = displacement.value.ndim == x.value.ndim - 1
    expected = x.shape[:-2] + x.shape[-1:] if shared else x.shape
    if x.value.ndim == 0 or displacement.shape != expected or length < 2:
        raise ContractViolationError(f'linear_resample: signal {x.shape} and field {displacement.shape} do not conform')

    field = displacement.value[..., None, :] if shared else displacement.value
    pos = np.broadcast_to(np.arange(length) + field, x.shape)
    inside = (pos >= 0) & (pos <= length - 1)
    clamped = np.clip(pos, 0, length - 1)
    i0 = np.minimum(np.floor(clamped).astype(np.int64), length - 2)
    w = clamped - i0

    xv = x.value.reshape(-1, length)
    rows = np.arange(xv.shape[0])[:, None]
    i0f = i0.reshape(-1, length)
    left = xv[rows, i0f].reshape(x.shape)
    right = xv[rows, i0f + 1].reshape(x.shape)
    out = left * (1.0 - w) + right * w

    def vjp(g):
        gx = None
        if x.requires_grad:
            gx = np.zeros_like(xv)
            np.add.at(gx, (rows, i0f), (g * (1.0 - w)).reshape(-1, length))
            np.add.at(gx, (rows, i0f + 1), (g * w).reshape(-1, length))
            gx = gx.reshape(x.shape)
        gd = None
        if displacement.requires_grad:
            gd = g * (right - left) * inside
            if shared:
                gd = gd.sum(axis=-2)
        return gx, gd

    return tape.record('linear_resample', out, (x, displacement), vjp)


def gaussian_kernel(kernel_std: float, length: int) -> np.ndarray:
    """Returns the discrete Gaussian kernel truncated at ±4 standard deviations (and at the signal length), normalized
    to sum to one.
    """
    radius = min(int(math.ceil(4.0 * kernel_std)), length - 1)
    k = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (k / kernel_std) ** 2)
    return kernel / kernel.sum()


@register('gaussian_smooth')
def gaussian_smooth(x: Node, kernel_std: float) -> Node:
    """Convolves every row of a [..., T] signal with a normalized Gaussian kernel using reflect padding.
    """
    if not kernel_std > 0:
        raise ContractViolationError(f'gaussian_smooth: kernel_std must be positive, got {kernel_std}')
    if x.value.ndim == 0 or x.shape[-1] < 2:
        raise ContractViolationError(f'gaussian_smooth: expected a [..., T] signal with T >= 2, got {x.shape}')

    length = x.shape[-1]
    kernel = gaussian_kernel(kernel_std, length)
    radius = (len(kernel) - 1) // 2
    source = np.pad(np.arange(length), radius, mode='reflect')
    out = sliding_window_view(x.value[..., source], len(kernel), axis=-1) @ kernel

    def vjp(g):
        gp = np.pad(g, [(0, 0)] * (g.ndim - 1) + [(2 * radius, 2 * radius)])
        gxp = sliding_window_view(gp, len(kernel), axis=-1) @ kernel[::-1]
        gx = np.zeros_like(x.value)
        np.add.at(np.moveaxis(gx, -1, 0), source, np.moveaxis(gxp, -1, 0))
        return gx,

    return x.tape.record('gaussian_smooth', out, (x,), vjp)


@register('bce_loss')
def bce_loss(prob: Node, target) -> Node:
    """Mean binary cross-entropy between predicted probabilities and {0, 1} targets.

    Probabilities are clamped to [1e-7, 1 - 1e-7]; clamped entries carry no gradient.
    """
    t = np.asarray(target, dtype=np.float64)
    if t.shape != prob.shape:
        raise ContractViolationError(f'bce_loss: target {t.shape} and prediction {prob.shape} do not conform')

    p = np.clip(prob.value, BCE_EPS, 1.0 - BCE_EPS)
    n = float(max(p.size, 1))
    loss = -np.sum(t * np.log(p) + (1.0 - t) * np.log(1.0 - p)) / n
    active = (prob.value > BCE_EPS) & (prob.value < 1.0 - BCE_EPS)

    def vjp(g):
        return g * (-t / p + (1.0 - t) / (1.0 - p)) * active / n,

    return prob.tape.record('bce_loss', loss, (prob,), vjp)

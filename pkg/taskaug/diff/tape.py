from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from taskaug.error import ContractViolationError

# A vector-Jacobian product receives the gradient of the node's output and returns one gradient (or None) per parent.
VJP = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Node:
    """A value recorded on a :class:`Tape <Tape>`.

    Nodes are created by the tape (leaves) or by the operations in :mod:`taskaug.diff.ops`; they should not be
    instantiated directly.

    :param tape: The tape the node belongs to.
    :param index: The position of the node on the tape.
    :param op: The identifier of the operation that produced the node (``constant`` or ``parameter`` for leaves).
    :param value: The float64 output value.
    :param parents: The input nodes of the operation.
    :param vjp: (optional) The vector-Jacobian product of the operation. Leaves have none.
    :param requires_grad: Whether gradients flow into this node.
    """

    __slots__ = ('tape', 'index', 'op', 'value', 'parents', 'vjp', 'requires_grad')

    def __init__(
        self, tape: 'Tape', index: int, op: str, value: np.ndarray, parents: Tuple['Node', ...] = (),
        vjp: Optional[VJP] = None, requires_grad: bool = False,
    ):
        self.tape = tape
        self.index = index
        self.op = op
        self.value = value
        self.parents = parents
        self.vjp = vjp
        self.requires_grad = requires_grad

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'index={self.index}, op={self.op}, shape={self.shape}, requires_grad={self.requires_grad})'

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def item(self) -> float:
        """Returns the value of a single-element node as a Python float.
        """
        return float(self.value)

    def __add__(self, other):
        from taskaug.diff import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from taskaug.diff import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from taskaug.diff import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from taskaug.diff import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from taskaug.diff import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from taskaug.diff import ops
        return ops.mul(other, self)

    def __neg__(self):
        from taskaug.diff import ops
        return ops.scale(self, -1.0)


class Tape:
    """Records a differentiable computation as a list of nodes in creation order.

    Creation order is a topological order of the computation, so the reverse pass simply walks the tape backwards. A
    tape must not be shared between threads while it is being recorded or differentiated.
    """

    def __init__(self):
        self._nodes: List[Node] = []

    def __len__(self):
        return len(self._nodes)

    def __repr__(self):
        return f'{self.__class__.__name__}(nodes={len(self._nodes)})'

    def constant(self, value) -> Node:
        """Records a leaf that does not receive gradients.

        :param value: An array-like value.
        :return: The recorded :class:`Node <Node>`.
        """
        return self._leaf('constant', value, requires_grad=False)

    def parameter(self, value) -> Node:
        """Records a leaf that receives gradients.

        :param value: An array-like value.
        :return: The recorded :class:`Node <Node>`.
        """
        return self._leaf('parameter', value, requires_grad=True)

    def record(self, op: str, value: np.ndarray, parents: Sequence[Node], vjp: VJP) -> Node:
        """Records the output of an operation.

        :param op: The operation identifier.
        :param value: The output value.
        :param parents: The input nodes.
        :param vjp: The vector-Jacobian product of the operation.
        :return: The recorded :class:`Node <Node>`.
        """
        for parent in parents:
            if parent.tape is not self:
                raise ContractViolationError(f'{op}: input node {parent.index} belongs to a different tape')

        node = Node(
            self, len(self._nodes), op, np.asarray(value, dtype=np.float64), tuple(parents), vjp,
            requires_grad=any(p.requires_grad for p in parents),
        )
        self._nodes.append(node)
        return node

    def backward(self, loss: Node, wrt: Sequence[Node]) -> List[np.ndarray]:
        """Computes the gradient of a scalar loss with respect to the provided nodes.

        Nodes that are not reachable from the loss receive a zero gradient.

        :param loss: A scalar node on this tape.
        :param wrt: The nodes to differentiate with respect to.
        :return: One gradient per node in `wrt`, each with that node's shape.
        """
        if loss.tape is not self:
            raise ContractViolationError('backward: loss belongs to a different tape')
        if loss.value.size != 1:
            raise ContractViolationError(f'backward: loss must be scalar, got shape {loss.shape}')

        wanted = {node.index for node in wrt}
        grads: Dict[int, np.ndarray] = {loss.index: np.ones_like(loss.value)}

        for node in reversed(self._nodes[:loss.index + 1]):
            if node.index in wanted:
                g = grads.get(node.index)
            else:
                g = grads.pop(node.index, None)

            if g is None or node.vjp is None or not node.requires_grad:
                continue

            for parent, parent_grad in zip(node.parents, node.vjp(g)):
                if parent_grad is None or not parent.requires_grad:
                    continue

                if parent.index in grads:
                    grads[parent.index] = grads[parent.index] + parent_grad
                else:
                    grads[parent.index] = parent_grad

        return [np.asarray(grads.get(node.index, np.zeros_like(node.value)), dtype=np.float64).reshape(node.shape)
                for node in wrt]

    def _leaf(self, op: str, value, requires_grad: bool) -> Node:
        arr = np.array(value, dtype=np.float64)
        node = Node(self, len(self._nodes), op, arr, requires_grad=requires_grad)
        self._nodes.append(node)
        return node


def backward(loss: Node, wrt: Sequence[Node]) -> List[np.ndarray]:
    """Computes the gradient of a scalar loss with respect to the provided nodes on the loss's tape.

    :param loss: A scalar node.
    :param wrt: The nodes to differentiate with respect to.
    :return: One gradient per node in `wrt`.
    """
    return loss.tape.backward(loss, wrt)

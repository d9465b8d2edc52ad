from taskaug.diff import ops
from taskaug.diff.gradcheck import numeric_gradient, directional_derivative, relative_error, check_node_gradients
from taskaug.diff.ops import forward_op, registered_ops
from taskaug.diff.rng import RngStream
from taskaug.diff.tape import Node, Tape, backward

__all__ = [
    'ops',
    'Node',
    'Tape',
    'backward',
    'forward_op',
    'registered_ops',
    'RngStream',
    'numeric_gradient',
    'directional_derivative',
    'relative_error',
    'check_node_gradients',
]

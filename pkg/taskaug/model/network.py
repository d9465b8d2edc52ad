"""The residual 1D convolutional classifier f(x; θ).

Each block applies two convolutions (the first strided) with a ReLU between them and adds a skip connection, which is
the identity or a strided 1×1 projection when the width or the temporal resolution changes. The last block is followed
by global temporal average pooling and a linear layer producing one logit per example. There are no normalization
layers, so the forward pass is a deterministic function of (θ, x).
"""
import math
from typing import Dict, List, Tuple

import numpy as np

from taskaug.diff import Node, RngStream, Tape, backward, ops
from taskaug.error import ContractViolationError
from taskaug.model.config import ModelConfig
from taskaug.model.params import ParameterLayout


def _needs_projection(cfg: ModelConfig, in_channels: int, width: int) -> bool:
    return in_channels != width or cfg.stride != 1


def parameter_layout(cfg: ModelConfig) -> ParameterLayout:
    """Returns the layout of θ for a configuration.
    """
    entries: List[Tuple[str, Tuple[int, ...]]] = []
    in_channels = cfg.leads
    for i, width in enumerate(cfg.widths):
        entries += [
            (f'block{i}.conv1.weight', (width, in_channels, cfg.kernel)),
            (f'block{i}.conv1.bias', (width,)),
            (f'block{i}.conv2.weight', (width, width, cfg.kernel)),
            (f'block{i}.conv2.bias', (width,)),
        ]
        if _needs_projection(cfg, in_channels, width):
            entries += [
                (f'block{i}.skip.weight', (width, in_channels, 1)),
                (f'block{i}.skip.bias', (width,)),
            ]
        in_channels = width

    entries += [('fc.weight', (in_channels, 1)), ('fc.bias', (1,))]
    return ParameterLayout(entries)


class Classifier:
    """The classifier for one :class:`ModelConfig <taskaug.model.config.ModelConfig>`.

    :param cfg: The model configuration.
    """

    def __init__(self, cfg: ModelConfig):
        minimal = cfg.minimal_length()
        if cfg.length < minimal:
            raise ContractViolationError(
                f'build_model: input length {cfg.length} is too short for {len(cfg.widths)} blocks of kernel '
                f'{cfg.kernel} and stride {cfg.stride}; the minimal length is {minimal}'
            )

        self.cfg = cfg
        self.layout = parameter_layout(cfg)

    def __repr__(self):
        return f'{self.__class__.__name__}(cfg={self.cfg!r})'

    def init_params(self, rng: RngStream) -> np.ndarray:
        """Draws θ: Kaiming-uniform weights with bound sqrt(6 / fan_in) and zero biases.
        """
        gen = rng.generator()
        arrays = {}
        for name, shape in self.layout.entries:
            if name.endswith('.bias'):
                arrays[name] = np.zeros(shape)
                continue

            fan_in = int(np.prod(shape[1:])) if len(shape) == 3 else shape[0]
            bound = math.sqrt(6.0 / fan_in)
            arrays[name] = gen.uniform(-bound, bound, size=shape)

        return self.layout.flatten(arrays)

    def attach(self, tape: Tape, theta: np.ndarray, learnable: bool = True) -> Dict[str, Node]:
        """Records θ on a tape as one node per named parameter.
        """
        leaf = tape.parameter if learnable else tape.constant
        return {name: leaf(value) for name, value in self.layout.unflatten(theta).items()}

    def forward(self, params: Dict[str, Node], x: Node) -> Node:
        """Computes the logits of a [B, C, T] batch.

        :param params: The parameter nodes returned by :meth:`attach`.
        :param x: The batch node.
        :return: A [B] node of logits.
        """
        if x.value.ndim != 3 or x.shape[1:] != (self.cfg.leads, self.cfg.length):
            raise ContractViolationError(
                f'forward: expected a [B, {self.cfg.leads}, {self.cfg.length}] batch, got {x.shape}'
            )

        h = x
        for i in range(len(self.cfg.widths)):
            prefix = f'block{i}'
            out = ops.relu(ops.conv1d(
                h, params[f'{prefix}.conv1.weight'], params[f'{prefix}.conv1.bias'], stride=self.cfg.stride,
            ))
            out = ops.conv1d(out, params[f'{prefix}.conv2.weight'], params[f'{prefix}.conv2.bias'])
            skip = h
            if f'{prefix}.skip.weight' in params:
                skip = ops.conv1d(
                    h, params[f'{prefix}.skip.weight'], params[f'{prefix}.skip.bias'], stride=self.cfg.stride,
                    padding=0,
                )
            h = ops.relu(ops.add(out, skip))

        batch, width, length = h.shape
        pooled = ops.reshape(ops.avgpool1d(h, length), (batch, width))
        logits = ops.add(ops.matmul(pooled, params['fc.weight']), params['fc.bias'])
        return ops.reshape(logits, (batch,))

    def loss(self, params: Dict[str, Node], x: Node, y: np.ndarray) -> Node:
        """Returns the mean binary cross-entropy of the sigmoid of the logits.
        """
        return ops.bce_loss(ops.sigmoid(self.forward(params, x)), np.asarray(y, dtype=np.float64))

    def loss_and_grad(self, theta: np.ndarray, x: np.ndarray, y: np.ndarray) -> Tuple[float, np.ndarray]:
        """Evaluates the un-augmented loss and its gradient with respect to θ.
        """
        tape = Tape()
        params = self.attach(tape, theta)
        loss = self.loss(params, tape.constant(x), y)
        grads = backward(loss, list(params.values()))
        return loss.item(), self.layout.flatten(dict(zip(params, grads)))

    def predict(self, theta: np.ndarray, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
        """Returns the predicted probabilities of a [N, C, T] array, evaluated in batches.
        """
        out = []
        for start in range(0, len(x), batch_size):
            tape = Tape()
            params = self.attach(tape, theta, learnable=False)
            out.append(ops.sigmoid(self.forward(params, tape.constant(x[start:start + batch_size]))).value)
        return np.concatenate(out) if out else np.zeros(0)


def build_model(cfg: ModelConfig, rng: RngStream) -> Tuple[Classifier, np.ndarray]:
    """Builds the classifier for `cfg` and draws its initial parameters.

    :param cfg: The :class:`ModelConfig <taskaug.model.config.ModelConfig>`.
    :param rng: The :class:`RngStream <taskaug.diff.rng.RngStream>` to draw the weights from.
    :return: A tuple of the :class:`Classifier <Classifier>` and the flat parameter vector θ.
    """
    model = Classifier(cfg)
    return model, model.init_params(rng)

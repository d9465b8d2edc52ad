"""First-order optimizers over flat parameter vectors.

Both keep their moment estimates between calls, so one instance must be used per parameter vector for a whole run.
"""
from typing import Optional

import numpy as np


class Optimizer:
    """Updates a parameter vector from its gradient.
    """

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """Returns the updated parameters. The inputs are not modified.

        :param params: The current parameters.
        :param grad: The gradient of the objective at `params`.
        :return: The new parameters.
        """
        raise NotImplementedError('Optimizer is an abstract class. Subclasses must implement step().')


class Adam(Optimizer):
    """Adam with bias-corrected moments.

    :param lr: (optional) The learning rate. Defaults to 1e-3.
    :param beta1: (optional) The first-moment decay. Defaults to 0.9.
    :param beta2: (optional) The second-moment decay. Defaults to 0.999.
    :param eps: (optional) The denominator offset. Defaults to 1e-8.
    """

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: Optional[np.ndarray] = None
        self.v: Optional[np.ndarray] = None

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'lr={self.lr}, beta1={self.beta1}, beta2={self.beta2}, eps={self.eps}, t={self.t})'

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)

        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class RMSprop(Optimizer):
    """RMSprop without momentum.

    :param lr: (optional) The learning rate. Defaults to 1e-2.
    :param alpha: (optional) The decay of the squared-gradient average. Defaults to 0.99.
    :param eps: (optional) The denominator offset. Defaults to 1e-8.
    """

    def __init__(self, lr: float = 1e-2, alpha: float = 0.99, eps: float = 1e-8):
        self.lr = lr
        self.alpha = alpha
        self.eps = eps
        self.square_avg: Optional[np.ndarray] = None

    def __repr__(self):
        return f'{self.__class__.__name__}(lr={self.lr}, alpha={self.alpha}, eps={self.eps})'

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.square_avg is None:
            self.square_avg = np.zeros_like(params)

        self.square_avg = self.alpha * self.square_avg + (1 - self.alpha) * grad * grad
        return params - self.lr * grad / (np.sqrt(self.square_avg) + self.eps)

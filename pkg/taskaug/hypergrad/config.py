from typing import Optional

import numpy as np

from taskaug.baselines.strategy import DEFAULT_MASK_FRACTION, AugStrategy
from taskaug.data.normalize import NormalizeMode


class HyperConfig:
    """The :class:`HyperConfig <HyperConfig>` object, which configures the bilevel optimization of the policy.

    :param inner_steps: (optional) The number P of inner θ steps between outer φ steps. Defaults to 1.
    :param neumann_terms: (optional) The number J of Neumann terms of the inverse-Hessian approximation. Defaults to 1.
    :param inner_lr: (optional) The Adam learning rate η_θ. Defaults to 1e-3.
    :param outer_lr: (optional) The RMSprop learning rate η_φ. Defaults to 1e-2.
    :param alpha: (optional) The Neumann scaling α. Defaults to `inner_lr`.
    :param fd_epsilon: (optional) The finite-difference perturbation. Defaults to 1e-3 · (1 + ‖θ‖∞) at each step.
    :param freeze_policy: (optional) Whether to skip outer steps and keep φ at its initial value. Defaults to False.
    :param central_differences: (optional) Whether the outer steps of the training loop take central differences at the
        updated θ. By default they linearize at the θ of the last inner step and take one-sided differences anchored at
        that step's training gradients. Defaults to False.
    """

    def __init__(
        self, inner_steps: int = 1, neumann_terms: int = 1, inner_lr: float = 1e-3, outer_lr: float = 1e-2,
        alpha: Optional[float] = None, fd_epsilon: Optional[float] = None, freeze_policy: bool = False,
        central_differences: bool = False,
    ):
        if inner_steps < 1:
            raise ValueError(f'inner steps must be at least 1, got {inner_steps}')
        if neumann_terms < 0:
            raise ValueError(f'neumann terms must be non-negative, got {neumann_terms}')
        if inner_lr < 0 or outer_lr < 0:
            raise ValueError(f'learning rates must be non-negative, got {inner_lr} and {outer_lr}')
        if fd_epsilon is not None and not fd_epsilon > 0:
            raise ValueError(f'fd_epsilon must be positive, got {fd_epsilon}')

        self.inner_steps = inner_steps
        self.neumann_terms = neumann_terms
        self.inner_lr = inner_lr
        self.outer_lr = outer_lr
        self.alpha = alpha
        self.fd_epsilon = fd_epsilon
        self.freeze_policy = freeze_policy
        self.central_differences = central_differences

    def __eq__(self, other):
        if not isinstance(other, HyperConfig):
            return False

        return self.to_json() == other.to_json()

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'inner_steps={self.inner_steps}, neumann_terms={self.neumann_terms}, inner_lr={self.inner_lr}, ' \
               f'outer_lr={self.outer_lr}, alpha={self.alpha}, fd_epsilon={self.fd_epsilon}, ' \
               f'freeze_policy={self.freeze_policy}, central_differences={self.central_differences})'

    @property
    def neumann_alpha(self) -> float:
        return self.inner_lr if self.alpha is None else self.alpha

    def epsilon_for(self, theta: np.ndarray) -> float:
        """Returns the finite-difference perturbation to use at `theta`.
        """
        if self.fd_epsilon is not None:
            return self.fd_epsilon
        return 1e-3 * (1.0 + float(np.max(np.abs(theta), initial=0.0)))

    def to_json(self) -> dict:
        return {
            'inner_steps': self.inner_steps,
            'neumann_terms': self.neumann_terms,
            'inner_lr': self.inner_lr,
            'outer_lr': self.outer_lr,
            'alpha': self.alpha,
            'fd_epsilon': self.fd_epsilon,
            'freeze_policy': self.freeze_policy,
            'central_differences': self.central_differences,
        }

    @classmethod
    def from_json(cls, data: dict) -> 'HyperConfig':
        return cls(**{k: data[k] for k in cls().to_json() if k in data})


class TrainConfig:
    """The :class:`TrainConfig <TrainConfig>` object, which configures a training run.

    :param strategy: (optional) The :class:`AugStrategy <taskaug.baselines.strategy.AugStrategy>`. Defaults to TaskAug.
    :param epochs: (optional) The epoch budget. Defaults to 30.
    :param patience: (optional) The early-stopping patience, in epochs. Defaults to 10.
    :param batch_size: (optional) The training and validation batch size. Defaults to 32.
    :param mask_frac: (optional) The mask fraction w of the time-mask and SpecAugment baselines. Defaults to 0.1.
    :param smote_neighbors: (optional) The number of SMOTE neighbours. Defaults to 5.
    :param normalize: (optional) The :class:`NormalizeMode <taskaug.data.normalize.NormalizeMode>`. Defaults to none.
    """

    def __init__(
        self, strategy: AugStrategy = AugStrategy.TASKAUG, epochs: int = 30, patience: int = 10, batch_size: int = 32,
        mask_frac: float = DEFAULT_MASK_FRACTION, smote_neighbors: int = 5,
        normalize: NormalizeMode = NormalizeMode.NONE,
    ):
        if epochs < 1:
            raise ValueError(f'epochs must be at least 1, got {epochs}')
        if patience < 1:
            raise ValueError(f'patience must be at least 1, got {patience}')
        if batch_size < 1:
            raise ValueError(f'batch size must be at least 1, got {batch_size}')
        if not 0 <= mask_frac <= 1:
            raise ValueError(f'mask fraction must be in [0, 1], got {mask_frac}')
        if smote_neighbors < 1:
            raise ValueError(f'smote neighbours must be at least 1, got {smote_neighbors}')

        self.strategy = AugStrategy(strategy)
        self.epochs = epochs
        self.patience = patience
        self.batch_size = batch_size
        self.mask_frac = mask_frac
        self.smote_neighbors = smote_neighbors
        self.normalize = NormalizeMode(normalize)

    def __eq__(self, other):
        if not isinstance(other, TrainConfig):
            return False

        return self.to_json() == other.to_json()

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'strategy={self.strategy}, epochs={self.epochs}, patience={self.patience}, ' \
               f'batch_size={self.batch_size}, mask_frac={self.mask_frac}, smote_neighbors={self.smote_neighbors}, ' \
               f'normalize={self.normalize})'

    def to_json(self) -> dict:
        return {
            'strategy': self.strategy.value,
            'epochs': self.epochs,
            'patience': self.patience,
            'batch_size': self.batch_size,
            'mask_frac': self.mask_frac,
            'smote_neighbors': self.smote_neighbors,
            'normalize': self.normalize.value,
        }

    @classmethod
    def from_json(cls, data: dict) -> 'TrainConfig':
        return cls(**{k: data[k] for k in cls().to_json() if k in data})

"""Hypergradients of the validation loss with respect to the policy, by implicit differentiation.

At an inner optimum θ̂(φ), ``dL_V/dφ = −(∂L_V/∂θ) · H⁻¹ · ∂²L_T/∂θ∂φ`` with H the Hessian of L_T in θ. The inverse
Hessian is replaced by a truncated Neumann series and both second-order terms are obtained by finite differences of
first-order gradients: central differences by default, or one-sided differences anchored at the training gradients at
(θ, φ) when the caller already holds them.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from taskaug.error import ContractViolationError, NonFiniteHypergradientError
from taskaug.hypergrad.config import HyperConfig
from taskaug.hypergrad.objective import Objective
from taskaug.hypergrad.optim import Optimizer

logger = logging.getLogger(__name__)


class TrainGradients:
    """∂L_T/∂θ and ∂L_T/∂φ at the point an outer step linearizes around.

    :param grad_theta: The gradient with respect to θ.
    :param grad_phi: The gradient with respect to φ.
    """

    def __init__(self, grad_theta: np.ndarray, grad_phi: np.ndarray):
        self.grad_theta = grad_theta
        self.grad_phi = grad_phi

    def __repr__(self):
        return f'{self.__class__.__name__}(theta_size={self.grad_theta.size}, phi_size={self.grad_phi.size})'


def hessian_vector_product(
    w: np.ndarray, theta: np.ndarray, objective: Objective, phi: np.ndarray, fd_epsilon: float,
    base_grad: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Approximates H·w by central differences of ∂L_T/∂θ at θ ± ε·w/‖w‖.

    With `base_grad`, ∂L_T/∂θ at θ, the forward difference against θ + ε·w/‖w‖ is used instead.
    """
    norm = float(np.linalg.norm(w))
    if norm == 0:
        return np.zeros_like(theta)

    step = fd_epsilon * w / norm
    plus = objective.train_grad_theta(theta + step, phi)
    if base_grad is not None:
        return (plus - base_grad) / fd_epsilon * norm

    minus = objective.train_grad_theta(theta - step, phi)
    return (plus - minus) / (2 * fd_epsilon) * norm


def neumann_inverse_hvp(
    v: np.ndarray, theta: np.ndarray, objective: Objective, phi: np.ndarray, terms: int, alpha: float,
    fd_epsilon: float = 1e-3, base_grad: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Approximates H⁻¹v by ``α · Σ_{j=0..J} (I − αH)^j v``.

    :param v: The vector to multiply.
    :param theta: The model parameters θ.
    :param objective: The :class:`Objective <taskaug.hypergrad.objective.Objective>` defining L_T.
    :param phi: The policy vector φ.
    :param terms: The number J of Neumann terms beyond the first. With J = 0 the result is exactly α·v.
    :param alpha: The scaling α.
    :param fd_epsilon: (optional) The finite-difference perturbation of the Hessian-vector products. Defaults to 1e-3.
    :param base_grad: (optional) ∂L_T/∂θ at θ. When given, the Hessian-vector products take one-sided differences.
    :return: The approximation of H⁻¹v.
    """
    if terms < 0:
        raise ContractViolationError(f'neumann_inverse_hvp: number of terms must be non-negative, got {terms}')

    p = np.array(v, dtype=np.float64)
    acc = p.copy()
    for _ in range(terms):
        p = p - alpha * hessian_vector_product(p, theta, objective, phi, fd_epsilon, base_grad)
        acc = acc + p
    return alpha * acc


def mixed_partial_vjp(
    p: np.ndarray, theta: np.ndarray, phi: np.ndarray, objective: Objective, fd_epsilon: float,
    base_grad: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Approximates ``pᵀ · ∂²L_T/∂θ∂φ`` as a vector over φ, by central differences of ∂L_T/∂φ along p.

    :param p: The vector over θ.
    :param theta: The model parameters θ.
    :param phi: The policy vector φ.
    :param objective: The :class:`Objective <taskaug.hypergrad.objective.Objective>` defining L_T. Every evaluation
        sees the same augmentation draws.
    :param fd_epsilon: The perturbation; θ moves by fd_epsilon / ‖p‖ times p.
    :param base_grad: (optional) ∂L_T/∂φ at θ. When given, a one-sided difference against θ + ε̂·p is used.
    :return: The vector over φ; zero when p is zero.
    """
    norm = float(np.linalg.norm(p))
    if norm == 0:
        return np.zeros_like(phi, dtype=np.float64)

    eps = fd_epsilon / norm
    plus = objective.train_grad_phi(theta + eps * p, phi)
    if base_grad is not None:
        return (plus - base_grad) / eps

    minus = objective.train_grad_phi(theta - eps * p, phi)
    return (plus - minus) / (2 * eps)


def hypergradient(
    theta: np.ndarray, phi: np.ndarray, objective: Objective, cfg: HyperConfig, base: Optional[TrainGradients] = None,
) -> Tuple[float, np.ndarray]:
    """Computes dL_V/dφ at (θ, φ).

    :param base: (optional) The training gradients at (θ, φ). When given, every finite difference is one-sided and
        anchored at them, which saves one gradient evaluation per difference.
    :return: A tuple of the validation loss and the hypergradient.
    """
    val_loss, v = objective.val_loss_and_grad(theta)
    eps = cfg.epsilon_for(theta)
    grad_theta = None if base is None else base.grad_theta
    grad_phi = None if base is None else base.grad_phi
    q = neumann_inverse_hvp(v, theta, objective, phi, cfg.neumann_terms, cfg.neumann_alpha, eps, grad_theta)
    return val_loss, -mixed_partial_vjp(q, theta, phi, objective, eps, grad_phi)


def hyper_step(
    theta: np.ndarray, phi: np.ndarray, objective: Objective, cfg: HyperConfig, optimizer: Optimizer,
    base: Optional[TrainGradients] = None,
) -> Tuple[np.ndarray, float, np.ndarray]:
    """Takes one outer step on φ. θ is left untouched.

    :param theta: The model parameters θ.
    :param phi: The policy vector φ.
    :param objective: The :class:`Objective <taskaug.hypergrad.objective.Objective>` of the step.
    :param cfg: The :class:`HyperConfig <taskaug.hypergrad.config.HyperConfig>`.
    :param optimizer: The outer optimizer (RMSprop).
    :param base: (optional) The training gradients at (θ, φ), see :func:`hypergradient`.
    :return: A tuple of the new φ, the validation loss and the hypergradient. With a frozen policy φ is returned
        unchanged with a NaN loss and a zero hypergradient.
    :raises: :class:`NonFiniteHypergradientError <taskaug.error.NonFiniteHypergradientError>` if the hypergradient
        is not finite; φ and the optimizer state are then left untouched.
    """
    if cfg.freeze_policy:
        return phi, float('nan'), np.zeros_like(phi)

    val_loss, grad = hypergradient(theta, phi, objective, cfg, base)
    if not np.all(np.isfinite(grad)):
        raise NonFiniteHypergradientError(val_loss)

    logger.debug(f'hyper_step: val_loss={val_loss:.6f} |g|={np.linalg.norm(grad):.3e}')
    return optimizer.step(phi, grad), val_loss, grad

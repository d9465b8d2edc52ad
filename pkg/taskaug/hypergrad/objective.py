from typing import Optional, Tuple

import numpy as np

from taskaug.aug.policy import AttachedPolicy, PolicyParams, apply_policy_batch
from taskaug.diff import Node, RngStream, Tape, backward, ops
from taskaug.error import ContractViolationError
from taskaug.model.network import Classifier


def _point(theta: np.ndarray, phi: Optional[np.ndarray]) -> Tuple[bytes, bytes]:
    return np.asarray(theta, dtype=np.float64).tobytes(), np.asarray(phi, dtype=np.float64).tobytes()


class Objective:
    """The bilevel objective of one outer step: a training loss L_T(θ, φ) on a fixed batch with fixed augmentation draws,
    and a validation loss L_V(θ) on clean data.

    Repeated evaluations at different (θ, φ) reuse the same draws, so finite differences of the gradients are
    well-defined.
    """

    def train_loss_and_grads(self, theta: np.ndarray, phi: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        """Evaluates L_T and its gradients.

        :return: A tuple of (L_T, ∂L_T/∂θ, ∂L_T/∂φ).
        """
        raise NotImplementedError('Objective is an abstract class. Subclasses must implement train_loss_and_grads().')

    def val_loss_and_grad(self, theta: np.ndarray) -> Tuple[float, np.ndarray]:
        """Evaluates L_V and its gradient with respect to θ.
        """
        raise NotImplementedError('Objective is an abstract class. Subclasses must implement val_loss_and_grad().')

    def train_loss_and_grad_theta(self, theta: np.ndarray, phi: np.ndarray) -> Tuple[float, np.ndarray]:
        """Evaluates L_T and ∂L_T/∂θ only.
        """
        loss, grad_theta, _ = self.train_loss_and_grads(theta, phi)
        return loss, grad_theta

    def train_grad_theta(self, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
        return self.train_loss_and_grad_theta(theta, phi)[1]

    def train_grad_phi(self, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
        return self.train_loss_and_grads(theta, phi)[2]


class QuadraticObjective(Objective):
    """L_T = ½ (θ − Bφ)ᵀ A (θ − Bφ) and L_V = ½ ‖θ‖². The inner minimum is θ̂ = Bφ and dL_V/dφ = BᵀBφ there.

    :param hessian: The symmetric positive-definite [n, n] matrix A.
    :param coupling: (optional) The [n, m] matrix B. Defaults to the identity.
    """

    def __init__(self, hessian: np.ndarray, coupling: Optional[np.ndarray] = None):
        self.hessian = np.atleast_2d(np.asarray(hessian, dtype=np.float64))
        n = self.hessian.shape[0]
        self.coupling = np.eye(n) if coupling is None else np.atleast_2d(np.asarray(coupling, dtype=np.float64))

    def train_loss_and_grads(self, theta: np.ndarray, phi: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        r = theta - self.coupling @ phi
        ar = self.hessian @ r
        return 0.5 * float(r @ ar), ar, -self.coupling.T @ ar

    def val_loss_and_grad(self, theta: np.ndarray) -> Tuple[float, np.ndarray]:
        return 0.5 * float(theta @ theta), theta.copy()

    def inner_minimum(self, phi: np.ndarray) -> np.ndarray:
        return self.coupling @ phi


class AugmentedBatchObjective(Objective):
    """The classifier's binary cross-entropy on a training batch augmented by the policy, and on a clean validation
    batch.

    Example e of the training batch draws its augmentation randomness from ``rng.split(e)``, so every evaluation sees
    the same draws. The augmentation does not depend on θ: the augmented batch is recorded once per φ, and each
    evaluation runs the classifier on its values. ∂L_T/∂φ is the gradient with respect to the augmented batch pulled
    back through that recording.

    :param model: The :class:`Classifier <taskaug.model.network.Classifier>`.
    :param policy: The policy whose learnable vector φ is passed to the loss functions, or None for no augmentation.
    :param x: The [B, C, T] training batch.
    :param y: The [B] training labels.
    :param rng: The :class:`RngStream <taskaug.diff.rng.RngStream>` of the batch.
    :param val_x: (optional) The [B', C, T] validation batch.
    :param val_y: (optional) The [B'] validation labels.
    :param fs: (optional) The sampling rate in Hz.
    """

    def __init__(
        self, model: Classifier, policy: Optional[PolicyParams], x: np.ndarray, y: np.ndarray, rng: RngStream,
        val_x: Optional[np.ndarray] = None, val_y: Optional[np.ndarray] = None, fs: Optional[float] = None,
    ):
        if len(x) == 0:
            raise ContractViolationError('objective: the training batch is empty')

        self.model = model
        self.policy = policy
        self.x = x
        self.y = np.asarray(y, dtype=np.int64)
        self.rng = rng
        self.val_x = val_x
        self.val_y = val_y
        self.fs = fs
        self._augmented: Optional[Tuple[bytes, Node, Optional[AttachedPolicy]]] = None
        self._last: Optional[Tuple[Tuple[bytes, bytes], Tuple[float, np.ndarray, np.ndarray]]] = None

    def with_validation(self, val_x: np.ndarray, val_y: np.ndarray) -> 'AugmentedBatchObjective':
        """Sets the validation batch. The recorded augmentation is kept.
        """
        self.val_x = val_x
        self.val_y = val_y
        return self

    def augment(self, phi: Optional[np.ndarray]) -> Node:
        """Returns the augmented training batch for φ, recording it with φ as parameters unless it already is.
        """
        key = b'' if self.policy is None else np.asarray(phi, dtype=np.float64).tobytes()
        if self._augmented is not None and self._augmented[0] == key:
            return self._augmented[1]

        tape = Tape()
        if self.policy is None:
            batch, attached = tape.constant(self.x), None
        else:
            attached = self.policy.with_vector(phi).attach(tape)
            rngs = [self.rng.split(e) for e in range(len(self.x))]
            batch = apply_policy_batch(tape.constant(self.x), self.y, attached, rngs, self.fs)

        self._augmented = key, batch, attached
        return batch

    def _model_pass(
        self, theta: np.ndarray, batch: np.ndarray, wrt_theta: bool, wrt_input: bool,
    ) -> Tuple[float, Optional[np.ndarray], Optional[np.ndarray]]:
        tape = Tape()
        params = self.model.attach(tape, theta, learnable=wrt_theta)
        x = tape.parameter(batch) if wrt_input else tape.constant(batch)
        loss = self.model.loss(params, x, self.y)

        wrt = list(params.values()) if wrt_theta else []
        grads = backward(loss, wrt + ([x] if wrt_input else []))
        grad_theta = self.model.layout.flatten(dict(zip(params, grads))) if wrt_theta else None
        return loss.item(), grad_theta, grads[-1] if wrt_input else None

    def _pull_back(self, grad_batch: np.ndarray) -> np.ndarray:
        _, batch, attached = self._augmented
        if attached is None:
            return np.zeros(0)

        seed = ops.sum(ops.mul(batch, batch.tape.constant(grad_batch)))
        return attached.flatten_gradients(backward(seed, attached.nodes()))

    def loss_and_grads(
        self, theta: np.ndarray, phi: Optional[np.ndarray], with_phi: bool = True,
    ) -> Tuple[float, np.ndarray, np.ndarray]:
        """Evaluates the augmented training loss, skipping ∂L_T/∂φ when `with_phi` is False.
        """
        batch = self.augment(phi).value
        if not with_phi or self.policy is None:
            loss, grad_theta, _ = self._model_pass(theta, batch, wrt_theta=True, wrt_input=False)
            return loss, grad_theta, np.zeros(0 if self.policy is None else self.policy.vector_size)

        loss, grad_theta, grad_batch = self._model_pass(theta, batch, wrt_theta=True, wrt_input=True)
        return loss, grad_theta, self._pull_back(grad_batch)

    def train_loss_and_grads(self, theta: np.ndarray, phi: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        result = self.loss_and_grads(theta, phi)
        self._last = _point(theta, phi), result
        return result

    def train_loss_and_grad_theta(self, theta: np.ndarray, phi: np.ndarray) -> Tuple[float, np.ndarray]:
        # the inner step of an outer step reuses the full evaluation at the same point
        if self._last is not None and self._last[0] == _point(theta, phi):
            return self._last[1][:2]

        loss, grad_theta, _ = self.loss_and_grads(theta, phi, with_phi=False)
        return loss, grad_theta

    def train_grad_phi(self, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
        if self.policy is None:
            return np.zeros(0)

        _, _, grad_batch = self._model_pass(theta, self.augment(phi).value, wrt_theta=False, wrt_input=True)
        return self._pull_back(grad_batch)

    def val_loss_and_grad(self, theta: np.ndarray) -> Tuple[float, np.ndarray]:
        if self.val_x is None or len(self.val_x) == 0:
            raise ContractViolationError('objective: the validation batch is empty')

        return self.model.loss_and_grad(theta, self.val_x, self.val_y)

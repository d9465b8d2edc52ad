import numpy as np
import pytest

from taskaug.aug import init_policy
from taskaug.diff import Tape, backward, ops
from taskaug.error import ContractViolationError, NonFiniteHypergradientError
from taskaug.hypergrad import HyperConfig, Objective, QuadraticObjective, RMSprop, TrainGradients, \
    hessian_vector_product, hyper_step, hypergradient, mixed_partial_vjp, neumann_inverse_hvp


class BilinearObjective(Objective):
    """L_T = θ·φ and L_V = ½‖θ‖²."""

    def train_loss_and_grads(self, theta, phi):
        return float(theta @ phi), phi.copy(), theta.copy()

    def val_loss_and_grad(self, theta):
        return 0.5 * float(theta @ theta), theta.copy()


class CubicObjective(Objective):
    """L_T = θ³φ / 6 for scalar θ and φ."""

    def train_loss_and_grads(self, theta, phi):
        return float(theta[0] ** 3 * phi[0] / 6), theta ** 2 * phi / 2, theta ** 3 / 6

    def val_loss_and_grad(self, theta):
        return 0.5 * float(theta @ theta), theta.copy()


class StrengthObjective(Objective):
    """L_T = ½(θ − μ)², with μ the class-0 noise strength of the first stage of a policy."""

    def __init__(self, policy):
        self.policy = policy

    def train_loss_and_grads(self, theta, phi):
        tape = Tape()
        t = tape.parameter(theta)
        attached = self.policy.with_vector(phi).attach(tape)
        mu = ops.take(attached.stages[0].mu0, self.policy.operators.index('noise'))
        diff = ops.sub(ops.take(t, 0), mu)
        loss = ops.scale(ops.mul(diff, diff), 0.5)
        grads = backward(loss, [t] + attached.nodes())
        return loss.item(), grads[0], attached.flatten_gradients(grads[1:])

    def val_loss_and_grad(self, theta):
        return 0.5 * float(theta @ theta), theta.copy()


class NanValidationObjective(QuadraticObjective):
    def val_loss_and_grad(self, theta):
        return float('nan'), np.full_like(theta, np.nan)


def _base(objective, theta, phi):
    _, grad_theta, grad_phi = objective.train_loss_and_grads(theta, phi)
    return TrainGradients(grad_theta, grad_phi)


class TestHessianVectorProduct:
    def test_quadratic(self):
        a = np.array([[1.0, 0.3], [0.3, 2.0]])
        objective = QuadraticObjective(a)
        w = np.array([0.4, -1.3])

        hvp = hessian_vector_product(w, np.array([0.2, 0.1]), objective, np.zeros(2), 1e-3)
        assert np.max(np.abs(hvp - a @ w)) < 1e-5

    def test_one_sided_quadratic(self):
        a = np.array([[1.0, 0.3], [0.3, 2.0]])
        objective = QuadraticObjective(a)
        theta, phi, w = np.array([0.2, 0.1]), np.array([0.5, -0.5]), np.array([0.4, -1.3])
        base = objective.train_grad_theta(theta, phi)

        hvp = hessian_vector_product(w, theta, objective, phi, 1e-3, base_grad=base)
        assert np.max(np.abs(hvp - a @ w)) < 1e-8

    def test_zero(self):
        objective = QuadraticObjective(np.eye(2))

        assert hessian_vector_product(np.zeros(2), np.ones(2), objective, np.zeros(2), 1e-3).tolist() == [0, 0]


class TestNeumann:
    def test_zero_terms(self):
        objective = QuadraticObjective(np.diag([1.0, 2.0]))
        v = np.array([0.3, -0.7])

        out = neumann_inverse_hvp(v, np.array([0.5, 0.5]), objective, np.zeros(2), 0, 0.5)
        assert np.array_equal(out, 0.5 * v)

    def test_converges_to_inverse(self):
        a = np.diag([1.0, 2.0])
        v = np.array([0.3, -0.7])

        out = neumann_inverse_hvp(v, np.array([0.5, 0.5]), QuadraticObjective(a), np.zeros(2), 50, 0.5)
        assert np.max(np.abs(out - np.linalg.solve(a, v))) < 1e-6

    def test_identity_hessian(self):
        # H = I / α gives α·v for any number of terms
        alpha = 0.25
        objective = QuadraticObjective(np.eye(3) / alpha)
        v = np.array([1.0, 2.0, -3.0])

        for terms in (1, 3, 7):
            out = neumann_inverse_hvp(v, np.zeros(3), objective, np.zeros(3), terms, alpha)
            assert np.max(np.abs(out - alpha * v)) < 1e-9

    def test_negative_terms(self):
        with pytest.raises(ContractViolationError):
            neumann_inverse_hvp(np.ones(1), np.ones(1), QuadraticObjective(1.0), np.ones(1), -1, 0.5)


class TestMixedPartial:
    def test_bilinear(self):
        p = np.array([2.0, -0.5])

        out = mixed_partial_vjp(p, np.array([0.3, 1.1]), np.array([-1.2, 0.4]), BilinearObjective(), 1e-3)
        assert np.max(np.abs(out - p)) < 1e-9

    def test_quadratic(self):
        p = np.array([0.7])

        out = mixed_partial_vjp(p, np.array([1.5]), np.array([0.2]), QuadraticObjective(1.0), 1e-3)
        assert out == pytest.approx(-p, abs=1e-9)

    def test_zero(self):
        out = mixed_partial_vjp(np.zeros(1), np.array([1.0]), np.array([2.0, 3.0]), BilinearObjective(), 1e-3)

        assert out.tolist() == [0.0, 0.0]

    def test_policy_strength(self):
        policy = init_policy(stages=1)
        phi = policy.to_vector()
        p = np.array([0.6])

        out = mixed_partial_vjp(p, np.array([0.9]), phi, StrengthObjective(policy), 1e-3)
        expected = np.zeros(policy.vector_size)
        # φ holds the six logits, then the class-0 strengths of the learnable operators, noise first
        expected[6] = -0.6
        assert np.max(np.abs(out - expected)) < 1e-5

    def test_richardson(self):
        # central differences on L_T = θ³φ/6 are off by exactly ε̂²p³/6
        theta, phi, p = np.array([0.5]), np.array([1.0]), np.array([1.0])
        exact = theta ** 2 / 2 * p

        small = mixed_partial_vjp(p, theta, phi, CubicObjective(), 1e-2) - exact
        large = mixed_partial_vjp(p, theta, phi, CubicObjective(), 2e-2) - exact
        assert small[0] == pytest.approx(1e-4 / 6, rel=1e-3)
        assert large[0] / small[0] == pytest.approx(4.0, rel=1e-3)

    def test_one_sided_cubic(self):
        # a forward difference on L_T = θ³φ/6 is off by θε̂p²/2 + ε̂²p³/6
        theta, phi, p, eps = np.array([0.5]), np.array([1.0]), np.array([1.0]), 1e-2
        objective = CubicObjective()
        base = objective.train_grad_phi(theta, phi)

        out = mixed_partial_vjp(p, theta, phi, objective, eps, base_grad=base)
        assert out[0] - theta[0] ** 2 / 2 == pytest.approx(theta[0] * eps / 2 + eps ** 2 / 6, rel=1e-6)

    def test_one_sided_bilinear(self):
        theta, phi, p = np.array([0.3, 1.1]), np.array([-1.2, 0.4]), np.array([2.0, -0.5])
        objective = BilinearObjective()

        out = mixed_partial_vjp(p, theta, phi, objective, 1e-3, base_grad=objective.train_grad_phi(theta, phi))
        assert np.max(np.abs(out - p)) < 1e-9


class TestHypergradient:
    def test_bilevel_oracle(self):
        objective = QuadraticObjective(1.0)
        phi = np.array([0.7])
        theta = objective.inner_minimum(phi)

        _, grad = hypergradient(theta, phi, objective, HyperConfig(neumann_terms=60, alpha=0.5))
        assert grad == pytest.approx(phi, abs=1e-4)

    def test_coupled_oracle(self):
        a = np.array([[2.0, 0.5], [0.5, 1.0]])
        b = np.array([[1.0, 0.0, 0.5], [0.0, 2.0, -1.0]])
        objective = QuadraticObjective(a, b)
        phi = np.array([0.3, -0.2, 0.4])
        theta = objective.inner_minimum(phi)

        _, grad = hypergradient(theta, phi, objective, HyperConfig(neumann_terms=200, alpha=0.3))
        assert np.max(np.abs(grad - b.T @ b @ phi)) < 1e-4

    def test_one_term(self):
        theta, phi = np.array([0.8]), np.array([-0.4])

        _, grad = hypergradient(theta, phi, BilinearObjective(), HyperConfig(neumann_terms=0, alpha=0.1))
        assert grad == pytest.approx(-0.1 * theta, abs=1e-9)

    def test_anchored_matches_central(self):
        a = np.array([[2.0, 0.5], [0.5, 1.0]])
        b = np.array([[1.0, 0.0, 0.5], [0.0, 2.0, -1.0]])
        objective = QuadraticObjective(a, b)
        phi = np.array([0.3, -0.2, 0.4])
        theta = objective.inner_minimum(phi) + np.array([0.05, -0.1])
        cfg = HyperConfig(neumann_terms=20, alpha=0.3)

        loss, central = hypergradient(theta, phi, objective, cfg)
        anchored_loss, anchored = hypergradient(theta, phi, objective, cfg, _base(objective, theta, phi))
        assert anchored_loss == loss
        assert np.max(np.abs(anchored - central)) < 1e-6


class TestHyperStep:
    def test_zero_lr(self):
        objective = QuadraticObjective(1.0)
        phi = np.array([0.7])

        out, _, grad = hyper_step(phi.copy(), phi, objective, HyperConfig(alpha=0.5), RMSprop(lr=0.0))
        assert np.array_equal(out, phi)
        assert grad[0] != 0

    def test_frozen(self):
        phi = np.array([0.7])

        out, loss, grad = hyper_step(phi, phi, QuadraticObjective(1.0), HyperConfig(freeze_policy=True), RMSprop())
        assert out is phi
        assert np.isnan(loss)
        assert grad.tolist() == [0.0]

    def test_theta_untouched(self):
        theta, phi = np.array([0.5]), np.array([0.7])
        before = theta.copy()

        hyper_step(theta, phi, QuadraticObjective(1.0), HyperConfig(alpha=0.5), RMSprop())
        assert np.array_equal(theta, before)

    def test_descends_to_outer_optimum(self):
        objective = QuadraticObjective(1.0)
        cfg = HyperConfig(neumann_terms=60, alpha=0.5)
        optimizer = RMSprop(lr=0.01)
        phi = np.array([1.0])

        for _ in range(500):
            phi, _, _ = hyper_step(objective.inner_minimum(phi), phi, objective, cfg, optimizer)
        assert abs(phi[0]) < 0.05

    def test_non_finite(self):
        optimizer = RMSprop(lr=0.1)
        phi = np.array([0.7])

        with pytest.raises(NonFiniteHypergradientError) as e:
            hyper_step(phi.copy(), phi, NanValidationObjective(1.0), HyperConfig(alpha=0.5), optimizer)
        assert np.isnan(e.value.val_loss)

        out, _, _ = hyper_step(phi.copy(), phi, QuadraticObjective(1.0), HyperConfig(alpha=0.5), optimizer)
        assert out[0] < phi[0]

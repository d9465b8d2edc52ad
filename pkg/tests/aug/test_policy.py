import math

import numpy as np
import pytest

from taskaug.aug import PolicyParams, StageParams, apply_policy, apply_policy_batch, compute_strength, init_policy, \
    sample_stage, sample_stage_batch
from taskaug.diff import RngStream, Tape, backward, numeric_gradient, ops, relative_error
from taskaug.error import ContractViolationError, MalformedTrajectoryError
from tests.utils import gen_smooth_signal


def _attached_stage(logits, tape=None):
    tape = tape or Tape()
    m = len(logits)
    policy = PolicyParams([StageParams(logits, np.zeros(m), np.zeros(m))], operators=['time_mask', 'noise'][:m])
    return policy.attach(tape).stages[0]


class TestSampleStage:
    def test_selection_frequency(self):
        logits = np.log([0.9, 0.1])
        rng = RngStream(0)
        n = 10000

        count = 0
        for _ in range(n):
            index, factor = sample_stage(_attached_stage(logits), 1.0, rng)
            assert factor.item() == 1.0
            count += index == 0

        assert abs(count / n - 0.9) <= 3 * math.sqrt(0.9 * 0.1 / n)

    def test_single_operator(self):
        stage = _attached_stage([0.3])
        index, factor = sample_stage(stage, 1.0, RngStream(1))

        assert index == 0
        assert factor.item() == 1.0
        assert backward(factor, [stage.logits])[0] == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize('temperature', [0.0, -1.0])
    def test_invalid_temperature(self, temperature):
        with pytest.raises(ContractViolationError):
            sample_stage(_attached_stage([0.0, 0.0]), temperature, RngStream(1))

    @pytest.mark.parametrize('seed', range(20))
    def test_factor_gradient(self, seed):
        logits = np.random.default_rng(seed).standard_normal(2)
        rng = RngStream(seed)
        gumbel = -np.log(-np.log(rng.copy().uniform(2)))

        stage = _attached_stage(logits)
        index, factor = sample_stage(stage, 1.0, rng)
        analytic = backward(factor, [stage.logits])[0]

        z = logits + gumbel
        const = np.exp(z[index]) / np.exp(z).sum()

        def relaxed(l):
            e = np.exp(l + gumbel)
            return float(e[index] / e.sum() / const)

        assert relative_error(analytic, numeric_gradient(relaxed, logits)) <= 1e-4

    def test_shift_invariance(self):
        a = PolicyParams([StageParams([0.1, 0.5], [0, 0], [0, 0])], operators=['time_mask', 'noise'])
        b = PolicyParams([StageParams([10.1, 10.5], [0, 0], [0, 0])], operators=['time_mask', 'noise'])

        np.testing.assert_allclose(a.stages[0].probabilities(), b.stages[0].probabilities(), rtol=0, atol=1e-15)
        for seed in range(20):
            ia, _ = sample_stage(a.attach(Tape()).stages[0], 1.0, RngStream(seed))
            ib, _ = sample_stage(b.attach(Tape()).stages[0], 1.0, RngStream(seed))
            assert ia == ib


class TestComputeStrength:
    @pytest.mark.parametrize('y, expected', [(1, 0.1), (0, 0.2)])
    def test_routing(self, y, expected):
        tape = Tape()
        mu0 = tape.parameter(0.2)
        mu1 = tape.parameter(0.1)
        s = compute_strength(y, mu0, mu1)

        assert s.item() == expected
        g0, g1 = backward(s, [mu0, mu1])
        assert g0 == 1 - y
        assert g1 == y

    @pytest.mark.parametrize('y', [2, -1, 0.5])
    def test_invalid_label(self, y):
        tape = Tape()
        with pytest.raises(ContractViolationError):
            compute_strength(y, tape.parameter(0.0), tape.parameter(0.0))


class TestInitPolicy:
    def test_uniform(self):
        policy = init_policy()

        assert len(policy.stages) == 2
        assert policy.parameter_count == 2 * 3 * 6
        for stage in policy.stages:
            np.testing.assert_allclose(stage.probabilities(), np.full(6, 1 / 6), rtol=0, atol=1e-12)
            np.testing.assert_array_equal(stage.mu0, [0.0, 0.0, 1.0, 0.0, 0.0, 0.5])
            np.testing.assert_array_equal(stage.mu1, stage.mu0)

    def test_empty_operator_set(self):
        with pytest.raises(ContractViolationError):
            init_policy(operators=[])

    def test_vector_round_trip(self):
        policy = init_policy()
        phi = np.arange(policy.vector_size, dtype=np.float64)

        assert policy.vector_size == 2 * (6 + 5 + 5)
        assert policy.with_vector(phi).to_vector().tolist() == phi.tolist()
        assert policy.with_vector(phi).stages[0].mu0[0] == 0.0

    def test_global_magnitude_vector(self):
        policy = init_policy(global_magnitude=True)
        updated = policy.with_vector(np.arange(policy.vector_size, dtype=np.float64))

        assert policy.vector_size == 2 * (6 + 5)
        for stage in updated.stages:
            np.testing.assert_array_equal(stage.mu0, stage.mu1)

    def test_json(self):
        policy = init_policy(stages=1).with_vector(np.linspace(-1, 1, 16))
        data = policy.to_json()

        assert data['operators'] == ['time_mask', 'noise', 'warp', 'wander', 'scale', 'displacement']
        assert abs(sum(data['stages'][0]['pi']) - 1) <= 1e-12
        assert PolicyParams.from_json(data) == policy

    def test_json_from_pi(self):
        data = {
            'stages': [{'pi': [0.9, 0.1], 'mu0': [0.0, 0.2], 'mu1': [0.0, 0.1]}],
            'operators': ['time_mask', 'noise'],
        }

        policy = PolicyParams.from_json(data)
        np.testing.assert_allclose(policy.stages[0].probabilities(), [0.9, 0.1], rtol=0, atol=1e-12)

    @pytest.mark.parametrize('data', [{}, {'stages': [{'pi': [1.0]}], 'operators': ['noise']}, {'stages': 3}])
    def test_json_malformed(self, data):
        with pytest.raises(MalformedTrajectoryError):
            PolicyParams.from_json(data)


class TestApplyPolicy:
    def test_worked_example(self, mocker):
        policy = PolicyParams(
            [StageParams(np.log([0.9, 0.1]), [0.0, 0.2], [0.0, 0.1])], operators=['time_mask', 'noise'],
        )
        x = gen_smooth_signal(0, leads=2, length=100)

        # find a draw that selects the time mask
        seed = next(s for s in range(100) if sample_stage(policy.attach(Tape()).stages[0], 1.0, RngStream(s))[0] == 0)

        spy = mocker.spy(policy.operator_objects[0], 'apply')
        tape = Tape()
        out = apply_policy(tape.constant(x), 1, policy.attach(tape), RngStream(seed), fs=100.0)

        assert spy.call_count == 1
        assert (out.value == 0).sum() == 2 * 10

    def test_zero_stages(self):
        tape = Tape()
        x = tape.constant(gen_smooth_signal(0))

        assert apply_policy(x, 0, init_policy(stages=0), RngStream(0), fs=100.0) is x

    def test_purity_and_independence(self):
        x = gen_smooth_signal(1)
        copy = x.copy()
        policy = init_policy(operators=['noise'], stages=1)

        tape = Tape()
        a = apply_policy(tape.constant(x), 0, policy, RngStream(3), fs=100.0).value
        b = apply_policy(tape.constant(x), 0, policy, RngStream(3, counter=5), fs=100.0).value
        np.testing.assert_array_equal(x, copy)
        assert not np.array_equal(a, b)

    def test_per_class_routing(self):
        policy = init_policy(operators=['noise', 'scale'], stages=2)
        tape = Tape()
        attached = policy.attach(tape)
        losses = []
        for i in range(4):
            x = tape.constant(gen_smooth_signal(i))
            losses.append(ops.sum(apply_policy(x, 0, attached, RngStream(7).split(i), fs=100.0)))
        loss = ops.sum(ops.stack(losses))

        grads = backward(loss, [stage.mu1 for stage in attached.stages])
        for g in grads:
            np.testing.assert_array_equal(g, np.zeros(2))

    def test_global_magnitude_shares_node(self):
        attached = init_policy(global_magnitude=True).attach(Tape())

        for stage in attached.stages:
            assert stage.mu0 is stage.mu1
        assert len(attached.nodes()) == 4

    def test_differentiable_path(self):
        policy = init_policy(operators=['noise', 'scale'], stages=2)
        tape = Tape()
        attached = policy.attach(tape)
        out = apply_policy(tape.constant(gen_smooth_signal(5)), 1, attached, RngStream(11), fs=100.0)
        loss = ops.sum(ops.mul(out, out))

        grads = attached.flatten_gradients(backward(loss, attached.nodes()))
        assert grads.shape == (policy.vector_size,)
        assert np.all(np.isfinite(grads))
        assert np.any(grads != 0)


class TestApplyPolicyBatch:
    def test_sample_stage_batch(self):
        policy = init_policy(stages=1)
        phi = policy.to_vector()
        phi[:6] = [0.5, -1.0, 2.0, 0.0, 0.3, -0.2]
        stage = policy.with_vector(phi).attach(Tape()).stages[0]
        rngs = [RngStream(9).split(b) for b in range(16)]

        index, factor = sample_stage_batch(stage, 0.7, rngs)
        expected = [sample_stage(stage, 0.7, RngStream(9).split(b))[0] for b in range(16)]
        assert index.tolist() == expected
        assert factor.value.tolist() == [1.0] * 16

    @pytest.mark.parametrize('seed', range(3))
    def test_matches_per_example(self, seed):
        policy = init_policy(stages=2)
        phi = policy.to_vector() + np.random.default_rng(seed).normal(0, 0.5, policy.vector_size)
        policy = policy.with_vector(phi)
        x = np.stack([gen_smooth_signal(seed + b, leads=2, length=64) for b in range(8)])
        y = np.array([0, 1, 1, 0, 1, 0, 0, 1])
        rng = RngStream(seed)
        weights = np.random.default_rng(seed + 10).standard_normal(x.shape)

        tape = Tape()
        attached = policy.attach(tape)
        out = apply_policy_batch(tape.constant(x), y, attached, [rng.split(b) for b in range(8)], fs=100.0)
        loss = ops.sum(ops.mul(out, weights))
        grads = attached.flatten_gradients(backward(loss, attached.nodes()))

        row_tape = Tape()
        row_attached = policy.attach(row_tape)
        rows = [apply_policy(row_tape.constant(x[b]), y[b], row_attached, rng.split(b), fs=100.0) for b in range(8)]
        row_loss = ops.sum(ops.mul(ops.stack(rows), weights))
        row_grads = row_attached.flatten_gradients(backward(row_loss, row_attached.nodes()))

        np.testing.assert_allclose(out.value, np.stack([r.value for r in rows]), rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(grads, row_grads, rtol=1e-9, atol=1e-10)

    def test_zero_stages(self):
        tape = Tape()
        x = tape.constant(np.zeros((2, 1, 16)))

        assert apply_policy_batch(x, [0, 1], init_policy(stages=0), [RngStream(0), RngStream(1)]) is x

    @pytest.mark.parametrize('y', [[0, 2], [0.5, 1], [0]])
    def test_invalid_labels(self, y):
        tape = Tape()

        with pytest.raises(ContractViolationError):
            apply_policy_batch(tape.constant(np.zeros((2, 1, 16))), y, init_policy(), [RngStream(0), RngStream(1)])

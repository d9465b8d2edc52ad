import json
import math
from typing import Tuple

import numpy as np
import pytest

import taskaug.hypergrad.train
from taskaug.aug import init_policy
from taskaug.baselines import AugStrategy
from taskaug.diff import RngStream
from taskaug.error import ContractViolationError, NonFiniteHypergradientError, NonFiniteLossError
from taskaug.hypergrad import Adam, AugmentedBatchObjective, HyperConfig, Objective, TrainConfig, METRICS_HEADER, \
    EpochRecord, TrainReport, evaluate, group_norms, inner_step, train_loop, validation_loss
from taskaug.model import ModelConfig, build_model
from tests.utils import gen_dataset

_MODEL = ModelConfig(leads=2, length=64, widths=[4, 8])


class LogisticObjective(Objective):
    """Logistic regression on a fixed set of separable points. φ is ignored."""

    def __init__(self, x: np.ndarray, y: np.ndarray):
        self.x = x
        self.y = y

    def train_loss_and_grads(self, theta: np.ndarray, phi: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        z = self.x @ theta
        p = 1.0 / (1.0 + np.exp(-z))
        loss = float(np.mean(np.logaddexp(0.0, z) - self.y * z))
        return loss, self.x.T @ (p - self.y) / len(self.y), np.zeros_like(phi)

    def val_loss_and_grad(self, theta: np.ndarray) -> Tuple[float, np.ndarray]:
        return self.train_loss_and_grads(theta, np.zeros(0))[:2]


class NanObjective(LogisticObjective):
    def train_loss_and_grads(self, theta, phi):
        loss, grad_theta, grad_phi = super().train_loss_and_grads(theta, phi)
        return math.nan, grad_theta, grad_phi


def _logistic() -> LogisticObjective:
    x = np.array([[1.0, 2.0], [2.0, 1.0], [-1.0, -2.0], [-2.0, -1.0]])
    return LogisticObjective(x, np.array([1.0, 1.0, 0.0, 0.0]))


def _splits():
    train = gen_dataset(16, leads=2, length=64, seed=1)
    val = gen_dataset(8, leads=2, length=64, seed=2)
    test = gen_dataset(8, leads=2, length=64, seed=3)
    return train, val, test


def _run(strategy=AugStrategy.TASKAUG, seed=0, policy=None, **hyper):
    train, val, test = _splits()
    policy = policy or init_policy()
    cfg = TrainConfig(strategy, epochs=2, patience=5, batch_size=8)
    return train_loop(train, val, _MODEL, policy, HyperConfig(**hyper), cfg, seed, test=test)


class TestInnerStep:
    def test_zero_lr(self):
        theta = np.array([0.3, -0.2])

        new_theta, loss = inner_step(theta, np.zeros(0), _logistic(), Adam(lr=0.0), 0)
        assert np.array_equal(new_theta, theta)
        assert loss == pytest.approx(_logistic().train_loss_and_grads(theta, np.zeros(0))[0])

    def test_descent(self):
        objective = _logistic()
        optimizer = Adam(lr=0.1)
        theta = np.zeros(2)
        initial = objective.train_loss_and_grads(theta, np.zeros(0))[0]

        for i in range(50):
            theta, _ = inner_step(theta, np.zeros(0), objective, optimizer, i)
        assert objective.train_loss_and_grads(theta, np.zeros(0))[0] < 0.1 * initial

    def test_identity_policy(self):
        model, theta = build_model(_MODEL, RngStream(0))
        d = gen_dataset(4, leads=2, length=64)
        x, y = d.values(), d.labels()
        policy = init_policy(stages=0)

        objective = AugmentedBatchObjective(model, policy, x, y, RngStream(1))
        augmented, _ = inner_step(theta, policy.to_vector(), objective, Adam(lr=1e-2), 0)

        _, grad = model.loss_and_grad(theta, x, y)
        plain = Adam(lr=1e-2).step(theta, grad)
        assert np.array_equal(augmented, plain)

    def test_non_finite(self):
        x = np.array([[1.0, 2.0], [-1.0, -2.0]])

        with pytest.raises(NonFiniteLossError) as e:
            inner_step(np.zeros(2), np.zeros(0), NanObjective(x, np.array([1.0, 0.0])), Adam(), 7)
        assert e.value.batch_index == 7


class TestValidationLoss:
    def test_zero_parameters(self):
        model, theta = build_model(_MODEL, RngStream(0))
        d = gen_dataset(6, leads=2, length=64)

        assert validation_loss(model, np.zeros_like(theta), d.values(), d.labels()) == pytest.approx(math.log(2))

    def test_empty(self):
        model, theta = build_model(_MODEL, RngStream(0))
        d = gen_dataset(6, leads=2, length=64)

        with pytest.raises(ContractViolationError):
            validation_loss(model, theta, d.values()[:0], d.labels()[:0])

    def test_evaluate_predicts_in_batches(self, mocker):
        model, theta = build_model(_MODEL, RngStream(0))
        d = gen_dataset(6, leads=2, length=64, seed=4)
        x, y = d.values(), d.labels()
        spy = mocker.spy(model, 'predict')

        loss, probs = evaluate(model, theta, x, y, batch_size=4)
        assert spy.call_count == 1
        assert spy.call_args.args[2] == 4
        np.testing.assert_array_equal(probs, model.predict(theta, x))
        expected = -np.mean(y * np.log(probs) + (1 - y) * np.log(1 - probs))
        assert loss == pytest.approx(expected, rel=1e-9)


class TestGroupNorms:
    def test_per_class(self):
        policy = init_policy(operators=['noise', 'scale'], stages=2)
        grad = np.array([3.0, 4.0, 1.0, 0.0, 0.0, 2.0,
                         0.0, 0.0, 0.0, 2.0, 0.0, 0.0])

        norms = group_norms(policy, grad)
        assert norms['logits'] == pytest.approx(5.0)
        assert norms['mu0'] == pytest.approx(math.sqrt(5.0))
        assert norms['mu1'] == pytest.approx(2.0)

    def test_global_magnitude(self):
        policy = init_policy(operators=['noise', 'scale'], stages=1, global_magnitude=True)

        norms = group_norms(policy, np.array([0.0, 1.0, 2.0, 2.0]))
        assert set(norms) == {'logits', 'mu0'}
        assert norms['mu0'] == pytest.approx(math.sqrt(8.0))


class TestTrainReport:
    def test_metrics_csv(self, tmp_path):
        report = TrainReport(0, AugStrategy.NONE)
        report.epochs = [EpochRecord(1, 0.7, 0.69, 0.5, 0.25), EpochRecord(2, 0.6, 0.68, math.nan, 0.3)]

        path = tmp_path / 'metrics.csv'
        report.write_metrics_csv(str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == ','.join(METRICS_HEADER)
        assert lines[1] == '1,0.7,0.69,0.5,0.25'
        assert lines[2] == '2,0.6,0.68,nan,0.3'

    def test_no_trajectory(self):
        with pytest.raises(ValueError):
            TrainReport(0, AugStrategy.TIMEMASK).trajectory_json()


class TestTrainLoop:
    @pytest.mark.timeout(600)
    @pytest.mark.parametrize('inner_steps, expected', [(1, 4), (2, 2)])
    def test_outer_steps(self, inner_steps, expected):
        report = _run(inner_steps=inner_steps)

        assert report.complete
        assert len(report.epochs) == 2
        assert len(report.outer_steps) == expected
        assert [r.step for r in report.outer_steps] == list(range(1, expected + 1))
        assert [epoch for epoch, _ in report.snapshots] == [1, 2]
        assert report.final_policy == report.outer_steps[-1].policy
        assert report.test is not None
        assert report.test.epoch == report.best_epoch

        trajectory = report.trajectory_json()
        assert len(trajectory['epochs']) == 2
        assert len(trajectory['outer_steps']) == expected
        assert trajectory['initial'] == init_policy().to_json()

    @pytest.mark.timeout(300)
    def test_frozen(self):
        policy = init_policy()

        report = _run(policy=policy, freeze_policy=True)
        assert report.outer_steps == []
        assert all(snapshot == policy for _, snapshot in report.snapshots)
        assert report.final_policy == policy

    @pytest.mark.timeout(600)
    def test_global_magnitude(self):
        report = _run(policy=init_policy(global_magnitude=True))

        for _, snapshot in report.snapshots:
            for stage in snapshot.stages:
                assert np.array_equal(stage.mu0, stage.mu1)
        assert set(report.outer_steps[0].grad_norms) == {'logits', 'mu0'}

    @pytest.mark.timeout(900)
    def test_deterministic(self, tmp_path):
        first = _run(seed=3)
        second = _run(seed=3)

        first.write_metrics_csv(str(tmp_path / 'a.csv'))
        second.write_metrics_csv(str(tmp_path / 'b.csv'))
        assert (tmp_path / 'a.csv').read_bytes() == (tmp_path / 'b.csv').read_bytes()
        assert json.dumps(first.trajectory_json()) == json.dumps(second.trajectory_json())
        assert np.array_equal(first.theta, second.theta)

    @pytest.mark.timeout(300)
    @pytest.mark.parametrize('strategy', [s for s in AugStrategy if s is not AugStrategy.TASKAUG])
    def test_baselines(self, strategy):
        report = _run(strategy)

        assert report.complete
        assert len(report.epochs) == 2
        assert report.outer_steps == []
        assert report.snapshots == []
        assert report.summary()['strategy'] == strategy.value

    def test_non_finite(self, mocker):
        mocker.patch('taskaug.hypergrad.train.inner_step', side_effect=NonFiniteLossError(0, math.nan))

        report = _run(AugStrategy.NONE)
        assert not report.complete
        assert 'NonFiniteLossError' in report.error
        assert report.epochs == []
        assert report.best_epoch == 0
        assert report.test is None

    def test_non_finite_hypergradient(self, mocker):
        mocker.patch('taskaug.hypergrad.train.hyper_step', side_effect=NonFiniteHypergradientError(math.nan))

        report = _run()
        assert not report.complete
        assert 'NonFiniteHypergradientError' in report.error
        assert report.epochs == []
        assert report.outer_steps == []
        assert report.test is None

    @pytest.mark.timeout(600)
    def test_central_differences(self):
        report = _run(central_differences=True)

        assert report.complete
        assert len(report.outer_steps) == 4
        assert all(math.isfinite(r.val_loss) for r in report.outer_steps)

    @pytest.mark.timeout(600)
    def test_outer_step_reuses_inner_evaluation(self, mocker):
        spy = mocker.spy(AugmentedBatchObjective, 'loss_and_grads')
        hyper = mocker.spy(taskaug.hypergrad.train, 'hyper_step')

        report = _run(inner_steps=1, neumann_terms=2)
        # one full evaluation per batch, read back by the inner step; the rest are the Hessian-vector products
        full = [call for call in spy.call_args_list if call.kwargs.get('with_phi', True)]
        assert len(full) == 4
        assert spy.call_count == 4 + 4 * 2
        assert hyper.call_count == len(report.outer_steps) == 4
        assert all(call.args[-1] is not None for call in hyper.call_args_list)

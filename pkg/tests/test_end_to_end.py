import time

import numpy as np
import pytest

from taskaug.aug import init_policy
from taskaug.baselines import AugStrategy
from taskaug.data import SynthTask, SynthTaskConfig, generate_synthetic, split
from taskaug.hypergrad import HyperConfig, TrainConfig, train_loop
from taskaug.model import ModelConfig

_SEEDS = range(5)
_EPOCHS = 30


def _workload():
    dataset = generate_synthetic(SynthTaskConfig(SynthTask.RR_IRREGULARITY, prevalence=0.2), 512)
    train, val, test = split(dataset, seed=0)
    return train, val, test, ModelConfig(dataset.leads, dataset.length)


def _timed_run(strategy, seed, epochs=_EPOCHS, patience=10, **hyper):
    train, val, test, model_cfg = _workload()
    cfg = TrainConfig(strategy, epochs=epochs, patience=patience)
    start = time.time()
    report = train_loop(train, val, model_cfg, init_policy(stages=2), HyperConfig(**hyper), cfg, seed, test=test)
    return report, time.time() - start


def _best_val_auroc(report) -> float:
    return report.epochs[report.best_epoch - 1].val_auroc


@pytest.mark.slow
@pytest.mark.timeout(3600)
def test_taskaug_cost_relative_to_no_augmentation():
    # equal epoch counts on both sides: early stopping is out of reach
    epochs = 5
    none, none_seconds = _timed_run(AugStrategy.NONE, 0, epochs=epochs, patience=epochs)
    taskaug, taskaug_seconds = _timed_run(AugStrategy.TASKAUG, 0, epochs=epochs, patience=epochs, inner_steps=1)

    assert none.complete and taskaug.complete
    assert len(none.epochs) == len(taskaug.epochs) == epochs
    assert taskaug_seconds <= 4.0 * none_seconds


@pytest.mark.slow
@pytest.mark.timeout(4 * 3600)
def test_rr_irregularity_directions():
    no_augs, learned, frozen = [], [], []
    for seed in _SEEDS:
        no_augs.append(_timed_run(AugStrategy.NONE, seed)[0])
        report, seconds = _timed_run(AugStrategy.TASKAUG, seed, inner_steps=1)
        assert seconds < 600.0
        learned.append(report)
        frozen.append(_timed_run(AugStrategy.TASKAUG, seed, freeze_policy=True)[0])

    assert all(r.complete for r in no_augs + learned + frozen)
    learned_auroc = np.mean([_best_val_auroc(r) for r in learned])
    assert learned_auroc >= np.mean([_best_val_auroc(r) for r in no_augs]) - 0.01
    assert learned_auroc >= np.mean([_best_val_auroc(r) for r in frozen]) - 0.01

    operators = list(learned[0].final_policy.operators)
    mask, warp = operators.index('time_mask'), operators.index('warp')
    first_stages = [r.final_policy.stages[0] for r in learned]
    assert sum(stage.probabilities()[mask] > stage.probabilities()[warp] for stage in first_stages) >= 4
    assert np.mean([stage.mu0[warp] for stage in first_stages]) <= np.mean([stage.mu1[warp] for stage in first_stages])

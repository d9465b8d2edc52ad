"""The training loop: inner Adam steps on θ over augmented batches, interleaved with outer RMSprop steps on φ.
"""
import csv
import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from taskaug.aug.policy import PolicyParams
from taskaug.baselines.strategy import AugStrategy, batch_augmenter, prepare_training_set
from taskaug.data import LabeledDataset
from taskaug.diff import RngStream, Tape, ops
from taskaug.error import ContractViolationError, NonFiniteHypergradientError, NonFiniteLossError, UndefinedMetricError
from taskaug.hypergrad.config import HyperConfig, TrainConfig
from taskaug.hypergrad.implicit import TrainGradients, hyper_step
from taskaug.hypergrad.objective import AugmentedBatchObjective, Objective
from taskaug.hypergrad.optim import Adam, Optimizer, RMSprop
from taskaug.model import Classifier, EarlyStopping, MetricRecord, ModelConfig, auprc, auroc, build_model
from taskaug.utils import partition

logger = logging.getLogger(__name__)

METRICS_HEADER = ['epoch', 'train_loss', 'val_loss', 'val_auroc', 'val_auprc']

# Stream keys of the sub-streams split off a run's seed.
_KEY_INIT = 0
_KEY_SMOTE = 1
_KEY_SHUFFLE = 2
_KEY_BATCH = 3
_KEY_VAL_BATCH = 4


class EpochRecord:
    """The losses and validation metrics of one epoch.
    """

    def __init__(self, epoch: int, train_loss: float, val_loss: float, val_auroc: float, val_auprc: float):
        self.epoch = epoch
        self.train_loss = train_loss
        self.val_loss = val_loss
        self.val_auroc = val_auroc
        self.val_auprc = val_auprc

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'epoch={self.epoch}, train_loss={self.train_loss}, val_loss={self.val_loss}, ' \
               f'val_auroc={self.val_auroc}, val_auprc={self.val_auprc})'

    def to_row(self) -> List:
        return [self.epoch, repr(self.train_loss), repr(self.val_loss), repr(self.val_auroc), repr(self.val_auprc)]


class OuterStepRecord:
    """The outcome of one outer step.

    :param step: The 1-based outer step index.
    :param epoch: The epoch the step was taken in.
    :param val_loss: The validation loss of the step's batch.
    :param grad_norms: The hypergradient norm of each parameter group (``logits``, ``mu0`` and, unless strengths are
        shared, ``mu1``).
    :param policy: The policy after the step.
    """

    def __init__(self, step: int, epoch: int, val_loss: float, grad_norms: Dict[str, float], policy: PolicyParams):
        self.step = step
        self.epoch = epoch
        self.val_loss = val_loss
        self.grad_norms = grad_norms
        self.policy = policy

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'step={self.step}, epoch={self.epoch}, val_loss={self.val_loss}, grad_norms={self.grad_norms})'

    def to_json(self) -> dict:
        return {
            'outer_step': self.step,
            'epoch': self.epoch,
            'val_loss': self.val_loss,
            'grad_norms': self.grad_norms,
            'policy': self.policy.to_json(),
        }


class TrainReport:
    """The outcome of one training run.

    :param seed: The run's seed.
    :param strategy: The :class:`AugStrategy <taskaug.baselines.strategy.AugStrategy>`.
    :param initial_policy: (optional) The policy at the start of training, for TaskAug runs.
    """

    def __init__(self, seed: int, strategy: AugStrategy, initial_policy: Optional[PolicyParams] = None):
        self.seed = seed
        self.strategy = strategy
        self.initial_policy = initial_policy
        self.final_policy = initial_policy
        self.epochs: List[EpochRecord] = []
        self.outer_steps: List[OuterStepRecord] = []
        self.snapshots: List[Tuple[int, PolicyParams]] = []
        self.best_epoch = 0
        self.stopped_epoch: Optional[int] = None
        self.theta: Optional[np.ndarray] = None
        self.test: Optional[MetricRecord] = None
        self.complete = True
        self.error: Optional[str] = None

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'seed={self.seed}, strategy={self.strategy}, epochs={len(self.epochs)}, ' \
               f'outer_steps={len(self.outer_steps)}, best_epoch={self.best_epoch}, complete={self.complete})'

    def write_metrics_csv(self, path: str):
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(METRICS_HEADER)
            for record in self.epochs:
                writer.writerow(record.to_row())

    def trajectory_json(self) -> dict:
        """Returns the policy trajectory: the initial and final policies, one snapshot per epoch and one record per
        outer step.
        """
        if self.initial_policy is None:
            raise ValueError('only TaskAug runs have a policy trajectory')

        return {
            'seed': self.seed,
            'complete': self.complete,
            'initial': self.initial_policy.to_json(),
            'final': self.final_policy.to_json(),
            'epochs': [{'epoch': epoch, 'policy': policy.to_json()} for epoch, policy in self.snapshots],
            'outer_steps': [record.to_json() for record in self.outer_steps],
        }

    def summary(self) -> dict:
        return {
            'seed': self.seed,
            'strategy': self.strategy.value,
            'complete': self.complete,
            'error': self.error,
            'epochs_run': len(self.epochs),
            'best_epoch': self.best_epoch,
            'stopped_epoch': self.stopped_epoch,
            'outer_steps': len(self.outer_steps),
            'best_val_loss': min((r.val_loss for r in self.epochs), default=None),
            'test': self.test.to_json() if self.test else None,
        }


def inner_step(
    theta: np.ndarray, phi: np.ndarray, objective: Objective, optimizer: Optimizer, batch_index: int,
) -> Tuple[np.ndarray, float]:
    """Takes one optimizer step on θ against the augmented training loss. φ is left untouched.

    :param theta: The model parameters θ.
    :param phi: The policy vector φ.
    :param objective: The :class:`Objective <taskaug.hypergrad.objective.Objective>` of the batch.
    :param optimizer: The inner optimizer (Adam).
    :param batch_index: The global index of the batch, reported when the loss is not finite.
    :return: A tuple of the new θ and the batch loss.
    """
    loss, grad = objective.train_loss_and_grad_theta(theta, phi)
    if not math.isfinite(loss) or not np.all(np.isfinite(grad)):
        raise NonFiniteLossError(batch_index, loss)

    return optimizer.step(theta, grad), loss


def evaluate(
    model: Classifier, theta: np.ndarray, x: np.ndarray, y: np.ndarray, batch_size: int = 256,
) -> Tuple[float, np.ndarray]:
    """Evaluates the clean mean binary cross-entropy and the predicted probabilities of a split.
    """
    if len(x) == 0:
        raise ContractViolationError('validation_loss: the batch is empty')

    probs = model.predict(theta, x, batch_size)
    loss = ops.bce_loss(Tape().constant(probs), np.asarray(y, dtype=np.float64))
    return loss.item(), probs


def validation_loss(model: Classifier, theta: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    """Returns the mean binary cross-entropy of un-augmented data.
    """
    return evaluate(model, theta, x, y)[0]


def _metrics(labels: np.ndarray, probs: np.ndarray) -> Tuple[float, float]:
    try:
        return auroc(labels, probs), auprc(labels, probs)
    except UndefinedMetricError:
        logger.warning('metrics are undefined for a single-class split')
        return math.nan, math.nan


def group_norms(policy: PolicyParams, grad: np.ndarray) -> Dict[str, float]:
    """Returns the norms of the logits, μ0 and μ1 parts of a vector laid out like ``policy.to_vector()``.
    """
    learnable = len(policy.learnable_indices())
    groups = [('logits', len(policy.operators)), ('mu0', learnable)]
    if not policy.global_magnitude:
        groups.append(('mu1', learnable))

    squares = {name: 0.0 for name, _ in groups}
    pos = 0
    for _ in policy.stages:
        for name, size in groups:
            part = grad[pos:pos + size]
            squares[name] += float(part @ part)
            pos += size
    return {name: math.sqrt(v) for name, v in squares.items()}


def train_loop(
    train: LabeledDataset, val: LabeledDataset, model_cfg: ModelConfig, policy: PolicyParams, hyper: HyperConfig,
    cfg: TrainConfig, seed: int, test: Optional[LabeledDataset] = None,
) -> TrainReport:
    """Trains a classifier with one augmentation strategy.

    Each epoch walks a seeded shuffle of the training split in mini-batches. For TaskAug, an outer step on φ follows
    every P inner steps, using the last training batch with the same augmentation draws and a freshly sampled clean
    validation batch. Training stops early when the validation loss has not improved for `patience` epochs; the
    parameters of the best epoch are kept and, when `test` is given, scored on it.

    A non-finite training loss or hypergradient aborts the run; the report is then returned with ``complete`` set to
    False.

    :param train: The training split.
    :param val: The validation split.
    :param model_cfg: The :class:`ModelConfig <taskaug.model.config.ModelConfig>`.
    :param policy: The initial policy. Only TaskAug runs use it.
    :param hyper: The :class:`HyperConfig <taskaug.hypergrad.config.HyperConfig>`.
    :param cfg: The :class:`TrainConfig <taskaug.hypergrad.config.TrainConfig>`.
    :param seed: The run's seed.
    :param test: (optional) The test split.
    :return: The :class:`TrainReport <TrainReport>`.
    """
    rng = RngStream(seed)
    taskaug = cfg.strategy is AugStrategy.TASKAUG
    model, theta = build_model(model_cfg, rng.split(_KEY_INIT))
    train = prepare_training_set(cfg.strategy, train, rng.split(_KEY_SMOTE), cfg.smote_neighbors)
    augmenter = batch_augmenter(cfg.strategy, cfg.mask_frac)

    x_train, y_train = train.values(), train.labels()
    x_val, y_val = val.values(), val.labels()
    inner, outer = Adam(hyper.inner_lr), RMSprop(hyper.outer_lr)
    phi = policy.to_vector()

    report = TrainReport(seed, cfg.strategy, policy if taskaug else None)
    stopper = EarlyStopping(cfg.patience)
    best_theta = theta.copy()
    step = 0
    try:
        for epoch in range(1, cfg.epochs + 1):
            order = rng.split(_KEY_SHUFFLE, epoch).permutation(len(train))
            losses = []
            for b, idx in enumerate(partition(order, cfg.batch_size)):
                batch_rng = rng.split(_KEY_BATCH, epoch, b)
                x, y = x_train[idx], y_train[idx]
                if not taskaug:
                    x = augmenter.augment(x, y, batch_rng)

                objective = AugmentedBatchObjective(model, policy if taskaug else None, x, y, batch_rng, fs=train.fs)
                outer_due = taskaug and not hyper.freeze_policy and (step + 1) % hyper.inner_steps == 0
                anchor, base = theta, None
                if outer_due and not hyper.central_differences:
                    # the inner step below reuses this evaluation
                    _, grad_theta, grad_phi = objective.train_loss_and_grads(theta, phi)
                    base = TrainGradients(grad_theta, grad_phi)

                theta, loss = inner_step(theta, phi, objective, inner, step)
                losses.append(loss)
                step += 1

                if outer_due:
                    v_idx = rng.split(_KEY_VAL_BATCH, step).permutation(len(val))[:cfg.batch_size]
                    objective.with_validation(x_val[v_idx], y_val[v_idx])
                    at = theta if base is None else anchor
                    phi, v_loss, grad = hyper_step(at, phi, objective, hyper, outer, base)
                    report.outer_steps.append(OuterStepRecord(
                        len(report.outer_steps) + 1, epoch, v_loss, group_norms(policy, grad), policy.with_vector(phi),
                    ))
                    logger.debug(f'outer step {len(report.outer_steps)}: {report.outer_steps[-1].grad_norms}')

            val_loss, probs = evaluate(model, theta, x_val, y_val)
            val_auroc, val_auprc = _metrics(y_val, probs)
            report.epochs.append(EpochRecord(epoch, float(np.mean(losses)), val_loss, val_auroc, val_auprc))
            if taskaug:
                report.snapshots.append((epoch, policy.with_vector(phi)))
                report.final_policy = report.snapshots[-1][1]

            stop = stopper.update(val_loss)
            if stopper.improved:
                best_theta = theta.copy()
            logger.info(
                f'seed {seed} epoch {epoch}: train_loss={report.epochs[-1].train_loss:.4f} val_loss={val_loss:.4f} '
                f'val_auroc={val_auroc:.4f}'
            )
            if stop:
                report.stopped_epoch = epoch
                logger.info(f'seed {seed}: early stop after epoch {epoch}, best epoch {stopper.best_epoch}')
                break
    except (NonFiniteLossError, NonFiniteHypergradientError) as e:
        logger.error(f'seed {seed}: {e!r} after {step} inner steps; aborting')
        report.complete = False
        report.error = repr(e)

    report.best_epoch = stopper.best_epoch
    report.theta = best_theta
    if test is not None and len(test) and report.best_epoch:
        test_loss, probs = evaluate(model, best_theta, test.values(), test.labels())
        test_auroc, test_auprc = _metrics(test.labels(), probs)
        report.test = MetricRecord(report.best_epoch, test_loss, test_auroc, test_auprc)

    return report

"""The gen-data, train, eval, gradcheck and inspect-policy commands.

Every command takes a resolved :class:`RunConfig <taskaug.cli.config.RunConfig>`, writes the configuration next to its
outputs, prints a one-line JSON summary to stdout and returns the process exit code.
"""
import csv
import json
import logging
import math
import os
from collections import OrderedDict
from typing import Dict, List, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from taskaug.aug import PolicyParams, init_policy
from taskaug.cli import checks
from taskaug.cli.config import RunConfig
from taskaug.data import LabeledDataset, Normalizer, generate_synthetic, load_csv, load_dataset, save_dataset, split
from taskaug.error import ContractViolationError, MalformedTrajectoryError, UndefinedMetricError
from taskaug.hypergrad import evaluate, train_loop
from taskaug.model import Classifier, auprc, auroc, load_checkpoint, save_checkpoint
from taskaug.utils import mean_stderr

logger = logging.getLogger(__name__)

METRICS_FILE = 'metrics.csv'
TRAJECTORY_FILE = 'trajectory.json'
SUMMARY_FILE = 'summary.json'
NORMALIZER_FILE = 'normalizer.json'
AGGREGATE_FILE = 'aggregate.json'

PROBABILITY_TABLE = 'probabilities.csv'
STRENGTH_TABLE = 'strengths.csv'
PROBABILITY_TRAJECTORY_TABLE = 'probability_trajectory.csv'


def _emit(summary: dict):
    print(json.dumps(summary, sort_keys=True))


def _write_json(path: str, data: dict):
    with open(path, 'w') as f:
        json.dump(data, f, indent=2, sort_keys=True)


def load_records(cfg: RunConfig) -> LabeledDataset:
    """Loads or generates the records a command runs on.
    """
    data = cfg.data
    if data.path:
        if data.path.endswith('.csv'):
            if data.leads is None or data.fs is None:
                raise ValueError('reading a CSV file requires --leads and --fs')
            return load_csv(data.path, int(data.leads), float(data.fs))
        return load_dataset(data.path)
    if data.synth:
        return generate_synthetic(data.synth, data.n)

    raise ValueError('no data source: pass --data or --task')


def cmd_gen_data(cfg: RunConfig) -> int:
    """Generates a synthetic dataset and writes it to ``cfg.out``.
    """
    if not cfg.out:
        raise ValueError('gen-data requires --out')
    if cfg.data.synth is None:
        raise ValueError('gen-data requires --task')

    dataset = generate_synthetic(cfg.data.synth, cfg.data.n)
    save_dataset(dataset, cfg.out)
    cfg.save(os.path.dirname(cfg.out))

    labels = dataset.labels()
    _emit({
        'path': cfg.out,
        'task': dataset.task,
        'n': len(dataset),
        'positives': int(labels.sum()),
        'leads': dataset.leads,
        'length': dataset.length,
        'fs': dataset.fs,
    })
    return 0


def seed_directory(out: str, seed: int) -> str:
    return os.path.join(out, f'seed-{seed}')


def _train_seed(
    cfg: RunConfig, splits: Tuple[LabeledDataset, LabeledDataset, LabeledDataset], policy: PolicyParams,
    normalizer: Normalizer, seed: int,
) -> dict:
    train, val, test = splits
    model_cfg = cfg.model_config(train.leads, train.length)
    report = train_loop(train, val, model_cfg, policy, cfg.hyper, cfg.train, seed, test=test)

    directory = seed_directory(cfg.out, seed)
    os.makedirs(directory, exist_ok=True)
    report.write_metrics_csv(os.path.join(directory, METRICS_FILE))
    if report.initial_policy is not None:
        _write_json(os.path.join(directory, TRAJECTORY_FILE), report.trajectory_json())
    if report.best_epoch:
        save_checkpoint(directory, model_cfg, report.theta, seed)
        _write_json(os.path.join(directory, NORMALIZER_FILE), normalizer.to_json())

    summary = report.summary()
    _write_json(os.path.join(directory, SUMMARY_FILE), summary)
    return summary


def aggregate(summaries: Sequence[dict]) -> dict:
    """Aggregates the per-seed summaries of a training run into the mean and standard error of each test metric.

    Seeds whose test metric is missing or undefined are left out of that metric's aggregate.
    """
    summaries = sorted(summaries, key=lambda s: s['seed'])
    out = {
        'n': len(summaries),
        'seeds': [s['seed'] for s in summaries],
        'strategy': summaries[0]['strategy'] if summaries else None,
        'complete': all(s['complete'] for s in summaries),
        'incomplete_seeds': [s['seed'] for s in summaries if not s['complete']],
    }
    for metric in ('auroc', 'auprc', 'loss'):
        values = [
            s['test'][metric] for s in summaries if s['test'] is not None and math.isfinite(s['test'][metric])
        ]
        mean, stderr = mean_stderr(values) if values else (None, None)
        out[f'test_{metric}'] = {'n': len(values), 'mean': mean, 'stderr': stderr}
    return out


def cmd_train(cfg: RunConfig) -> int:
    """Trains one classifier per seed and writes per-seed outputs and their aggregate to ``cfg.out``.

    The records are split by patient once; the normalization statistics are fitted on the training split.
    """
    if not cfg.out:
        raise ValueError('train requires --out')

    dataset = load_records(cfg)
    train, val, test = split(
        dataset, (cfg.data.test_fraction, cfg.data.val_fraction), cfg.data.split_seed, cfg.data.stratify,
    )
    normalizer = Normalizer(cfg.train.normalize).fit(train)
    splits = (normalizer.apply(train), normalizer.apply(val), normalizer.apply(test))
    logger.info(f'split {len(dataset)} records into {len(train)} train, {len(val)} val and {len(test)} test')

    policy = init_policy(
        cfg.policy.operators, cfg.policy.stages, cfg.policy.temperature, cfg.policy.global_magnitude,
    )
    cfg.save(cfg.out)

    summaries = Parallel(n_jobs=cfg.workers)(
        delayed(_train_seed)(cfg, splits, policy, normalizer, seed) for seed in cfg.seeds
    )
    result = aggregate(summaries)
    _write_json(os.path.join(cfg.out, AGGREGATE_FILE), result)
    _emit(result)

    if not result['complete']:
        logger.error(f'training did not complete for seeds {result["incomplete_seeds"]}; their outputs are partial')
        return 1
    return 0


def cmd_eval(cfg: RunConfig) -> int:
    """Scores a saved checkpoint on a dataset.

    The normalization saved with the checkpoint is applied when present; otherwise the configured mode is used.
    """
    if not cfg.checkpoint:
        raise ValueError('eval requires --checkpoint')

    model_cfg, theta, seed = load_checkpoint(cfg.checkpoint)
    dataset = load_records(cfg)
    if (dataset.leads, dataset.length) != (model_cfg.leads, model_cfg.length):
        raise ContractViolationError(
            f'eval: the checkpoint expects [{model_cfg.leads}, {model_cfg.length}] records, '
            f'got [{dataset.leads}, {dataset.length}]'
        )

    normalizer_path = os.path.join(cfg.checkpoint, NORMALIZER_FILE)
    if os.path.exists(normalizer_path):
        with open(normalizer_path) as f:
            normalizer = Normalizer.from_json(json.load(f))
    else:
        normalizer = Normalizer(cfg.train.normalize)
    dataset = normalizer.apply(dataset)

    loss, probs = evaluate(Classifier(model_cfg), theta, dataset.values(), dataset.labels())
    labels = dataset.labels()
    try:
        scores = {'auroc': auroc(labels, probs), 'auprc': auprc(labels, probs)}
    except UndefinedMetricError:
        logger.warning('metrics are undefined for a single-class dataset')
        scores = {'auroc': None, 'auprc': None}

    result = {'checkpoint': cfg.checkpoint, 'seed': seed, 'n': len(dataset), 'loss': loss, **scores}
    if cfg.out:
        directory = os.path.dirname(cfg.out)
        if directory:
            os.makedirs(directory, exist_ok=True)
        _write_json(cfg.out, result)
        cfg.save(directory)
    _emit(result)
    return 0


def _read_trajectory(path: str) -> dict:
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise MalformedTrajectoryError(f'invalid JSON: {e}', path)

    if not isinstance(doc, dict) or 'final' not in doc or 'initial' not in doc:
        raise MalformedTrajectoryError('missing the initial or final policy', path)

    epochs = doc.get('epochs', [])
    if not isinstance(epochs, list):
        raise MalformedTrajectoryError('epochs must be a list', path)
    for i, entry in enumerate(epochs):
        if not isinstance(entry, dict) or 'epoch' not in entry or 'policy' not in entry:
            raise MalformedTrajectoryError(f'epoch entry {i} must hold an epoch number and a policy', path)
    return doc


def _policy(doc: dict, path: str) -> PolicyParams:
    try:
        return PolicyParams.from_json(doc)
    except MalformedTrajectoryError as e:
        raise MalformedTrajectoryError(e.reason, path)


def select_snapshot(doc: dict, snapshot: str, path: str) -> PolicyParams:
    """Returns the ``initial``, ``final`` or per-epoch policy of a trajectory document.
    """
    if snapshot in ('initial', 'final'):
        return _policy(doc[snapshot], path)

    try:
        epoch = int(snapshot)
    except ValueError:
        raise ValueError(f'snapshot must be initial, final or an epoch number, got {snapshot!r}')
    for entry in doc.get('epochs', []):
        if entry.get('epoch') == epoch:
            return _policy(entry['policy'], path)

    raise MalformedTrajectoryError(f'no snapshot for epoch {epoch}', path)


def _check_compatible(policies: Sequence[PolicyParams], paths: Sequence[str]):
    first = policies[0]
    for policy, path in zip(policies[1:], paths[1:]):
        if policy.operators != first.operators or len(policy.stages) != len(first.stages):
            raise MalformedTrajectoryError(
                f'policy with operators {list(policy.operators)} and {len(policy.stages)} stages does not match '
                f'{list(first.operators)} with {len(first.stages)} stages',
                path,
            )


def _stat_row(values: Sequence[float]) -> List:
    mean, stderr = mean_stderr(list(values))
    return [repr(mean), repr(stderr)]


def probability_rows(policies: Sequence[PolicyParams]) -> List[List]:
    """Returns one ``[stage, operator, mean, stderr, n]`` row per stage and operator, aggregated across policies.
    """
    rows = []
    first = policies[0]
    probs = np.array([[stage.probabilities() for stage in p.stages] for p in policies])
    for k in range(len(first.stages)):
        for i, op in enumerate(first.operators):
            rows.append([k + 1, op] + _stat_row(probs[:, k, i]) + [len(policies)])
    return rows


def strength_rows(policies: Sequence[PolicyParams]) -> List[List]:
    """Returns one ``[stage, operator, mu0 mean, mu0 stderr, mu1 mean, mu1 stderr, n]`` row per stage and operator.
    """
    rows = []
    first = policies[0]
    for k in range(len(first.stages)):
        for i, op in enumerate(first.operators):
            mu0 = [p.stages[k].mu0[i] for p in policies]
            mu1 = [p.stages[k].mu1[i] for p in policies]
            rows.append([k + 1, op] + _stat_row(mu0) + _stat_row(mu1) + [len(policies)])
    return rows


def _write_table(path: str, header: Sequence[str], rows: Sequence[Sequence]):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)


def cmd_inspect_policy(cfg: RunConfig) -> int:
    """Tabulates the operator-selection probabilities and per-class strengths of one or more policy trajectories.

    Writes the tables of the selected snapshot and the per-epoch selection probabilities, each aggregated across the
    trajectory files, to the ``cfg.out`` directory.
    """
    if not cfg.trajectories:
        raise ValueError('inspect-policy requires at least one trajectory file')

    docs = [_read_trajectory(path) for path in cfg.trajectories]
    policies = [select_snapshot(doc, cfg.snapshot, path) for doc, path in zip(docs, cfg.trajectories)]
    _check_compatible(policies, cfg.trajectories)

    out = cfg.out or '.'
    os.makedirs(out, exist_ok=True)
    _write_table(
        os.path.join(out, PROBABILITY_TABLE), ['stage', 'operator', 'mean', 'stderr', 'n'], probability_rows(policies),
    )
    _write_table(
        os.path.join(out, STRENGTH_TABLE),
        ['stage', 'operator', 'mu0_mean', 'mu0_stderr', 'mu1_mean', 'mu1_stderr', 'n'],
        strength_rows(policies),
    )

    # epoch 0 is the initial policy; epochs missing from some files are aggregated over the rest
    by_epoch: Dict[int, List[PolicyParams]] = OrderedDict()
    for doc, path in zip(docs, cfg.trajectories):
        by_epoch.setdefault(0, []).append(_policy(doc['initial'], path))
        for entry in doc.get('epochs', []):
            by_epoch.setdefault(int(entry['epoch']), []).append(_policy(entry['policy'], path))
    rows = []
    for epoch in sorted(by_epoch):
        rows.extend([epoch] + row for row in probability_rows(by_epoch[epoch]))
    _write_table(
        os.path.join(out, PROBABILITY_TRAJECTORY_TABLE), ['epoch', 'stage', 'operator', 'mean', 'stderr', 'n'], rows,
    )

    cfg.save(out)
    _emit({
        'trajectories': len(docs),
        'snapshot': cfg.snapshot,
        'tables': [PROBABILITY_TABLE, STRENGTH_TABLE, PROBABILITY_TRAJECTORY_TABLE],
        'out': out,
    })
    return 0


def cmd_gradcheck(cfg: RunConfig) -> int:
    """Runs the gradient-check suite and writes one report row per check.

    :raises: :class:`CheckFailedError <taskaug.error.CheckFailedError>` if any check exceeds its tolerance.
    """
    results = checks.run_checks(cfg.check_seeds, cfg.tolerance)
    path = checks.report_path(cfg.out)
    checks.write_report(results, path)
    cfg.save(cfg.out or '.')

    _emit({'checks': len(results), 'failed': [r.check.name for r in results if not r.passed], 'report': path})
    checks.check_results(results)
    return 0

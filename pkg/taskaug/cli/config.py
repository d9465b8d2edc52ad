"""Run configuration of the command-line interface.

A :class:`RunConfig` holds everything a command needs, so a run can be repeated from its ``run_config.json`` alone.
Flags given on the command line override the values of a ``--config`` file.
"""
import argparse
import json
import os
from typing import Any, Dict, List, Optional, Sequence, Tuple

from taskaug.aug import DEFAULT_OPERATORS
from taskaug.data import SynthTaskConfig
from taskaug.hypergrad import HyperConfig, TrainConfig
from taskaug.model import DESK_WIDTHS, ModelConfig
from taskaug.utils import seed_list

RUN_CONFIG_FILE = 'run_config.json'


class DataConfig:
    """Where a command's records come from.

    Exactly one of `path` and `synth` is set for commands that read data.

    :param path: (optional) A dataset header (``.json``) or a CSV file.
    :param synth: (optional) The :class:`SynthTaskConfig <taskaug.data.synth.SynthTaskConfig>` to generate records from.
    :param n: (optional) The number of synthetic records. Defaults to 512.
    :param leads: (optional) The number of leads of a CSV file.
    :param fs: (optional) The sampling rate of a CSV file, in Hz.
    :param test_fraction: (optional) The fraction of patients held out for testing. Defaults to 0.2.
    :param val_fraction: (optional) The fraction of the remaining patients held out for validation. Defaults to 0.2.
    :param split_seed: (optional) The patient-split seed. Defaults to 0.
    :param stratify: (optional) Whether the split is stratified by patient label. Defaults to True.
    """

    def __init__(
        self, path: Optional[str] = None, synth: Optional[SynthTaskConfig] = None, n: int = 512,
        leads: Optional[int] = None, fs: Optional[float] = None, test_fraction: float = 0.2, val_fraction: float = 0.2,
        split_seed: int = 0, stratify: bool = True,
    ):
        self.path = path
        self.synth = synth
        self.n = n
        self.leads = leads
        self.fs = fs
        self.test_fraction = test_fraction
        self.val_fraction = val_fraction
        self.split_seed = split_seed
        self.stratify = stratify

    def __eq__(self, other):
        if not isinstance(other, DataConfig):
            return False

        return self.to_json() == other.to_json()

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'path={self.path!r}, synth={self.synth!r}, n={self.n}, leads={self.leads}, fs={self.fs}, ' \
               f'test_fraction={self.test_fraction}, val_fraction={self.val_fraction}, ' \
               f'split_seed={self.split_seed}, stratify={self.stratify})'

    def to_json(self) -> dict:
        return {
            'path': self.path,
            'synth': self.synth.to_json() if self.synth else None,
            'n': self.n,
            'leads': self.leads,
            'fs': self.fs,
            'test_fraction': self.test_fraction,
            'val_fraction': self.val_fraction,
            'split_seed': self.split_seed,
            'stratify': self.stratify,
        }

    @classmethod
    def from_json(cls, data: dict) -> 'DataConfig':
        synth = data.get('synth')
        return cls(
            path=data.get('path'),
            synth=SynthTaskConfig.from_json(synth) if synth else None,
            n=int(data.get('n', 512)),
            leads=data.get('leads'),
            fs=data.get('fs'),
            test_fraction=float(data.get('test_fraction', 0.2)),
            val_fraction=float(data.get('val_fraction', 0.2)),
            split_seed=int(data.get('split_seed', 0)),
            stratify=bool(data.get('stratify', True)),
        )


class PolicyConfig:
    """The initial TaskAug policy.

    :param stages: (optional) The number of stages K. Defaults to 2.
    :param temperature: (optional) The Gumbel-Softmax temperature. Defaults to 1.
    :param operators: (optional) The operator identifiers. Defaults to all six.
    :param global_magnitude: (optional) Whether both classes share one strength per operator. Defaults to False.
    """

    def __init__(
        self, stages: int = 2, temperature: float = 1.0, operators: Sequence[str] = DEFAULT_OPERATORS,
        global_magnitude: bool = False,
    ):
        self.stages = stages
        self.temperature = temperature
        self.operators = list(operators)
        self.global_magnitude = global_magnitude

    def __eq__(self, other):
        if not isinstance(other, PolicyConfig):
            return False

        return self.to_json() == other.to_json()

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'stages={self.stages}, temperature={self.temperature}, operators={self.operators!r}, ' \
               f'global_magnitude={self.global_magnitude})'

    def to_json(self) -> dict:
        return {
            'stages': self.stages,
            'temperature': self.temperature,
            'operators': self.operators,
            'global_magnitude': self.global_magnitude,
        }

    @classmethod
    def from_json(cls, data: dict) -> 'PolicyConfig':
        return cls(**{k: data[k] for k in cls().to_json() if k in data})


class RunConfig:
    """The :class:`RunConfig <RunConfig>` object, the complete configuration of one command invocation.

    :param command: The command name.
    :param data: (optional) The :class:`DataConfig <DataConfig>`.
    :param policy: (optional) The :class:`PolicyConfig <PolicyConfig>`.
    :param hyper: (optional) The :class:`HyperConfig <taskaug.hypergrad.config.HyperConfig>`.
    :param train: (optional) The :class:`TrainConfig <taskaug.hypergrad.config.TrainConfig>`.
    :param kernel: (optional) The classifier's convolution kernel size. Defaults to 15.
    :param stride: (optional) The classifier's block stride. Defaults to 2.
    :param widths: (optional) The classifier's block widths. Defaults to [16, 32].
    :param seeds: (optional) The training seeds. Defaults to [0].
    :param workers: (optional) The number of seeds trained in parallel. Defaults to 1.
    :param out: (optional) The output path.
    :param checkpoint: (optional) The checkpoint directory to evaluate.
    :param trajectories: (optional) The trajectory files to inspect.
    :param tolerance: (optional) A relative-error tolerance overriding every gradient check's own.
    :param check_seeds: (optional) The number of seeds per gradient check. Defaults to 20.
    :param snapshot: (optional) The trajectory snapshot to inspect: ``final``, ``initial`` or an epoch number.
        Defaults to ``final``.
    """

    def __init__(
        self, command: str, data: Optional[DataConfig] = None, policy: Optional[PolicyConfig] = None,
        hyper: Optional[HyperConfig] = None, train: Optional[TrainConfig] = None, kernel: int = 15, stride: int = 2,
        widths: Sequence[int] = DESK_WIDTHS, seeds: Optional[Sequence[int]] = None, workers: int = 1,
        out: Optional[str] = None, checkpoint: Optional[str] = None, trajectories: Optional[Sequence[str]] = None,
        tolerance: Optional[float] = None, check_seeds: int = 20, snapshot: str = 'final',
    ):
        if workers < 1:
            raise ValueError(f'workers must be at least 1, got {workers}')
        if check_seeds < 1:
            raise ValueError(f'check seeds must be at least 1, got {check_seeds}')

        self.command = command
        self.data = data if data else DataConfig()
        self.policy = policy if policy else PolicyConfig()
        self.hyper = hyper if hyper else HyperConfig()
        self.train = train if train else TrainConfig()
        self.kernel = kernel
        self.stride = stride
        self.widths = list(widths)
        self.seeds = list(seeds) if seeds is not None else [0]
        self.workers = workers
        self.out = out
        self.checkpoint = checkpoint
        self.trajectories = list(trajectories) if trajectories else []
        self.tolerance = tolerance
        self.check_seeds = check_seeds
        self.snapshot = str(snapshot)

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return False

        return self.to_json() == other.to_json()

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'command={self.command!r}, data={self.data!r}, policy={self.policy!r}, hyper={self.hyper!r}, ' \
               f'train={self.train!r}, seeds={self.seeds}, out={self.out!r})'

    def model_config(self, leads: int, length: int) -> ModelConfig:
        return ModelConfig(leads, length, kernel=self.kernel, stride=self.stride, widths=self.widths)

    def to_json(self) -> dict:
        return {
            'command': self.command,
            'data': self.data.to_json(),
            'policy': self.policy.to_json(),
            'hyper': self.hyper.to_json(),
            'train': self.train.to_json(),
            'model': {'kernel': self.kernel, 'stride': self.stride, 'widths': self.widths},
            'seeds': self.seeds,
            'workers': self.workers,
            'out': self.out,
            'checkpoint': self.checkpoint,
            'trajectories': self.trajectories,
            'tolerance': self.tolerance,
            'check_seeds': self.check_seeds,
            'snapshot': self.snapshot,
        }

    @classmethod
    def from_json(cls, data: dict) -> 'RunConfig':
        model = data.get('model', {})
        return cls(
            data['command'],
            data=DataConfig.from_json(data.get('data', {})),
            policy=PolicyConfig.from_json(data.get('policy', {})),
            hyper=HyperConfig.from_json(data.get('hyper', {})),
            train=TrainConfig.from_json(data.get('train', {})),
            kernel=int(model.get('kernel', 15)),
            stride=int(model.get('stride', 2)),
            widths=model.get('widths', DESK_WIDTHS),
            seeds=data.get('seeds'),
            workers=int(data.get('workers', 1)),
            out=data.get('out'),
            checkpoint=data.get('checkpoint'),
            trajectories=data.get('trajectories'),
            tolerance=data.get('tolerance'),
            check_seeds=int(data.get('check_seeds', 20)),
            snapshot=data.get('snapshot', 'final'),
        )

    def save(self, directory: str) -> str:
        """Writes the configuration as ``run_config.json`` in `directory` and returns the file path.
        """
        if directory:
            os.makedirs(directory, exist_ok=True)
        path = os.path.join(directory, RUN_CONFIG_FILE)
        with open(path, 'w') as f:
            json.dump(self.to_json(), f, indent=2, sort_keys=True)
        return path

    @classmethod
    def load(cls, path: str) -> 'RunConfig':
        with open(path) as f:
            return cls.from_json(json.load(f))


# Flag destination -> path of the value in the RunConfig JSON document.
_FLAG_PATHS: Dict[str, Tuple[str, ...]] = {
    'data': ('data', 'path'),
    'n': ('data', 'n'),
    'leads': ('data', 'leads'),
    'fs': ('data', 'fs'),
    'test_fraction': ('data', 'test_fraction'),
    'val_fraction': ('data', 'val_fraction'),
    'split_seed': ('data', 'split_seed'),
    'stages': ('policy', 'stages'),
    'temperature': ('policy', 'temperature'),
    'global_magnitude': ('policy', 'global_magnitude'),
    'inner_steps': ('hyper', 'inner_steps'),
    'neumann': ('hyper', 'neumann_terms'),
    'inner_lr': ('hyper', 'inner_lr'),
    'outer_lr': ('hyper', 'outer_lr'),
    'alpha': ('hyper', 'alpha'),
    'fd_epsilon': ('hyper', 'fd_epsilon'),
    'freeze_policy': ('hyper', 'freeze_policy'),
    'central_differences': ('hyper', 'central_differences'),
    'aug': ('train', 'strategy'),
    'epochs': ('train', 'epochs'),
    'patience': ('train', 'patience'),
    'batch_size': ('train', 'batch_size'),
    'mask_frac': ('train', 'mask_frac'),
    'smote_neighbors': ('train', 'smote_neighbors'),
    'normalize': ('train', 'normalize'),
    'kernel': ('model', 'kernel'),
    'stride': ('model', 'stride'),
    'workers': ('workers',),
    'out': ('out',),
    'checkpoint': ('checkpoint',),
    'tolerance': ('tolerance',),
    'check_seeds': ('check_seeds',),
    'snapshot': ('snapshot',),
}

_SYNTH_FLAGS = {
    'task': 'task',
    'prevalence': 'prevalence',
    'data_seed': 'seed',
    'synth_leads': 'leads',
    'length': 'length',
    'synth_fs': 'fs',
    'noise_floor': 'noise_floor',
}


def _set(doc: dict, path: Tuple[str, ...], value: Any):
    for key in path[:-1]:
        doc = doc.setdefault(key, {})
    doc[path[-1]] = value


def _split_list(value: str, cast=str) -> List:
    return [cast(v.strip()) for v in value.split(',') if v.strip()]


def resolve_config(command: str, args: argparse.Namespace) -> RunConfig:
    """Builds the run configuration of a command from an optional ``--config`` file and the parsed flags.

    Flags left at their default (None) keep the file's values.

    :param command: The command name.
    :param args: The parsed arguments.
    :return: The resolved :class:`RunConfig <RunConfig>`.
    """
    flags = {k: v for k, v in vars(args).items() if v is not None}
    doc = RunConfig.load(flags['config']).to_json() if flags.get('config') else RunConfig(command).to_json()
    doc['command'] = command

    for dest, path in _FLAG_PATHS.items():
        if dest in flags:
            _set(doc, path, flags[dest])

    if flags.get('no_stratify'):
        doc['data']['stratify'] = False
    if 'operators' in flags:
        doc['policy']['operators'] = _split_list(flags['operators'])
    if 'widths' in flags:
        doc['model']['widths'] = _split_list(flags['widths'], int)
    if 'trajectories' in flags:
        doc['trajectories'] = list(flags['trajectories'])
    if 'seeds' in flags:
        doc['seeds'] = seed_list(flags['seeds'], flags.get('seed_base', 0))
    elif 'seed_base' in flags:
        doc['seeds'] = seed_list(len(doc.get('seeds') or [0]), flags['seed_base'])

    synth = {key: flags[dest] for dest, key in _SYNTH_FLAGS.items() if dest in flags}
    if synth:
        current = doc['data'].get('synth') or {}
        current.update(synth)
        if 'task' not in current:
            raise ValueError('--task is required to generate synthetic records')
        doc['data']['synth'] = current
        if 'data' not in flags:
            doc['data']['path'] = None
    elif 'data' in flags:
        doc['data']['synth'] = None

    return RunConfig.from_json(doc)

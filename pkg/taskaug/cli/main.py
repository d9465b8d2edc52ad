"""The ``taskaug`` command-line entry point.

Exit codes: 0 on success, 1 on a runtime failure, 2 on invalid usage and 3 when gradient checks fail.
"""
import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional

from taskaug.baselines import AugStrategy
from taskaug.cli.commands import cmd_eval, cmd_gen_data, cmd_gradcheck, cmd_inspect_policy, cmd_train
from taskaug.cli.config import RunConfig, resolve_config
from taskaug.data import NormalizeMode, SynthTask
from taskaug.error import CheckFailedError, Error
from taskaug.version import VERSION

logger = logging.getLogger(__name__)

EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_CHECK_FAILED = 3

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def configure_logging(verbose: bool = False, quiet: bool = False):
    """Sends log records to stderr: DEBUG with `verbose`, WARNING with `quiet` and INFO otherwise.
    """
    logging.basicConfig(format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger().setLevel(logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO)


_COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    'gen-data': cmd_gen_data,
    'train': cmd_train,
    'eval': cmd_eval,
    'gradcheck': cmd_gradcheck,
    'inspect-policy': cmd_inspect_policy,
}


def _add_data_source(parser: argparse.ArgumentParser):
    group = parser.add_argument_group('data')
    group.add_argument('--data', help='dataset header (.json) or CSV file')
    group.add_argument('--leads', type=int, help='number of leads of a CSV file')
    group.add_argument('--fs', type=float, help='sampling rate of a CSV file, in Hz')
    group.add_argument('--task', choices=[t.value for t in SynthTask], help='generate synthetic records instead')
    group.add_argument('--n', type=int, help='number of synthetic records (default 512)')
    group.add_argument('--prevalence', type=float, help='fraction of synthetic positives (default 0.2)')
    group.add_argument('--data-seed', type=int, help='seed of the synthetic records (default 0)')


def build_parser() -> argparse.ArgumentParser:
    """Builds the argument parser. Options default to None so that unset flags keep the ``--config`` file's values.
    """
    parser = argparse.ArgumentParser(prog='taskaug', description='Learned per-class augmentation for 1D signals.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {VERSION}')
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='log debug messages')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='log warnings and errors only')

    sub = parser.add_subparsers(dest='command', required=True, metavar='command')

    gen = sub.add_parser('gen-data', help='generate a synthetic dataset')
    gen.add_argument('--config', help='run_config.json to start from')
    gen.add_argument('--task', required=True, choices=[t.value for t in SynthTask])
    gen.add_argument('--n', type=int, help='number of records (default 512)')
    gen.add_argument('--prevalence', type=float, help='fraction of positives (default 0.2)')
    gen.add_argument('--seed', dest='data_seed', type=int, help='generator seed (default 0)')
    gen.add_argument('--leads', dest='synth_leads', type=int, help='number of leads (default 4)')
    gen.add_argument('--length', type=int, help='number of samples per record (default 512)')
    gen.add_argument('--fs', dest='synth_fs', type=float, help='sampling rate in Hz (default 100)')
    gen.add_argument('--noise-floor', type=float, help='white-noise standard deviation (default 0.02)')
    gen.add_argument('--out', required=True, help='dataset header path, e.g. data/rr.json')

    train = sub.add_parser('train', help='train classifiers, one per seed')
    train.add_argument('--config', help='run_config.json to start from')
    _add_data_source(train)
    train.add_argument('--test-fraction', type=float, help='fraction of patients held out for testing (default 0.2)')
    train.add_argument('--val-fraction', type=float, help='fraction of the rest held out for validation (default 0.2)')
    train.add_argument('--split-seed', type=int, help='patient-split seed (default 0)')
    train.add_argument('--no-stratify', action='store_true', default=None, help='split without stratifying')
    train.add_argument('--normalize', choices=[m.value for m in NormalizeMode], help='signal normalization')
    train.add_argument('--aug', choices=[s.value for s in AugStrategy], help='augmentation strategy (default taskaug)')
    train.add_argument('--mask-frac', type=float, help='mask fraction of timemask and specaug (default 0.1)')
    train.add_argument('--smote-neighbors', type=int, help='SMOTE neighbours (default 5)')
    train.add_argument('--stages', type=int, help='number of policy stages K (default 2)')
    train.add_argument('--temperature', type=float, help='Gumbel-Softmax temperature (default 1)')
    train.add_argument('--operators', help='comma-separated operator identifiers (default all six)')
    train.add_argument('--inner-steps', type=int, help='inner steps P between outer steps (default 1)')
    train.add_argument('--neumann', type=int, help='Neumann terms J (default 1)')
    train.add_argument('--inner-lr', type=float, help='Adam learning rate (default 1e-3)')
    train.add_argument('--outer-lr', type=float, help='RMSprop learning rate (default 1e-2)')
    train.add_argument('--alpha', type=float, help='Neumann scaling (default: the inner learning rate)')
    train.add_argument('--fd-epsilon', type=float, help='finite-difference perturbation')
    train.add_argument('--freeze-policy', action='store_true', default=None, help='keep the initial policy')
    train.add_argument('--central-differences', action='store_true', default=None,
                       help='outer steps take central differences at the updated parameters')
    train.add_argument('--global-magnitude', action='store_true', default=None,
                       help='share one strength per operator between the classes')
    train.add_argument('--epochs', type=int, help='epoch budget (default 30)')
    train.add_argument('--patience', type=int, help='early-stopping patience (default 10)')
    train.add_argument('--batch-size', type=int, help='batch size (default 32)')
    train.add_argument('--kernel', type=int, help='convolution kernel size (default 15)')
    train.add_argument('--stride', type=int, help='block stride (default 2)')
    train.add_argument('--widths', help='comma-separated block widths (default 16,32)')
    train.add_argument('--seeds', type=int, help='number of seeds (default 1)')
    train.add_argument('--seed-base', type=int, help='first seed (default 0)')
    train.add_argument('--workers', type=int, help='seeds trained in parallel (default 1)')
    train.add_argument('--out', help='output directory')

    evaluate = sub.add_parser('eval', help='score a checkpoint on a dataset')
    evaluate.add_argument('--config', help='run_config.json to start from')
    evaluate.add_argument('--checkpoint', required=True, help='checkpoint directory, e.g. runs/x/seed-0')
    _add_data_source(evaluate)
    evaluate.add_argument('--normalize', choices=[m.value for m in NormalizeMode],
                          help='normalization when the checkpoint has none saved')
    evaluate.add_argument('--out', help='JSON file to write the scores to')

    gradcheck = sub.add_parser('gradcheck', help='run the gradient-check suite')
    gradcheck.add_argument('--config', help='run_config.json to start from')
    gradcheck.add_argument('--tolerance', type=float, help="relative-error tolerance replacing each check's own")
    gradcheck.add_argument('--check-seeds', type=int, help='seeds per check (default 20)')
    gradcheck.add_argument('--out', help='directory of the gradcheck.csv report (default .)')

    inspect = sub.add_parser('inspect-policy', help='tabulate learned policies')
    inspect.add_argument('--config', help='run_config.json to start from')
    inspect.add_argument('trajectories', nargs='+', help='trajectory.json files')
    inspect.add_argument('--snapshot', help='initial, final (default) or an epoch number')
    inspect.add_argument('--out', help='directory of the CSV tables (default .)')

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    command = args.command
    options = argparse.Namespace(**{k: v for k, v in vars(args).items() if k not in ('command', 'verbose', 'quiet')})
    try:
        cfg = resolve_config(command, options)
    except (KeyError, ValueError, OSError, Error) as e:
        parser.print_usage(sys.stderr)
        logger.error(f'{command}: invalid configuration: {e}')
        return EXIT_USAGE

    try:
        return _COMMANDS[command](cfg)
    except CheckFailedError as e:
        logger.error(f'{len(e.failures)} gradient checks failed: {", ".join(e.failures)}')
        return EXIT_CHECK_FAILED
    except (Error, OSError, ValueError) as e:
        logger.error(f'{command} failed: {e!r}')
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(main())

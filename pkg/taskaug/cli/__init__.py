from taskaug.cli.checks import GradientCheck, CheckResult, registered_checks, run_checks, write_report
from taskaug.cli.config import DataConfig, PolicyConfig, RunConfig, resolve_config
from taskaug.cli.commands import cmd_gen_data, cmd_train, cmd_eval, cmd_gradcheck, cmd_inspect_policy, aggregate, \
    load_records

__all__ = [
    'GradientCheck',
    'CheckResult',
    'registered_checks',
    'run_checks',
    'write_report',
    'DataConfig',
    'PolicyConfig',
    'RunConfig',
    'resolve_config',
    'cmd_gen_data',
    'cmd_train',
    'cmd_eval',
    'cmd_gradcheck',
    'cmd_inspect_policy',
    'aggregate',
    'load_records',
]

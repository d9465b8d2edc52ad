from taskaug.model.checkpoint import save_checkpoint, load_checkpoint
from taskaug.model.config import ModelConfig, FULL_WIDTHS, DESK_WIDTHS
from taskaug.model.metrics import auroc, auprc, MetricRecord
from taskaug.model.network import Classifier, build_model, parameter_layout
from taskaug.model.params import ParameterLayout
from taskaug.model.stopping import EarlyStopping, early_stopping

__all__ = [
    'save_checkpoint',
    'load_checkpoint',
    'ModelConfig',
    'FULL_WIDTHS',
    'DESK_WIDTHS',
    'auroc',
    'auprc',
    'MetricRecord',
    'Classifier',
    'build_model',
    'parameter_layout',
    'ParameterLayout',
    'EarlyStopping',
    'early_stopping',
]

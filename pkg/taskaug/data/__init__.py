from taskaug.data.dataset import Signal, Record, LabeledDataset
from taskaug.data.io import save_dataset, load_dataset, load_csv
from taskaug.data.normalize import NormalizeMode, Normalizer, normalize
from taskaug.data.split import split
from taskaug.data.synth import SynthTask, SynthTaskConfig, generate_synthetic, positive_count, detect_r_peaks, \
    rr_variation

__all__ = [
    'Signal',
    'Record',
    'LabeledDataset',
    'save_dataset',
    'load_dataset',
    'load_csv',
    'NormalizeMode',
    'Normalizer',
    'normalize',
    'split',
    'SynthTask',
    'SynthTaskConfig',
    'generate_synthetic',
    'positive_count',
    'detect_r_peaks',
    'rr_variation',
]

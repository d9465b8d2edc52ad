from taskaug.baselines.dtw import DtwResult, dtw, pairwise_dtw, reference_scores, select_reference, warp_to, \
    dgw_augment
from taskaug.baselines.smote import interpolate, smote, smote_samples
from taskaug.baselines.spectral import Spectrogram, stft, istft, mask_bins, spec_augment
from taskaug.baselines.strategy import AugStrategy, BatchAugmenter, IdentityAugmenter, TimeMaskAugmenter, \
    SpecAugmenter, DgwAugmenter, batch_augmenter, prepare_training_set
from taskaug.baselines.timemask import time_mask_baseline

__all__ = [
    'DtwResult',
    'dtw',
    'pairwise_dtw',
    'reference_scores',
    'select_reference',
    'warp_to',
    'dgw_augment',
    'interpolate',
    'smote',
    'smote_samples',
    'Spectrogram',
    'stft',
    'istft',
    'mask_bins',
    'spec_augment',
    'AugStrategy',
    'BatchAugmenter',
    'IdentityAugmenter',
    'TimeMaskAugmenter',
    'SpecAugmenter',
    'DgwAugmenter',
    'batch_augmenter',
    'prepare_training_set',
    'time_mask_baseline',
]

from taskaug.aug.ops import AugDraw, Operation, TimeMask, GaussianNoise, TemporalWarp, BaselineWander, \
    MagnitudeScale, TemporalDisplacement, OPERATORS, DEFAULT_OPERATORS, get_operator
from taskaug.aug.policy import StageParams, PolicyParams, AttachedStage, AttachedPolicy, init_policy, sample_stage, \
    sample_stage_batch, compute_strength, apply_policy, apply_policy_batch

__all__ = [
    'AugDraw',
    'Operation',
    'TimeMask',
    'GaussianNoise',
    'TemporalWarp',
    'BaselineWander',
    'MagnitudeScale',
    'TemporalDisplacement',
    'OPERATORS',
    'DEFAULT_OPERATORS',
    'get_operator',
    'StageParams',
    'PolicyParams',
    'AttachedStage',
    'AttachedPolicy',
    'init_policy',
    'sample_stage',
    'sample_stage_batch',
    'compute_strength',
    'apply_policy',
    'apply_policy_batch',
]

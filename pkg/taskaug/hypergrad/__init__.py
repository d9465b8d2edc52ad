from taskaug.hypergrad.config import HyperConfig, TrainConfig
from taskaug.hypergrad.implicit import TrainGradients, hessian_vector_product, neumann_inverse_hvp, mixed_partial_vjp, \
    hypergradient, hyper_step
from taskaug.hypergrad.objective import Objective, QuadraticObjective, AugmentedBatchObjective
from taskaug.hypergrad.optim import Optimizer, Adam, RMSprop
from taskaug.hypergrad.train import METRICS_HEADER, EpochRecord, OuterStepRecord, TrainReport, inner_step, evaluate, \
    validation_loss, group_norms, train_loop

__all__ = [
    'HyperConfig',
    'TrainConfig',
    'TrainGradients',
    'hessian_vector_product',
    'neumann_inverse_hvp',
    'mixed_partial_vjp',
    'hypergradient',
    'hyper_step',
    'Objective',
    'QuadraticObjective',
    'AugmentedBatchObjective',
    'Optimizer',
    'Adam',
    'RMSprop',
    'METRICS_HEADER',
    'EpochRecord',
    'OuterStepRecord',
    'TrainReport',
    'inner_step',
    'evaluate',
    'validation_loss',
    'group_norms',
    'train_loop',
]

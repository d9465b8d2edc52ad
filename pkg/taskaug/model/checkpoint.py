import json
import logging
import os
from typing import Optional, Tuple

import numpy as np

from taskaug.error import CorruptDatasetError
from taskaug.model.config import ModelConfig
from taskaug.model.network import parameter_layout

logger = logging.getLogger(__name__)

HEADER_FILE = 'model.json'
PAYLOAD_FILE = 'model.bin'


def save_checkpoint(directory: str, cfg: ModelConfig, theta: np.ndarray, seed: Optional[int] = None):
    """Writes θ as a little-endian float64 payload with a JSON header describing its layout.

    :param directory: The output directory; created if missing.
    :param cfg: The :class:`ModelConfig <taskaug.model.config.ModelConfig>` θ belongs to.
    :param theta: The flat parameter vector.
    :param seed: (optional) The seed the model was trained with.
    """
    layout = parameter_layout(cfg)
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (layout.size,):
        raise ValueError(f'parameter vector has shape {theta.shape}, expected ({layout.size},)')

    os.makedirs(directory, exist_ok=True)
    payload = theta.astype('<f8').tobytes()
    header = {
        'config': cfg.to_json(),
        'seed': seed,
        'parameters': [{'name': name, 'shape': list(shape)} for name, shape in layout.entries],
        'dtype': '<f8',
        'bytes': len(payload),
    }
    with open(os.path.join(directory, HEADER_FILE), 'w') as f:
        json.dump(header, f, indent=2, sort_keys=True)
    with open(os.path.join(directory, PAYLOAD_FILE), 'wb') as f:
        f.write(payload)

    logger.debug(f'wrote checkpoint with {layout.size} parameters to {directory}')


def load_checkpoint(directory: str) -> Tuple[ModelConfig, np.ndarray, Optional[int]]:
    """Reads a checkpoint written by :func:`save_checkpoint`.

    :param directory: The checkpoint directory.
    :return: A tuple of the model configuration, θ and the seed.
    """
    with open(os.path.join(directory, HEADER_FILE)) as f:
        header = json.load(f)

    cfg = ModelConfig.from_json(header['config'])
    layout = parameter_layout(cfg)
    expected = layout.size * 8
    path = os.path.join(directory, PAYLOAD_FILE)
    with open(path, 'rb') as f:
        payload = f.read()

    if len(payload) != expected or header.get('bytes', expected) != expected:
        raise CorruptDatasetError(path, expected, len(payload))

    return cfg, np.frombuffer(payload, dtype='<f8').astype(np.float64), header.get('seed')

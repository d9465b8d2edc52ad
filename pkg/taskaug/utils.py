import math
from typing import List, Sequence, Tuple


def partition(l, size):
    """
    Partition the provided list into a list of sub-lists of the provided size. The last sub-list may be smaller if the
    length of the originally provided list is not evenly divisible by `size`.

    :param l: the list to partition
    :param size: the size of each sub-list

    :return: a list of sub-lists
    """
    if size < 1:
        raise ValueError(f'partition size must be positive, got {size}')

    return [l[i:i + size] for i in range(0, len(l), size)]


def mean_stderr(values: Sequence[float]) -> Tuple[float, float]:
    """Returns the mean and the standard error of the mean of the provided values.

    The standard error uses the sample standard deviation (ddof=1). A single value has a standard error of 0.

    :param values: A non-empty sequence of floats.
    :return: A tuple of (mean, standard error).
    """
    if not values:
        raise ValueError('cannot aggregate an empty sequence')

    n = len(values)
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0

    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def seed_list(count: int, base: int = 0) -> List[int]:
    """Returns `count` consecutive seeds starting at `base`.

    :param count: The number of seeds.
    :param base: (optional) The first seed. Defaults to 0.
    :return: A list of integer seeds.
    """
    if count < 1:
        raise ValueError(f'seed count must be positive, got {count}')

    return list(range(base, base + count))

from typing import List, Optional


class Error(Exception):
    """Base error for TaskAug errors.
    """

    def __repr__(self):
        return f'{self.__class__.__name__}({", ".join([f"{k}={v}" for k, v in self.__dict__.items()])})'

    def __str__(self):
        return repr(self)


class ContractViolationError(Error):
    """Raised when the inputs of an operation violate its preconditions (shapes, ranges, labels).

    :param message: A description naming the operation and the offending values.
    """

    def __init__(self, message: str):
        super().__init__()
        self.message = message


class NonFiniteLossError(Error):
    """Raised when a training loss evaluates to NaN or infinity.

    :param batch_index: The global index of the batch that produced the loss.
    :param loss: The offending loss value.
    """

    def __init__(self, batch_index: int, loss: float):
        super().__init__()
        self.batch_index = batch_index
        self.loss = loss


class NonFiniteHypergradientError(Error):
    """Raised when an outer step produces a NaN or infinite hypergradient, e.g. from a non-finite validation loss.

    :param val_loss: The validation loss of the outer step.
    """

    def __init__(self, val_loss: float):
        super().__init__()
        self.val_loss = val_loss


class UndefinedMetricError(Error):
    """Raised when a ranking metric is requested for labels that contain a single class.
    """


class CorruptDatasetError(Error):
    """Raised when a dataset or checkpoint payload does not match the size declared by its header.

    :param path: The payload path.
    :param expected_bytes: The number of bytes the header declares.
    :param actual_bytes: The number of bytes found.
    """

    def __init__(self, path: str, expected_bytes: int, actual_bytes: int):
        super().__init__()
        self.path = path
        self.expected_bytes = expected_bytes
        self.actual_bytes = actual_bytes


class InsufficientMinorityError(Error):
    """Raised when SMOTE is asked to interpolate a minority class with fewer than two examples.

    :param count: The number of minority examples.
    """

    def __init__(self, count: int):
        super().__init__()
        self.count = count


class MalformedTrajectoryError(Error):
    """Raised when a policy trajectory document cannot be interpreted.

    :param reason: A description of the problem.
    :param path: (optional) The file the trajectory was read from.
    """

    def __init__(self, reason: str, path: Optional[str] = None):
        super().__init__()
        self.reason = reason
        self.path = path


class CheckFailedError(Error):
    """Raised when one or more gradient checks exceed their tolerance.

    :param failures: The names of the failed checks.
    """

    def __init__(self, failures: List[str]):
        super().__init__()
        self.failures = failures

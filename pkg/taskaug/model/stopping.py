from typing import Optional, Sequence, Tuple


class EarlyStopping:
    """Tracks validation losses and signals when training should stop.

    Training stops once the loss has not improved on the best loss for `patience` consecutive epochs.

    :param patience: The number of epochs without improvement to tolerate, at least 1.
    """

    def __init__(self, patience: int):
        if patience < 1:
            raise ValueError(f'patience must be at least 1, got {patience}')

        self.patience = patience
        self.best_loss: Optional[float] = None
        self.best_epoch = 0
        self.epochs = 0
        self.stale = 0

    def __repr__(self):
        return f'{self.__class__.__name__}(' \
               f'patience={self.patience}, best_loss={self.best_loss}, best_epoch={self.best_epoch}, ' \
               f'stale={self.stale})'

    def update(self, loss: float) -> bool:
        """Records the loss of the next epoch.

        :return: True if training should stop after this epoch.
        """
        self.epochs += 1
        if self.best_loss is None or loss < self.best_loss:
            self.best_loss = loss
            self.best_epoch = self.epochs
            self.stale = 0
        else:
            self.stale += 1

        return self.stale >= self.patience

    @property
    def improved(self) -> bool:
        """Whether the most recent epoch is the best so far.
        """
        return self.epochs > 0 and self.best_epoch == self.epochs


def early_stopping(history: Sequence[float], patience: int) -> Tuple[Optional[int], int]:
    """Replays a validation-loss history.

    :param history: The validation loss of each epoch.
    :param patience: The patience.
    :return: A tuple of the 1-based epoch after which training stops (None if it never does) and the best epoch.
    """
    stopper = EarlyStopping(patience)
    for loss in history:
        if stopper.update(loss):
            return stopper.epochs, stopper.best_epoch

    return None, stopper.best_epoch

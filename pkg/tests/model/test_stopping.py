import pytest

from taskaug.model import EarlyStopping, early_stopping


class TestEarlyStopping:
    def test_hand_simulation(self):
        assert early_stopping([1.0, 0.9, 0.95, 0.96, 0.97], 2) == (4, 2)

    def test_decreasing_never_stops(self):
        assert early_stopping([1.0, 0.9, 0.8, 0.7, 0.6], 1) == (None, 5)

    def test_patience_exceeds_epochs(self):
        assert early_stopping([0.5, 0.6, 0.7], 3) == (None, 1)

    def test_improved(self):
        s = EarlyStopping(3)
        assert not s.improved
        s.update(1.0)
        assert s.improved
        s.update(1.0)
        assert not s.improved
        assert s.best_epoch == 1

    def test_invalid_patience(self):
        with pytest.raises(ValueError):
            EarlyStopping(0)

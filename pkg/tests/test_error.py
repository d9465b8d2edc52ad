import pytest

from taskaug.error import CheckFailedError, ContractViolationError, CorruptDatasetError, Error, \
    InsufficientMinorityError, MalformedTrajectoryError, NonFiniteHypergradientError, NonFiniteLossError, \
    UndefinedMetricError


class TestExceptions:
    @pytest.mark.parametrize(
        "error, expected",
        [
            (ContractViolationError('conv1d: bad shape'), "ContractViolationError(message=conv1d: bad shape)"),
            (NonFiniteLossError(7, float('nan')), "NonFiniteLossError(batch_index=7, loss=nan)"),
            (NonFiniteHypergradientError(float('nan')), "NonFiniteHypergradientError(val_loss=nan)"),
            (UndefinedMetricError(), "UndefinedMetricError()"),
            (CorruptDatasetError('d.bin', 64, 60),
             "CorruptDatasetError(path=d.bin, expected_bytes=64, actual_bytes=60)"),
            (InsufficientMinorityError(1), "InsufficientMinorityError(count=1)"),
            (MalformedTrajectoryError('missing stages', 't.json'),
             "MalformedTrajectoryError(reason=missing stages, path=t.json)"),
            (CheckFailedError(['op.relu']), "CheckFailedError(failures=['op.relu'])"),
        ]
    )
    def test_repr(self, error, expected):
        assert isinstance(error, Error)
        assert repr(error) == expected
        assert str(error) == expected

    def test_raise(self):
        with pytest.raises(Error) as e:
            raise NonFiniteLossError(3, float('inf'))

        assert e.value.batch_index == 3
        assert e.value.loss == float('inf')

import math

import pytest

from taskaug.utils import mean_stderr, partition, seed_list


class TestUtils:
    def test_partition(self):
        numbers = list(range(250))
        expected_batches = [numbers[0:100], numbers[100:200], numbers[200:]]
        for idx, number_batch in enumerate(partition(numbers, 100)):
            assert number_batch == expected_batches[idx]

    def test_partition_invalid_size(self):
        with pytest.raises(ValueError):
            partition([1, 2, 3], 0)

    def test_mean_stderr(self):
        mean, stderr = mean_stderr([1.0, 2.0, 3.0, 4.0])

        assert mean == 2.5
        assert stderr == pytest.approx(math.sqrt(5 / 3 / 4))

    def test_mean_stderr_single(self):
        assert mean_stderr([0.8]) == (0.8, 0.0)

    def test_mean_stderr_empty(self):
        with pytest.raises(ValueError):
            mean_stderr([])

    @pytest.mark.parametrize(
        "count, base, expected",
        [
            (1, 0, [0]),
            (3, 0, [0, 1, 2]),
            (2, 10, [10, 11]),
        ]
    )
    def test_seed_list(self, count, base, expected):
        assert seed_list(count, base) == expected

    def test_seed_list_invalid(self):
        with pytest.raises(ValueError):
            seed_list(0)

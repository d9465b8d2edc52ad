import json
import logging

import numpy as np
import pytest

from taskaug.data import LabeledDataset, NormalizeMode, Normalizer, Record, Signal, normalize
from tests.utils import gen_dataset


class TestNormalize:
    def test_divide(self):
        d = LabeledDataset([Record(Signal(np.full((1, 64), 1000.0), 100), 0, 'a')], 'test')

        out = normalize(d, NormalizeMode.DIVIDE_BY_1000)
        assert np.all(out.values() == 1.0)

    def test_none(self):
        d = gen_dataset(4)

        assert normalize(d, NormalizeMode.NONE) is d

    def test_zscore(self):
        d = gen_dataset(6, leads=3)
        d = d.with_values(d.values() * np.array([1.0, 5.0, 0.1])[None, :, None] + 3.0)

        out = normalize(d, NormalizeMode.ZSCORE_PER_LEAD).values()
        assert np.allclose(out.mean(axis=(0, 2)), 0.0, atol=1e-9)
        assert np.allclose(out.std(axis=(0, 2)), 1.0, atol=1e-9)

    def test_zscore_uses_reference(self):
        train = gen_dataset(6, seed=1)
        val = gen_dataset(3, seed=2)

        n = Normalizer(NormalizeMode.ZSCORE_PER_LEAD).fit(train)
        out = n.apply(val).values()
        expected = (val.values() - n.mean[None, :, None]) / n.std[None, :, None]
        assert np.array_equal(out, expected)
        assert np.array_equal(normalize(val, 'zscore_per_lead', reference=train).values(), expected)

    def test_zero_std(self, caplog):
        d = gen_dataset(3, leads=2)
        values = d.values()
        values[:, 1] = 7.0
        d = d.with_values(values)

        with caplog.at_level(logging.WARNING, logger='taskaug.data.normalize'):
            out = normalize(d, NormalizeMode.ZSCORE_PER_LEAD).values()
        assert 'zero standard deviation' in caplog.text
        assert np.all(out[:, 1] == 0.0)
        assert np.all(np.isfinite(out))

    def test_unfitted(self):
        with pytest.raises(ValueError):
            Normalizer(NormalizeMode.ZSCORE_PER_LEAD).apply(gen_dataset(2))

    def test_json(self):
        train = gen_dataset(6, seed=1)
        n = Normalizer(NormalizeMode.ZSCORE_PER_LEAD).fit(train)

        restored = Normalizer.from_json(json.loads(json.dumps(n.to_json())))
        assert np.array_equal(restored.apply(train).values(), n.apply(train).values())
        assert Normalizer.from_json(Normalizer('divide_by_1000').to_json()).mode is NormalizeMode.DIVIDE_BY_1000

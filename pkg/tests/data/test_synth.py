import math

import numpy as np
import pytest

from taskaug.data import SynthTask, SynthTaskConfig, generate_synthetic, positive_count, rr_variation
from taskaug.error import ContractViolationError


class TestSynthTaskConfig:
    def test_json(self):
        cfg = SynthTaskConfig(SynthTask.ST_OFFSET, leads=2, length=256, fs=250, prevalence=0.3, seed=7)

        assert SynthTaskConfig.from_json(cfg.to_json()) == cfg
        assert cfg.to_json()['task'] == 'st_offset'

    @pytest.mark.parametrize('kwargs', [
        dict(prevalence=0.0), dict(prevalence=1.0), dict(length=32), dict(fs=0), dict(noise_floor=-1),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SynthTaskConfig(SynthTask.RR_IRREGULARITY, **kwargs)


class TestGenerateSynthetic:
    def test_prevalence_count(self):
        cfg = SynthTaskConfig(SynthTask.RR_IRREGULARITY, length=128, prevalence=0.05)
        d = generate_synthetic(cfg, 200)

        assert len(d) == 200
        assert d.labels().sum() == 10
        assert d.prevalence == 0.05
        assert positive_count(0.05, 200) == 10

    def test_positive_count_bounds(self):
        assert positive_count(0.01, 10) == 1
        assert positive_count(0.99, 10) == 9

    def test_deterministic(self):
        cfg = SynthTaskConfig(SynthTask.AMPLITUDE_RATIO, length=128, seed=3)

        a = generate_synthetic(cfg, 20)
        b = generate_synthetic(cfg, 20)
        assert a == b
        assert a.values().tobytes() == b.values().tobytes()

        other = generate_synthetic(SynthTaskConfig(SynthTask.AMPLITUDE_RATIO, length=128, seed=4), 20)
        assert other.values().tobytes() != a.values().tobytes()

    def test_records(self):
        cfg = SynthTaskConfig(SynthTask.ST_OFFSET, leads=3, length=128)
        d = generate_synthetic(cfg, 12)

        assert d.task == 'st_offset'
        assert d.leads == 3
        assert d.length == 128
        assert len(set(d.patient_ids())) == 12
        assert not any(r.synthetic for r in d.records)
        # float32-representable
        assert np.array_equal(d.values(), d.values().astype(np.float32).astype(np.float64))

    def test_too_few(self):
        with pytest.raises(ContractViolationError):
            generate_synthetic(SynthTaskConfig(SynthTask.ST_OFFSET), 9)

    def test_rr_irregularity(self):
        cfg = SynthTaskConfig(SynthTask.RR_IRREGULARITY, leads=1, length=2500, fs=250, prevalence=0.5, seed=1)
        d = generate_synthetic(cfg, 40)

        cvs = {0: [], 1: []}
        for r in d.records:
            cv, count = rr_variation(r.signal)
            assert count >= 5
            assert not math.isnan(cv)
            cvs[r.label].append(cv)

        assert np.mean(cvs[1]) >= 3 * np.mean(cvs[0])

    def test_amplitude_ratio(self):
        cfg = SynthTaskConfig(SynthTask.AMPLITUDE_RATIO, leads=2, length=500, fs=250, prevalence=0.5, noise_floor=0.0)
        d = generate_synthetic(cfg, 200)

        ratios = {0: [], 1: []}
        for r in d.records:
            v = r.signal.values
            ratios[r.label].append(v[0].max() / v[1].max())

        assert np.mean(ratios[1]) > 1.2 * np.mean(ratios[0])

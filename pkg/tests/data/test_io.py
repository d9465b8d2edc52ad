import json

import numpy as np
import pytest

from taskaug.data import LabeledDataset, Record, Signal, load_csv, load_dataset, save_dataset
from taskaug.error import CorruptDatasetError
from tests.utils import gen_dataset


class TestDatasetFiles:
    def test_round_trip(self, tmp_path):
        d = gen_dataset(50, leads=3, length=70, fs=250.0, positives=12)
        d.records[3].synthetic = True
        path = str(tmp_path / 'd.json')

        save_dataset(d, path)
        loaded = load_dataset(path)
        assert loaded == d
        assert loaded.values().tobytes() == d.values().tobytes()
        assert loaded.records[3].synthetic

    def test_header(self, tmp_path):
        d = gen_dataset(4, leads=2, length=64, positives=1)
        path = tmp_path / 'd.json'
        save_dataset(d, str(path))

        header = json.loads(path.read_text())
        assert header['n'] == 4
        assert header['leads'] == 2
        assert header['length'] == 64
        assert header['labels'] == [1, 0, 0, 0]
        assert (tmp_path / 'd.bin').stat().st_size == 4 * 2 * 64 * 4

    def test_endianness(self, tmp_path):
        d = LabeledDataset([Record(Signal(np.ones((1, 64)), 100), 1, 'a')], 'test')
        save_dataset(d, str(tmp_path / 'd.json'))

        assert (tmp_path / 'd.bin').read_bytes()[:4] == b'\x00\x00\x80\x3f'

    def test_truncated(self, tmp_path):
        d = gen_dataset(5)
        save_dataset(d, str(tmp_path / 'd.json'))
        payload = tmp_path / 'd.bin'
        payload.write_bytes(payload.read_bytes()[:-3])

        with pytest.raises(CorruptDatasetError) as e:
            load_dataset(str(tmp_path / 'd.json'))
        assert e.value.expected_bytes == 5 * 2 * 64 * 4
        assert e.value.actual_bytes == 5 * 2 * 64 * 4 - 3

    def test_empty(self, tmp_path):
        with pytest.raises(ValueError):
            save_dataset(LabeledDataset([], 'test'), str(tmp_path / 'd.json'))


class TestLoadCsv:
    def test_load(self, tmp_path):
        rows = ['patient_id,label,values']
        for i in range(3):
            rows.append(','.join([f'p{i}', str(i % 2)] + [str(float(v + i)) for v in range(128)]))
        path = tmp_path / 'd.csv'
        path.write_text('\n'.join(rows) + '\n')

        d = load_csv(str(path), leads=2, fs=100.0, task='ptbxl')
        assert len(d) == 3
        assert d.task == 'ptbxl'
        assert d.labels().tolist() == [0, 1, 0]
        assert d.values().shape == (3, 2, 64)
        assert d.values()[1, 1, 0] == 65.0

    def test_bad_row(self, tmp_path):
        path = tmp_path / 'd.csv'
        path.write_text('a,0,' + ','.join(['1.0'] * 129) + '\n')

        with pytest.raises(ValueError):
            load_csv(str(path), leads=2, fs=100.0)

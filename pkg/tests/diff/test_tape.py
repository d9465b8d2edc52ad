import numpy as np
import pytest

from taskaug.diff import Tape, backward, ops
from taskaug.error import ContractViolationError


class TestTape:
    def test_leaves(self):
        tape = Tape()
        c = tape.constant([1, 2])
        p = tape.parameter(3)

        assert c.value.dtype == np.float64
        assert not c.requires_grad
        assert p.requires_grad
        assert p.item() == 3.0
        assert len(tape) == 2

    def test_square(self):
        tape = Tape()
        p = tape.parameter(3.0)
        loss = p * p

        assert backward(loss, [p])[0] == 6.0

    def test_fan_out_accumulates(self):
        tape = Tape()
        p = tape.parameter(2.0)
        y = p + p

        assert backward(y, [p])[0] == 2.0

    def test_sum_sigmoid(self):
        tape = Tape()
        p = tape.parameter(np.zeros(4))
        loss = ops.sum(ops.sigmoid(p))

        np.testing.assert_array_equal(backward(loss, [p])[0], np.full(4, 0.25))

    def test_bce_of_sigmoid(self):
        tape = Tape()
        z = tape.parameter(0.0)
        loss = ops.bce_loss(ops.sigmoid(z), 1.0)

        assert backward(loss, [z])[0] == pytest.approx(-0.5, abs=1e-12)

    def test_unreachable_gets_zero(self):
        tape = Tape()
        p = tape.parameter([1.0, 2.0])
        q = tape.parameter([[1.0], [2.0]])
        loss = ops.sum(p)

        gp, gq = backward(loss, [p, q])
        np.testing.assert_array_equal(gp, np.ones(2))
        np.testing.assert_array_equal(gq, np.zeros((2, 1)))

    def test_intermediate_wrt(self):
        tape = Tape()
        p = tape.parameter(3.0)
        h = ops.scale(p, 2.0)
        loss = h * h

        gh, gp = backward(loss, [h, p])
        assert gh == 12.0
        assert gp == 24.0

    def test_non_scalar_loss(self):
        tape = Tape()
        p = tape.parameter([1.0, 2.0])

        with pytest.raises(ContractViolationError):
            backward(p, [p])

    def test_foreign_tape(self):
        a = Tape().parameter(1.0)
        b = Tape().parameter(1.0)

        with pytest.raises(ContractViolationError):
            ops.add(a, b)

        with pytest.raises(ContractViolationError):
            Tape().backward(a, [a])

    def test_replay_determinism(self):
        x = np.random.default_rng(3).standard_normal((2, 16))
        w = np.random.default_rng(4).standard_normal((3, 2, 5))

        results = []
        for _ in range(2):
            tape = Tape()
            xn = tape.parameter(x)
            wn = tape.parameter(w)
            loss = ops.mean(ops.relu(ops.conv1d(xn, wn, stride=2)))
            results.append((loss.value, *backward(loss, [xn, wn])))

        for a, b in zip(*results):
            assert a.tobytes() == b.tobytes()

    def test_operators(self):
        tape = Tape()
        p = tape.parameter(2.0)

        assert (1.0 - p).item() == -1.0
        assert (p - 1.0).item() == 1.0
        assert (3.0 * p).item() == 6.0
        assert (1.0 + p).item() == 3.0
        assert (-p).item() == -2.0

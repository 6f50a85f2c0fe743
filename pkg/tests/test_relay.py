import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bufstc.coding import BPSK
from bufstc.relay import (BufferEmptyError, BufferFullError, RelayBuffer, RelayNode,
                          StoredBlock, df_detect)


def block(unit):
    return StoredBlock(unit, np.array([unit], dtype=complex))


class TestBuffer:
    def test_push_pop(self):
        relay = RelayNode(0, capacity=2)
        relay.push_block(block(1))
        assert relay.occupancy == 1
        relay.push_block(block(2))
        with pytest.raises(BufferFullError):
            relay.push_block(block(3))
        assert relay.pop_block().unit == 1
        assert relay.pop_block().unit == 2
        with pytest.raises(BufferEmptyError):
            relay.pop_block()

    def test_capacity_validated(self):
        with pytest.raises(ValueError):
            RelayBuffer(0)
        with pytest.raises(ValueError):
            RelayNode(0, 2, protocol="XF")

    @given(st.lists(st.booleans(), max_size=60), st.integers(1, 5))
    def test_occupancy_conservation(self, ops, capacity):
        buf = RelayBuffer(capacity)
        pushes = pops = 0
        for push in ops:
            try:
                if push:
                    buf.push(block(pushes))
                    pushes += 1
                else:
                    buf.pop()
                    pops += 1
            except (BufferFullError, BufferEmptyError):
                pass
            assert 0 <= buf.occupancy <= capacity
            assert buf.occupancy == pushes - pops


class TestDf:
    def test_noiseless_reception(self):
        s = np.array([1, -1, -1, 1], dtype=complex)
        f = 0.3 - 0.9j
        relay = RelayNode(0, 1, protocol="DF").df_receive(0, f * s, f)
        np.testing.assert_array_equal(relay.pop_block().samples, s)

    def test_nearest_neighbour(self, rng):
        f = 0.7 + 0.2j
        r = rng.standard_normal(200) + 1j * rng.standard_normal(200)
        expected = [min(BPSK, key=lambda c: abs(x - f * c)) for x in r]
        np.testing.assert_array_equal(df_detect(r, f), expected)

    def test_matrix_channel_joint(self, rng):
        f = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        s = np.array([1, -1, -1, -1], dtype=complex)
        r = (s.reshape(-1, 2) @ f.T).reshape(-1)
        np.testing.assert_array_equal(df_detect(r, f), s)

    def test_relays_can_disagree(self):
        rng = np.random.default_rng(3)
        s = np.ones(500, dtype=complex)
        a = df_detect(s + rng.standard_normal(500), 1.0)
        b = df_detect(s + rng.standard_normal(500), 1.0)
        assert not np.array_equal(a, b)


def test_af_stores_raw_samples():
    r = np.array([0.5 + 1j, -2.0])
    relay = RelayNode(1, 1).af_receive(7, r, sr_channel=0.5)
    out = relay.pop_block()
    assert out.unit == 7 and out.sr_channel == 0.5
    np.testing.assert_array_equal(out.samples, r)

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bufstc.selection import (RD, SR, dstc_group_scores, select_best_relay_mas, select_bmmrs,
                              select_dstc_group, select_max_link, snr_rd, snr_sr)


def test_snr_sr():
    assert snr_sr(1 + 0j, 1.0) == 1.0
    assert snr_sr(0.0, 1.0) == 0.0
    assert snr_sr(np.eye(2), 0.5) == 4.0


def test_snr_rd():
    assert snr_rd(np.eye(1), 1.0, 1.0) == 1.0
    assert snr_rd(np.zeros((2, 2)), np.ones(2), 1.0) == 0.0
    assert snr_rd(np.diag([2, 1]), np.ones(2), 1.0) == 5.0


class TestMaxLink:
    def test_single_relay(self):
        assert select_max_link([0.1], [9.0], [0], 2).direction == SR
        assert select_max_link([9.0], [0.1], [2], 2).direction == RD

    def test_skips_full_relay(self):
        dec = select_max_link([5.0, 2.0], [1.0, 3.0], [2, 0], 2)
        assert (dec.relay, dec.direction) == (1, SR)
        assert dec.skipped == ((0, SR, "full"), (1, RD, "empty"))
        dec = select_max_link([5.0, 2.0], [1.0, 3.0], [2, 1], 2)
        assert (dec.relay, dec.direction) == (1, RD)

    def test_ties(self):
        assert select_max_link([1.0, 1.0], [1.0, 1.0], [1, 1], 2).direction == SR
        assert select_max_link([1.0, 1.0], [0.0, 0.0], [1, 0], 2).relay == 1

    def test_no_source_data(self):
        dec = select_max_link([9.0], [1.0], [1], 2, source_active=False)
        assert dec.direction == RD
        with pytest.raises(RuntimeError):
            select_max_link([9.0], [1.0], [0], 2, source_active=False)

    @pytest.mark.parametrize("n_r, cap", [(1, 1), (2, 2), (3, 3), (2, 3)])
    def test_feasibility_exhaustive(self, n_r, cap):
        rng = np.random.default_rng(n_r * 10 + cap)
        for occ in itertools.product(range(cap + 1), repeat=n_r):
            sr, rd = rng.exponential(size=n_r), rng.exponential(size=n_r)
            dec = select_max_link(sr, rd, occ, cap)
            if dec.direction == SR:
                assert occ[dec.relay] < cap
            else:
                assert occ[dec.relay] > 0

    @given(st.lists(st.floats(0.01, 100), min_size=4, max_size=4),
           st.floats(0.1, 10), st.lists(st.integers(0, 2), min_size=2, max_size=2))
    def test_scale_equivariance(self, m, c, occ):
        a = select_max_link(m[:2], m[2:], occ, 2)
        b = select_max_link([c * x for x in m[:2]], [c * x for x in m[2:]], occ, 2)
        assert (a.relay, a.direction) == (b.relay, b.direction)


class TestBaselines:
    def test_single_relay(self):
        assert select_bmmrs([1.0], [2.0], "BRS").relay == 0
        assert select_bmmrs([1.0], [2.0], "MMRS").relay == 0

    def test_brs_tie(self):
        assert select_bmmrs([4, 1], [1, 4], "BRS").relay == 0

    def test_mmrs(self):
        assert select_bmmrs([2, 5], [0, 0], "MMRS").relay == 1
        assert select_bmmrs([2, 5], [0, 0], "MMRS", [0, 3], 3).relay == 0
        assert select_bmmrs([0, 0], [7, 1], "MMRS", [1, 1], 3, slot="forward").relay == 0

    def test_errors(self):
        with pytest.raises(ValueError):
            select_bmmrs([1], [1], "XYZ")
        with pytest.raises(RuntimeError):
            select_bmmrs([1], [1], "MMRS", [0], 1, slot="forward")


class TestDstc:
    def test_group_counts(self):
        groups, _ = dstc_group_scores([1.0, 2.0], 2, 1.0)
        assert groups == [(0, 1)]
        groups, _ = dstc_group_scores([1.0] * 4, 2, 1.0)
        assert len(groups) == math.comb(4, 2) == 6

    @given(st.integers(0, 2**32 - 1), st.integers(2, 5))
    def test_brute_force(self, seed, n_r):
        g = np.random.default_rng(seed)
        ch = list(g.standard_normal(n_r) + 1j * g.standard_normal(n_r))
        groups = list(itertools.combinations(range(n_r), 2))
        energy = [sum(abs(ch[k]) ** 2 for k in grp) for grp in groups]
        score = [e / (sum(math.sqrt(x) for j, x in enumerate(energy) if j != i) + 0.1)
                 for i, e in enumerate(energy)]
        assert select_dstc_group(ch, 2, 0.1) == groups[int(np.argmax(score))]

    def test_best_relay_mas(self):
        assert select_best_relay_mas([np.eye(2)], 1.0) == 0
        assert select_best_relay_mas([np.eye(2), 2 * np.eye(2)], 1.0) == 1
        assert select_best_relay_mas([np.eye(2), np.eye(2)], 1.0) == 0

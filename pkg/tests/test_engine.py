import math
from dataclasses import replace

import numpy as np
import pytest

from bufstc.channel import NoiseConfig
from bufstc.engine import (BerCurve, BerPoint, ConfigError, ScenarioConfig, _Trial,
                           diversity_slope, estimate_ber, run_trial, snr_at_ber, wilson_interval)

# E[Q(sqrt(2 * snr_eff))] with snr_eff = gamma |f|^2 |g|^2 / (|g|^2 + 1) at gamma = 10 dB,
# averaged over 10^7 sampled (f, g) pairs with scipy (standard error 3e-5).
TWO_HOP_AF_10DB = 0.07573833

SMALL = dict(block_len=20, packets=10)
QUIET = NoiseConfig(1e-12, 1e-12)

ALL_SCENARIOS = {
    "sas-maxlink": ScenarioConfig(**SMALL),
    "sas-abaro": ScenarioConfig(**SMALL, policy="ABARO", coding="r-alamouti"),
    "sas-brs": ScenarioConfig(**SMALL, policy="BRS"),
    "sas-mmrs": ScenarioConfig(**SMALL, policy="MMRS", n_r=3),
    "mas-packet": ScenarioConfig(**SMALL, topology="MAS", antennas=2, coding="alamouti",
                                 coherence="per-packet"),
    "mas-abaro": ScenarioConfig(**SMALL, topology="MAS", antennas=2, coding="r-alamouti",
                                policy="ABARO"),
    "dstc-sas": ScenarioConfig(**SMALL, topology="DSTC-SAS", n_r=3, coding="alamouti"),
    "dstc-sas-abaro": ScenarioConfig(**SMALL, topology="DSTC-SAS", n_r=4, coding="r-alamouti",
                                     policy="ABARO", coherence="per-packet"),
    "dstc-mas": ScenarioConfig(**SMALL, topology="DSTC-MAS", antennas=2, coding="alamouti"),
    "direct": ScenarioConfig(**SMALL, topology="DIRECT", n_r=1),
    "direct-alamouti": ScenarioConfig(**SMALL, topology="DIRECT", n_r=1, coding="alamouti"),
}


class TestValidation:
    def test_divisibility_names_m_and_n(self):
        cfg = ScenarioConfig(topology="MAS", antennas=3, block_len=100)
        with pytest.raises(ConfigError) as err:
            cfg.validate()
        assert err.value.key == "block_len"
        assert "M=100" in str(err.value) and "N=3" in str(err.value)

    @pytest.mark.parametrize("kw", [
        dict(topology="XYZ"),
        dict(policy="ABARO", coding="none"),
        dict(coding="alamouti"),
        dict(topology="DSTC-SAS", n_r=1, coding="alamouti"),
        dict(policy="BRS", topology="DSTC-MAS", antennas=2, coding="alamouti"),
        dict(buffer_capacity=0),
        dict(csi_error=-0.1),
    ])
    def test_rejected(self, kw):
        with pytest.raises(ConfigError):
            run_trial(ScenarioConfig(**kw), 0)


@pytest.mark.parametrize("name", sorted(ALL_SCENARIOS))
def test_noiseless_limit(name):
    res = run_trial(replace(ALL_SCENARIOS[name], noise=QUIET), 4)
    assert res.errors == 0
    assert res.bits == 200


@pytest.mark.parametrize("name", ["sas-maxlink", "mas-packet", "dstc-sas"])
def test_huge_noise_is_coin_flip(name):
    cfg = replace(ALL_SCENARIOS[name], packets=100, block_len=100, noise=NoiseConfig(1e6, 1e6))
    bits = errors = 0
    for seed in range(10):
        res = run_trial(cfg, seed)
        bits, errors = bits + res.bits, errors + res.errors
    assert bits == 100_000
    assert errors / bits == pytest.approx(0.5, abs=0.02)


def test_two_hop_af_oracle():
    cfg = ScenarioConfig(n_r=1, buffer_capacity=1, noise=NoiseConfig.from_snr_db(10.0))
    curve = estimate_ber(cfg, range(10), [10.0])
    p = curve.points[0]
    se = math.sqrt(TWO_HOP_AF_10DB * (1 - TWO_HOP_AF_10DB) / p.bits)
    assert abs(p.ber - TWO_HOP_AF_10DB) < 3 * se


@pytest.mark.parametrize("coding", ["none", "r-alamouti"])
def test_af_composition(coding):
    cfg = ScenarioConfig(**SMALL, coding=coding, power=replace(ScenarioConfig().power, p_s=2.0, p_r=0.5))
    trial = _Trial(cfg, 3)
    trial.sr_noise[:] = 0
    unit, k, t = 0, 1, 5
    trial.f[t, k] = 0.8 - 0.0j  # real first hop so the codeword conjugates commute
    x = trial.relay_input(unit, k, t)
    v = trial.codes[k]
    h = trial.g[t, k] * trial.f[t, k]
    codewords = trial._tx_codewords(x)
    r = np.stack([(trial.a_r * trial.tx_matrix(trial.g[t], (k,)) @ (v[:, None] * c)).ravel()
                  for c in codewords])
    expected = np.stack([math.sqrt(cfg.power.p_r * cfg.power.p_s) * h * (v @ c)
                         for c in trial._tx_codewords(trial.symbols[unit])])
    np.testing.assert_allclose(r, expected, atol=1e-12)


@pytest.mark.parametrize("name", ["sas-maxlink", "sas-mmrs", "sas-brs", "dstc-sas"])
def test_schedule_audit(name):
    cfg = replace(ALL_SCENARIOS[name], noise=NoiseConfig.from_snr_db(5.0))
    res = run_trial(cfg, 9, audit=True)
    slots = [a[0] for a in res.audit]
    if cfg.policy == "BRS":
        assert len(slots) == 2 * cfg.units
    else:
        assert slots == list(range(res.slots))  # one served link per slot
    occupancy = [0] * cfg.n_r
    received = delivered = 0
    dstc = cfg.topology.startswith("DSTC")
    for _, direction, relays in res.audit:
        # DSTC relays all drop the forwarded block, only the chosen group transmits
        touched = range(cfg.n_r) if dstc else relays
        for k in touched:
            occupancy[k] += 1 if direction == "SR" else -1
            assert 0 <= occupancy[k] <= cfg.buffer_capacity
        received += direction == "SR"
        delivered += direction == "RD"
    assert received == delivered == cfg.units
    assert occupancy == [0] * cfg.n_r


def test_estimate_ber_deterministic():
    cfg = ALL_SCENARIOS["sas-abaro"]
    a = estimate_ber(cfg, range(4), [0.0, 6.0])
    b = estimate_ber(cfg, range(4), [0.0, 6.0])
    assert a.points == b.points


def test_workers_do_not_change_results():
    cfg = ALL_SCENARIOS["sas-maxlink"]
    a = estimate_ber(cfg, range(10), [3.0], workers=1)
    b = estimate_ber(cfg, range(10), [3.0], workers=2)
    assert a.points == b.points


def test_interval_shrinks_with_trials():
    cfg = ScenarioConfig(topology="DIRECT", n_r=1)
    small = estimate_ber(cfg, range(8), [5.0]).points[0]
    big = estimate_ber(cfg, range(16), [5.0]).points[0]
    ratio = (small.ci_high - small.ci_low) / (big.ci_high - big.ci_low)
    assert ratio == pytest.approx(math.sqrt(2), rel=0.1)


def test_early_stopping():
    cfg = ScenarioConfig(topology="DIRECT", n_r=1)
    p = estimate_ber(cfg, range(100), [0.0], min_errors=100).points[0]
    assert p.trials == 8 and p.errors >= 100
    p = estimate_ber(cfg, range(100), [30.0], min_errors=100, max_bits=50_000).points[0]
    assert p.bits == 8 * 20_000 and p.below_floor


def test_ber_decreases_with_snr():
    curve = estimate_ber(ALL_SCENARIOS["sas-maxlink"], range(16), [0.0, 5.0, 10.0, 15.0])
    for a, b in zip(curve.points, curve.points[1:]):
        assert b.ci_low <= a.ci_high


def test_csi_error_hurts():
    cfg = replace(ScenarioConfig(topology="MAS", antennas=2, coding="alamouti",
                                 coherence="per-packet"))
    clean = estimate_ber(cfg, range(8), [15.0]).points[0]
    noisy = estimate_ber(replace(cfg, csi_error=0.2), range(8), [15.0]).points[0]
    assert noisy.ber > clean.ber


def synthetic(order):
    snr = np.arange(0.0, 31.0, 5.0)
    pts = [BerPoint(s, (10 ** (s / 10)) ** -order, 10**9, 1000, 0, 0, 1) for s in snr]
    return BerCurve(pts)


class TestSlope:
    @pytest.mark.parametrize("order", [1, 2])
    def test_synthetic(self, order):
        assert diversity_slope(synthetic(order), (0, 30)) == pytest.approx(-order, abs=0.01)

    def test_not_estimable(self):
        assert diversity_slope(synthetic(1), (9, 11)) is None


def test_snr_at_ber():
    assert snr_at_ber([0, 10], [1e-1, 1e-3], 1e-2) == pytest.approx(5.0)
    assert snr_at_ber([0, 10], [1e-1, 1e-3], 1e-5) is None


def test_wilson():
    lo, hi = wilson_interval(0, 1000)
    assert lo == 0 and 0 < hi < 0.005
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi

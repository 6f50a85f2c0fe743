"""Monte Carlo trials and BER sweeps for buffer-aided relaying.

A trial sends ``packets * block_len`` BPSK symbols from the source and runs
the slot-by-slot schedule until every block has been delivered to the
destination (buffers are drained after the source runs dry).  One
scheduling decision moves one *unit*: a whole packet when the channel is
static per packet, or a single code group when it changes every symbol
period.

Signal model, shared by every topology::

    relay input (AF)   x = a_s * F s + n_r          a_s = sqrt(P_S) or sqrt(P_S / N)
    destination        r = a_r * H diag(v) C(x) + n_d

``C(.)`` is the space-time codeword (one column for uncoded links), ``v``
the adjustable code of the transmitting relay(s) and ``H`` the channel from
the transmit elements (code rows) to the destination antennas.  For a
single-antenna relay ``H = g * [1, ..., 1]`` so the relay emits ``v C``.
DF relays replace ``x`` by their symbol decisions.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .abaro import SgConfig, code_regressor, lms_code_step, normalize_code
from .channel import NoiseConfig, PowerConfig, complex_normal, perturb_csi
from .coding import (BPSK, bpsk_demodulate, bpsk_modulate, candidate_set, gaussian_code,
                     ml_detect_batch, stc_matrix, unit_phase_code)
from .numerics import RngStream
from .relay import RelayNode
from .selection import (SR, select_best_relay_mas, select_bmmrs, select_dstc_group,
                        select_max_link)

__all__ = [
    "BerCurve",
    "BerPoint",
    "ConfigError",
    "ScenarioConfig",
    "TrialResult",
    "diversity_slope",
    "estimate_ber",
    "run_trial",
    "snr_at_ber",
    "wilson_interval",
]

TOPOLOGIES = ("DIRECT", "SAS", "MAS", "DSTC-SAS", "DSTC-MAS")
POLICIES = ("ABARO", "MAXLINK-NOOPT", "BRS", "MMRS")
CODINGS = ("none", "alamouti", "r-alamouti")
COHERENCE = ("per-symbol", "per-packet")
RANDOMIZATION = ("gaussian", "unit-phase")

WORKERS_ENV = "BUFSTC_WORKERS"
SEED_BATCH = 8
MIN_ERRORS = 100
MAX_BITS = 10_000_000

# independent random streams inside one trial
_BITS, _SR_CH, _RD_CH, _SR_NOISE, _RD_NOISE, _CODE, _CSI = range(7)


class ConfigError(ValueError):
    """Invalid scenario; ``key`` names the offending setting(s)."""

    def __init__(self, key, message, code="constraint"):
        super().__init__(f"{key}: {message}")
        self.key = key
        self.code = code


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything that defines one simulated link at one noise level.

    ``block_len`` is the packet size M and ``packets`` the packet count J.
    ``buffer_capacity`` is counted in scheduling units (see module docs).
    """

    topology: str = "SAS"
    n_r: int = 2
    antennas: int = 1
    block_len: int = 100
    packets: int = 200
    buffer_capacity: int = 4
    policy: str = "MAXLINK-NOOPT"
    coding: str = "none"
    coherence: str = "per-symbol"
    power: PowerConfig = field(default_factory=PowerConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    csi_error: float = 0.0
    sg: SgConfig = field(default_factory=SgConfig)
    randomization: str = "gaussian"
    n_dstc: int = 2

    @property
    def stc(self):
        return self.coding != "none"

    @property
    def group_size(self):
        """Symbols per code group (the code's row count)."""
        if self.topology in ("MAS", "DSTC-MAS"):
            return self.antennas
        if self.topology == "DSTC-SAS":
            return self.n_dstc
        return 2 if self.stc else 1

    @property
    def unit_len(self):
        return self.block_len if self.coherence == "per-packet" else self.group_size

    @property
    def units(self):
        return self.packets * self.block_len // self.unit_len

    @property
    def adaptive(self):
        return self.policy == "ABARO"

    @property
    def code_budget(self):
        """``P_V``; defaults to the norm of the all-ones code except for single-antenna relays."""
        if self.power.p_v is not None:
            return self.power.p_v
        if self.topology == "SAS":
            return 1.0
        return math.sqrt(self.group_size)

    def validate(self):
        _one_of("topology", self.topology, TOPOLOGIES)
        _one_of("policy", self.policy, POLICIES)
        _one_of("coding", self.coding, CODINGS)
        _one_of("coherence", self.coherence, COHERENCE)
        _one_of("randomization", self.randomization, RANDOMIZATION)
        for key in ("n_r", "antennas", "block_len", "packets", "buffer_capacity"):
            if int(getattr(self, key)) < 1:
                raise ConfigError(key, "must be at least 1")
        if self.csi_error < 0:
            raise ConfigError("csi_error", "variance must be non-negative")
        top = self.topology
        if top in ("SAS", "DSTC-SAS", "DIRECT") and self.antennas != 1:
            raise ConfigError("antennas", f"{top} uses single-antenna nodes")
        if top in ("MAS", "DSTC-MAS") and self.antennas < 2:
            raise ConfigError("antennas", f"{top} needs N >= 2 antennas per node")
        if top == "SAS" and self.coding == "alamouti":
            raise ConfigError("coding", "a single-antenna relay cannot send the standard "
                              "Alamouti code; use 'r-alamouti'")
        if top == "DIRECT" and self.coding == "r-alamouti":
            raise ConfigError("coding", "DIRECT supports 'none' or 'alamouti'")
        if self.stc and self.group_size != 2:
            raise ConfigError("antennas", "the Alamouti family needs code groups of 2")
        if top == "DSTC-SAS":
            if not self.stc:
                raise ConfigError("coding", "DSTC-SAS needs a distributed Alamouti code")
            if self.n_r < self.n_dstc:
                raise ConfigError("n_r", f"need at least n_dstc={self.n_dstc} relays")
        if self.block_len % self.group_size:
            raise ConfigError("block_len", f"M={self.block_len} is not divisible by "
                              f"N={self.group_size}")
        if self.policy in ("BRS", "MMRS") and top not in ("SAS", "MAS"):
            raise ConfigError("policy", f"{self.policy} applies to SAS/MAS relaying only")
        if self.adaptive and self.coding != "r-alamouti":
            raise ConfigError("coding", "ABARO adapts the randomized code; use 'r-alamouti'")
        return self


def _one_of(key, value, allowed):
    if value not in allowed:
        raise ConfigError(key, f"{value!r} is not one of {', '.join(allowed)}")


@dataclass
class TrialResult:
    bits: int
    errors: int
    slots: int
    audit: list | None = None


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    ber: float
    bits: int
    errors: int
    ci_low: float
    ci_high: float
    trials: int

    @property
    def below_floor(self):
        return self.errors < MIN_ERRORS


@dataclass
class BerCurve:
    points: list
    seeds: list = field(default_factory=list)

    @property
    def snr_db(self):
        return np.array([p.snr_db for p in self.points])

    @property
    def ber(self):
        return np.array([p.ber for p in self.points])


# ---------------------------------------------------------------------------
# trial


class _Trial:
    """State of one trial: pre-drawn randomness, relays and the error tally."""

    def __init__(self, cfg, seed, audit=False):
        self.cfg = cfg
        self.audit = [] if audit else None
        stream = lambda k: RngStream(seed, k).generator()
        top = cfg.topology
        self.n = cfg.group_size
        self.groups = cfg.unit_len // self.n
        self.t_len = 2 if cfg.stc else 1
        self.rx = cfg.antennas if top in ("MAS", "DSTC-MAS") else 1
        self.matrix_links = top in ("MAS", "DSTC-MAS")

        U = cfg.units
        self.bits = stream(_BITS).integers(0, 2, size=(U, cfg.unit_len), dtype=np.int8)
        self.symbols = bpsk_modulate(self.bits)

        n_dec = 2 * U
        link_shape = (n_dec, cfg.n_r, self.rx, self.rx) if self.matrix_links else (n_dec, cfg.n_r)
        self.f = complex_normal(stream(_SR_CH), link_shape)
        self.g = complex_normal(stream(_RD_CH), link_shape)
        csi = stream(_CSI)
        self.f_hat = perturb_csi(self.f, cfg.csi_error, csi)
        self.g_hat = perturb_csi(self.g, cfg.csi_error, csi)

        sr_shape = (U, cfg.n_r, cfg.unit_len) if top.startswith("DSTC") else (U, cfg.unit_len)
        self.sr_noise = math.sqrt(cfg.noise.sigma_r_sq) * complex_normal(stream(_SR_NOISE), sr_shape)
        self.rd_noise = math.sqrt(cfg.noise.sigma_d_sq) * complex_normal(
            stream(_RD_NOISE), (U, self.groups, self.rx * self.t_len))
        self.code_rng = stream(_CODE)

        self.p_v = cfg.code_budget
        if top in ("SAS", "DSTC-SAS"):
            self.a_s = math.sqrt(cfg.power.p_s)
        else:
            self.a_s = math.sqrt(cfg.power.p_s / self.n)
        self.a_r = math.sqrt(cfg.power.p_r / (1 if top == "SAS" else self.n))
        # DSTC-SAS weights are per relay; everything else carries one code per relay
        code_len = 1 if top == "DSTC-SAS" else self.n
        self.codes = [self._initial_code(code_len) for _ in range(cfg.n_r)]
        self.code_pow = [float(np.vdot(v, v).real) for v in self.codes]
        self.cands = candidate_set(BPSK, self.n)
        self.pending = []
        self.errors = 0
        self.delivered = np.zeros(U, dtype=np.int8)

    # -- codes -------------------------------------------------------------

    def _initial_code(self, length):
        budget = self.p_v if self.cfg.topology != "DSTC-SAS" else self.p_v / math.sqrt(self.n)
        if self.cfg.adaptive:
            return unit_phase_code(length, budget, self.code_rng)
        return self._fresh_code(length, budget)

    def _fresh_code(self, length, budget=None):
        if budget is None:
            budget = self.p_v if self.cfg.topology != "DSTC-SAS" else self.p_v / math.sqrt(self.n)
        if self.cfg.coding != "r-alamouti":
            return np.full(length, budget / math.sqrt(length), dtype=complex)
        if self.cfg.randomization == "gaussian":
            return gaussian_code(length, budget, self.code_rng)
        return unit_phase_code(length, budget, self.code_rng)

    def set_code(self, k, v):
        self.codes[k] = v
        self.code_pow[k] = float(np.vdot(v, v).real)

    # -- link helpers ------------------------------------------------------

    def tx_matrix(self, chan, relays):
        """Channel from code rows to destination antennas, ``(rx, rows)``."""
        if self.cfg.topology == "SAS":
            return np.full((1, self.n), chan[relays[0]])
        if self.cfg.topology == "DSTC-SAS":
            return chan[list(relays)].reshape(1, -1)
        return chan[relays[0]]

    def relay_input(self, unit, relay, t):
        """AF relay observation of ``unit`` received at decision ``t``."""
        s = self.symbols[unit]
        if self.matrix_links:
            x = self.a_s * (s.reshape(-1, self.n) @ self.f[t, relay].T).reshape(-1)
        else:
            x = self.a_s * self.f[t, relay] * s
        return x + self.sr_noise[unit]

    def basis_inputs(self, sr_hat):
        """Destination's model of the stored samples for unit symbol vectors ``e_b``."""
        if sr_hat is None:
            return np.eye(self.n, dtype=complex)
        if self.matrix_links:
            return self.a_s * sr_hat.T  # row b is a_s * F e_b
        return self.a_s * sr_hat * np.eye(self.n, dtype=complex)

    # -- forwarding ----------------------------------------------------------

    def forward(self, unit, relays, t, samples, sr_hat):
        """Deliver ``unit`` from ``relays`` at decision ``t``.

        ``samples`` are the stored relay samples, shaped ``(rows, unit_len)``
        for DSTC-SAS (one row of decisions per relay) and ``(unit_len,)``
        otherwise.  ``sr_hat`` is the destination's first-hop estimate
        (``None`` for DF relays).
        """
        if self.delivered[unit]:
            raise RuntimeError(f"unit {unit} delivered twice")
        self.delivered[unit] = 1
        h = self.tx_matrix(self.g[t], relays)
        h_hat = self.tx_matrix(self.g_hat[t], relays)
        if self.cfg.topology == "DSTC-SAS":
            v = np.concatenate([self.codes[k] for k in relays])
        else:
            v = self.codes[relays[0]]
        event = (unit, tuple(relays), h, h_hat, v, samples, sr_hat)
        if self.cfg.adaptive:
            self._process_adaptive(event)
        else:
            self.pending.append(event)
            for k in relays:
                self.set_code(k, self._fresh_code(self.codes[k].size))

    def _tx_codewords(self, samples):
        if samples.ndim == 2:  # DSTC-SAS: row p of the codeword comes from relay p's decisions
            per_relay = stc_matrix(samples.reshape(self.n, self.groups, self.n), self.cfg.coding)
            idx = np.arange(self.n)
            return per_relay[idx, :, idx, :].transpose(1, 0, 2)
        return stc_matrix(samples.reshape(self.groups, self.n), self.cfg.coding)

    def _process_adaptive(self, event):
        unit, relays, h, h_hat, v, samples, sr_hat = event
        cfg = self.cfg
        codewords = self._tx_codewords(samples)
        basis = stc_matrix(self.basis_inputs(sr_hat), cfg.coding)
        x_model = self.basis_inputs(sr_hat)
        decided = np.empty((self.groups, self.n), dtype=complex)
        for grp in range(self.groups):
            r = (self.a_r * h @ (v[:, None] * codewords[grp])).reshape(-1) + self.rd_noise[unit, grp]
            a = self.a_r * np.einsum("in,n,bnt->itb", h_hat, v, basis).reshape(-1, self.n)
            idx = ml_detect_batch(r[None, :], a[None], self.cands)[0]
            s_hat = self.cands[idx]
            decided[grp] = s_hat
            c_hat = stc_matrix(s_hat.real @ x_model, cfg.coding)
            reg = code_regressor(h_hat, c_hat, self.a_r)
            v = normalize_code(lms_code_step(v, r, reg, cfg.sg.mu), self.p_v)
        self._write_back_code(relays, v)
        self._count(unit, decided)

    def _write_back_code(self, relays, v):
        if self.cfg.topology == "DSTC-SAS":
            for p, k in enumerate(relays):
                self.set_code(k, v[p:p + 1].copy())
        else:
            self.set_code(relays[0], v)

    def flush(self):
        """Detect all deferred (non-adaptive) transmissions in one batch."""
        if not self.pending:
            return
        cfg = self.cfg
        units = np.array([e[0] for e in self.pending])
        h = np.stack([e[2] for e in self.pending])
        h_hat = np.stack([e[3] for e in self.pending])
        v = np.stack([e[4] for e in self.pending])
        codewords = np.stack([self._tx_codewords(e[5]) for e in self.pending])
        basis = stc_matrix(np.stack([self.basis_inputs(e[6]) for e in self.pending]), cfg.coding)
        self.pending = []

        r = self.a_r * np.einsum("ein,en,egnt->egit", h, v, codewords)
        r = r.reshape(len(units), self.groups, -1) + self.rd_noise[units]
        a = self.a_r * np.einsum("ein,en,ebnt->eitb", h_hat, v, basis)
        a = a.reshape(len(units), -1, self.n)
        a = np.repeat(a, self.groups, axis=0)
        idx = ml_detect_batch(r.reshape(-1, r.shape[-1]), a, self.cands)
        decided = self.cands[idx].reshape(len(units), -1)
        self.errors += int(np.count_nonzero(bpsk_demodulate(decided) != self.bits[units]))

    def _count(self, unit, decided):
        self.errors += int(np.count_nonzero(bpsk_demodulate(decided.reshape(-1)) != self.bits[unit]))

    def log(self, t, direction, relays):
        if self.audit is not None:
            self.audit.append((t, direction, tuple(relays)))


def run_trial(cfg, seed, audit=False):
    """Simulate one full transmission of ``packets`` blocks.

    Parameters
    ----------
    cfg : ScenarioConfig
    seed : int
        Determines every random draw of the trial.
    audit : bool
        Record ``(slot, direction, relays)`` for every served link.

    Returns
    -------
    TrialResult
    """
    cfg.validate()
    trial = _Trial(cfg, seed, audit)
    if cfg.topology == "DIRECT":
        slots = _run_direct(trial)
    elif cfg.topology.startswith("DSTC"):
        slots = _run_dstc(trial)
    elif cfg.policy == "BRS":
        slots = _run_brs(trial)
    elif cfg.policy == "MMRS":
        slots = _run_mmrs(trial)
    else:
        slots = _run_max_link(trial)
    trial.flush()
    if not trial.delivered.all():
        raise RuntimeError("trial ended with undelivered blocks")
    return TrialResult(trial.bits.size, trial.errors, slots, trial.audit)


def _sr_metrics(trial):
    """Per-decision, per-relay first-hop SNRs as nested Python lists."""
    f = trial.f_hat
    energy = np.abs(f) ** 2
    if trial.matrix_links:
        energy = energy.sum(axis=(2, 3))
    return (energy / trial.cfg.noise.sigma_r_sq).tolist()


def _rd_energy(trial):
    """``|g|^2`` (scalar links) or per-column energies of ``G`` (matrix links)."""
    e = np.abs(trial.g_hat) ** 2
    if trial.matrix_links:
        return e.sum(axis=2).tolist()  # ||G[:, n]||^2, so ||G V||^2 = sum_n |v_n|^2 e_n
    return e.tolist()


def _rd_metric(trial, energy_t, k):
    v = trial.codes[k]
    if trial.matrix_links:
        return sum(abs(v[n]) ** 2 * energy_t[k][n] for n in range(v.size)) / trial.cfg.noise.sigma_d_sq
    return trial.code_pow[k] * energy_t[k] / trial.cfg.noise.sigma_d_sq


def _af_relays(trial):
    cfg = trial.cfg
    return [RelayNode(k, cfg.buffer_capacity, trial.rx, "AF") for k in range(cfg.n_r)]


def _receive(trial, relay, unit, t):
    x = trial.relay_input(unit, relay.index, t)
    relay.af_receive(unit, x, sr_channel=trial.f_hat[t, relay.index], meta=t)
    trial.log(t, "SR", (relay.index,))


def _deliver(trial, relay, t):
    block = relay.pop_block()
    trial.log(t, "RD", (relay.index,))
    trial.forward(block.unit, (relay.index,), t, block.samples, block.sr_channel)


def _run_max_link(trial):
    cfg = trial.cfg
    relays = _af_relays(trial)
    sr_all = _sr_metrics(trial)
    rd_all = _rd_energy(trial)
    U = cfg.units
    src = delivered = t = 0
    while delivered < U:
        occ = [r.occupancy for r in relays]
        rd = [_rd_metric(trial, rd_all[t], k) for k in range(cfg.n_r)]
        dec = select_max_link(sr_all[t], rd, occ, cfg.buffer_capacity, source_active=src < U)
        if dec.direction == SR:
            _receive(trial, relays[dec.relay], src, t)
            src += 1
        else:
            _deliver(trial, relays[dec.relay], t)
            delivered += 1
        t += 1
    return t


def _run_brs(trial):
    """Best relay per frame; receive and forward in two consecutive slots, no buffering."""
    cfg = trial.cfg
    relays = _af_relays(trial)
    sr_all = _sr_metrics(trial)
    rd_all = _rd_energy(trial)
    for u in range(cfg.units):
        rd = [_rd_metric(trial, rd_all[u], k) for k in range(cfg.n_r)]
        k = select_bmmrs(sr_all[u], rd, "BRS").relay
        _receive(trial, relays[k], u, u)
        _deliver(trial, relays[k], u)
    return 2 * cfg.units


def _run_mmrs(trial):
    """Max-max selection: fill buffers to half capacity, then alternate, then drain."""
    cfg = trial.cfg
    relays = _af_relays(trial)
    sr_all = _sr_metrics(trial)
    rd_all = _rd_energy(trial)
    U = cfg.units
    target = max(1, cfg.n_r * cfg.buffer_capacity // 2)
    src = delivered = t = 0
    want_receive = True
    while delivered < U:
        occ = [r.occupancy for r in relays]
        total = sum(occ)
        filling = total < target and src < U
        can_receive = src < U and any(o < cfg.buffer_capacity for o in occ)
        receive = can_receive and (filling or want_receive or total == 0)
        if receive:
            k = select_bmmrs(sr_all[t], sr_all[t], "MMRS", occ, cfg.buffer_capacity, "receive").relay
            _receive(trial, relays[k], src, t)
            src += 1
        else:
            rd = [_rd_metric(trial, rd_all[t], k) for k in range(cfg.n_r)]
            k = select_bmmrs(rd, rd, "MMRS", occ, cfg.buffer_capacity, "forward").relay
            _deliver(trial, relays[k], t)
            delivered += 1
        want_receive = not receive
        t += 1
    return t


def _run_dstc(trial):
    """Broadcast to all DF relays, forward from the best relay group (SAS) or relay (MAS)."""
    cfg = trial.cfg
    relays = [RelayNode(k, cfg.buffer_capacity, trial.rx, "DF") for k in range(cfg.n_r)]
    sr_sum = [sum(row) for row in _sr_metrics(trial)]
    rd_energy = np.abs(trial.g_hat) ** 2
    if trial.matrix_links:
        rd_energy = rd_energy.sum(axis=(2, 3))
    rd_sum = (rd_energy.sum(axis=1) / cfg.noise.sigma_d_sq).tolist()
    U = cfg.units
    src = delivered = t = 0
    while delivered < U:
        b = relays[0].occupancy
        can_sr = src < U and b < cfg.buffer_capacity
        if can_sr and (sr_sum[t] >= rd_sum[t] or b == 0):
            s = trial.symbols[src]
            for relay in relays:
                k = relay.index
                if trial.matrix_links:
                    rx = trial.a_s * (s.reshape(-1, trial.n) @ trial.f[t, k].T).reshape(-1)
                else:
                    rx = trial.a_s * trial.f[t, k] * s
                rx = rx + trial.sr_noise[src, k]
                relay.df_receive(src, rx, trial.f[t, k], trial.a_s, meta=t)
            trial.log(t, "SR", tuple(range(cfg.n_r)))
            src += 1
        else:
            blocks = [relay.pop_block() for relay in relays]
            if cfg.topology == "DSTC-SAS":
                group = select_dstc_group(list(trial.g_hat[t]), cfg.n_dstc, cfg.noise.sigma_d_sq)
                samples = np.stack([blocks[k].samples for k in group])
            else:
                group = (select_best_relay_mas(list(trial.g_hat[t]), cfg.noise.sigma_d_sq),)
                samples = blocks[group[0]].samples
            trial.log(t, "RD", group)
            trial.forward(blocks[0].unit, group, t, samples, None)
            delivered += 1
        t += 1
    return t


def _run_direct(trial):
    """Source-to-destination baseline (uncoded, or Alamouti from two source antennas)."""
    cfg = trial.cfg
    U = cfg.units
    n = trial.n
    h = trial.g[:U, 0]
    h_hat = trial.g_hat[:U, 0]
    scale = math.sqrt(cfg.power.p_s / n)
    if n == 1:
        hm, hm_hat = h.reshape(U, 1, 1), h_hat.reshape(U, 1, 1)
    else:
        hm = np.stack([h, trial.f[:U, 0]], axis=-1).reshape(U, 1, 2)
        hm_hat = np.stack([h_hat, trial.f_hat[:U, 0]], axis=-1).reshape(U, 1, 2)
    codewords = stc_matrix(trial.symbols.reshape(U, trial.groups, n), cfg.coding)
    r = scale * np.einsum("ein,egnt->egit", hm, codewords).reshape(U, trial.groups, -1)
    r = r + trial.rd_noise
    basis = stc_matrix(np.eye(n, dtype=complex), cfg.coding)
    a = scale * np.einsum("ein,bnt->eitb", hm_hat, basis).reshape(U, -1, n)
    a = np.repeat(a, trial.groups, axis=0)
    idx = ml_detect_batch(r.reshape(-1, r.shape[-1]), a, trial.cands)
    decided = trial.cands[idx].reshape(trial.bits.shape)
    trial.errors = int(np.count_nonzero(bpsk_demodulate(decided) != trial.bits))
    trial.delivered[:] = 1
    return U


# ---------------------------------------------------------------------------
# sweeps


def wilson_interval(errors, n, z=1.959963984540054):
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        return 0.0, 1.0
    p = errors / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if errors == 0 else max(0.0, centre - half)
    hi = 1.0 if errors == n else min(1.0, centre + half)
    return lo, hi


def _trial_job(args):
    cfg, seed = args
    res = run_trial(cfg, seed)
    return res.bits, res.errors


def _worker_count(workers):
    if workers is not None:
        return max(1, int(workers))
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def estimate_ber(cfg, seeds, snr_grid_db, min_errors=None, max_bits=None, workers=None):
    """BER versus SNR with ``SNR = P_S / sigma^2`` and ``sigma_r^2 = sigma_d^2 = sigma^2``.

    Seeds are consumed in order, in batches of ``SEED_BATCH``.  With
    ``min_errors`` set, a point stops after the first batch that reaches that
    many errors; ``max_bits`` caps the bits per point.  The result depends
    only on the arguments, not on the worker count.
    """
    seeds = [int(s) for s in seeds]
    if not seeds or len(snr_grid_db) == 0:
        raise ValueError("need at least one seed and one SNR point")
    cfg.validate()
    n_workers = _worker_count(workers)
    pool = ProcessPoolExecutor(n_workers) if n_workers > 1 else None
    points = []
    try:
        for snr_db in snr_grid_db:
            point_cfg = replace(cfg, noise=NoiseConfig.from_snr_db(float(snr_db), cfg.power.p_s))
            bits = errors = trials = 0
            for start in range(0, len(seeds), SEED_BATCH):
                jobs = [(point_cfg, s) for s in seeds[start:start + SEED_BATCH]]
                results = pool.map(_trial_job, jobs) if pool else map(_trial_job, jobs)
                for b, e in results:
                    bits += b
                    errors += e
                    trials += 1
                if min_errors is not None and errors >= min_errors:
                    break
                if max_bits is not None and bits >= max_bits:
                    break
            lo, hi = wilson_interval(errors, bits)
            points.append(BerPoint(float(snr_db), errors / bits, bits, errors, lo, hi, trials))
    finally:
        if pool:
            pool.shutdown()
    return BerCurve(points, seeds)


def diversity_slope(curve, window=None):
    """Least-squares slope of ``log10(BER)`` against ``log10(SNR)``.

    Only points inside ``window = (lo_db, hi_db)`` with at least one error
    are used.  Returns ``None`` when fewer than two such points exist.
    """
    pts = [p for p in curve.points if p.errors > 0 and p.ber > 0]
    if window is not None:
        lo, hi = window
        pts = [p for p in pts if lo <= p.snr_db <= hi]
    if len(pts) < 2:
        return None
    x = np.array([p.snr_db / 10.0 for p in pts])
    y = np.log10([p.ber for p in pts])
    return float(np.polyfit(x, y, 1)[0])


def snr_at_ber(snr_db, ber, target):
    """SNR (dB) at which a curve crosses ``target``, interpolating ``log10(BER)`` linearly.

    Returns ``None`` if the curve does not bracket the target.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    ber = np.asarray(ber, dtype=float)
    order = np.argsort(snr_db)
    snr_db, ber = snr_db[order], ber[order]
    lt = math.log10(target)
    for i in range(len(snr_db) - 1):
        b0, b1 = ber[i], ber[i + 1]
        if b0 <= 0 or b1 <= 0:
            continue
        y0, y1 = math.log10(b0), math.log10(b1)
        if min(y0, y1) <= lt <= max(y0, y1):
            if y1 == y0:
                return float(snr_db[i])
            return float(snr_db[i] + (lt - y0) * (snr_db[i + 1] - snr_db[i]) / (y1 - y0))
    return None

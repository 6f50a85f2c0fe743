"""Link, relay and relay-group selection rules.

All selectors are pure functions of a snapshot (metrics and buffer
occupancies) so the simulator can call them once per time slot.  Ties are
resolved deterministically: SR before RD, lower occupancy among SR links,
then the lowest relay index.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import frobenius_norm_sq

__all__ = [
    "LinkMetric",
    "ScheduleDecision",
    "select_best_relay_mas",
    "select_bmmrs",
    "select_dstc_group",
    "select_max_link",
    "snr_rd",
    "snr_sr",
]

SR = "SR"
RD = "RD"


@dataclass(frozen=True)
class LinkMetric:
    relay: int
    direction: str
    value: float


@dataclass(frozen=True)
class ScheduleDecision:
    """The link served in a slot plus the better-ranked links that were skipped.

    ``skipped`` holds ``(relay, direction, reason)`` triples in ranking order,
    where ``reason`` is ``'full'``, ``'empty'`` or ``'no-source-data'``.
    """

    relay: int
    direction: str
    skipped: tuple = field(default=())

    @property
    def action(self):
        return "SOURCE_TRANSMIT" if self.direction == SR else "RELAY_FORWARD"


def snr_sr(f, sigma_r_sq):
    """Instantaneous first-hop SNR ``||f||_F^2 / sigma_r^2``."""
    if not sigma_r_sq > 0:
        raise ValueError("sigma_r_sq must be positive")
    return frobenius_norm_sq(f) / sigma_r_sq


def snr_rd(v, g, sigma_d_sq):
    """Instantaneous second-hop SNR ``||V g||_F^2 / sigma_d^2``.

    ``v`` is the (diagonal) adjustable code matrix.  A scalar ``g`` scales the
    whole code, giving ``||V||_F^2 |g|^2``.
    """
    if not sigma_d_sq > 0:
        raise ValueError("sigma_d_sq must be positive")
    v = np.atleast_2d(np.asarray(v, dtype=complex))
    g = np.asarray(g, dtype=complex)
    if g.ndim == 0:
        return frobenius_norm_sq(v) * abs(complex(g)) ** 2 / sigma_d_sq
    if v.shape[1] != g.shape[0]:
        raise ValueError(f"cannot multiply code {v.shape} by channel {g.shape}")
    return frobenius_norm_sq(v @ g) / sigma_d_sq


def select_max_link(sr_metrics, rd_metrics, occupancy, capacity, source_active=True):
    """Serve the strongest feasible link among all SR and RD links.

    Links are ranked by metric; an SR link into a full buffer or an RD link
    out of an empty buffer is skipped and the next-ranked link is tried.

    Parameters
    ----------
    sr_metrics, rd_metrics : sequence of float
        Per-relay instantaneous SNRs.
    occupancy : sequence of int
        Blocks currently held by each relay.
    capacity : int or sequence of int
        Buffer capacity in blocks.
    source_active : bool
        False once the source has nothing left to send (SR links infeasible).

    Returns
    -------
    ScheduleDecision
    """
    n = len(sr_metrics)
    if n == 0 or len(rd_metrics) != n or len(occupancy) != n:
        raise ValueError("need one SR metric, RD metric and occupancy per relay")
    caps = [capacity] * n if np.isscalar(capacity) else list(capacity)

    links = [(-sr_metrics[k], 0, occupancy[k], k) for k in range(n)]
    links += [(-rd_metrics[k], 1, 0, k) for k in range(n)]
    links.sort()

    skipped = []
    for _, direction, _, k in links:
        if direction == 0:
            if not source_active:
                skipped.append((k, SR, "no-source-data"))
                continue
            if occupancy[k] >= caps[k]:
                skipped.append((k, SR, "full"))
                continue
            return ScheduleDecision(k, SR, tuple(skipped))
        if occupancy[k] == 0:
            skipped.append((k, RD, "empty"))
            continue
        return ScheduleDecision(k, RD, tuple(skipped))
    raise RuntimeError("no feasible link: source exhausted and all buffers empty")


def select_bmmrs(sr_metrics, rd_metrics, mode, occupancy=None, capacity=None, slot="receive"):
    """Baseline selectors.

    ``mode='BRS'`` picks the relay maximizing ``min(SNR_SR, SNR_RD)``; the
    chosen relay receives and forwards in consecutive slots, so the decision
    is reported as an SR decision.

    ``mode='MMRS'`` handles one slot of the max-max protocol: in a
    ``'receive'`` slot the best SR link among non-full relays, in a
    ``'forward'`` slot the best RD link among non-empty relays.
    """
    n = len(sr_metrics)
    if n == 0 or len(rd_metrics) != n:
        raise ValueError("need one SR and one RD metric per relay")
    if mode == "BRS":
        score = [min(a, b) for a, b in zip(sr_metrics, rd_metrics)]
        return ScheduleDecision(int(np.argmax(score)), SR)
    if mode != "MMRS":
        raise ValueError(f"unknown baseline mode {mode!r}")
    occ = [0] * n if occupancy is None else list(occupancy)
    caps = [math.inf] * n if capacity is None else (
        [capacity] * n if np.isscalar(capacity) else list(capacity))
    if slot == "receive":
        ok = [k for k in range(n) if occ[k] < caps[k]]
        values, direction = sr_metrics, SR
    elif slot == "forward":
        ok = [k for k in range(n) if occ[k] > 0]
        values, direction = rd_metrics, RD
    else:
        raise ValueError(f"unknown MMRS slot {slot!r}")
    if not ok:
        raise RuntimeError(f"no relay can serve an MMRS {slot} slot")
    best = max(ok, key=lambda k: (values[k], -k))
    return ScheduleDecision(best, direction)


def dstc_group_scores(rd_channels, n_dstc, sigma_d_sq, eligible=None):
    """Score every size-``n_dstc`` relay group.

    The score of group ``k`` is its stacked channel energy divided by the sum
    of the other candidate groups' channel amplitudes plus ``sigma_d^2``.

    Returns
    -------
    groups : list of tuple of int
    scores : ndarray
    """
    n_r = len(rd_channels)
    if n_dstc < 1 or n_dstc > n_r:
        raise ValueError(f"cannot form groups of {n_dstc} from {n_r} relays")
    pool = range(n_r) if eligible is None else [k for k in range(n_r) if eligible[k]]
    groups = list(itertools.combinations(pool, n_dstc))
    if not groups:
        raise ValueError("not enough eligible relays to form a group")
    energy = np.array([sum(frobenius_norm_sq(rd_channels[k]) for k in grp) for grp in groups])
    amplitude = np.sqrt(energy)
    interference = amplitude.sum() - amplitude
    return groups, energy / (interference + sigma_d_sq)


def select_dstc_group(rd_channels, n_dstc, sigma_d_sq, eligible=None):
    """Relay group with the largest SINR score (first group on ties)."""
    groups, scores = dstc_group_scores(rd_channels, n_dstc, sigma_d_sq, eligible)
    return groups[int(np.argmax(scores))]


def select_best_relay_mas(rd_channels, sigma_d_sq, eligible=None):
    """Index of the relay with the largest ``||G_k||_F^2 / sigma_d^2``."""
    if len(rd_channels) == 0:
        raise ValueError("no relays to choose from")
    best, best_val = None, -1.0
    for k, g in enumerate(rd_channels):
        if eligible is not None and not eligible[k]:
            continue
        val = frobenius_norm_sq(g) / sigma_d_sq
        if val > best_val:
            best, best_val = k, val
    if best is None:
        raise ValueError("no eligible relay")
    return best

"""Half-duplex relay nodes with FIFO block buffers (AF and DF)."""

from collections import deque
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .coding import BPSK, candidate_set, ml_detect_batch

__all__ = [
    "BufferEmptyError",
    "BufferFullError",
    "RelayBuffer",
    "RelayNode",
    "StoredBlock",
    "df_detect",
]


class BufferFullError(RuntimeError):
    pass


class BufferEmptyError(RuntimeError):
    pass


@dataclass
class StoredBlock:
    """One buffered block.

    ``samples`` are the noisy received symbols for AF relays or the detected
    symbols for DF relays.  ``sr_channel`` is the first-hop channel seen when
    the block arrived; ``meta`` is free for the simulator's bookkeeping.
    """

    unit: int
    samples: np.ndarray
    sr_channel: Any = None
    meta: Any = None


class RelayBuffer:
    """FIFO queue of at most ``capacity`` blocks."""

    def __init__(self, capacity):
        if capacity < 1:
            raise ValueError("buffer capacity must be at least one block")
        self.capacity = int(capacity)
        self._slots = deque()

    def __len__(self):
        return len(self._slots)

    @property
    def occupancy(self):
        return len(self._slots)

    @property
    def full(self):
        return len(self._slots) >= self.capacity

    @property
    def empty(self):
        return not self._slots

    def push(self, block):
        if self.full:
            raise BufferFullError(f"buffer holds {self.capacity} blocks already")
        self._slots.append(block)

    def pop(self):
        if not self._slots:
            raise BufferEmptyError("pop from an empty relay buffer")
        return self._slots.popleft()

    def peek(self):
        return self._slots[0] if self._slots else None


@dataclass
class RelayNode:
    """A relay ``R_k`` with its buffer, antenna count and forwarding protocol."""

    index: int
    capacity: int
    antennas: int = 1
    protocol: str = "AF"
    buffer: RelayBuffer = field(init=False)

    def __post_init__(self):
        if self.protocol not in ("AF", "DF"):
            raise ValueError(f"unknown relay protocol {self.protocol!r}")
        self.buffer = RelayBuffer(self.capacity)

    @property
    def occupancy(self):
        return self.buffer.occupancy

    def push_block(self, block):
        self.buffer.push(block)
        return self

    def pop_block(self):
        return self.buffer.pop()

    def af_receive(self, unit, r_sr, sr_channel=None, meta=None):
        """Store the received block as is; amplification happens when it is forwarded."""
        self.buffer.push(StoredBlock(unit, np.asarray(r_sr, dtype=complex), sr_channel, meta))
        return self

    def df_receive(self, unit, r_sr, f_sr, gain=1.0, constellation=BPSK, meta=None):
        """Detect the block against ``r = gain * f * s + n`` and store the decisions."""
        decisions = df_detect(r_sr, f_sr, gain, constellation)
        self.buffer.push(StoredBlock(unit, decisions, f_sr, meta))
        return self


def df_detect(r_sr, f_sr, gain=1.0, constellation=BPSK):
    """ML decisions for a first-hop block.

    A scalar ``f_sr`` gives symbol-by-symbol decisions on a length-``L``
    block.  An ``N x N`` matrix gives joint decisions per ``N``-symbol group,
    with ``r_sr`` shaped ``(groups, N)`` or flat.
    """
    r_sr = np.asarray(r_sr, dtype=complex)
    f = np.asarray(f_sr, dtype=complex)
    constellation = np.asarray(constellation, dtype=complex)
    if f.ndim == 0:
        dist = np.abs(r_sr[..., None] - gain * f * constellation) ** 2
        return constellation[np.argmin(dist, axis=-1)]
    n = f.shape[0]
    groups = r_sr.reshape(-1, n)
    a = np.broadcast_to(gain * f, (groups.shape[0], n, n))
    cands = candidate_set(constellation, n)
    idx = ml_detect_batch(groups, a, cands)
    return cands[idx].reshape(r_sr.shape)

"""BPSK mapping, (randomized) Alamouti encoding and ML / linear detection.

Shapes follow one convention throughout: a codeword is a ``rows x T`` matrix
whose row ``n`` is emitted by transmit element ``n`` (an antenna, or a relay in
the distributed case) over ``T`` channel uses.  Batched helpers accept leading
axes.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .numerics import TOL

__all__ = [
    "BPSK",
    "AdjustableCode",
    "alamouti_encode",
    "alamouti_linear_decode",
    "bpsk_demodulate",
    "bpsk_modulate",
    "candidate_set",
    "gaussian_code",
    "ml_detect",
    "ml_detect_batch",
    "randomize_mas",
    "randomize_sas",
    "stc_matrix",
    "unit_phase_code",
]

BPSK = np.array([1.0 + 0j, -1.0 + 0j])

SCHEMES = ("none", "alamouti", "r-alamouti")


def bpsk_modulate(bits):
    """Map bit 0 to +1 and bit 1 to -1."""
    bits = np.asarray(bits, dtype=np.int8)
    return (1.0 - 2.0 * bits).astype(complex)


def bpsk_demodulate(symbols):
    return (np.real(np.asarray(symbols)) < 0).astype(np.int8)


def alamouti_encode(s1, s2):
    """The 2x2 Alamouti codeword ``[[s1, -s2*], [s2, s1*]]``.

    >>> alamouti_encode(1, 1).real
    array([[ 1., -1.],
           [ 1.,  1.]])
    """
    return np.array([[s1, -np.conj(s2)], [s2, np.conj(s1)]], dtype=complex)


def stc_matrix(x, scheme):
    """Space-time codewords for a batch of symbol groups.

    Parameters
    ----------
    x : ndarray, shape (..., N)
        Symbol groups (``N = 2`` for the Alamouti family).
    scheme : {'none', 'alamouti', 'r-alamouti'}
        ``'none'`` emits each group as a single ``N x 1`` column.

    Returns
    -------
    ndarray, shape (..., N, T)
    """
    x = np.asarray(x, dtype=complex)
    if scheme == "none":
        return x[..., :, None]
    if scheme not in SCHEMES:
        raise ValueError(f"unknown coding scheme {scheme!r}")
    if x.shape[-1] != 2:
        raise ValueError("the Alamouti family encodes groups of 2 symbols")
    out = np.empty(x.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = x[..., 0]
    out[..., 0, 1] = -np.conj(x[..., 1])
    out[..., 1, 0] = x[..., 1]
    out[..., 1, 1] = np.conj(x[..., 0])
    return out


def randomize_sas(v, c):
    """Row-vector product ``v C`` sent by a single-antenna relay over ``T`` uses."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    c = np.asarray(c, dtype=complex)
    if c.ndim != 2 or c.shape[0] != v.size:
        raise ValueError(f"cannot multiply code vector of length {v.size} by {c.shape} codeword")
    return v @ c


def randomize_mas(V, c):
    """``V C`` for a diagonal adjustable matrix ``V`` (row ``n`` scaled by ``v_n``)."""
    V = np.asarray(V, dtype=complex)
    c = np.asarray(c, dtype=complex)
    if V.ndim != 2 or V.shape[0] != V.shape[1] or c.ndim != 2 or c.shape[0] != V.shape[1]:
        raise ValueError(f"shape mismatch: V {V.shape}, C {c.shape}")
    if np.any(V[~np.eye(V.shape[0], dtype=bool)] != 0):
        raise ValueError("adjustable matrix must be diagonal")
    return V @ c


@dataclass
class AdjustableCode:
    """The adjustable vector ``v`` with its diagonal and block-diagonal forms."""

    v: np.ndarray
    power_budget: float = 1.0

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=complex).reshape(-1)

    @property
    def V(self):
        return np.diag(self.v)

    def v_eq(self, T):
        """``I_T (x) diag(v)``, the ``TN x TN`` block-diagonal equivalent."""
        return np.kron(np.eye(T), self.V)

    @property
    def power(self):
        return float(np.vdot(self.v, self.v).real)


def unit_phase_code(n, p_v, rng):
    """Equal-magnitude entries with i.i.d. uniform phases, ``||v|| = p_v``."""
    phases = rng.uniform(0.0, 2.0 * math.pi, n)
    return p_v / math.sqrt(n) * np.exp(1j * phases)


def gaussian_code(n, p_v, rng):
    """I.i.d. complex Gaussian entries with ``E||v||^2 = p_v^2`` (not normalized)."""
    scale = p_v / math.sqrt(2.0 * n)
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def candidate_set(constellation, n):
    """All ``|constellation|^n`` tuples in lexicographic order, shape ``(K, n)``."""
    constellation = np.asarray(constellation, dtype=complex)
    return np.array(list(itertools.product(constellation, repeat=n)), dtype=complex).reshape(-1, n)


def ml_detect(r, h_eff, constellation, v_eq=None, gain=1.0):
    """Exhaustive ML detection for the linear model ``r = gain * V_eq * h_eff * s + n``.

    Every tuple of the constellation product set is scored and the lowest
    cost wins; ties go to the first tuple in lexicographic order.

    Parameters
    ----------
    r : array_like, shape (D,)
        Received vector.
    h_eff : array_like, shape (D, N) or (D,)
        Effective channel mapping the ``N`` symbols onto ``r``.  A vector
        (or scalar) is a single-symbol model.
    constellation : array_like
        Symbol alphabet.
    v_eq : array_like, shape (D, D), optional
        Equivalent adjustable-code matrix applied in front of ``h_eff``.
    gain : float
        Scalar amplitude, e.g. ``sqrt(P_R P_S)``.

    Returns
    -------
    s_hat : ndarray, shape (N,)
    cost : float
        ``||r - gain V_eq h_eff s_hat||^2``.
    """
    r = np.asarray(r, dtype=complex).reshape(-1)
    h = np.asarray(h_eff, dtype=complex)
    if h.ndim < 2:
        h = h.reshape(-1, 1)
    if v_eq is not None:
        h = np.asarray(v_eq, dtype=complex) @ h
    if h.shape[0] != r.size:
        raise ValueError(f"model has {h.shape[0]} rows but r has {r.size} entries")
    cands = candidate_set(constellation, h.shape[1])
    pred = gain * cands @ h.T
    cost = np.sum(np.abs(r[None, :] - pred) ** 2, axis=1)
    best = int(np.argmin(cost))
    return cands[best], float(cost[best])


def ml_detect_batch(r, a, candidates):
    """Vectorized exhaustive ML for many independent linear models.

    ``r`` has shape ``(E, D)``, ``a`` shape ``(E, D, N)`` and ``candidates``
    shape ``(K, N)``.  Returns the winning candidate index per row (first
    index on ties).
    """
    pred = np.einsum("edn,kn->ekd", a, candidates)
    diff = r[:, None, :] - pred
    cost = np.sum(diff.real**2 + diff.imag**2, axis=2)
    return np.argmin(cost, axis=1)


def alamouti_linear_decode(r, h_rand):
    """Matched-filter Alamouti combining over the effective channel ``v * h``.

    With ``r1 = h1 s1 + h2 s2 + n1`` and ``r2 = h2 s1* - h1 s2* + n2`` the
    combiner outputs ``(h1* r1 + h2 r2*, h2* r1 - h1 r2*) / (|h1|^2 + |h2|^2)``.

    Returns
    -------
    estimates : ndarray, shape (2,)
        Soft estimates; zeros when the channel is degenerate.
    degenerate : bool
        True when the effective channel energy is zero.
    """
    r1, r2 = np.asarray(r, dtype=complex).reshape(2)
    h1, h2 = np.asarray(h_rand, dtype=complex).reshape(2)
    energy = abs(h1) ** 2 + abs(h2) ** 2
    if energy <= TOL.power:
        return np.zeros(2, dtype=complex), True
    s1 = np.conj(h1) * r1 + h2 * np.conj(r2)
    s2 = np.conj(h2) * r1 - h1 * np.conj(r2)
    return np.array([s1, s2]) / energy, False

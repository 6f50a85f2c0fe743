"""Stochastic-gradient adaptation of the adjustable code.

After each detected group the destination takes one gradient step on the
instantaneous cost ``||r - model(V) s_hat||^2`` with the power constraint
ignored, keeps only the diagonal structure of the code, and rescales the code
vector back onto its power budget.
"""

import math
from dataclasses import dataclass

import numpy as np

from .numerics import TOL

__all__ = [
    "DegenerateCodeError",
    "SgConfig",
    "code_regressor",
    "instantaneous_cost",
    "lms_code_step",
    "normalize_code",
    "project_to_structure",
    "sg_update",
]


class DegenerateCodeError(ValueError):
    """Raised when a code vector has no energy left to normalize."""


@dataclass(frozen=True)
class SgConfig:
    mu: float = 0.01
    power_budget: float | None = None

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("step size mu must be positive")


def sg_update(v_eq, r, h, s_hat, mu, gain=1.0, n=None):
    """One gradient step on ``||r - gain V_eq h s_hat||^2`` followed by projection.

    The full matrix is moved along
    ``V_eq + mu * gain * (r - gain V_eq h s_hat)(h s_hat)^H`` (a descent step)
    and then reduced to the diagonal code vector via
    :func:`project_to_structure`.

    Parameters
    ----------
    v_eq : ndarray, shape (D, D)
        Current equivalent code matrix ``I_T (x) diag(v)``.
    r : ndarray, shape (D,)
    h : ndarray, shape (D, N) or scalar
    s_hat : ndarray, shape (N,)
    mu : float
    gain : float
        ``sqrt(P_R P_S)`` (or the MAS equivalent).
    n : int, optional
        Code length; defaults to ``D`` (a single block).

    Returns
    -------
    ndarray
        The updated (unnormalized) code vector ``v``.
    """
    v_eq = np.asarray(v_eq, dtype=complex)
    r = np.asarray(r, dtype=complex).reshape(-1)
    s_hat = np.asarray(s_hat, dtype=complex).reshape(-1)
    h = np.asarray(h, dtype=complex)
    z = h * s_hat if h.ndim == 0 else h.reshape(r.size, -1) @ s_hat
    if v_eq.shape != (r.size, r.size) or z.size != r.size:
        raise ValueError(f"shape mismatch: V_eq {v_eq.shape}, r {r.shape}, h s {z.shape}")
    residual = r - gain * (v_eq @ z)
    full = v_eq + mu * gain * np.outer(residual, z.conj())
    return project_to_structure(full, n)


def project_to_structure(v_eq_full, n=None):
    """Recover ``v`` from the main diagonal of an (approximately) ``I_T (x) diag(v)`` matrix.

    Off-diagonal entries are dropped and the ``T`` diagonal copies averaged,
    which is the least-squares projection onto the structured set.
    """
    m = np.asarray(v_eq_full, dtype=complex)
    d = np.diag(m)
    n = d.size if n is None else int(n)
    if d.size % n:
        raise ValueError(f"diagonal of length {d.size} is not a multiple of {n}")
    return d.reshape(-1, n).mean(axis=0)


def normalize_code(v, p_v):
    """Rescale ``v`` so that ``||v|| = p_v``."""
    v = np.asarray(v, dtype=complex)
    norm = math.sqrt(float(np.vdot(v, v).real))
    if norm <= TOL.power:
        raise DegenerateCodeError("cannot normalize a zero code vector")
    return v * (p_v / norm)


def code_regressor(h, c, scale=1.0):
    """Matrix ``B`` with ``vec(scale * H diag(v) C) = B v``.

    ``h`` is the ``rx x rows`` channel from the transmit elements to the
    destination and ``c`` the ``rows x T`` codeword.  Rows of ``B`` are
    ordered receive-antenna-major, matching ``(scale * H diag(v) C).ravel()``.
    Leading batch axes on ``c`` are supported.
    """
    h = np.asarray(h, dtype=complex)
    c = np.asarray(c, dtype=complex)
    b = scale * np.einsum("in,...nt->...itn", h, c)
    return b.reshape(b.shape[:-3] + (-1, h.shape[1]))


def instantaneous_cost(r, b, v):
    e = np.asarray(r) - np.asarray(b) @ np.asarray(v)
    return float(np.vdot(e, e).real)


def lms_code_step(v, r, b, mu):
    """``v + mu B^H (r - B v)``: a descent step on ``||r - B v||^2``."""
    v = np.asarray(v, dtype=complex)
    return v + mu * (np.asarray(b).conj().T @ (np.asarray(r) - np.asarray(b) @ v))

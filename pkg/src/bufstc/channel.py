"""Block-fading channel draws, AWGN and the imperfect-CSI perturbation."""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NoiseConfig",
    "PowerConfig",
    "add_awgn",
    "complex_normal",
    "draw_fading",
    "perturb_csi",
]


@dataclass(frozen=True)
class NoiseConfig:
    """Noise variances at the relays and at the destination."""

    sigma_r_sq: float = 1.0
    sigma_d_sq: float = 1.0

    def __post_init__(self):
        if not (self.sigma_r_sq > 0 and self.sigma_d_sq > 0):
            raise ValueError("noise variances must be strictly positive")

    @classmethod
    def from_snr_db(cls, snr_db, p_s=1.0):
        """Equal relay/destination noise with ``SNR = P_S / sigma^2``."""
        var = p_s / 10.0 ** (snr_db / 10.0)
        return cls(sigma_r_sq=var, sigma_d_sq=var)


@dataclass(frozen=True)
class PowerConfig:
    """Transmit powers and the adjustable-code budget.

    ``p_v=None`` selects the budget that matches the identity code for the
    configured code size (see ``bufstc.engine``).
    """

    p_s: float = 1.0
    p_r: float = 1.0
    p_v: float | None = None
    sigma_s_sq: float = 1.0

    def __post_init__(self):
        for name in ("p_s", "p_r", "sigma_s_sq"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.p_v is not None and not self.p_v > 0:
            raise ValueError("p_v must be strictly positive")


def complex_normal(rng, shape, variance=1.0):
    """Circularly-symmetric complex Gaussian samples with per-entry ``variance``."""
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_fading(shape, rng):
    """I.i.d. unit-variance Rayleigh coefficients (CN(0, 1) entries).

    Parameters
    ----------
    shape : int or tuple of int
        Output shape, e.g. ``(n_slots, n_r)`` for scalar links or
        ``(n_slots, n_r, N, N)`` for matrix links.
    rng : RngStream or numpy.random.Generator
    """
    return complex_normal(_generator(rng), shape, 1.0)


def add_awgn(signal, variance, rng):
    """Return ``signal`` plus complex AWGN of per-entry variance ``variance``."""
    if not variance > 0:
        raise ValueError("noise variance must be strictly positive")
    signal = np.asarray(signal, dtype=complex)
    return signal + complex_normal(_generator(rng), signal.shape, variance)


def perturb_csi(h, sigma_e_sq, rng):
    """Destination-side channel estimate ``h + e`` with ``e ~ CN(0, sigma_e_sq)``."""
    if sigma_e_sq < 0:
        raise ValueError("CSI error variance must be non-negative")
    h = np.asarray(h, dtype=complex)
    if sigma_e_sq == 0:
        return h.copy()
    return h + complex_normal(_generator(rng), h.shape, sigma_e_sq)


def _generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return rng.generator()

"""Closed-form PEP bounds, coding/buffer gain factors and the multiplication-count model."""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .coding import BPSK, alamouti_encode
from .numerics import frobenius_norm_sq, hermitian_eig, q_function

__all__ = [
    "ComplexityReport",
    "DegenerateChannelError",
    "PepInputs",
    "alamouti_codebook",
    "buffer_gain_beta",
    "coding_gain_eta",
    "complexity_count",
    "pep_bound_asymptotic",
    "pep_conditional",
    "pep_eigenvalues",
    "pep_exact",
    "pep_upper_bound_adjustable",
    "pep_upper_bound_traditional",
    "union_bound",
]


class DegenerateChannelError(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class PepInputs:
    """One pairwise error event ``C1 -> C2`` through channel ``G`` and code ``V``.

    ``v`` may be the code vector or the diagonal matrix; ``None`` means the
    identity code.  ``n`` and ``t`` default to the codeword dimensions.
    """

    c1: np.ndarray
    c2: np.ndarray
    g: np.ndarray
    gamma: float
    v: np.ndarray | None = None
    n: int | None = None
    t: int | None = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    @property
    def dims(self):
        c1 = np.atleast_2d(self.c1)
        return (self.n or c1.shape[0], self.t or c1.shape[1])

    @property
    def code_matrix(self):
        n = np.atleast_2d(self.c1).shape[0]
        if self.v is None:
            return np.eye(n, dtype=complex)
        v = np.asarray(self.v, dtype=complex)
        return np.diag(v) if v.ndim == 1 else v


@dataclass(frozen=True)
class EigenTerms:
    lambda_v: np.ndarray
    lambda_g: np.ndarray
    lambda_c: np.ndarray
    xi: np.ndarray


@dataclass(frozen=True)
class ComplexityReport:
    configuration: str
    n: int
    t: int
    multiplications: int


def pep_eigenvalues(inputs):
    """Eigenvalue triplets entering the bounds, each sorted in decreasing order.

    ``lambda_c`` comes from ``(C1-C2)^H (C1-C2) = U^H L_C U``, ``lambda_g``
    from ``(G U)^H G U = Y^H L_G Y`` and ``lambda_v`` from
    ``(Y V U)^H Y V U``.  ``xi`` is ``Y``.
    """
    d = np.atleast_2d(np.asarray(inputs.c1, dtype=complex) - np.asarray(inputs.c2, dtype=complex))
    g = np.atleast_2d(np.asarray(inputs.g, dtype=complex))
    dec_c = hermitian_eig(d.conj().T @ d)
    u = dec_c.unitary
    gu = g @ u
    dec_g = hermitian_eig(gu.conj().T @ gu)
    y = dec_g.unitary
    yvu = y @ inputs.code_matrix @ u
    dec_v = hermitian_eig(yvu.conj().T @ yvu)
    clip = lambda x: np.clip(x, 0.0, None)
    return EigenTerms(clip(dec_v.values), clip(dec_g.values), clip(dec_c.values), y)


def _products(inputs, use_code=True, use_channel=True):
    terms = pep_eigenvalues(inputs)
    n, _ = inputs.dims
    k = min(n, terms.lambda_c.size)
    prod = terms.lambda_c[:k].copy()
    if use_channel:
        prod *= terms.lambda_g[:k]
    if use_code:
        prod *= terms.lambda_v[:k]
    return prod, terms


def pep_conditional(inputs):
    """Conditional PEP from the eigenvalue form.

    ``Q(sqrt(gamma/2 * sum_m sum_n lambda_Vn lambda_Gn lambda_Cn |xi_nm|^2))``.

    Returns
    -------
    probability : float
    degenerate : bool
        True when the two codewords coincide (the result is then ``Q(0)``).
    """
    if np.allclose(inputs.c1, inputs.c2):
        return 0.5, True
    prod, terms = _products(inputs)
    xi_sq = np.abs(terms.xi[: prod.size, :]) ** 2
    arg = 0.5 * inputs.gamma * float(np.sum(prod[:, None] * xi_sq))
    return q_function(math.sqrt(arg)), False


def pep_exact(inputs):
    """``Q(sqrt(gamma/2) ||V G (C1 - C2)||_F)`` evaluated directly."""
    d = np.atleast_2d(np.asarray(inputs.c1, dtype=complex) - np.asarray(inputs.c2, dtype=complex))
    dist = frobenius_norm_sq(inputs.code_matrix @ np.atleast_2d(inputs.g) @ d)
    return q_function(math.sqrt(0.5 * inputs.gamma * dist))


def pep_upper_bound_adjustable(inputs):
    """``1 / prod_n (1 + gamma/4 lambda_Vn lambda_Gn lambda_Cn)^(N T)``."""
    prod, _ = _products(inputs)
    n, t = inputs.dims
    return float(np.prod((1.0 + 0.25 * inputs.gamma * prod) ** (-(n * t))))


def pep_upper_bound_traditional(inputs):
    """The same bound for a non-adjustable code (all ``lambda_V = 1``)."""
    prod, _ = _products(inputs, use_code=False)
    n, t = inputs.dims
    return float(np.prod((1.0 + 0.25 * inputs.gamma * prod) ** (-(n * t))))


def pep_bound_asymptotic(inputs, use_code=True):
    """High-SNR form ``(gamma/4)^(-N^2 T) prod_n (lambda products)^(-N T)``.

    Returns ``inf`` if any eigenvalue product is zero.
    """
    prod, _ = _products(inputs, use_code=use_code)
    n, t = inputs.dims
    if np.any(prod <= 0):
        return math.inf
    log_val = -(n * n * t) * math.log(0.25 * inputs.gamma) - n * t * float(np.sum(np.log(prod)))
    return math.exp(log_val)


def alamouti_codebook(constellation=BPSK):
    """All Alamouti codewords over ``constellation`` (4 for BPSK)."""
    return [alamouti_encode(a, b) for a, b in itertools.product(constellation, repeat=2)]


def union_bound(codebook, g, gamma, v=None, adjustable=True):
    """Average over transmitted codewords of the summed pairwise bounds."""
    bound = pep_upper_bound_adjustable if adjustable else pep_upper_bound_traditional
    total = 0.0
    for c1, c2 in itertools.permutations(codebook, 2):
        total += bound(PepInputs(c1, c2, g, gamma, v))
    return total / len(codebook)


def coding_gain_eta(lambda_v, n, t):
    """``prod_n lambda_Vn^(N T)``."""
    lam = np.asarray(lambda_v, dtype=float)
    if np.any(lam < 0):
        raise ValueError("eigenvalues must be non-negative")
    return float(np.prod(lam ** (n * t)))


def buffer_gain_beta(lambda_g_opt, lambda_g, n, t):
    """``prod lambda_opt^(N T) / prod lambda^(N T)``."""
    opt = np.asarray(lambda_g_opt, dtype=float)
    ref = np.asarray(lambda_g, dtype=float)
    if opt.shape != ref.shape:
        raise ValueError("eigenvalue lists must have the same length")
    if np.any(opt < 0) or np.any(ref < 0):
        raise ValueError("eigenvalues must be non-negative")
    if np.any(ref == 0):
        raise DegenerateChannelError("reference channel has a zero eigenvalue")
    return float(np.prod((opt / ref) ** (n * t)))


def complexity_count(configuration, n, t):
    """Multiplications per SG code update: ``(3+T)N`` for SAS, ``(3+T)N^2`` otherwise."""
    if n < 1 or t < 1:
        raise ValueError("N and T must be at least 1")
    cfg = configuration.upper()
    if cfg == "SAS":
        mults = (3 + t) * n
    elif cfg in ("MAS", "DSTC"):
        mults = (3 + t) * n * n
    else:
        raise ValueError(f"unknown configuration {configuration!r}")
    return ComplexityReport(cfg, n, t, mults)

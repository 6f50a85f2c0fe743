"""Small dense complex linear algebra, the Gaussian Q-function and seeded RNG streams.

Every stochastic routine in the package takes an :class:`RngStream` (or a
``numpy.random.Generator`` built from one) so that a trial is fully determined
by its ``(seed, stream)`` pair.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TOL",
    "EigenDecomposition",
    "RngStream",
    "frobenius_norm_sq",
    "hermitian_eig",
    "q_function",
]


class _Tolerances:
    """Numerical tolerances shared by the library and its tests."""

    hermitian = 1e-10
    jacobi_offdiag = 1e-12
    reconstruction = 1e-9
    psd_floor = -1e-12
    power = 1e-12
    orthogonality = 1e-12
    jacobi_max_sweeps = 100


TOL = _Tolerances()


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigen-pairs of a Hermitian matrix.

    ``values`` are real and sorted in decreasing order. ``vectors`` holds the
    matching unit eigenvectors as columns, so ``A = V diag(values) V^H``.
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def unitary(self):
        """The matrix ``U`` with ``A = U^H diag(values) U`` (rows are eigenvectors^H)."""
        return self.vectors.conj().T

    def reconstruct(self):
        v = self.vectors
        return (v * self.values) @ v.conj().T


@dataclass(frozen=True)
class RngStream:
    """Identifies an independent random stream.

    Two streams with the same ``seed`` and ``stream`` produce bit-identical
    draws; different ``stream`` ids under one seed are statistically
    independent (they are spawned children of the same ``SeedSequence``).
    """

    seed: int
    stream: int = 0

    def generator(self):
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.PCG64(ss))


def frobenius_norm_sq(a):
    """Squared Frobenius norm, ``Tr(A^H A)``.

    >>> frobenius_norm_sq(np.array([[3, 4]]))
    25.0
    """
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.sum(a.real**2 + a.imag**2))


def _as_hermitian(a):
    a = np.array(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    if np.max(np.abs(a - a.conj().T), initial=0.0) > TOL.hermitian * scale:
        raise ValueError("matrix is not Hermitian")
    return 0.5 * (a + a.conj().T)


def hermitian_eig(a):
    """Eigendecomposition of a small Hermitian matrix by cyclic complex Jacobi.

    Each rotation first rotates the phase of the ``(p, q)`` entry to make it
    real, then applies the classical symmetric Jacobi rotation.  Sweeps stop
    once the off-diagonal Frobenius mass drops below
    ``TOL.jacobi_offdiag * max(1, ||A||_F)``.

    Parameters
    ----------
    a : array_like
        Square Hermitian matrix (complex or real).

    Returns
    -------
    EigenDecomposition
        Eigenvalues sorted in decreasing order with matching eigenvectors.

    Raises
    ------
    ValueError
        If ``a`` is not square or not Hermitian within ``TOL.hermitian``.
    """
    work = _as_hermitian(a)
    n = work.shape[0]
    vecs = np.eye(n, dtype=complex)
    limit = TOL.jacobi_offdiag * max(1.0, math.sqrt(frobenius_norm_sq(work)))

    for _ in range(TOL.jacobi_max_sweeps):
        off = frobenius_norm_sq(work - np.diag(np.diag(work)))
        if math.sqrt(off) < limit:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                phase = apq / mag
                app = work[p, p].real
                aqq = work[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # rot = diag(1, conj(phase)) on (p, q) followed by the real rotation
                rot = np.eye(n, dtype=complex)
                rot[p, p] = c
                rot[p, q] = s
                rot[q, p] = -s * np.conj(phase)
                rot[q, q] = c * np.conj(phase)
                work = rot.conj().T @ work @ rot
                work[p, q] = 0.0
                work[q, p] = 0.0
                vecs = vecs @ rot

    values = np.real(np.diag(work)).copy()
    order = np.argsort(-values, kind="stable")
    return EigenDecomposition(values=values[order], vectors=vecs[:, order])


_erfc = np.frompyfunc(math.erfc, 1, 1)


def q_function(x):
    """Gaussian tail probability ``Q(x) = P(Z > x)`` for a standard normal ``Z``.

    Accepts scalars or arrays; scalars return a Python float.

    >>> q_function(0.0)
    0.5
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return 0.5 * math.erfc(float(arr) / math.sqrt(2.0))
    return 0.5 * _erfc(arr / math.sqrt(2.0)).astype(float)

"""Hermitian Toeplitz generator, its adjoint, and the bordered matrix."""
from __future__ import annotations

import numpy as np


def _lag_index(U: int) -> np.ndarray:
    i = np.arange(U)
    return i[:, None] - i[None, :]


def toeplitz_from_vec(z) -> np.ndarray:
    """Hermitian Toeplitz ``T`` with first column ``z``.

    ``T[j, k] = z[j - k]`` for ``j >= k`` and ``conj(z[k - j])`` above.
    """
    z = np.asarray(z, dtype=complex).ravel()
    if z.size < 1:
        raise ValueError("generator must have length >= 1")
    d = _lag_index(z.size)
    T = np.where(d >= 0, z[np.abs(d)], z[np.abs(d)].conj())
    np.fill_diagonal(T, z[0].real)
    return T


def toeplitz_adjoint(G) -> np.ndarray:
    """Adjoint of :func:`toeplitz_from_vec` under ``<A, B> = Re tr(A^H B)``.

    Lag ``l`` collects the sum of the ``l``-th sub-diagonal plus the conjugated
    ``l``-th super-diagonal.
    """
    G = np.asarray(G, dtype=complex)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError("square matrix required")
    U = G.shape[0]
    out = np.empty(U, dtype=complex)
    out[0] = np.trace(G).real
    for l in range(1, U):
        out[l] = np.diagonal(G, -l).sum() + np.diagonal(G, l).conj().sum()
    return out


def lag_multiplicity(U: int) -> np.ndarray:
    """Entries of ``T(z)`` generated by each lag: ``U`` for lag 0, ``2 (U - l)`` otherwise."""
    c = 2.0 * (U - np.arange(U))
    c[0] = U
    return c


def bordered_matrix(z) -> np.ndarray:
    """``[[T(z), z], [z^H, tr(T(z)) / U]]``."""
    z = np.asarray(z, dtype=complex).ravel()
    U = z.size
    J = np.empty((U + 1, U + 1), dtype=complex)
    J[:U, :U] = toeplitz_from_vec(z)
    J[:U, U] = z
    J[U, :U] = z.conj()
    J[U, U] = z[0].real
    J[0, U] = J[U, 0] = z[0].real
    return J


def bordered_adjoint(G) -> np.ndarray:
    """Adjoint of :func:`bordered_matrix` (real inner product)."""
    G = np.asarray(G, dtype=complex)
    U = G.shape[0] - 1
    out = toeplitz_adjoint(G[:U, :U])
    out += G[:U, U] + G[U, :U].conj()
    out[0] = (out[0] + G[U, U]).real
    return out


def bordered_gram_diag(U: int) -> np.ndarray:
    """Diagonal of ``J^* J`` in the lag domain."""
    g = lag_multiplicity(U) + 2.0
    g[0] += 1.0
    return g

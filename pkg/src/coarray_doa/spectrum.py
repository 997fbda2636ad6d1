"""MUSIC pseudo-spectrum on the virtual ULA and grid peak picking."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coarray import VirtualLagSignal
from .toeplitz import toeplitz_from_vec

DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class SpectrumGrid:
    angles: np.ndarray
    values: np.ndarray
    source_count: int


@dataclass(frozen=True)
class DoaEstimate:
    angles_deg: np.ndarray
    peak_values: np.ndarray
    complete: bool = True  # False when fewer than K maxima were found


def angle_grid(step: float) -> np.ndarray:
    if not step > 0:
        raise ValueError("grid step must be positive")
    n = int(round(180.0 / step))
    return np.linspace(-90.0, 90.0, n + 1)


def music_spectrum(cov, K: int, grid_step: float = 0.1) -> SpectrumGrid:
    """``P(theta) = 1 / ||E_n^H g(theta)||^2`` over a uniform grid on [-90, 90].

    ``g`` is the ULA steering vector ``exp(-j pi u sin(theta))``, u = 0..U-1.
    """
    cov = np.asarray(cov)
    U = cov.shape[0]
    if cov.ndim != 2 or cov.shape[1] != U:
        raise ValueError("covariance must be square")
    if not 1 <= K < U:
        raise ValueError(f"need 1 <= K < {U}, got K={K}")
    _, V = np.linalg.eigh(0.5 * (cov + cov.conj().T))
    En = V[:, : U - K]
    theta = angle_grid(grid_step)
    # E_n^H g(theta) as a polynomial in exp(-j pi sin theta) evaluated on the grid
    G = np.exp(-1j * np.pi * np.outer(np.arange(U), np.sin(np.deg2rad(theta))))
    proj = En.conj().T @ G
    denom = np.einsum("ij,ij->j", proj.real, proj.real) + np.einsum("ij,ij->j", proj.imag, proj.imag)
    return SpectrumGrid(theta, 1.0 / np.maximum(denom, DENOM_FLOOR), K)


def find_peaks(spec: SpectrumGrid, K: int) -> DoaEstimate:
    """Top-K local maxima refined by three-point parabolic interpolation.

    Ties in peak height go to the smaller angle. Grid endpoints count as maxima
    when they exceed their single neighbour.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    P = np.asarray(spec.values, dtype=float)
    th = np.asarray(spec.angles, dtype=float)
    n = P.size
    if n < 2:
        return DoaEstimate(np.empty(0), np.empty(0), False)
    left = np.empty(n, dtype=bool)
    right = np.empty(n, dtype=bool)
    left[0] = True
    left[1:] = P[1:] > P[:-1]
    right[-1] = True
    right[:-1] = P[:-1] > P[1:]
    idx = np.flatnonzero(left & right)
    if idx.size == 0:
        return DoaEstimate(np.empty(0), np.empty(0), False)
    # stable sort on -P keeps ascending-angle order among equal heights
    idx = idx[np.argsort(-P[idx], kind="stable")][:K]
    step = th[1] - th[0]
    angles, vals = [], []
    for i in idx:
        a, v = th[i], P[i]
        if 0 < i < n - 1:
            y0, y1, y2 = P[i - 1], P[i], P[i + 1]
            den = y0 - 2.0 * y1 + y2
            if den < 0:
                off = 0.5 * (y0 - y2) / den
                a = th[i] + off * step
                v = y1 - 0.25 * (y0 - y2) * off
        angles.append(a)
        vals.append(v)
    order = np.argsort(angles)
    return DoaEstimate(np.asarray(angles)[order], np.asarray(vals)[order], idx.size >= K)


def segment_spectrum(sig: VirtualLagSignal, K: int, grid_step: float = 0.1) -> SpectrumGrid:
    """MUSIC spectrum of the Toeplitz matrix built from the central contiguous lags only."""
    L = sig.geometry.contiguous_half_length()
    if K >= L + 1:
        raise ValueError(f"contiguous segment (size {L + 1}) too short for K={K}")
    z = np.array([sig.at(l) for l in range(L + 1)])
    return music_spectrum(toeplitz_from_vec(z), K, grid_step)


def segment_music_baseline(sig: VirtualLagSignal, K: int, grid_step: float = 0.1) -> DoaEstimate:
    return find_peaks(segment_spectrum(sig, K, grid_step), K)

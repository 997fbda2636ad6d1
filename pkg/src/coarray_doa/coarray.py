"""Physical covariance -> virtual lag domain -> reference Toeplitz matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ArrayGeometry
from .toeplitz import toeplitz_from_vec


@dataclass(frozen=True)
class VirtualLagSignal:
    """Second-order statistics indexed by lag ``-(U-1) .. U-1``.

    Holes carry NaN until :func:`interpolate_init` zero-fills them.
    """

    values: np.ndarray
    derived_mask: np.ndarray
    geometry: ArrayGeometry

    @property
    def lags(self) -> np.ndarray:
        return self.geometry.interp_set

    @property
    def U(self) -> int:
        return self.geometry.subarray_count

    def at(self, lag: int) -> complex:
        return self.values[lag + self.U - 1]

    def nonnegative(self) -> np.ndarray:
        """Values at lags ``0 .. U-1``."""
        return self.values[self.U - 1:]


@dataclass(frozen=True)
class ReferenceToeplitz:
    """Reference matrix ``T(r1)`` with the binary mask of derived lags."""

    matrix: np.ndarray
    mask: np.ndarray
    r1: np.ndarray
    lag_mask: np.ndarray  # derived indicator for lags 0..U-1

    @property
    def U(self) -> int:
        return self.r1.size


def lag_statistics(R, geometry: ArrayGeometry, redundancy: str = "average") -> VirtualLagSignal:
    """Collect ``R[i, j]`` by lag ``p_i - p_j``.

    Args:
        R: sample covariance of the physical array.
        geometry: the array that produced ``R``.
        redundancy: ``"average"`` averages every pair sharing a lag;
            ``"select"`` keeps the first pair found (row-major order).
    """
    R = np.asarray(R)
    n = geometry.n_sensors
    if R.shape != (n, n):
        raise ValueError(f"covariance shape {R.shape} does not match {n} sensors")
    if redundancy not in ("average", "select"):
        raise ValueError(f"unknown redundancy mode {redundancy!r}")
    p = geometry.sensor_positions
    U = geometry.subarray_count
    diff = (p[:, None] - p[None, :]).ravel() + (U - 1)
    flat = R.ravel()
    size = 2 * U - 1
    if redundancy == "average":
        counts = np.bincount(diff, minlength=size)
        sums = (np.bincount(diff, weights=flat.real, minlength=size)
                + 1j * np.bincount(diff, weights=flat.imag, minlength=size))
        with np.errstate(invalid="ignore", divide="ignore"):
            vals = sums / counts
    else:
        vals = np.full(size, np.nan + 0j)
        idx_unique, first = np.unique(diff, return_index=True)
        vals[idx_unique] = flat[first]
        counts = np.bincount(diff, minlength=size)
    mask = counts > 0
    vals = np.where(mask, vals, np.nan + 0j)
    # conjugate symmetry: average v[l] with conj(v[-l])
    vals = 0.5 * (vals + vals[::-1].conj())
    vals[U - 1] = vals[U - 1].real
    return VirtualLagSignal(vals, mask, geometry)


def interpolate_init(sig: VirtualLagSignal) -> VirtualLagSignal:
    """Zero-fill the holes; derived lags are left untouched."""
    vals = np.where(sig.derived_mask, sig.values, 0.0 + 0j)
    return VirtualLagSignal(vals, sig.derived_mask.copy(), sig.geometry)


def subarray_matrix(sig: VirtualLagSignal) -> np.ndarray:
    """``V = [r_1, ..., r_U]`` with ``r_u[j] = v[j - u]`` (j, u from 1)."""
    U = sig.U
    j = np.arange(U)[:, None]
    u = np.arange(U)[None, :]
    return sig.values[(j - u) + U - 1]


def reference_matrix(sig: VirtualLagSignal) -> ReferenceToeplitz:
    if np.any(np.isnan(sig.values)):
        raise ValueError("lag signal has uninitialized holes; call interpolate_init first")
    U = sig.U
    r1 = sig.nonnegative().copy()
    lag_mask = sig.derived_mask[U - 1:].copy()
    lagidx = np.abs(np.arange(U)[:, None] - np.arange(U)[None, :])
    B = lag_mask[lagidx].astype(np.int8)
    return ReferenceToeplitz(toeplitz_from_vec(r1), B, r1, lag_mask)

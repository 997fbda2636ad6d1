"""Prototype coprime array geometry and its difference coarray.

Positions are integers in units of the half-wavelength spacing ``d``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd

import numpy as np


class GeometryError(ValueError):
    """Raised for invalid coprime parameters."""


def _check_pair(M: int, N: int) -> None:
    if int(M) != M or int(N) != N:
        raise GeometryError(f"M and N must be integers, got {M!r}, {N!r}")
    if not 1 <= M < N:
        raise GeometryError(f"require 1 <= M < N, got M={M}, N={N}")
    if gcd(M, N) != 1:
        raise GeometryError(f"M={M} and N={N} are not coprime")


def coprime_positions(M: int, N: int) -> np.ndarray:
    """Sensor positions ``{N m} U {M n}`` of the prototype coprime array.

    Returns a sorted int array of length ``M + N - 1``.
    """
    _check_pair(M, N)
    pos = {N * m for m in range(M)} | {M * n for n in range(N)}
    return np.array(sorted(pos), dtype=np.int64)


def difference_coarray(positions) -> np.ndarray:
    """Sorted unique pairwise differences ``p_i - p_j``."""
    p = np.asarray(positions, dtype=np.int64).ravel()
    if p.size == 0:
        raise GeometryError("empty position set")
    return np.unique(p[:, None] - p[None, :])


def virtual_ula_params(M: int, N: int) -> tuple[np.ndarray, int]:
    """Lag range of the interpolated virtual ULA and the sub-array size U."""
    _check_pair(M, N)
    U = M * (N - 1) + 1
    return np.arange(-(U - 1), U, dtype=np.int64), U


@dataclass(frozen=True)
class ArrayGeometry:
    """Coprime array with its coarray lag sets.

    Attributes:
        m_coprime, n_coprime: the coprime pair ``M < N``.
        sensor_positions: physical positions in units of ``d``.
        lag_set: lags present in the difference coarray.
        interp_set: contiguous lags ``-(U-1) .. U-1`` of the virtual ULA.
        subarray_count: ``U = M (N - 1) + 1``.
    """

    m_coprime: int
    n_coprime: int
    unit_spacing: float = 0.5
    sensor_positions: np.ndarray = field(init=False, repr=False)
    lag_set: np.ndarray = field(init=False, repr=False)
    interp_set: np.ndarray = field(init=False, repr=False)
    subarray_count: int = field(init=False)

    def __post_init__(self):
        pos = coprime_positions(self.m_coprime, self.n_coprime)
        interp, U = virtual_ula_params(self.m_coprime, self.n_coprime)
        lags = difference_coarray(pos)
        for name, arr in (("sensor_positions", pos), ("lag_set", lags), ("interp_set", interp)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "subarray_count", U)

    @classmethod
    def from_positions(cls, positions, U: int | None = None) -> "ArrayGeometry":
        """Generic linear array (used for ULA checks and baselines).

        The result behaves like an ``ArrayGeometry`` but carries ``M = N = 0``.
        """
        obj = object.__new__(cls)
        pos = np.array(sorted(set(int(p) for p in np.ravel(positions))), dtype=np.int64)
        lags = difference_coarray(pos)
        if U is None:
            U = int(lags.max()) + 1
        interp = np.arange(-(U - 1), U, dtype=np.int64)
        for name, val in (("m_coprime", 0), ("n_coprime", 0), ("unit_spacing", 0.5),
                          ("sensor_positions", pos), ("lag_set", lags),
                          ("interp_set", interp), ("subarray_count", int(U))):
            if isinstance(val, np.ndarray):
                val.setflags(write=False)
            object.__setattr__(obj, name, val)
        return obj

    @property
    def n_sensors(self) -> int:
        return int(self.sensor_positions.size)

    @property
    def holes(self) -> np.ndarray:
        """Lags of the virtual ULA missing from the coarray."""
        return np.setdiff1d(self.interp_set, self.lag_set)

    @property
    def derived_mask(self) -> np.ndarray:
        """Boolean mask over ``interp_set``; True where the lag is in the coarray."""
        return np.isin(self.interp_set, self.lag_set)

    def contiguous_half_length(self) -> int:
        """Largest ``L`` such that lags ``-L..L`` are all present."""
        present = set(self.lag_set.tolist())
        L = 0
        while L + 1 in present:
            L += 1
        return L

    def physical_positions(self, wavelength: float = 1.0) -> np.ndarray:
        return self.sensor_positions * self.unit_spacing * wavelength

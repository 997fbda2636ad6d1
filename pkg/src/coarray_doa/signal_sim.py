"""Far-field narrowband snapshot simulation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import ArrayGeometry


@dataclass(frozen=True)
class SourceScene:
    """Uncorrelated far-field sources plus white noise.

    ``powers`` and ``noise_power`` are linear variances.
    """

    doas: tuple[float, ...]
    powers: tuple[float, ...]
    noise_power: float
    snapshots: int
    seed: int = 0

    def __post_init__(self):
        doas = tuple(float(d) for d in np.atleast_1d(self.doas))
        powers = tuple(float(p) for p in np.atleast_1d(self.powers))
        object.__setattr__(self, "doas", doas)
        object.__setattr__(self, "powers", powers)
        if len(doas) < 1 or len(doas) != len(powers):
            raise ValueError("need K >= 1 DoAs and one power per DoA")
        if any(p <= 0 for p in powers):
            raise ValueError("source powers must be positive")
        if self.noise_power < 0:
            raise ValueError("noise power must be non-negative")
        if len(set(doas)) != len(doas):
            raise ValueError("DoAs must be pairwise distinct")
        if any(not -90.0 < d < 90.0 for d in doas):
            raise ValueError("DoAs must lie in (-90, 90) degrees")
        if int(self.snapshots) < 1:
            raise ValueError("snapshots must be >= 1")

    @classmethod
    def equal_power(cls, doas: Sequence[float], snr_db: float, snapshots: int,
                    seed: int = 0, power: float = 1.0) -> "SourceScene":
        """Equal-power sources with per-source SNR ``power / noise_power``."""
        doas = tuple(doas)
        return cls(doas, (power,) * len(doas), power * 10.0 ** (-snr_db / 10.0),
                   int(snapshots), seed)

    @property
    def K(self) -> int:
        return len(self.doas)


def steering_vector(positions, theta_deg) -> np.ndarray:
    """Steering vector(s) ``exp(-j pi p sin(theta))`` for integer positions ``p``.

    ``theta_deg`` may be a scalar (returns 1-D) or an array (one column per angle).
    """
    if isinstance(positions, ArrayGeometry):
        positions = positions.sensor_positions
    p = np.asarray(positions, dtype=float).ravel()
    th = np.asarray(theta_deg, dtype=float)
    if np.any(th <= -90.0) or np.any(th >= 90.0):
        raise ValueError("angle out of range (-90, 90) degrees")
    phase = -np.pi * np.multiply.outer(p, np.sin(np.deg2rad(th)))
    return np.exp(1j * phase)


def manifold(geometry: ArrayGeometry, doas) -> np.ndarray:
    return steering_vector(geometry, np.atleast_1d(doas))


def exact_covariance(geometry: ArrayGeometry, scene: SourceScene) -> np.ndarray:
    """``A R_s A^H + noise I`` with diagonal source covariance."""
    A = manifold(geometry, scene.doas)
    R = (A * np.asarray(scene.powers)) @ A.conj().T
    return R + scene.noise_power * np.eye(A.shape[0])


def _cgauss(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def generate_snapshots(geometry: ArrayGeometry, scene: SourceScene,
                       rng: np.random.Generator | None = None) -> np.ndarray:
    """Snapshot matrix ``X = A S + N`` of shape (sensors, T).

    Waveforms and noise are circular complex Gaussian. Deterministic given
    ``scene.seed`` unless an explicit generator is passed.
    """
    if rng is None:
        rng = np.random.default_rng(scene.seed)
    T = int(scene.snapshots)
    A = manifold(geometry, scene.doas)
    S = _cgauss(rng, (scene.K, T)) * np.sqrt(np.asarray(scene.powers))[:, None]
    X = A @ S
    if scene.noise_power > 0:
        X = X + np.sqrt(scene.noise_power) * _cgauss(rng, X.shape)
    return X


def sample_covariance(X) -> np.ndarray:
    """``(1/T) sum_t x(t) x(t)^H``, symmetrized to be exactly Hermitian."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] < 1 or X.shape[0] < 1:
        raise ValueError("snapshot matrix must be 2-D with at least one column")
    R = X @ X.conj().T / X.shape[1]
    return 0.5 * (R + R.conj().T)

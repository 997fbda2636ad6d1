"""Convex z-step: PSD-constrained Toeplitz fit with a trace penalty."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from ._zstep_py import psd_project
from .coarray import ReferenceToeplitz
from .toeplitz import bordered_matrix, toeplitz_adjoint, toeplitz_from_vec

__all__ = ["ZStepProblem", "ZStepResult", "solve_z_step", "psd_project", "zstep_objective"]


@dataclass
class ZStepProblem:
    W: np.ndarray
    reference: ReferenceToeplitz
    mu: float
    tolerance: float = 1e-6
    max_iters: int = 5000

    def __post_init__(self):
        U = self.reference.U
        if self.W.shape != (U, U):
            raise ValueError(f"W has shape {self.W.shape}, expected {(U, U)}")
        if not self.mu > 0:
            raise ValueError("mu must be positive")


@dataclass
class ZStepResult:
    z: np.ndarray
    iterations: int
    converged: bool
    objective: float
    rho: float = 1.0
    state: tuple | None = None  # ADMM (S, L, y, lam) for warm restarts


def zstep_objective(problem: ZStepProblem, z) -> float:
    """``2 tr(W T(z)) + mu ||T(z) o B - R||_F``."""
    T = toeplitz_from_vec(z)
    ref = problem.reference
    fit = np.linalg.norm(T * ref.mask - ref.matrix)
    return float(2.0 * np.real(np.vdot(problem.W, T)) + problem.mu * fit)


def _restore_feasibility(z: np.ndarray) -> np.ndarray:
    # bordered(z) >= 0 iff T(z) >= 0, since z is the first column of T(z)
    lmin = np.linalg.eigvalsh(toeplitz_from_vec(z))[0]
    if lmin < 0:
        z = z.copy()
        z[0] = z[0].real - lmin * (1.0 + 1e-12)
    return z


def solve_z_step(problem: ZStepProblem, warm_start=None, rho: float | None = None,
                 backend: str | None = None, state=None) -> ZStepResult:
    """Solve the z-step by ADMM; the returned ``z`` is bordered-PSD feasible.

    Passing ``rho`` and ``state`` from a previous result restarts the ADMM from
    its splitting variables and duals, which is what the outer loop does. A
    non-converged run still returns the last iterate (made feasible) with
    ``converged=False``.
    """
    ref = problem.reference
    U = ref.U
    z0 = np.zeros(U, dtype=complex) if warm_start is None else np.asarray(warm_start, dtype=complex).copy()
    if z0.shape != (U,):
        raise ValueError("warm start has wrong length")
    W = 0.5 * (problem.W + problem.W.conj().T)
    a = toeplitz_adjoint(W)
    r = np.where(ref.lag_mask, ref.r1, 0.0).astype(complex)
    if rho is None:
        rho = 1.0
    kernel = _backend.get_kernel(backend)
    z, iters, conv, rho, state = kernel(a, r, ref.lag_mask.astype(bool), float(problem.mu), z0,
                                        float(rho), float(problem.tolerance),
                                        int(problem.max_iters), state)
    z = _restore_feasibility(np.asarray(z))
    return ZStepResult(z, int(iters), bool(conv), zstep_objective(problem, z), float(rho), state)


def bordered_min_eig(z) -> float:
    return float(np.linalg.eigvalsh(bordered_matrix(z))[0])

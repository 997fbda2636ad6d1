"""Cyclic rank minimization of the virtual-array Toeplitz covariance."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .coarray import ReferenceToeplitz
from .subproblem import ZStepProblem, psd_project, solve_z_step
from .toeplitz import bordered_matrix, toeplitz_adjoint, toeplitz_from_vec

__all__ = [
    "RecoveryConfig", "RecoveryState", "toeplitz_from_vec", "toeplitz_adjoint",
    "bordered_matrix", "f_objective", "closed_form_W", "cyclic_minimize",
    "numerical_rank", "vandermonde_decomposition",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RecoveryConfig:
    gamma: float = 0.05
    mu: float = 40.0
    epsilon: float = 1e-4
    max_outer_iters: int = 50
    z_step_tolerance: float = 1e-6
    z_step_max_iters: int = 5000
    backend: str | None = None

    def __post_init__(self):
        for name in ("gamma", "mu", "epsilon", "max_outer_iters",
                     "z_step_tolerance", "z_step_max_iters"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class RecoveryState:
    z: np.ndarray
    W: np.ndarray
    trace_history: list[float] = field(default_factory=list)
    outer_iters_used: int = 0
    converged: bool = False
    inner_converged: bool = True
    inner_iters: list[int] = field(default_factory=list)

    @property
    def T(self) -> np.ndarray:
        return toeplitz_from_vec(self.z)


def _check_hermitian(A, name):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square")
    scale = max(1.0, np.abs(A).max(initial=0.0))
    if np.abs(A - A.conj().T).max(initial=0.0) > 1e-9 * scale:
        raise ValueError(f"{name} is not Hermitian")


def f_objective(W, z, gamma: float) -> float:
    """Rank surrogate ``||W - gamma I||_F^2 / gamma^2 + 2 tr(W T(z))``."""
    _check_hermitian(W, "W")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    W = np.asarray(W)
    T = toeplitz_from_vec(z)
    U = T.shape[0]
    first = np.linalg.norm(W - gamma * np.eye(U)) ** 2 / gamma ** 2
    return float(first + 2.0 * np.real(np.vdot(W, T)))


def closed_form_W(Tz, gamma: float) -> np.ndarray:
    """Minimizer of :func:`f_objective` over the PSD cone for fixed ``T(z)``.

    Completing the square gives ``W = P_psd(gamma I - gamma^2 T)``, i.e. each
    eigenvector of ``T`` keeps its own eigenvalue ``lam`` and gets weight
    ``max(gamma - gamma^2 lam, 0)``.
    """
    _check_hermitian(Tz, "T(z)")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    Tz = 0.5 * (np.asarray(Tz) + np.asarray(Tz).conj().T)
    lam, V = np.linalg.eigh(Tz)
    lam, V = lam[::-1], V[:, ::-1]  # descending
    weights = np.maximum(gamma - gamma ** 2 * lam, 0.0)
    W = (V * weights) @ V.conj().T
    return 0.5 * (W + W.conj().T)


def random_psd_init(U: int, gamma: float, rng: np.random.Generator) -> np.ndarray:
    G = rng.standard_normal((U, U)) + 1j * rng.standard_normal((U, U))
    W = psd_project(0.5 * (G + G.conj().T))
    nrm = np.linalg.norm(W)
    if nrm == 0:
        return gamma * np.eye(U)
    return W * (gamma * np.sqrt(U) / nrm)


def _trace(W, T) -> float:
    return float(np.real(np.vdot(W, T)))


def cyclic_minimize(ref: ReferenceToeplitz, config: RecoveryConfig = RecoveryConfig(),
                    seed=0) -> RecoveryState:
    """Alternate the z-step and the closed-form W-step until the trace settles.

    Stops when ``|tr(W_i T_i) - tr(W_{i-1} T_i)| <= epsilon``, when
    ``tr(W_i T_i) < epsilon``, or after ``max_outer_iters`` passes.
    """
    rng = np.random.default_rng(seed)
    U = ref.U
    W = random_psd_init(U, config.gamma, rng)
    z = np.zeros(U, dtype=complex)
    state = RecoveryState(z=z, W=W)
    rho, admm_state = None, None
    for i in range(1, config.max_outer_iters + 1):
        prob = ZStepProblem(W, ref, config.mu, config.z_step_tolerance, config.z_step_max_iters)
        res = solve_z_step(prob, warm_start=z, rho=rho, backend=config.backend, state=admm_state)
        z, rho, admm_state = res.z, res.rho, res.state
        state.inner_iters.append(res.iterations)
        if not res.converged:
            state.inner_converged = False
            log.debug("z-step hit the iteration cap at outer iteration %d", i)
        T = toeplitz_from_vec(z)
        W_new = closed_form_W(T, config.gamma)
        tr_new = _trace(W_new, T)
        tr_old = _trace(W, T)
        W = W_new
        state.trace_history.append(tr_new)
        state.outer_iters_used = i
        if abs(tr_new - tr_old) <= config.epsilon or tr_new < config.epsilon:
            state.converged = True
            break
    state.z, state.W = z, W
    return state


def numerical_rank(A, rel_tol: float = 1e-6) -> int:
    """Count eigenvalues ``>= rel_tol * lambda_max`` of a Hermitian matrix."""
    lam = np.linalg.eigvalsh(np.asarray(A))
    top = lam[-1]
    if top <= 0:
        return 0
    return int(np.sum(lam >= rel_tol * top))


def vandermonde_decomposition(T, K: int | None = None, rel_tol: float = 1e-6):
    """Angles (degrees) and powers of a low-rank PSD Toeplitz matrix.

    Uses the shift invariance of the signal subspace: the rows of the top-K
    eigenvectors satisfy ``E[1:] = E[:-1] Phi`` and the eigenvalues of ``Phi``
    are ``exp(-j pi sin(theta_k))``. Powers come from least squares on the
    first column.
    """
    T = np.asarray(T)
    lam, V = np.linalg.eigh(T)
    if K is None:
        K = numerical_rank(T, rel_tol)
    if K < 1 or K >= T.shape[0]:
        raise ValueError(f"need 1 <= K < U, got K={K}")
    E = V[:, -K:]
    Phi = np.linalg.lstsq(E[:-1], E[1:], rcond=None)[0]
    roots = np.linalg.eigvals(Phi)
    s = np.clip(-np.angle(roots) / np.pi, -1.0, 1.0)
    theta = np.rad2deg(np.arcsin(s))
    order = np.argsort(theta)
    theta = theta[order]
    G = np.exp(-1j * np.pi * np.outer(np.arange(T.shape[0]), np.sin(np.deg2rad(theta))))
    p = np.linalg.lstsq(G, T[:, 0], rcond=None)[0].real
    return theta, p

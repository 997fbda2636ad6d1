"""Reference (pure numpy) ADMM kernel for the z-step.

Solves, for fixed ``W``::

    min_z  2 tr(W T(z)) + mu * || T(z) o B - R ||_F
    s.t.   bordered(z) >= 0

in the lag domain. Splitting: ``S = bordered(z)`` (PSD block) and
``y = D (z - r)`` (data block), where ``D`` scales each derived lag by the
square root of its multiplicity so that ``||y|| = ||T(z) o B - R||_F``.

The compiled kernel in ``_zstep_ext`` implements the same iteration.
"""
from __future__ import annotations

import numpy as np

from .toeplitz import bordered_adjoint, bordered_gram_diag, bordered_matrix, lag_multiplicity


def psd_project(H: np.ndarray) -> np.ndarray:
    H = 0.5 * (H + H.conj().T)
    lam, V = np.linalg.eigh(H)
    lam = np.maximum(lam, 0.0)
    return (V * lam) @ V.conj().T


def admm_zstep(a, r, lag_mask, mu, z0, rho, tol, max_iters, state=None):
    """Run the ADMM iteration.

    Args:
        a: lag-domain adjoint of ``W`` (linear term is ``2 Re <a, z>``).
        r: reference lags ``0..U-1`` (zeros on holes).
        lag_mask: boolean, derived lags.
        mu: data-fit weight.
        z0: warm start.
        rho: initial penalty.
        tol: relative residual tolerance.
        max_iters: iteration cap.
        state: ``(S, L, y, lam)`` from a previous call, or None for a cold start.

    Returns:
        ``(z, iterations, converged, rho, state)``.
    """
    U = r.size
    sq = np.sqrt(lag_multiplicity(U)) * lag_mask
    gram = bordered_gram_diag(U)
    target = sq * r
    z = np.array(z0, dtype=complex)
    z[0] = z[0].real
    if state is None:
        S = psd_project(bordered_matrix(z))
        L = np.zeros_like(S)
        y = sq * z - target
        lam = np.zeros(U, dtype=complex)
    else:
        S, L, y, lam = (np.array(x, dtype=complex) for x in state)
    abs_tol = 1e-8
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        rhs = bordered_adjoint(S - L) + sq * (target + y - lam) - (2.0 / rho) * a
        z = rhs / (gram + sq * sq)
        z[0] = z[0].real

        Jz = bordered_matrix(z)
        S_old, y_old = S, y
        S = psd_project(Jz + L)
        Dz = sq * z - target
        v = Dz + lam
        nv = np.linalg.norm(v)
        shrink = max(0.0, 1.0 - mu / (rho * nv)) if nv > 0 else 0.0
        y = shrink * v
        rp_J = Jz - S
        rp_y = Dz - y
        L = L + rp_J
        lam = lam + rp_y

        r_pri = np.sqrt(np.linalg.norm(rp_J) ** 2 + np.linalg.norm(rp_y) ** 2)
        r_dual = rho * np.sqrt(np.linalg.norm(S - S_old) ** 2 + np.linalg.norm(y - y_old) ** 2)
        scale_p = max(np.linalg.norm(Jz), np.linalg.norm(S), np.linalg.norm(target))
        scale_d = rho * np.sqrt(np.linalg.norm(L) ** 2 + np.linalg.norm(lam) ** 2)
        if r_pri <= max(abs_tol, tol * scale_p) and r_dual <= max(abs_tol, tol * scale_d):
            converged = True
            break
        if it % 10 == 0:
            if r_pri > 10.0 * r_dual:
                rho *= 2.0
                L /= 2.0
                lam /= 2.0
            elif r_dual > 10.0 * r_pri:
                rho /= 2.0
                L *= 2.0
                lam *= 2.0
    return z, it, converged, rho, (S, L, y, lam)

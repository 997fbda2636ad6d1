# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled ADMM kernel for the z-step; same iteration as ``_zstep_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fmax
from libc.stdlib cimport malloc, free
from scipy.linalg.cython_lapack cimport zheevd

cnp.import_array()

ctypedef double complex cplx


cdef inline double cabs2(cplx x) nogil:
    return x.real * x.real + x.imag * x.imag


cdef inline cplx conj(cplx x) nogil:
    return x.real - 1j * x.imag


cdef void bordered(const cplx* z, int U, cplx* J) nogil:
    # column-major (U+1)x(U+1); J[i + j*n]
    cdef int n = U + 1, i, j
    for j in range(U):
        for i in range(U):
            if i >= j:
                J[i + j * n] = z[i - j]
            else:
                J[i + j * n] = conj(z[j - i])
        J[j + j * n] = z[0].real
    for i in range(U):
        J[i + U * n] = z[i]
        J[U + i * n] = conj(z[i])
    J[0 + U * n] = z[0].real
    J[U + 0 * n] = z[0].real
    J[U + U * n] = z[0].real


cdef void bordered_adj(const cplx* G, int U, cplx* out) nogil:
    cdef int n = U + 1, l, i
    cdef cplx acc
    acc = 0
    for i in range(U):
        acc = acc + G[i + i * n]
    out[0] = (acc + G[0 + U * n] + conj(G[U + 0 * n]) + G[U + U * n]).real
    for l in range(1, U):
        acc = 0
        for i in range(U - l):
            # sub-diagonal (i+l, i) and conj of super-diagonal (i, i+l)
            acc = acc + G[(i + l) + i * n] + conj(G[i + (i + l) * n])
        out[l] = acc + G[l + U * n] + conj(G[U + l * n])


cdef class _Eig:
    cdef int n, lwork, lrwork, liwork
    cdef cplx* a
    cdef double* w
    cdef cplx* work
    cdef double* rwork
    cdef int* iwork

    def __cinit__(self, int n):
        cdef char jobz = b'V'
        cdef char uplo = b'L'
        cdef int info = 0, lw = -1, lrw = -1, liw = -1
        cdef cplx wq
        cdef double rq
        cdef int iq
        self.n = n
        self.a = <cplx*> malloc(n * n * sizeof(cplx))
        self.w = <double*> malloc(n * sizeof(double))
        zheevd(&jobz, &uplo, &n, self.a, &n, self.w, &wq, &lw, &rq, &lrw, &iq, &liw, &info)
        self.lwork = <int> wq.real
        self.lrwork = <int> rq
        self.liwork = iq
        self.work = <cplx*> malloc(self.lwork * sizeof(cplx))
        self.rwork = <double*> malloc(self.lrwork * sizeof(double))
        self.iwork = <int*> malloc(self.liwork * sizeof(int))

    def __dealloc__(self):
        free(self.a); free(self.w); free(self.work); free(self.rwork); free(self.iwork)

    cdef int project(self, const cplx* H, cplx* S) nogil:
        """S = PSD projection of Hermitian H (both column-major)."""
        cdef int n = self.n, i, j, k, info = 0
        cdef char jobz = b'V'
        cdef char uplo = b'L'
        cdef double lam
        cdef cplx vik
        for j in range(n):
            for i in range(j, n):
                self.a[i + j * n] = 0.5 * (H[i + j * n] + conj(H[j + i * n]))
        zheevd(&jobz, &uplo, &n, self.a, &n, self.w, self.work, &self.lwork,
               self.rwork, &self.lrwork, self.iwork, &self.liwork, &info)
        for k in range(n * n):
            S[k] = 0
        for k in range(n):
            lam = self.w[k]
            if lam <= 0.0:
                continue
            for j in range(n):
                vik = lam * conj(self.a[j + k * n])
                for i in range(n):
                    S[i + j * n] = S[i + j * n] + self.a[i + k * n] * vik
        return info


def admm_zstep(cplx[::1] a, cplx[::1] r, lag_mask, double mu, z0, double rho,
               double tol, int max_iters, state=None):
    """ADMM for the z-step. Signature and return value match the numpy kernel."""
    cdef int U = r.shape[0]
    cdef int n = U + 1, nn = n * n
    cdef int it = 0, k, l
    cdef bint converged = False
    cdef double abs_tol = 1e-8
    cdef double nv, shrink, rp, rd, nJ, nS, nT, nL, d
    cdef double[::1] sq = np.sqrt(np.where(lag_mask,
        np.r_[float(U), 2.0 * (U - np.arange(1, U))], 0.0))
    cdef double[::1] gram = np.r_[U + 3.0, 2.0 * (U - np.arange(1, U)) + 2.0]
    cdef cplx[::1] z = np.array(z0, dtype=complex)
    cdef cplx[::1] target = np.empty(U, dtype=complex)
    cdef cplx[::1] y = np.empty(U, dtype=complex)
    cdef cplx[::1] y_old = np.empty(U, dtype=complex)
    cdef cplx[::1] lam = np.zeros(U, dtype=complex)
    cdef cplx[::1] Dz = np.empty(U, dtype=complex)
    cdef cplx[::1] v = np.empty(U, dtype=complex)
    cdef cplx[::1] rhs = np.empty(U, dtype=complex)
    cdef cplx[::1] J = np.empty(nn, dtype=complex)
    cdef cplx[::1] S = np.empty(nn, dtype=complex)
    cdef cplx[::1] S_old = np.empty(nn, dtype=complex)
    cdef cplx[::1] L = np.zeros(nn, dtype=complex)
    cdef cplx[::1] H = np.empty(nn, dtype=complex)
    cdef _Eig eig = _Eig(n)
    cdef int info = 0

    z[0] = z[0].real
    for l in range(U):
        target[l] = sq[l] * r[l]
        y[l] = sq[l] * z[l] - target[l]
    if state is None:
        bordered(&z[0], U, &J[0])
        info = eig.project(&J[0], &S[0])
    else:
        S = np.array(state[0], dtype=complex).ravel(order="F")
        L = np.array(state[1], dtype=complex).ravel(order="F")
        y = np.array(state[2], dtype=complex)
        lam = np.array(state[3], dtype=complex)

    for it in range(1, max_iters + 1):
        for k in range(nn):
            H[k] = S[k] - L[k]
        bordered_adj(&H[0], U, &rhs[0])
        for l in range(U):
            z[l] = (rhs[l] + sq[l] * (target[l] + y[l] - lam[l]) - (2.0 / rho) * a[l]) \
                / (gram[l] + sq[l] * sq[l])
        z[0] = z[0].real

        bordered(&z[0], U, &J[0])
        for k in range(nn):
            S_old[k] = S[k]
            H[k] = J[k] + L[k]
        info = eig.project(&H[0], &S[0])
        if info != 0:
            raise np.linalg.LinAlgError(f"zheevd failed with info={info}")

        nv = 0.0
        for l in range(U):
            Dz[l] = sq[l] * z[l] - target[l]
            v[l] = Dz[l] + lam[l]
            nv += cabs2(v[l])
        nv = sqrt(nv)
        shrink = fmax(0.0, 1.0 - mu / (rho * nv)) if nv > 0 else 0.0

        rp = 0.0; rd = 0.0; nJ = 0.0; nS = 0.0; nT = 0.0; nL = 0.0
        for l in range(U):
            y_old[l] = y[l]
            y[l] = shrink * v[l]
            d = cabs2(Dz[l] - y[l])
            rp += d
            lam[l] = lam[l] + Dz[l] - y[l]
            rd += cabs2(y[l] - y_old[l])
            nT += cabs2(target[l])
            nL += cabs2(lam[l])
        for k in range(nn):
            rp += cabs2(J[k] - S[k])
            L[k] = L[k] + J[k] - S[k]
            rd += cabs2(S[k] - S_old[k])
            nJ += cabs2(J[k])
            nS += cabs2(S[k])
            nL += cabs2(L[k])
        rp = sqrt(rp)
        rd = rho * sqrt(rd)
        if rp <= fmax(abs_tol, tol * sqrt(fmax(fmax(nJ, nS), nT))) and \
                rd <= fmax(abs_tol, tol * rho * sqrt(nL)):
            converged = True
            break
        if it % 10 == 0:
            if rp > 10.0 * rd:
                rho *= 2.0
                for k in range(nn):
                    L[k] = L[k] / 2.0
                for l in range(U):
                    lam[l] = lam[l] / 2.0
            elif rd > 10.0 * rp:
                rho /= 2.0
                for k in range(nn):
                    L[k] = L[k] * 2.0
                for l in range(U):
                    lam[l] = lam[l] * 2.0
    out_state = (np.asarray(S).reshape((n, n), order="F"),
                 np.asarray(L).reshape((n, n), order="F"),
                 np.asarray(y), np.asarray(lam))
    return np.asarray(z), it, converged, rho, out_state

import numpy as np
import pytest

from coarray_doa import _backend
from coarray_doa.coarray import ReferenceToeplitz, interpolate_init, lag_statistics, reference_matrix
from coarray_doa.geometry import ArrayGeometry
from coarray_doa.recovery import RecoveryConfig, closed_form_W, random_psd_init
from coarray_doa.signal_sim import SourceScene, generate_snapshots, sample_covariance
from coarray_doa.subproblem import (ZStepProblem, bordered_min_eig, psd_project, solve_z_step,
                                    zstep_objective)
from coarray_doa.toeplitz import toeplitz_from_vec

G35 = ArrayGeometry(3, 5)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def full_reference(z):
    U = z.size
    T = toeplitz_from_vec(z)
    return ReferenceToeplitz(T, np.ones((U, U), np.int8), z.copy(), np.ones(U, bool))


def masked_reference(z, lag_mask):
    U = z.size
    d = np.abs(np.subtract.outer(np.arange(U), np.arange(U)))
    mask = lag_mask[d].astype(np.int8)
    return ReferenceToeplitz(toeplitz_from_vec(z) * mask, mask, np.where(lag_mask, z, 0), lag_mask)


def scene_reference(seed=4, snr=30.0):
    sc = SourceScene.equal_power(np.linspace(-40, 40, 9), snr, 500, seed=seed)
    R = sample_covariance(generate_snapshots(G35, sc))
    return reference_matrix(interpolate_init(lag_statistics(R, G35)))


# -- psd_project ----------------------------------------------------------------

def test_psd_project_idempotent_on_psd():
    rng = np.random.default_rng(0)
    A = crandn(rng, 6, 6)
    P = A @ A.conj().T
    assert np.linalg.norm(psd_project(P) - P) <= 1e-12 * np.linalg.norm(P)


def test_psd_project_diag():
    np.testing.assert_allclose(psd_project(np.diag([1.0, -2.0])), np.diag([1.0, 0.0]), atol=1e-15)


def test_psd_project_is_nearest():
    rng = np.random.default_rng(1)
    H = crandn(rng, 5, 5)
    H = H + H.conj().T
    P = psd_project(H)
    assert np.linalg.eigvalsh(P)[0] >= -1e-12
    d = np.linalg.norm(H - P)
    for _ in range(100):
        B = crandn(rng, 5, 5)
        assert d <= np.linalg.norm(H - B @ B.conj().T) + 1e-12


# -- solve_z_step -----------------------------------------------------------------

def test_validation():
    ref = full_reference(np.array([1.0, 0.2, 0.1], complex))
    with pytest.raises(ValueError):
        ZStepProblem(np.zeros((2, 2)), ref, 1.0)
    with pytest.raises(ValueError):
        ZStepProblem(np.zeros((3, 3)), ref, 0.0)
    with pytest.raises(ValueError):
        solve_z_step(ZStepProblem(np.zeros((3, 3)), ref, 1.0), warm_start=np.zeros(4))


@pytest.mark.parametrize("backend", _backend.available())
def test_exact_fit_fixed_point(backend):
    rng = np.random.default_rng(2)
    th = [-25.0, 10.0, 48.0]
    U = 7
    z0 = sum(p * np.exp(-1j * np.pi * np.arange(U) * np.sin(np.deg2rad(t)))
             for t, p in zip(th, rng.uniform(0.5, 2, 3)))
    z0[0] += 0.1
    res = solve_z_step(ZStepProblem(np.zeros((U, U)), full_reference(z0), 5.0), backend=backend)
    assert res.converged
    np.testing.assert_allclose(res.z, z0, atol=1e-5 * np.abs(z0).max())


def test_large_mu_matches_derived_lags():
    ref = scene_reference()
    W = random_psd_init(ref.U, 0.05, np.random.default_rng(3))
    res = solve_z_step(ZStepProblem(W, ref, 1e6))
    m = ref.lag_mask
    rel = np.abs(res.z[m] - ref.r1[m]) / np.abs(ref.r1[m]).max()
    assert rel.max() < 1e-3


def test_feasible_output():
    ref = scene_reference(snr=-10.0)
    rng = np.random.default_rng(5)
    for _ in range(5):
        W = random_psd_init(ref.U, 0.05, rng)
        res = solve_z_step(ZStepProblem(W, ref, 40.0, max_iters=30))
        assert bordered_min_eig(res.z) >= -1e-8 * np.linalg.norm(res.z)
        assert res.z[0].imag == 0


def test_iteration_cap_flags_non_convergence():
    ref = scene_reference()
    W = random_psd_init(ref.U, 0.05, np.random.default_rng(6))
    res = solve_z_step(ZStepProblem(W, ref, 40.0, max_iters=3))
    assert not res.converged and res.iterations == 3
    assert np.isfinite(res.objective)


def test_deterministic():
    ref = scene_reference()
    W = random_psd_init(ref.U, 0.05, np.random.default_rng(7))
    a = solve_z_step(ZStepProblem(W, ref, 40.0))
    b = solve_z_step(ZStepProblem(W, ref, 40.0))
    np.testing.assert_array_equal(a.z, b.z)


def cvx_oracle(W, ref, mu):
    cp = pytest.importorskip("cvxpy")
    U = ref.U
    zr = cp.Variable(U)
    zi = cp.Variable(U)
    # bordered PSD written as a real symmetric 2(U+1) x 2(U+1) block
    n = U + 1
    Xr = cp.Variable((n, n), symmetric=True)
    Xi = cp.Variable((n, n))
    cons = [cp.bmat([[Xr, -Xi], [Xi, Xr]]) >> 0, Xi == -Xi.T, zi[0] == 0]
    for j in range(U):
        for k in range(U):
            l = j - k
            cons += [Xr[j, k] == zr[abs(l)], Xi[j, k] == (zi[l] if l >= 0 else -zi[-l])]
        cons += [Xr[j, U] == zr[j], Xi[j, U] == zi[j]]
    cons += [Xr[U, U] == zr[0]]
    mask = ref.mask.astype(float)
    resid = []
    for j in range(U):
        for k in range(U):
            if mask[j, k]:
                l = j - k
                re = zr[abs(l)]
                im = zi[l] if l >= 0 else -zi[-l]
                resid += [re - ref.matrix[j, k].real, im - ref.matrix[j, k].imag]
    Wr, Wi = W.real, W.imag
    lin = 0
    for j in range(U):
        for k in range(U):
            l = j - k
            re = zr[abs(l)]
            im = zi[l] if l >= 0 else -zi[-l]
            lin = lin + Wr[j, k] * re + Wi[j, k] * im
    obj = 2 * lin + mu * cp.norm(cp.hstack(resid), 2)
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver="CLARABEL")
    return prob.value


@pytest.mark.parametrize("seed", range(3))
def test_small_instance_matches_conic_oracle(seed):
    rng = np.random.default_rng(20 + seed)
    U = 3
    z = crandn(rng, U)
    z[0] = 3.0
    lag_mask = np.array([True, True, False])
    ref = masked_reference(z, lag_mask)
    W = psd_project(random_psd_init(U, 0.05, rng) + 0.02 * np.eye(U))
    prob = ZStepProblem(W, ref, 0.5, tolerance=1e-8, max_iters=100000)
    res = solve_z_step(prob)
    best = cvx_oracle(W, ref, 0.5)
    assert res.objective == pytest.approx(best, rel=1e-4, abs=1e-8)


def test_objective_convex_along_chords():
    ref = scene_reference()
    rng = np.random.default_rng(8)
    W = random_psd_init(ref.U, 0.05, rng)
    prob = ZStepProblem(W, ref, 40.0)
    za = solve_z_step(prob).z
    zb = solve_z_step(ZStepProblem(random_psd_init(ref.U, 0.05, rng), ref, 40.0)).z
    fa, fb = zstep_objective(prob, za), zstep_objective(prob, zb)
    for t in np.linspace(0, 1, 11):
        assert zstep_objective(prob, (1 - t) * za + t * zb) <= (1 - t) * fa + t * fb + 1e-9 * (abs(fa) + abs(fb))


@pytest.mark.skipif(len(_backend.available()) < 2, reason="compiled kernel not built")
def test_backends_agree():
    ref = scene_reference()
    W = random_psd_init(ref.U, 0.05, np.random.default_rng(9))
    prob = ZStepProblem(W, ref, 40.0)
    a = solve_z_step(prob, backend="compiled")
    b = solve_z_step(prob, backend="python")
    assert a.iterations == b.iterations
    np.testing.assert_allclose(a.z, b.z, atol=1e-9 * np.abs(b.z).max())


def test_warm_start_regression_guard():
    ref = scene_reference()
    cfg = RecoveryConfig()
    W = random_psd_init(ref.U, cfg.gamma, np.random.default_rng(10))
    first = solve_z_step(ZStepProblem(W, ref, cfg.mu))
    W2 = closed_form_W(toeplitz_from_vec(first.z), cfg.gamma)
    prob2 = ZStepProblem(W2, ref, cfg.mu)
    cold = solve_z_step(prob2)
    warm = solve_z_step(prob2, warm_start=first.z, rho=first.rho, state=first.state)
    assert warm.iterations <= 2 * cold.iterations
    assert warm.objective == pytest.approx(cold.objective, rel=1e-4)

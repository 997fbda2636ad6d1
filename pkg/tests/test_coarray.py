import numpy as np
import pytest

from coarray_doa.coarray import (interpolate_init, lag_statistics, reference_matrix,
                                 subarray_matrix)
from coarray_doa.geometry import ArrayGeometry
from coarray_doa.signal_sim import SourceScene, exact_covariance, manifold, steering_vector
from coarray_doa.toeplitz import toeplitz_from_vec

G35 = ArrayGeometry(3, 5)


def kron_oracle(geometry, scene):
    """Select the unique lags of A_v p + noise vec(I), A_v = A (x) A^* (vec stacks columns)."""
    A = manifold(geometry, scene.doas)
    p = np.asarray(scene.powers)
    n = geometry.n_sensors
    # column-wise Kronecker: vec(a a^H) = conj(a) (x) a under column stacking
    Av = np.stack([np.kron(A[:, k].conj(), A[:, k]) for k in range(A.shape[1])], axis=1)
    v = Av @ p + scene.noise_power * np.eye(n).ravel(order="F")
    pos = geometry.sensor_positions
    out = {}
    for col in range(n):
        for row in range(n):
            out.setdefault(int(pos[row] - pos[col]), v[row + col * n])
    return out


def test_single_source_lag_values():
    sc = SourceScene((17.0,), (2.5,), 0.3, 1)
    sig = lag_statistics(exact_covariance(G35, sc), G35)
    for l in G35.lag_set:
        expect = 2.5 * np.exp(-1j * np.pi * l * np.sin(np.deg2rad(17.0))) + 0.3 * (l == 0)
        np.testing.assert_allclose(sig.at(int(l)), expect, atol=1e-12)
    assert np.all(np.isnan(sig.values[~sig.derived_mask]))


def test_identity_covariance_lags():
    g = ArrayGeometry.from_positions([0, 1, 2])
    sig = lag_statistics(np.eye(3), g)
    np.testing.assert_allclose(sig.values, [0, 0, 1, 0, 0])


def test_two_source_matches_kronecker_oracle():
    sc = SourceScene((-23.0, 41.0), (1.0, 0.7), 0.05, 1)
    sig = lag_statistics(exact_covariance(G35, sc), G35)
    oracle = kron_oracle(G35, sc)
    assert set(oracle) == set(G35.lag_set.tolist())
    for l, val in oracle.items():
        np.testing.assert_allclose(sig.at(l), val, atol=1e-12)


def test_lag_statistics_shape_check():
    with pytest.raises(ValueError):
        lag_statistics(np.eye(5), G35)


def test_select_mode_agrees_on_exact_covariance():
    sc = SourceScene((5.0, -30.0), (1.0, 1.0), 0.1, 1)
    R = exact_covariance(G35, sc)
    a = lag_statistics(R, G35, "average")
    b = lag_statistics(R, G35, "select")
    np.testing.assert_allclose(a.values[a.derived_mask], b.values[b.derived_mask], atol=1e-12)


def test_conjugate_symmetry_on_noisy_input():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((7, 20)) + 1j * rng.standard_normal((7, 20))
    sig = lag_statistics(X @ X.conj().T / 20, G35)
    v = sig.values[sig.derived_mask]
    np.testing.assert_allclose(v, v[::-1].conj(), atol=1e-14)
    assert sig.at(0).imag == 0 and sig.at(0).real >= 0


def test_interpolate_zero_fills_holes():
    sc = SourceScene((10.0,), (1.0,), 0.1, 1)
    sig = lag_statistics(exact_covariance(G35, sc), G35)
    vi = interpolate_init(sig)
    for h in (-11, -8, 8, 11):
        assert vi.at(h) == 0
    np.testing.assert_array_equal(vi.values[sig.derived_mask], sig.values[sig.derived_mask])


def test_interpolate_identity_without_holes_and_zero_input():
    g = ArrayGeometry.from_positions([0, 1, 2, 3])
    sig = lag_statistics(np.eye(4), g)
    vi = interpolate_init(sig)
    np.testing.assert_array_equal(vi.values, sig.values)
    z = lag_statistics(np.zeros((4, 4)), g)
    assert np.all(interpolate_init(z).values == 0)


def test_reference_mask_3_5():
    sc = SourceScene((10.0,), (1.0,), 0.0, 1)
    ref = reference_matrix(interpolate_init(lag_statistics(exact_covariance(G35, sc), G35)))
    d = np.abs(np.subtract.outer(np.arange(13), np.arange(13)))
    np.testing.assert_array_equal(ref.mask == 0, np.isin(d, [8, 11]))
    np.testing.assert_array_equal(ref.mask, ref.mask.T)
    assert np.all(np.diag(ref.mask) == 1)
    assert np.all(ref.matrix[ref.mask == 0] == 0)
    g = steering_vector(np.arange(13), 10.0)
    np.testing.assert_allclose(ref.matrix * ref.mask, np.outer(g, g.conj()) * ref.mask, atol=1e-12)


def test_reference_rejects_uninitialized():
    sig = lag_statistics(np.eye(7), G35)
    with pytest.raises(ValueError):
        reference_matrix(sig)


def test_impulse_gives_identity():
    g = ArrayGeometry.from_positions([0, 1, 2, 3])
    ref = reference_matrix(interpolate_init(lag_statistics(np.eye(4), g)))
    np.testing.assert_allclose(ref.matrix, np.eye(4))


def test_ula_round_trip():
    g = ArrayGeometry.from_positions(np.arange(6))
    sc = SourceScene((-33.0, 4.0, 50.0), (1.0, 2.0, 0.5), 0.2, 1)
    Rx = exact_covariance(g, sc)
    ref = reference_matrix(interpolate_init(lag_statistics(Rx, g)))
    assert np.linalg.norm(ref.matrix - Rx) / np.linalg.norm(Rx) < 1e-12


def test_subarray_matrix_equals_toeplitz_of_first_column():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((7, 30)) + 1j * rng.standard_normal((7, 30))
    vi = interpolate_init(lag_statistics(X @ X.conj().T / 30, G35))
    V = subarray_matrix(vi)
    np.testing.assert_allclose(V[:, 0], vi.nonnegative())
    np.testing.assert_allclose(V, toeplitz_from_vec(V[:, 0]), atol=1e-14)
    np.testing.assert_allclose(V, V.conj().T, atol=1e-14)

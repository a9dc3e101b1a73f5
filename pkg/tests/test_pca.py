import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiat.dataset import ShapeMismatch
from fiat.pca import (
    DegenerateInput,
    PCAModel,
    ZeroMatrix,
    covariance,
    fit,
    fit_fixed,
    power_iteration,
    project,
    project_fixed,
)

ONE = 1 << 20


def naive_cov(X):
    N, m = X.shape
    mu = [sum(X[i][j] for i in range(N)) / N for j in range(m)]
    C = np.zeros((m, m))
    for a in range(m):
        for b in range(m):
            C[a, b] = sum((X[i][a] - mu[a]) * (X[i][b] - mu[b]) for i in range(N)) / (N - 1)
    return C


def spectrum_matrix(rng, m, ratio_hi=0.7):
    Q, _ = np.linalg.qr(rng.normal(size=(m, m)))
    lam = [float(rng.uniform(1, 10))]
    for _ in range(m - 1):
        lam.append(lam[-1] * float(rng.uniform(0.05, ratio_hi)))
    return (Q * lam) @ Q.T


def test_covariance_examples():
    _, C = covariance([[1.0, 2.0], [1.0, 2.0]])
    assert np.all(C == 0)
    _, C = covariance([[0.0, 0.0], [1.0, 1.0]])
    assert np.allclose(C, [[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(DegenerateInput):
        covariance([[1.0, 2.0]])


def test_covariance_matches_double_loop():
    X = np.random.default_rng(0).normal(size=(100, 3))
    _, C = covariance(X)
    assert np.max(np.abs(C - naive_cov(X))) <= 1e-9


def test_diagonal_case():
    vals, vecs, _ = power_iteration(np.diag([4.0, 1.0]), 1)
    assert vals[0] == pytest.approx(4.0)
    assert np.allclose(np.abs(vecs[0]), [1.0, 0.0])


def test_identity_spectrum():
    vals, _, _ = power_iteration(np.eye(2), 2)
    assert np.allclose(vals, [1.0, 1.0])


def test_random_gap_matrix_against_dense_solver():
    rng = np.random.default_rng(5)
    Q, _ = np.linalg.qr(rng.normal(size=(5, 5)))
    lam = np.array([10.0, 5.0, 2.5, 1.0, 0.4])
    C = (Q * lam) @ Q.T
    vals, _, _ = power_iteration(C, 3)
    ref = np.sort(np.linalg.eigvalsh(C))[::-1][:3]
    assert np.all(np.abs(vals - ref) / ref <= 1e-4)


def test_zero_matrix():
    vals, vecs, flagged = power_iteration(np.zeros((3, 3)), 2)
    assert flagged == (0, 1) and np.all(vals == 0)
    assert np.allclose(vecs[0], np.ones(3) / np.sqrt(3))
    with pytest.raises(ZeroMatrix):
        power_iteration(np.zeros((3, 3)), 1, strict=True)


def test_rejects_bad_inputs():
    with pytest.raises(ShapeMismatch):
        power_iteration(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)
    with pytest.raises(ValueError):
        power_iteration(np.eye(2), 3)


def test_projection_examples():
    X = np.random.default_rng(1).normal(size=(6, 3))
    model = PCAModel(np.zeros(3), np.eye(3), np.ones(3), np.eye(3))
    assert np.allclose(project(X, model), X)
    t = np.array([-2.0, -1.0, 0.5, 3.0])
    X = np.outer(t, [1.0, 1.0]) / np.sqrt(2)
    m = fit(X, 1)
    Y = project(X, m)[:, 0]
    assert np.allclose(np.abs(Y), np.abs(t - t.mean()))
    with pytest.raises(ShapeMismatch):
        project(np.ones((2, 2)), fit(np.random.default_rng(0).normal(size=(5, 3)), 1))


def test_adult_shape():
    X = np.random.default_rng(3).normal(size=(200, 9))
    m = fit(X, 3)
    assert m.components.shape == (3, 9) and project(X, m).shape == (200, 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.integers(0, 10**6))
def test_model_invariants(m, seed):
    rng = np.random.default_rng(seed)
    C = spectrum_matrix(rng, m)
    k = int(rng.integers(1, m + 1))
    vals, vecs, _ = power_iteration(C, k)
    assert np.allclose(np.linalg.norm(vecs, axis=1), 1.0, atol=1e-6)
    assert np.all(np.diff(vals) <= 1e-9) and np.all(vals >= -1e-6)
    assert np.max(np.abs(vecs @ vecs.T - np.eye(k))) <= 1e-4
    assert vals.sum() <= np.trace(C) + 1e-6
    scale = np.linalg.norm(C, 2)
    for lam, v in zip(vals, vecs):
        assert np.linalg.norm(C @ v - lam * v) <= 1e-3 * scale


def test_fixed_path_matches_float_path():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(150, 4)) @ rng.normal(size=(4, 4))
    Xr = np.floor(X * ONE + 0.5).astype(np.int64)
    fp = fit_fixed(Xr, 2)
    model = fit(Xr / ONE, 2)
    Yf = project(Xr / ONE, model)
    Y = np.array(fp.Y) / ONE
    assert np.max(np.abs(Y - Yf)) <= 2**-10
    assert project_fixed(Xr, fp.mean, fp.components) == fp.Y
    N = len(Xr)
    for i in range(4):
        for j in range(4):
            assert fp.cov[i][j] * (N - 1) * ONE + fp.cov_rem[i][j] == fp.scatter[i][j]

import numpy as np
import pytest

from glopt.numerics import (clip_coord, clip_euclid, inv_sqrt_psd, jacobi_eigh,
                            project_ball)
from glopt.rng import run_stream


def test_project_ball_examples():
    np.testing.assert_allclose(project_ball([3.0, 4.0], 1.0), [0.6, 0.8], rtol=1e-15)
    np.testing.assert_array_equal(project_ball([3.0, 4.0], 10.0), [3.0, 4.0])
    np.testing.assert_array_equal(project_ball([7.0, 0.0], 0.0), [0.0, 0.0])


def test_project_ball_rejects_bad_input():
    with pytest.raises(ValueError):
        project_ball([1.0, np.nan], 1.0)
    with pytest.raises(ValueError):
        project_ball([1.0], -1.0)


def test_clip_euclid_examples():
    np.testing.assert_array_equal(clip_euclid([0.3, 0.4]), [0.3, 0.4])
    np.testing.assert_allclose(clip_euclid([3.0, 4.0]), [0.6, 0.8], rtol=1e-15)
    np.testing.assert_array_equal(clip_euclid([0.0, 0.0]), [0.0, 0.0])  # 0/0 = 0


def test_clip_coord_examples():
    np.testing.assert_array_equal(clip_coord([0.5, -2.0]), [0.5, -1.0])
    np.testing.assert_array_equal(clip_coord([0.0, 0.0]), [0.0, 0.0])
    np.testing.assert_array_equal(clip_coord([3.0, -0.1, 1.0]), [1.0, -0.1, 1.0])


def test_projection_nonexpansive():
    gen = run_stream(0, "nonexpansive")
    for _ in range(1000):
        d = int(gen.integers(1, 8))
        x = gen.normal(size=d) * 10.0 ** gen.uniform(-3, 3)
        y = gen.normal(size=d) * 10.0 ** gen.uniform(-3, 3)
        R = float(gen.uniform(0.0, 5.0))
        lhs = np.linalg.norm(project_ball(x, R) - project_ball(y, R))
        assert lhs <= np.linalg.norm(x - y) + 1e-10


def test_idempotence_exact():
    gen = run_stream(1, "idempotent")
    for _ in range(500):
        d = int(gen.integers(1, 6))
        x = gen.normal(size=d) * 10.0 ** gen.uniform(-6, 6)
        for f in (clip_euclid, clip_coord, lambda v: project_ball(v, 0.7)):
            once = f(x)
            np.testing.assert_array_equal(f(once), once)


def test_jacobi_matches_spectrum():
    gen = run_stream(2, "jacobi")
    for d in (1, 2, 5, 16):
        A = gen.normal(size=(d, d))
        S = A @ A.T
        w, Q = jacobi_eigh(S)
        np.testing.assert_allclose(Q @ np.diag(w) @ Q.T, S, atol=1e-10 * max(1, np.abs(S).max()))
        np.testing.assert_allclose(Q @ Q.T, np.eye(d), atol=1e-12)
        np.testing.assert_allclose(np.sort(w), np.linalg.eigvalsh(S), rtol=1e-9, atol=1e-10)


def test_inv_sqrt_psd_identity_and_diag():
    np.testing.assert_allclose(inv_sqrt_psd(np.eye(3), floor=1e-12), np.eye(3), atol=1e-12)
    got = inv_sqrt_psd(np.diag([4.0, 9.0]))
    np.testing.assert_allclose(got, np.diag([0.5, 1.0 / 3.0]), atol=1e-12)


def test_inv_sqrt_psd_multiplies_back_to_identity():
    gen = run_stream(3, "psd")
    A = gen.normal(size=(5, 5))
    S = A @ A.T + 1e-3 * np.eye(5)  # eigenvalues well above the floor
    P = inv_sqrt_psd(S, floor=1e-12)
    err = np.linalg.norm(P @ S @ P - np.eye(5), 2)
    assert err <= 1e-8
    # result is symmetric positive definite
    np.testing.assert_array_equal(P, P.T)
    assert np.all(np.linalg.eigvalsh(P) > 0)


def test_inv_sqrt_psd_floors_small_eigenvalues():
    S = np.diag([1.0, 0.0])
    P = inv_sqrt_psd(S, floor=1e-4)
    np.testing.assert_allclose(P, np.diag([1.0, 1e2]), rtol=1e-12)


def test_inv_sqrt_psd_rejects_bad_matrices():
    with pytest.raises(ValueError):
        inv_sqrt_psd(np.array([[0.0, 1.0], [-1.0, 0.0]]))  # asymmetric
    with pytest.raises(ValueError):
        inv_sqrt_psd(np.diag([1.0, -1.0]))  # indefinite

import numpy as np
import pytest
from conftest import random_orthonormal, random_tangent

from drfpca.exceptions import NumericalError, ValidationError
from drfpca.manifold.stiefel import (
    StiefelPoint,
    TangentVector,
    get_retraction,
    orthonormality_residual,
    project_tangent,
    random_point,
    retract_polar,
    retract_qf,
    tangency_residual,
)

RETRACTIONS = [retract_qf, retract_polar]


class TestStiefelPoint:
    def test_random_point_is_orthonormal(self):
        for seed in range(10):
            U = random_point(6, 3, seed)
            assert orthonormality_residual(U.U) <= 1e-10

    def test_random_point_is_deterministic(self):
        np.testing.assert_array_equal(random_point(5, 2, 7).U, random_point(5, 2, 7).U)

    def test_random_point_accepts_seed_sequence(self):
        a = random_point(4, 2, np.random.SeedSequence(3, spawn_key=(1,)))
        b = random_point(4, 2, np.random.SeedSequence(3, spawn_key=(2,)))
        assert not np.allclose(a.U, b.U)

    def test_random_points_cover_manifold_evenly(self):
        diag = np.mean([np.diag(random_point(10, 4, seed).projector()) for seed in range(1000)], axis=0)
        np.testing.assert_allclose(diag, 0.4, atol=0.03)

    def test_small_drift_is_repaired(self, rng):
        U = random_orthonormal(rng, 5, 2) + 1e-8 * rng.standard_normal((5, 2))
        assert orthonormality_residual(StiefelPoint(U).U) <= 1e-10

    def test_large_drift_is_an_error(self, rng):
        U = random_orthonormal(rng, 5, 2) + 1e-3 * rng.standard_normal((5, 2))
        with pytest.raises(NumericalError, match="off the manifold"):
            StiefelPoint(U)

    def test_bad_shape(self):
        with pytest.raises(ValidationError):
            StiefelPoint(np.eye(3)[:, :0])
        with pytest.raises(ValidationError):
            random_point(2, 3, 0)

    def test_complement_spans_orthogonal_space(self, rng):
        point = StiefelPoint(random_orthonormal(rng, 5, 2))
        W = point.complement()
        assert W.shape == (5, 3)
        np.testing.assert_allclose(point.U.T @ W, 0.0, atol=1e-12)
        np.testing.assert_allclose(point.projector() + W @ W.T, np.eye(5), atol=1e-12)


class TestTangentProjection:
    def test_projection_is_tangent_and_idempotent(self, rng):
        U = random_orthonormal(rng, 6, 3)
        D = rng.standard_normal((6, 3))
        delta = project_tangent(U, D)
        assert tangency_residual(U, delta.delta) <= 1e-12
        np.testing.assert_allclose(project_tangent(U, delta.delta).delta, delta.delta, atol=1e-12)

    def test_projection_is_self_adjoint(self, rng):
        U = random_orthonormal(rng, 6, 3)
        A, B = rng.standard_normal((6, 3)), rng.standard_normal((6, 3))
        lhs = np.sum(project_tangent(U, A).delta * B)
        rhs = np.sum(A * project_tangent(U, B).delta)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_normal_component_is_removed(self, rng):
        U = random_orthonormal(rng, 4, 2)
        S = rng.standard_normal((2, 2))
        assert project_tangent(U, U @ (S + S.T)).norm() < 1e-12

    def test_non_tangent_matrix_rejected(self, rng):
        U = StiefelPoint(random_orthonormal(rng, 4, 2))
        with pytest.raises(NumericalError, match="not tangent"):
            TangentVector(U.U.copy(), U)


class TestRetractions:
    @pytest.mark.parametrize("retract", RETRACTIONS)
    def test_zero_step_is_identity(self, retract, rng):
        U = random_orthonormal(rng, 5, 2)
        np.testing.assert_allclose(retract(U, np.zeros_like(U)).U, U, atol=1e-12)

    @pytest.mark.parametrize("retract", RETRACTIONS)
    def test_result_is_on_manifold(self, retract, rng):
        for _ in range(20):
            U = random_orthonormal(rng, 6, 3)
            delta = 3.0 * random_tangent(rng, U)
            assert orthonormality_residual(retract(U, delta).U) <= 1e-10

    @pytest.mark.parametrize("retract", RETRACTIONS)
    def test_first_order_agreement(self, retract, rng):
        U = random_orthonormal(rng, 5, 2)
        delta = random_tangent(rng, U)
        ts = np.array([1e-2, 1e-3, 1e-4])
        errors = np.array([np.linalg.norm(retract(U, t * delta).U - (U + t * delta)) for t in ts])
        slope = np.polyfit(np.log(ts), np.log(errors), 1)[0]
        assert slope >= 1.9

    @pytest.mark.parametrize("name", ["qf", "polar"])
    def test_circle_step(self, name):
        retract = get_retraction(name)
        U1 = retract(np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])).U
        np.testing.assert_allclose(U1, np.array([[1.0], [1.0]]) / np.sqrt(2.0), atol=1e-12)

    def test_unknown_retraction(self):
        with pytest.raises(ValidationError, match="unknown retraction"):
            get_retraction("cayley")

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from alphavortex.errors import DomainError
from alphavortex.halfplane import (
    VortexEnsemble, euler_velocity, interior_velocity, interior_velocity_direct, kernel_halfplane,
)

WALL_SPEED = 1 / (4 * math.pi)
# (1/2 - K1(2)) / (2 pi), mpmath
IMAGE_SPEED_ALPHA1 = 0.0573171


def test_ensemble_validation():
    with pytest.raises(DomainError):
        VortexEnsemble([[0.0, 0.0]], [1.0])
    with pytest.raises(ValueError):
        VortexEnsemble([[0.0, 1.0]], [1.0, 2.0])
    with pytest.raises(ValueError):
        VortexEnsemble([[0.0, np.nan]], [1.0])
    q = VortexEnsemble([[0.0, 1.0], [1.0, 2.0]], [1.0, -2.0])
    assert q.total_variation == 3.0 and q.signed_mass == -1.0
    with pytest.raises(ValueError):
        q.positions[0, 0] = 5.0
    assert len(VortexEnsemble.empty()) == 0


def test_coincident_positions_warn():
    with pytest.warns(RuntimeWarning):
        VortexEnsemble([[0.0, 1.0], [0.0, 1.0]], [1.0, 1.0])


def test_digest_tracks_content():
    q = VortexEnsemble([[0.0, 1.0]], [1.0])
    assert q.digest() == VortexEnsemble([[0.0, 1.0]], [1.0]).digest()
    assert q.digest() != q.scaled(2.0).digest()


class TestKernel:
    def test_values(self):
        assert np.allclose(kernel_halfplane([0.0, 1.0], [0.0, 2.0]), [2 / (3 * math.pi), 0], atol=1e-15)
        assert np.array_equal(kernel_halfplane([0.4, 1.0], [3.0, 0.0]), [0.0, 0.0])
        assert abs(kernel_halfplane([5.0, 0.0], [0.0, 1.0])[1]) < 1e-14
        with pytest.raises(DomainError):
            kernel_halfplane([1.0, 1.0], [1.0, 1.0])

    @given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.01, 3))
    def test_tangent_on_wall(self, x1, y1, y2):
        assert kernel_halfplane([x1, 0.0], [y1, y2])[1] == 0.0


class TestEuler:
    def test_single_vortex_self_velocity(self):
        q = VortexEnsemble([[0.0, 1.0]], [1.0])
        assert np.allclose(euler_velocity(q, [[0.0, 1.0]]), [[WALL_SPEED, 0.0]], atol=1e-15)

    def test_mirror_pair(self):
        # u1 is even and u2 odd under x1 -> -x1, so u2 cancels on the symmetry axis;
        # u1 = 2 * 2/(10 pi) comes from the two image terms
        q = VortexEnsemble([[-1.0, 1.0], [1.0, 1.0]], [1.0, 1.0])
        u = euler_velocity(q, [[0.0, 1.0]])[0]
        assert abs(u[1]) < 1e-14
        assert u[0] == pytest.approx(0.4 / math.pi, rel=1e-14)

    def test_empty(self):
        assert np.array_equal(euler_velocity(VortexEnsemble.empty(), np.ones((3, 2))), np.zeros((3, 2)))

    def test_divergence_free(self, rng):
        q = VortexEnsemble(rng.uniform([-1, 0.2], [1, 2], (5, 2)), rng.normal(size=5))
        x, h = np.array([0.31, 0.77]), 1e-4
        du1 = (euler_velocity(q, x + [h, 0]) - euler_velocity(q, x - [h, 0]))[0] / (2 * h)
        du2 = (euler_velocity(q, x + [0, h]) - euler_velocity(q, x - [0, h]))[1] / (2 * h)
        assert abs(du1 + du2) < 1e-6


class TestInterior:
    def test_image_speed(self):
        q = VortexEnsemble([[0.0, 1.0]], [1.0])
        assert np.allclose(interior_velocity(q, [[0.0, 1.0]], 1.0), [[IMAGE_SPEED_ALPHA1, 0.0]], atol=5e-8)

    def test_euler_limit(self):
        q = VortexEnsemble([[0.0, 1.0]], [1.0])
        assert np.allclose(interior_velocity(q, [[0.0, 1.0]], 1e-8), [[WALL_SPEED, 0.0]], atol=1e-7)

    def test_wall_tangency(self, rng):
        q = VortexEnsemble(rng.uniform([-1, 0.2], [1, 2], (4, 2)), rng.normal(size=4))
        assert abs(interior_velocity(q, [[0.7, 0.0]], 0.1)[0, 1]) < 1e-14

    def test_wall_value_is_minus_trace(self, rng):
        from alphavortex.boundary import boundary_trace
        q = VortexEnsemble(rng.uniform([-1, 0.2], [1, 2], (4, 2)), rng.normal(size=4))
        x1 = np.linspace(-3, 3, 7)
        u = interior_velocity(q, np.column_stack((x1, np.zeros(7))), 0.3)
        assert np.allclose(u[:, 0], -boundary_trace(q, 0.3, x1), atol=1e-14)

    def test_matches_direct_sum(self, rng):
        q = VortexEnsemble(rng.uniform([-1, 0.2], [1, 2], (6, 2)), rng.normal(size=6))
        x = rng.uniform([-2, 0], [2, 2], (20, 2))
        assert np.allclose(interior_velocity(q, x, 0.05), interior_velocity_direct(q, x, 0.05),
                           rtol=1e-12, atol=1e-14)

    @given(st.floats(0.01, 1.0))
    def test_linear_in_q(self, s):
        q = VortexEnsemble([[0.1, 0.5], [-0.4, 1.2]], [1.0, -0.3])
        x = np.array([[0.2, 0.9], [1.0, 0.1]])
        assert np.allclose(interior_velocity(q.scaled(s), x, 0.1), s * interior_velocity(q, x, 0.1),
                           rtol=1e-13, atol=1e-16)

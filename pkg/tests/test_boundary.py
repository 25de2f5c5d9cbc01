import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alphavortex import boundary as b
from alphavortex.errors import QuadratureNoConvergence, TailTooLarge, TargetOutsideWindow
from alphavortex.halfplane import VortexEnsemble
from alphavortex.kernels import FourierSymbolAlpha

UNIT = VortexEnsemble([[0.0, 1.0]], [1.0])
# frozen from the real-space quadrature oracle (alpha = 1, unit vortex at (0, 1))
W_AT_0_1 = (-1.46372614e-02, 0.0)
W_AT_0_2 = (5.59600714e-03, 0.0)
W_AT_03_15 = (-7.8526e-04, -4.32646e-03)
TRACE_AT_0 = -0.1267169


@pytest.fixture(scope="module")
def unit_trace():
    return b.build_trace(UNIT, 1.0, half_width=200.0, n=8192)


class TestTrace:
    def test_value(self):
        assert b.boundary_trace(UNIT, 1.0, 0.0) == pytest.approx(TRACE_AT_0, abs=5e-8)
        assert abs(b.boundary_trace(UNIT, 1.0, 100.0)) < 1e-4

    def test_sign_and_linearity(self, rng):
        pos = rng.uniform([-1, 0.2], [1, 2], (5, 2))
        gam = rng.uniform(0.1, 1, 5)
        x1 = np.linspace(-10, 10, 101)
        g = b.boundary_trace(VortexEnsemble(pos, gam), 0.1, x1)
        assert np.all(g <= 0)
        assert np.array_equal(b.boundary_trace(VortexEnsemble(pos, -gam), 0.1, x1), -g)

    def test_derivative(self, rng):
        q = VortexEnsemble(rng.uniform([-1, 0.2], [1, 2], (3, 2)), rng.normal(size=3))
        x, h = 0.37, 1e-5
        fd = (b.boundary_trace(q, 0.2, x + h) - b.boundary_trace(q, 0.2, x - h)) / (2 * h)
        assert b.boundary_trace_d1(q, 0.2, x) == pytest.approx(fd, rel=1e-7)

    def test_spectrum_matches_fft(self, unit_trace):
        # the window misses the tail mass of g, which bounds the error of every mode
        xi = unit_trace.xi[:200]
        err = np.abs(unit_trace.fourier[:200] - b.trace_spectrum(UNIT, 1.0, xi))
        assert np.max(err) <= 1.01 * b.trace_tail_l1(UNIT, 1.0, unit_trace.half_width)
        assert np.max(err[50:]) <= 1e-4

    def test_discrete_l1(self):
        # g decays like x1^-2, so the window [-50, 50) misses about 2/(50 pi) of the mass
        tr = b.build_trace(UNIT, 1.0, half_width=50.0, n=4096)
        tail = b.trace_tail_l1(UNIT, 1.0, 50.0)
        assert tail == pytest.approx(2 / (50 * math.pi), rel=1e-2)
        assert tr.l1_norm() + tail == pytest.approx(1 - math.exp(-1), abs=2e-6)

    def test_doubling_window(self):
        tr1 = b.build_trace(UNIT, 1.0, half_width=50.0, n=4096)
        tr2 = b.build_trace(UNIT, 1.0, half_width=100.0, n=8192)
        diff = tr2.l1_norm() - tr1.l1_norm()
        assert 0 <= diff <= b.trace_tail_l1(UNIT, 1.0, 50.0)
        assert diff == pytest.approx(b.trace_tail_l1(UNIT, 1.0, 50.0) - b.trace_tail_l1(UNIT, 1.0, 100.0),
                                     rel=1e-3)

    def test_empty(self):
        tr = b.build_trace(VortexEnsemble.empty(), 1.0)
        assert not np.any(tr.values) and tr.n == 256

    def test_tail_too_large(self):
        with pytest.raises(TailTooLarge):
            b.build_trace(UNIT, 1.0, half_width=3.0, n=256)

    def test_power_of_two(self):
        with pytest.raises(ValueError):
            b.build_trace(UNIT, 1.0, half_width=50.0, n=1000)

    def test_arrays_read_only(self, unit_trace):
        with pytest.raises(ValueError):
            unit_trace.values[0] = 1.0

    def test_reconstruct(self, unit_trace):
        assert np.allclose(unit_trace.reconstruct(), unit_trace.values, atol=1e-15)


class TestProfile:
    def test_zero_mode(self):
        w1, w2 = b.ubdry_fourier_profile(1.0, FourierSymbolAlpha(0.0, 1.0), 1.0)
        assert w1 == pytest.approx(math.exp(-1), rel=1e-12) and w2 == 0

    @given(st.floats(-100, 100), st.floats(1e-3, 10), st.complex_numbers(max_magnitude=10))
    def test_boundary_condition(self, xi, al, ghat):
        w1, w2 = b.ubdry_fourier_profile(ghat, FourierSymbolAlpha(xi, al), 1e-12)
        assert abs(w1 - ghat) <= 1e-9 * max(1.0, abs(ghat))
        assert abs(w2) <= 1e-9 * max(1.0, abs(ghat))

    def test_linear(self):
        assert b.ubdry_fourier_profile(0.0, FourierSymbolAlpha(2.0, 0.5), 0.7) == (0, 0)

    @given(st.floats(-30, 30), st.floats(1e-3, 3), st.floats(0.01, 4))
    @settings(max_examples=50)
    def test_divergence_free_modes(self, xi, al, x2):
        # i xi w1 + d2 w2 = 0 for every mode
        h = 1e-6 * x2
        m1, _ = b.corrector_multipliers(xi, x2, al)
        _, m2p = b.corrector_multipliers(xi, x2 + h, al)
        _, m2m = b.corrector_multipliers(xi, x2 - h, al)
        assert abs(1j * xi * m1 + (m2p - m2m) / (2 * h)) < 1e-6 * (1 + abs(xi))


class TestField:
    def test_boundary_rows(self, unit_trace):
        x1 = unit_trace.grid[(np.abs(unit_trace.grid) <= 10)]
        w = b.ubdry_field(unit_trace, 1.0, np.column_stack((x1, np.zeros_like(x1))))
        idx = np.nonzero(np.abs(unit_trace.grid) <= 10)[0]
        assert np.max(np.abs(w[:, 0] - unit_trace.values[idx])) <= 1e-10
        assert np.max(np.abs(w[:, 1])) <= 1e-12

    def test_rows_match_field(self, unit_trace):
        w1, w2 = b.ubdry_rows(unit_trace, [0.5])
        idx = np.nonzero(np.abs(unit_trace.grid) <= 3)[0]
        pts = np.column_stack((unit_trace.grid[idx], np.full(idx.size, 0.5)))
        w = b.ubdry_field(unit_trace, 1.0, pts)
        assert np.allclose(w[:, 0], w1[0, idx], atol=1e-12)
        assert np.allclose(w[:, 1], w2[0, idx], atol=1e-12)

    def test_golden_values(self, unit_trace):
        w = b.ubdry_field(unit_trace, 1.0, np.array([[0.0, 1.0], [0.0, 2.0], [0.3, 1.5]]))
        assert np.allclose(w[0], W_AT_0_1, atol=1e-8)
        assert np.allclose(w[1], W_AT_0_2, atol=1e-8)
        assert np.allclose(w[2], W_AT_03_15, atol=1e-8)
        assert np.hypot(*w[1]) <= 1.0

    def test_linearity(self, unit_trace, rng):
        pts = rng.uniform([-5, 0], [5, 3], (10, 2))
        w = b.ubdry_field(unit_trace, 1.0, pts)
        w3 = b.ubdry_field(unit_trace.scaled(3.0), 1.0, pts)
        assert np.allclose(w3, 3 * w, rtol=0, atol=1e-12)

    def test_window_guard(self, unit_trace):
        with pytest.raises(TargetOutsideWindow):
            b.ubdry_field(unit_trace, 1.0, [[150.0, 1.0]])
        with pytest.raises(TargetOutsideWindow):
            b.ubdry_field(unit_trace, 1.0, [[0.0, -1.0]])

    def test_alpha_mismatch(self, unit_trace):
        with pytest.raises(ValueError):
            b.ubdry_field(unit_trace, 0.5, [[0.0, 1.0]])

    def test_decay_in_height(self, unit_trace):
        x2 = np.geomspace(0.5, 20, 12)
        w = b.ubdry_field(unit_trace, 1.0, np.column_stack((np.zeros_like(x2), x2)))
        assert np.all(np.hypot(w[:, 0], w[:, 1]) * x2 ** 1.5 < 0.1)


class TestOracle:
    def test_agrees_with_fft(self, unit_trace):
        w_or = b.ubdry_quadrature_oracle(UNIT, 1.0, (0.3, 1.5))
        w_fft = b.ubdry_field(unit_trace, 1.0, [[0.3, 1.5]])[0]
        assert np.linalg.norm(w_fft - w_or) <= 1e-4 * np.linalg.norm(w_or)

    def test_empty(self):
        assert np.array_equal(b.ubdry_quadrature_oracle(VortexEnsemble.empty(), 1.0, (0.0, 1.0)), [0, 0])

    def test_far_point_small(self):
        q = VortexEnsemble([[0.0, 1.0]], [1.0])
        near = np.hypot(*b.ubdry_quadrature_oracle(q, 0.01, (0.0, 1.0)))
        far = np.hypot(*b.ubdry_quadrature_oracle(q, 0.01, (0.0, 10.0), budget=128))
        assert far < near
        assert far <= near * 10.0 ** -1.5 * 2

    def test_budget(self):
        with pytest.raises(QuadratureNoConvergence):
            b.ubdry_quadrature_oracle(UNIT, 1.0, (0.5, 0.05), budget=8)

    def test_interior_only(self):
        with pytest.raises(ValueError):
            b.ubdry_quadrature_oracle(UNIT, 1.0, (0.5, 0.0))

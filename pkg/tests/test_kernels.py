"""Pin the numba lane and the pure-numpy fallback to each other."""

import numpy as np
import pytest

from kvmflow import kernels


def _integrator_args(a0, t_max=1.0, fixed=False):
    return (a0, t_max, 1e-3, fixed, 1e-10, 1e-10, 1e-8, 1e-14, 1, 4096)


class TestLaneSelection:
    def test_numba_importable_here(self):
        assert kernels.HAVE_NUMBA

    def test_lane_reports_active_path(self):
        assert kernels.lane() in {"numba", "numpy"}
        if kernels.USE_NUMBA:
            assert kernels.lane() == "numba"


@pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="needs the compiled lane")
class TestLaneEquivalence:
    def test_offdiag_integrator_matches(self):
        a0 = np.array([5.0, -6.0, -2.0])
        jit = kernels._integrate_offdiag_jit(*_integrator_args(a0))
        py = kernels._integrate_offdiag_impl(*_integrator_args(a0))
        assert jit[2] == py[2] and jit[3] == py[3]
        count = jit[2]
        np.testing.assert_allclose(jit[0][:count], py[0][:count], rtol=0, atol=1e-13)
        np.testing.assert_allclose(jit[1][:count], py[1][:count],
                                   rtol=1e-13, atol=1e-13)

    def test_offdiag_integrator_matches_fixed_step(self):
        a0 = np.array([1.5, -2.5, 3.5, 0.5])
        jit = kernels._integrate_offdiag_jit(*_integrator_args(a0, fixed=True))
        py = kernels._integrate_offdiag_impl(*_integrator_args(a0, fixed=True))
        count = jit[2]
        assert count == py[2]
        np.testing.assert_allclose(jit[1][:count], py[1][:count],
                                   rtol=1e-13, atol=1e-13)

    def test_dense_integrator_matches(self):
        rng = np.random.default_rng(4)
        H = rng.normal(size=(5, 5))
        H = 0.5 * (H + H.T)
        jit = kernels._integrate_dense_jit(*_integrator_args(H, t_max=0.5))
        py = kernels._integrate_dense_impl(*_integrator_args(H, t_max=0.5))
        count = jit[2]
        assert count == py[2] and jit[3] == py[3]
        np.testing.assert_allclose(jit[1][:count], py[1][:count],
                                   rtol=1e-12, atol=1e-12)

    def test_sturm_lanes_agree_within_bisection_tolerance(self):
        rng = np.random.default_rng(6)
        for n in (1, 2, 5, 13):
            d = rng.uniform(-10, 10, n)
            E = rng.uniform(-10, 10, (8, max(n - 1, 0)))
            tol = 1e-12 * (1 + 10 * n)
            loops, ok1 = kernels._sturm_batch_loops(d, E, tol, 128)
            vec, ok2 = kernels._sturm_batch_numpy(d, E, tol, 128)
            assert ok1 and ok2
            assert np.abs(loops - vec).max() <= 3 * tol

    def test_sturm_jit_equals_loops_source(self):
        rng = np.random.default_rng(8)
        d = rng.uniform(-5, 5, 6)
        E = rng.uniform(-5, 5, (4, 5))
        jit, _ = kernels._sturm_batch_jit(d, E, 1e-12, 128)
        py, _ = kernels._sturm_batch_loops(d, E, 1e-12, 128)
        np.testing.assert_array_equal(jit, py)


class TestRecording:
    def test_decimation_keeps_t0_and_final(self):
        a0 = np.array([5.0, -6.0, -2.0])
        times, states, count, status, naccept, _ = kernels.integrate_offdiag_kernel(
            a0, 1.0, 1e-3, True, 1e-10, 1e-10, 0.0, 1e-14, 1, 32)
        assert count <= 32
        assert times[0] == 0.0
        assert times[count - 1] == pytest.approx(1.0, abs=1e-12)
        assert naccept > 32  # decimation actually happened

    @pytest.mark.filterwarnings("ignore:overflow")
    def test_underflow_status(self):
        a0 = np.array([5.0, -6.0, -2.0])
        out = kernels.integrate_offdiag_kernel(
            a0, 1.0, 1e-3, False, 1e-300, 1e-300, 0.0, 1e-6, 1, 64)
        assert out[3] == kernels.STATUS_UNDERFLOW

import math

import numpy as np
import pytest

from alphavortex.dynamics import TraceWindow, default_dt, diagnostics, rhs, run, step_rk4
from alphavortex.errors import BoundaryCrossing
from alphavortex.halfplane import VortexEnsemble
from common import three_vortices

UNIT = VortexEnsemble([[0.0, 1.0]], [1.0])
# 0.0573171 (interior, mpmath) - 0.0146373 (corrector, quadrature oracle)
SPEED_ALPHA1 = 0.0426798


def test_rhs_single_vortex():
    u = rhs(UNIT, 1.0, TraceWindow(200.0, 8192))
    assert u[0, 0] == pytest.approx(SPEED_ALPHA1, abs=2e-7)
    assert abs(u[0, 1]) < 1e-12


def test_rhs_mirror_symmetry():
    q = VortexEnsemble([[-0.5, 0.8], [0.5, 0.8]], [1.0, 1.0])
    u = rhs(q, 0.1)
    assert u[0, 0] == pytest.approx(u[1, 0], abs=1e-12)
    assert u[0, 1] == pytest.approx(-u[1, 1], abs=1e-12)


def test_rhs_speed_approaches_wall_vortex_value():
    speeds = [rhs(UNIT, a)[0, 0] for a in (1e-2, 1e-3, 1e-4)]
    err = [abs(s - 1 / (4 * math.pi)) for s in speeds]
    assert err[0] > err[1] > err[2]


def test_rhs_empty():
    assert rhs(VortexEnsemble.empty(), 0.1).shape == (0, 2)


def test_zero_strength_does_not_move():
    q = VortexEnsemble([[0.0, 1.0], [0.5, 0.4]], [0.0, 0.0])
    q1 = step_rk4(q, 0.1, 0.1)
    assert np.array_equal(q1.positions, q.positions)


def test_strengths_carried_bitwise():
    q = three_vortices()
    q1 = step_rk4(q, 0.1, 0.05)
    assert q1.strengths is q.strengths or np.array_equal(q1.strengths, q.strengths)
    assert q1.strengths.tobytes() == q.strengths.tobytes()


def test_single_vortex_stays_level():
    traj = run(UNIT, 0.1, 1.0, 0.05)
    x2 = traj.positions()[:, 0, 1]
    assert np.ptp(x2) < 1e-10
    assert all(d.total_variation == 1.0 for d in traj.diagnostics)


def test_backward_undoes_forward():
    w = TraceWindow.for_ensemble(three_vortices(), 0.1)
    q1 = step_rk4(three_vortices(), 0.1, 0.02, w)
    q0 = step_rk4(q1, 0.1, 0.02, w, backward=True)
    assert np.allclose(q0.positions, three_vortices().positions, atol=1e-9)


def dipole_toward_wall():
    return VortexEnsemble([[-0.05, 0.3], [0.05, 0.3]], [-1.0, 1.0])


def test_boundary_crossing_detected():
    with pytest.raises(BoundaryCrossing) as exc:
        step_rk4(dipole_toward_wall(), 1e-3, 1.0)
    assert exc.value.dt == 1.0 and exc.value.index in (0, 1)


def test_run_aborts_cleanly():
    traj = run(dipole_toward_wall(), 1e-3, 2.0, 1.0, max_retries=0)
    assert traj.aborted is not None and len(traj.times) == 1


def test_run_retries_with_smaller_steps():
    traj = run(dipole_toward_wall(), 1e-3, 0.4, 0.4, max_retries=6)
    assert traj.aborted is None and traj.positions()[-1, :, 1].min() > 0


def test_default_dt():
    dt = default_dt(three_vortices(), 0.1)
    assert 0 < dt <= 0.05


def test_validation():
    with pytest.raises(ValueError):
        step_rk4(UNIT, 0.1, 0.0)
    with pytest.raises(ValueError):
        run(UNIT, 0.1, 1.0, -0.1)


def test_diagnostics_flag():
    rec = diagnostics(three_vortices(), 0.1, 0.0, energy_ref=0.0, energy_tol=1e-3)
    assert rec.energy_alpha > 0 and rec.energy_flag
    assert rec.min_x2 == 0.6 and rec.max_speed > 0


def test_diag_every():
    traj = run(UNIT, 0.1, 0.5, 0.1, diag_every=2)
    assert [d.t for d in traj.diagnostics] == pytest.approx([0.0, 0.2, 0.4, 0.5])

"""Transport of the potential vorticity atoms: dX_j/dt = u(X_j), u = B(q).

The boundary window (half-width and sample count of the trace) is fixed for a
whole run so the right-hand side is a smooth function of the positions.
"""

from dataclasses import dataclass
import logging
import math
from typing import Optional

import numpy as np

from .boundary import build_trace, default_window, ubdry_field
from .errors import BoundaryCrossing, DomainError
from .halfplane import interior_velocity
from .kernels import alpha_of
from .velocity import energy_alpha

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TraceWindow:
    half_width: float
    n: int
    tail_tol: float = 1e-3

    @classmethod
    def for_ensemble(cls, q, a, tail_tol=1e-3):
        half, n = default_window(q, a)
        return cls(half, n, tail_tol)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    total_variation: float
    signed_mass: float
    energy_alpha: float
    min_x2: float
    max_speed: float
    energy_flag: bool = False

    FIELDS = ("t", "total_variation", "signed_mass", "energy_alpha", "min_x2", "max_speed", "energy_flag")


@dataclass
class Trajectory:
    times: list
    states: list
    diagnostics: list
    alpha: float
    dt: float
    config_hash: str = ""
    window: Optional[TraceWindow] = None
    aborted: Optional[str] = None

    def positions(self):
        """Array of shape (n_times, N, 2)."""
        return np.stack([s.positions for s in self.states])


def _trace(q, al, window):
    if window is None:
        return build_trace(q, al)
    return build_trace(q, al, window.half_width, window.n, window.tail_tol)


def rhs(q, a, window=None):
    """Velocities (N, 2) at the atoms with one boundary solve."""
    al = alpha_of(a)
    if len(q) == 0:
        return np.zeros((0, 2))
    tr = _trace(q, al, window)
    x = q.positions
    return interior_velocity(q, x, al) + ubdry_field(tr, al, x)


def _stage(q, x, dt):
    bad = np.nonzero(~(x[:, 1] > 0.0))[0]
    if bad.size:
        raise BoundaryCrossing(dt, int(bad[0]))
    try:
        return q.with_positions(x)
    except DomainError:
        raise BoundaryCrossing(dt, int(np.argmin(x[:, 1]))) from None


def step_rk4(q, a, dt, window=None, backward=False):
    """One classical Runge-Kutta step; strengths are carried over unchanged.

    ``backward`` integrates toward earlier times.  Raises ``BoundaryCrossing``
    if a stage or the result leaves the open half-plane.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    al = alpha_of(a)
    h = -dt if backward else dt
    x0 = q.positions
    k1 = rhs(q, al, window)
    k2 = rhs(_stage(q, x0 + 0.5 * h * k1, dt), al, window)
    k3 = rhs(_stage(q, x0 + 0.5 * h * k2, dt), al, window)
    k4 = rhs(_stage(q, x0 + h * k3, dt), al, window)
    return _stage(q, x0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), dt)


def default_dt(q, a, cap=0.05, window=None):
    """0.1 min_j y_j2 / max speed, capped."""
    if len(q) == 0:
        return cap
    speed = float(np.max(np.hypot(*rhs(q, a, window).T)))
    if speed == 0.0:
        return cap
    return min(cap, 0.1 * float(q.positions[:, 1].min()) / speed)


def diagnostics(q, a, t, window=None, energy_ref=None, energy_tol=1e-3):
    al = alpha_of(a)
    if len(q) == 0:
        return DiagnosticsRecord(t, 0.0, 0.0, 0.0, math.inf, 0.0)
    tr = _trace(q, al, window)
    u = interior_velocity(q, q.positions, al) + ubdry_field(tr, al, q.positions)
    e = energy_alpha(q, al, tr)
    flag = energy_ref is not None and e - energy_ref > energy_tol * abs(energy_ref)
    return DiagnosticsRecord(
        t, q.total_variation, q.signed_mass, e,
        float(q.positions[:, 1].min()), float(np.max(np.hypot(u[:, 0], u[:, 1]))), bool(flag),
    )


def _advance(q, al, dt, window, backward, retries):
    """Advance by dt, splitting into halves on a boundary crossing."""
    try:
        return step_rk4(q, al, dt, window, backward)
    except BoundaryCrossing:
        if retries == 0:
            raise
        log.info("boundary crossing at dt=%g, retrying with dt/2", dt)
        half = _advance(q, al, 0.5 * dt, window, backward, retries - 1)
        return _advance(half, al, 0.5 * dt, window, backward, retries - 1)


def run(q0, a, T, dt, diag_every=1, window=None, max_retries=4, energy_tol=1e-3,
        backward=False, config_hash=""):
    """Integrate to time T (or back to -T) with fixed step dt.

    Snapshots are stored every step, diagnostics every ``diag_every`` steps and
    at the end.  On an unrecoverable boundary crossing the partial trajectory
    is returned with ``aborted`` set.
    """
    al = alpha_of(a)
    if not T > 0.0:
        raise ValueError("T must be positive")
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    if window is None and len(q0):
        window = TraceWindow.for_ensemble(q0, al)
    n_steps = max(1, int(round(T / dt)))
    sign = -1.0 if backward else 1.0
    q = q0
    rec0 = diagnostics(q, al, 0.0, window)
    traj = Trajectory([0.0], [q], [rec0], al, dt, config_hash, window)
    e0 = rec0.energy_alpha
    for k in range(1, n_steps + 1):
        try:
            q = _advance(q, al, dt, window, backward, max_retries)
        except BoundaryCrossing as exc:
            traj.aborted = str(exc)
            log.warning("run aborted at t=%g: %s", traj.times[-1], exc)
            break
        t = sign * k * dt
        traj.times.append(t)
        traj.states.append(q)
        if k % diag_every == 0 or k == n_steps:
            traj.diagnostics.append(diagnostics(q, al, t, window, e0, energy_tol))
    return traj

"""Symmetrised nonlinearity kernels and weak vorticity residuals.

For a test function phi supported away from the wall, transport of atoms
gives

    sum_j Gamma_j phi(T, X_j(T)) - sum_j Gamma_j phi(0, X_j(0))
        = int_0^T [sum_j Gamma_j dphi/dt + sum_jk Gamma_j Gamma_k H(X_j, X_k)
                   + sum_j Gamma_j u_bdry(X_j) . grad phi] dt,

with H the symmetrised pairing of the interior kernel.  ``weak_residual``
evaluates the left-minus-right mismatch with phi(T) = 0 on a stored
trajectory, either with the smoothed kernel (a consistency check of the
integration) or with the Euler kernel (distance of the run to the Euler
weak formulation).
"""

from dataclasses import dataclass, asdict

import numpy as np
from scipy.integrate import trapezoid

from .boundary import build_trace, ubdry_field
from .errors import DomainError
from .kernels import TWO_PI, alpha_of, biot_savart_kernel, k_alpha

_REFLECT = np.array([1.0, -1.0])


def _bump(s):
    """exp(1 - 1/(1 - s)) on s < 1 and its first two derivatives in s."""
    s = np.asarray(s, dtype=float)
    inside = s < 1.0
    d = np.where(inside, 1.0 - s, 1.0)
    b = np.where(inside, np.exp(1.0 - 1.0 / d), 0.0)
    b1 = -b / d ** 2
    b2 = b * (1.0 / d ** 4 - 2.0 / d ** 3)
    return b, b1, b2


def _time_bump(u):
    """exp(1 - 1/(1 - u^2)) on |u| < 1: equals 1 with zero slope at u = 0."""
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1.0
    d = np.where(inside, 1.0 - u * u, 1.0)
    tau = np.where(inside, np.exp(1.0 - 1.0 / d), 0.0)
    return tau, -2.0 * u * tau / d ** 2


@dataclass(frozen=True)
class TestFunction:
    """phi(t, x) = amplitude * b(|x - c|^2 / R^2) * tau(t / T).

    The spatial support is the closed disc of radius R around ``center``;
    it must stay at least ``epsilon`` above the wall.
    """

    __test__ = False  # not a pytest class

    center: tuple
    radius: float
    epsilon: float
    horizon: float
    amplitude: float = 1.0
    phi_id: str = "phi"

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        object.__setattr__(self, "center", c)
        if not (self.radius > 0.0 and self.epsilon > 0.0 and self.horizon > 0.0):
            raise ValueError("radius, epsilon and horizon must be positive")
        if c[1] - self.radius < self.epsilon:
            raise ValueError("test function support must stay above x2 = epsilon")

    def _spatial(self, x):
        x = np.asarray(x, dtype=float)
        d = x - np.asarray(self.center)
        s = np.sum(d * d, axis=-1) / self.radius ** 2
        return d, s, _bump(s)

    def value(self, t, x):
        _, _, (b, _, _) = self._spatial(x)
        return self.amplitude * b * _time_bump(t / self.horizon)[0]

    def time_derivative(self, t, x):
        _, _, (b, _, _) = self._spatial(x)
        return self.amplitude * b * _time_bump(t / self.horizon)[1] / self.horizon

    def grad(self, t, x):
        d, _, (_, b1, _) = self._spatial(x)
        tau = _time_bump(t / self.horizon)[0]
        return (self.amplitude * tau * 2.0 / self.radius ** 2) * b1[..., None] * d

    def hessian(self, t, x):
        d, _, (_, b1, b2) = self._spatial(x)
        tau = _time_bump(t / self.horizon)[0]
        r2 = self.radius ** 2
        outer = d[..., :, None] * d[..., None, :]
        eye = np.eye(2)
        return self.amplitude * tau * (
            (4.0 / r2 ** 2) * b2[..., None, None] * outer + (2.0 / r2) * b1[..., None, None] * eye
        )

    def norms(self, samples=4001):
        """(sup |phi|, sup |grad phi|, sup ||Hess phi||_op) over space-time."""
        rho = np.linspace(0.0, 1.0, samples)[:-1]
        b, b1, b2 = _bump(rho * rho)
        r = rho * self.radius
        g = np.abs(b1) * 2.0 * r / self.radius ** 2
        hess = np.maximum(np.abs(4.0 * r * r / self.radius ** 4 * b2 + 2.0 / self.radius ** 2 * b1),
                          np.abs(2.0 / self.radius ** 2 * b1))
        a = abs(self.amplitude)
        return a * float(b.max()), a * float(g.max()), a * float(hess.max())

    def describe(self):
        return asdict(self)


def default_panel(horizon=1.0, epsilon=0.1):
    """Five bumps of varying centre and radius used by the CLI."""
    specs = [
        ((0.0, 1.0), 0.6),
        ((-0.8, 0.9), 0.5),
        ((0.8, 0.9), 0.5),
        ((0.0, 0.6), 0.45),
        ((0.3, 1.4), 0.8),
    ]
    return [
        TestFunction(c, r, epsilon, horizon, 1.0, f"phi{i}") for i, (c, r) in enumerate(specs)
    ]


def _pair_terms(kern, x, y, gx, gy):
    xbar = x * _REFLECT
    ybar = y * _REFLECT
    t1 = 0.5 * np.sum(kern(x - y) * (gx - gy), axis=-1)
    t2 = -0.5 * np.sum(kern(x - ybar) * gx, axis=-1)
    t3 = -0.5 * np.sum(kern(y - xbar) * gy, axis=-1)
    return t1 + t2 + t3


def h_phi(x, y, phi, t):
    """Symmetrised Euler pairing H_phi(x, y); undefined on the diagonal."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(np.all(x == y, axis=-1)):
        raise DomainError("h_phi is undefined for x = y")
    return _pair_terms(biot_savart_kernel, x, y, phi.grad(t, x), phi.grad(t, y))


def h_phi_alpha(x, y, phi, t, a):
    """Symmetrised pairing with the smoothed kernel; defined for x = y."""
    al = alpha_of(a)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return _pair_terms(lambda d: k_alpha(d, al), x, y, phi.grad(t, x), phi.grad(t, y))


def pairing_bound(phi):
    """Explicit sup bound of |H_phi| and |H_phi^alpha|.

    The difference term is at most ||Hess phi|| |x - y| |K(x - y)| and each
    image term at most |grad phi| / (4 pi eps), since a point of the support
    is at least 2 eps from its reflection partner.
    """
    _, g, h = phi.norms()
    return (h + 2.0 * g / phi.epsilon) / (2.0 * TWO_PI)


def pairing_envelope(x, y, phi, t):
    """Pointwise majorant min(bound, (|grad phi(x)| + |grad phi(y)|) / (2 pi |x - y|))."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gx = np.hypot(*np.moveaxis(phi.grad(t, x), -1, 0))
    gy = np.hypot(*np.moveaxis(phi.grad(t, y), -1, 0))
    r = np.hypot(*np.moveaxis(x - y, -1, 0))
    with np.errstate(divide="ignore"):
        far = np.where(r > 0.0, (gx + gy) / (TWO_PI * r), np.inf)
    return np.minimum(pairing_bound(phi), far)


def nonlinear_pairing(q, phi, t, kernel="euler", a=None):
    """sum_jk Gamma_j Gamma_k H(X_j, X_k); the Euler kernel skips j = k."""
    if len(q) == 0:
        return 0.0
    x = q.positions
    g = phi.grad(t, x)
    active = np.nonzero(np.any(g != 0.0, axis=1))[0]
    if active.size == 0:
        return 0.0
    # H vanishes unless one argument lies in the support of grad phi
    xa, ga = x[active], g[active]
    xx = np.broadcast_to(xa[:, None, :], (active.size, len(q), 2))
    yy = np.broadcast_to(x[None, :, :], xx.shape)
    gxx = np.broadcast_to(ga[:, None, :], xx.shape)
    gyy = np.broadcast_to(g[None, :, :], xx.shape)
    if kernel == "euler":
        same = active[:, None] == np.arange(len(q))[None, :]
        safe_y = np.where(same[..., None], yy + 1.0, yy)
        h = _pair_terms(biot_savart_kernel, xx, safe_y, gxx, gyy)
        h = np.where(same, 0.0, h)
    elif kernel == "alpha":
        al = alpha_of(a)
        h = _pair_terms(lambda d: k_alpha(d, al), xx, yy, gxx, gyy)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    gam = q.strengths
    wa = gam[active][:, None] * gam[None, :]
    # pairs with both points active were counted once from each side
    both = np.isin(np.arange(len(q)), active)[None, :]
    weight = np.where(both, 1.0, 2.0)
    return float(np.sum(wa * weight * h))


def diagonal_mass(q):
    """sum_j Gamma_j^2: weight of the self-pairs left out by the Euler kernel."""
    return float(np.sum(q.strengths ** 2))


def boundary_pairing(q, phi, t, a, trace=None):
    """sum_j Gamma_j u_bdry(X_j) . grad phi(t, X_j)."""
    al = alpha_of(a)
    if len(q) == 0:
        return 0.0
    g = phi.grad(t, q.positions)
    active = np.any(g != 0.0, axis=1)
    if not active.any():
        return 0.0
    if trace is None:
        trace = build_trace(q, al)
    w = ubdry_field(trace, al, q.positions[active])
    return float(np.sum(q.strengths[active] * np.sum(w * g[active], axis=1)))


@dataclass(frozen=True)
class WeakResidual:
    phi_id: str
    alpha: float
    kernel: str
    residual: float
    diagonal_mass: float
    boundary_term: float
    boundary_abs: float

    def to_json(self):
        return asdict(self)


def _trapezoid(values, times):
    return float(trapezoid(values, times)) if len(times) > 1 else 0.0


def weak_residual(traj, phi, kernel="alpha", window=None):
    """Weak-form mismatch of a trajectory for one test function.

    R = int sum Gamma dphi/dt + int sum sum Gamma Gamma H + sum Gamma phi(0)
    (+ int sum Gamma u_bdry . grad phi for the smoothed kernel), with the
    composite trapezoid rule on the trajectory's time grid.  The trajectory
    must run forward and reach the time horizon of ``phi``.
    """
    if kernel not in ("euler", "alpha"):
        raise ValueError(f"unknown kernel {kernel!r}")
    times = np.asarray(traj.times, dtype=float)
    if times[-1] < phi.horizon * (1 - 1e-12):
        raise ValueError("trajectory ends before the test function's time horizon")
    keep = times <= phi.horizon * (1 + 1e-12)
    times = times[keep]
    states = [s for s, k in zip(traj.states, keep) if k]
    al = traj.alpha
    window = window if window is not None else traj.window
    dphi, pair, bdry = [], [], []
    for t, q in zip(times, states):
        gam = q.strengths
        dphi.append(float(gam @ phi.time_derivative(t, q.positions)))
        pair.append(nonlinear_pairing(q, phi, t, kernel, al))
        grad = phi.grad(t, q.positions)
        if np.any(grad != 0.0):
            tr = (build_trace(q, al, window.half_width, window.n, window.tail_tol)
                  if window is not None else None)
            bdry.append(boundary_pairing(q, phi, t, al, tr))
        else:
            bdry.append(0.0)
    q0 = states[0]
    initial = float(q0.strengths @ phi.value(0.0, q0.positions))
    b_int = _trapezoid(bdry, times)
    res = _trapezoid(dphi, times) + _trapezoid(pair, times) + initial
    if kernel == "alpha":
        res += b_int
    diag = diagonal_mass(q0) if kernel == "euler" else 0.0
    return WeakResidual(phi.phi_id, al, kernel, res, diag, b_int, _trapezoid(np.abs(bdry), times))

"""Filtered velocity u = u_int + u_bdry and grid diagnostics of it.

``sample_field`` evaluates u on a rectangular grid with one boundary solve;
``pde_residuals`` checks div u = 0, u = 0 on the wall and
curl(u - alpha Laplace u) = q with fourth-order finite differences, and
``energy_on_grid`` / ``energy_alpha`` evaluate ||u||^2 + alpha ||grad u||^2.
"""

from dataclasses import dataclass
import math

import numpy as np

from .boundary import build_trace, default_window, ubdry_field, ubdry_rows
from .errors import GridTooCoarse
from .halfplane import interior_velocity
from .kernels import alpha_of

# fourth-order first and second difference weights: central, and one-sided
# for the first two nodes at an edge
_D1_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2_CENTRAL = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_D1_EDGE = (
    np.array([-25.0, 48.0, -36.0, 16.0, -3.0, 0.0]) / 12.0,
    np.array([-3.0, -10.0, 18.0, -6.0, 1.0, 0.0]) / 12.0,
)
_D2_EDGE = (
    np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0,
    np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / 12.0,
)


@dataclass(frozen=True)
class FieldGrid:
    """Uniform grid x1 = x1_min + i*h (i < n1), x2 = x2_min + k*h (k < n2)."""

    x1_min: float
    x2_min: float
    h: float
    n1: int
    n2: int

    def __post_init__(self):
        if not self.h > 0.0:
            raise ValueError("grid spacing must be positive")
        if self.x2_min < 0.0:
            raise ValueError("grid must lie in the closed half-plane")
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("grid needs at least one node per axis")

    @classmethod
    def covering(cls, x1_range, x2_range, h):
        """Grid with spacing h from x1_range[0], x2_range[0] up to the given ends."""
        n1 = int(round((x1_range[1] - x1_range[0]) / h)) + 1
        n2 = int(round((x2_range[1] - x2_range[0]) / h)) + 1
        return cls(float(x1_range[0]), float(x2_range[0]), float(h), n1, n2)

    @property
    def x1(self):
        return self.x1_min + self.h * np.arange(self.n1)

    @property
    def x2(self):
        return self.x2_min + self.h * np.arange(self.n2)

    def points(self):
        """Node coordinates, shape (n2, n1, 2), row index along x2."""
        xx, yy = np.meshgrid(self.x1, self.x2)
        return np.stack((xx, yy), axis=-1)


@dataclass(frozen=True)
class VectorField2D:
    grid: FieldGrid
    u1: np.ndarray
    u2: np.ndarray
    alpha: float
    ensemble_digest: str

    def __post_init__(self):
        shape = (self.grid.n2, self.grid.n1)
        if self.u1.shape != shape or self.u2.shape != shape:
            raise ValueError(f"field arrays must have shape {shape}")
        if not (np.all(np.isfinite(self.u1)) and np.all(np.isfinite(self.u2))):
            raise ValueError("field values must be finite")

    def __add__(self, other):
        if self.grid != other.grid or self.alpha != other.alpha:
            raise ValueError("fields live on different grids")
        return VectorField2D(self.grid, self.u1 + other.u1, self.u2 + other.u2, self.alpha, "")

    def to_rows(self):
        """Row-major (x1, x2, u1, u2) table."""
        pts = self.grid.points().reshape(-1, 2)
        return np.column_stack((pts, self.u1.ravel(), self.u2.ravel()))


def filtered_velocity(q, a, x, trace=None):
    """u(x) = u_int(x) + u_bdry(x) at points of shape (..., 2).

    ``trace`` may be passed to reuse one boundary solve across calls.
    """
    al = alpha_of(a)
    x = np.asarray(x, dtype=float)
    shape = x.shape
    flat = x.reshape(-1, 2)
    if trace is None:
        trace = build_trace(q, al)
    out = interior_velocity(q, flat, al) + ubdry_field(trace, al, flat)
    return out.reshape(shape)


def aligned_trace(q, a, grid, tail_tol=None):
    """Trace whose sampling nodes contain every grid column.

    The trace spacing is h/m for an integer m and the window is large enough
    that the grid sits inside its alias-free half.
    """
    al = alpha_of(a)
    half, n_default = default_window(q, al)
    dx_target = 2.0 * half / n_default
    m = max(1, math.ceil(grid.h / dx_target - 1e-9))
    dx = grid.h / m
    reach = max(half, 2.0 * max(abs(grid.x1_min), abs(grid.x1[-1])))
    n = 1 << math.ceil(math.log2(2.0 * reach / dx))
    offset = (grid.x1_min + 0.5 * n * dx) / dx
    if abs(offset - round(offset)) > 1e-9:
        # shift the window by a fraction of a cell is impossible with a centred
        # grid; fall back to nonuniform evaluation
        return None, build_trace(q, al, 0.5 * n * dx, n, **_tol(tail_tol))
    return int(round(offset)), build_trace(q, al, 0.5 * n * dx, n, **_tol(tail_tol))


def _tol(tail_tol):
    return {} if tail_tol is None else {"tail_tol": tail_tol}


def sample_field(q, a, grid, tail_tol=None):
    """Filtered velocity on every node of ``grid`` with a single boundary solve."""
    al = alpha_of(a)
    pts = grid.points()
    u = interior_velocity(q, pts.reshape(-1, 2), al).reshape(pts.shape)
    if len(q):
        start, tr = aligned_trace(q, al, grid, tail_tol)
        if start is not None:
            m = int(round(grid.h / tr.spacing))
            cols = start + m * np.arange(grid.n1)
            w1, w2 = ubdry_rows(tr, grid.x2)
            u[..., 0] += w1[:, cols]
            u[..., 1] += w2[:, cols]
        else:
            u += ubdry_field(tr, al, pts.reshape(-1, 2)).reshape(pts.shape)
    return VectorField2D(grid, u[..., 0].copy(), u[..., 1].copy(), al, q.digest())


# ---------------------------------------------------------------------------
# finite differences


def _apply(f, axis, h, central, edge, power):
    """Fourth-order derivative along ``axis``; one-sided at both ends."""
    f = np.moveaxis(f, axis, 0)
    n = f.shape[0]
    out = np.zeros_like(f)
    out[2:n - 2] = sum(c * f[k:n - 4 + k] for k, c in enumerate(central))
    sign = -1.0 if power == 1 else 1.0
    for i, w in enumerate(edge):
        out[i] = sum(c * f[k] for k, c in enumerate(w))
        out[n - 1 - i] = sign * sum(c * f[n - 1 - k] for k, c in enumerate(w))
    return np.moveaxis(out / h ** power, 0, axis)


def diff1(f, h, axis):
    return _apply(f, axis, h, _D1_CENTRAL, _D1_EDGE, 1)


def diff2(f, h, axis):
    return _apply(f, axis, h, _D2_CENTRAL, _D2_EDGE, 2)


def _check_grid(grid):
    if grid.n1 < 6 or grid.n2 < 6:
        raise GridTooCoarse(
            f"fourth-order stencils need at least 6 nodes per axis, got {grid.n1} x {grid.n2}"
        )


def divergence(f):
    _check_grid(f.grid)
    h = f.grid.h
    return diff1(f.u1, h, 1) + diff1(f.u2, h, 0)


def unfiltered_curl(f):
    """curl(u - alpha Laplace u) on the grid."""
    _check_grid(f.grid)
    h, al = f.grid.h, f.alpha
    v1 = f.u1 - al * (diff2(f.u1, h, 0) + diff2(f.u1, h, 1))
    v2 = f.u2 - al * (diff2(f.u2, h, 0) + diff2(f.u2, h, 1))
    return diff1(v2, h, 1) - diff1(v1, h, 0)


def gaussian(d2, sigma):
    return np.exp(-0.5 * d2 / sigma ** 2) / (2.0 * np.pi * sigma ** 2)


def smooth_at(values, grid, sigma, centres):
    """Node sum of psi_sigma(c - x) values(x) h^2 for each centre c."""
    pts = grid.points().reshape(-1, 2)
    flat = values.ravel()
    out = np.empty(centres.shape[0])
    for i, c in enumerate(centres):
        d2 = np.sum((pts - c) ** 2, axis=1)
        out[i] = np.sum(gaussian(d2, sigma) * flat)
    return out * grid.h ** 2


def mollified_comparison(f, q, sigma, centres):
    """(grid curl, atoms) both smoothed by a Gaussian of width sigma at ``centres``.

    The grid side smooths curl(I - alpha Lap) u over the nodes, the atomic
    side is sum_j Gamma_j psi_sigma(c - y_j).
    """
    centres = np.asarray(centres, dtype=float).reshape(-1, 2)
    grid_side = smooth_at(unfiltered_curl(f), f.grid, sigma, centres)
    d2 = np.sum((centres[:, None, :] - q.positions[None, :, :]) ** 2, axis=-1)
    atom_side = gaussian(d2, sigma) @ q.strengths
    return grid_side, atom_side


def _default_centres(grid, sigma, margin):
    step = 2.0 * sigma
    x1, x2 = grid.x1, grid.x2
    c1 = np.arange(x1[0] + margin, x1[-1] - margin + 1e-12, step)
    c2 = np.arange(x2[0] + margin, x2[-1] - margin + 1e-12, step)
    if c1.size == 0 or c2.size == 0:
        raise GridTooCoarse("grid too small for the requested residual margin")
    cc1, cc2 = np.meshgrid(c1, c2)
    return np.column_stack((cc1.ravel(), cc2.ravel())), step


def pde_residuals(f, q, sigma=None, centres=None, margin=None):
    """(div residual, L2 curl mismatch, max wall speed) for a sampled field.

    Atomic data make u only log-Lipschitz at the atoms, so both differential
    identities are tested after smoothing with a Gaussian of width ``sigma``
    (default 3h): the divergence residual is max |psi * div_h u| and the curl
    residual the L2 distance between psi * curl_h(I - alpha Lap_h) u and
    sum_j Gamma_j psi(. - y_j).  Both are taken at ``centres``, by default a
    lattice of spacing 2 sigma kept ``margin`` (default 4 sigma) inside the
    grid, with the lattice spacing as cell size.  For a convergence study
    hold sigma fixed while refining h.
    """
    g = f.grid
    _check_grid(g)
    sigma = 3.0 * g.h if sigma is None else float(sigma)
    margin = 4.0 * sigma if margin is None else float(margin)
    if centres is None:
        centres, cell = _default_centres(g, sigma, margin)
    else:
        centres = np.asarray(centres, dtype=float).reshape(-1, 2)
        cell = 1.0
    div = smooth_at(divergence(f), g, sigma, centres)
    grid_side, atom_side = mollified_comparison(f, q, sigma, centres)
    curl_l2 = float(np.sqrt(np.sum((grid_side - atom_side) ** 2)) * cell)
    wall = np.isclose(g.x2, 0.0)
    wall_speed = float(np.max(np.hypot(f.u1[wall], f.u2[wall]))) if wall.any() else 0.0
    return float(np.max(np.abs(div))), curl_l2, wall_speed


# ---------------------------------------------------------------------------
# energy


def energy_on_grid(f):
    """||u||^2 + alpha ||grad u||^2 over the grid by the trapezoid rule."""
    _check_grid(f.grid)
    h, al = f.grid.h, f.alpha
    w1 = np.full(f.grid.n1, h)
    w1[[0, -1]] *= 0.5
    w2 = np.full(f.grid.n2, h)
    w2[[0, -1]] *= 0.5
    weights = np.outer(w2, w1)
    dens = f.u1 ** 2 + f.u2 ** 2
    for comp in (f.u1, f.u2):
        dens = dens + al * (diff1(comp, h, 0) ** 2 + diff1(comp, h, 1) ** 2)
    return float(np.sum(weights * dens))


def _segment_rule(top, n=12, panels=6):
    """Gauss-Legendre nodes on [0, top], panels graded toward the top end."""
    edges = top * (1.0 - np.concatenate(([1.0], 0.25 ** np.arange(1, panels), [0.0])))
    nodes, weights = np.polynomial.legendre.leggauss(n)
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (b - a) * nodes + 0.5 * (b + a)).ravel(), (0.5 * (b - a) * weights).ravel()


def energy_alpha(q, a, trace=None, n=12):
    """E_alpha = ||u||^2 + alpha ||grad u||^2 from the stream function at the atoms.

    Integrating by parts with u = 0 on the wall gives
    E_alpha = sum_j Gamma_j int_0^{y_j2} u1(y_j1, s) ds, a set of line
    integrals evaluated by graded Gauss-Legendre quadrature.
    """
    al = alpha_of(a)
    if len(q) == 0:
        return 0.0
    if trace is None:
        trace = build_trace(q, al)
    pts, wts = [], []
    for (y1, y2) in q.positions:
        s, w = _segment_rule(y2, n)
        pts.append(np.column_stack((np.full_like(s, y1), s)))
        wts.append(w)
    u = filtered_velocity(q, al, np.concatenate(pts), trace)
    line = np.add.reduceat(u[:, 0] * np.concatenate(wts), np.cumsum([0] + [w.size for w in wts[:-1]]))
    return float(np.dot(q.strengths, line))

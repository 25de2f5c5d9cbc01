"""Boundary trace g and the wall corrector u_bdry.

The interior velocity K_alpha * q~ leaves a tangential slip -g on the wall.
The corrector w solves the modified Stokes problem

    w - alpha*Laplace(w) + grad p = 0,  div w = 0,  w = (g, 0) on x2 = 0,

and is computed mode by mode in x1 from the discrete Fourier coefficients of
g sampled on a periodic window [-L, L).  ``ubdry_quadrature_oracle`` evaluates
the same field from its real-space convolution representation and serves as
an independent check of the FFT pipeline.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate, special

from .errors import QuadratureNoConvergence, TailTooLarge, TargetOutsideWindow
from .kernels import alpha_of, d1d2_h_alpha, d2_h_alpha, f1_d2_h_alpha, xi_alpha, _xi_gap

DEFAULT_TAIL_TOL = 1e-3
_MAX_MODES = 2 ** 20


def boundary_trace(q, a, x1):
    """g(x1) = -2 sum_j Gamma_j d2H_alpha(x1 - y_j1, y_j2)."""
    x1 = np.asarray(x1, dtype=float)
    out = np.zeros(x1.shape)
    if len(q) == 0:
        return out
    for j in q._order:
        (y1, y2), gam = q.positions[j], q.strengths[j]
        pts = np.stack(np.broadcast_arrays(x1 - y1, y2), axis=-1)
        out += -2.0 * gam * d2_h_alpha(pts, a)
    return out


def boundary_trace_d1(q, a, x1):
    """Derivative g'(x1)."""
    x1 = np.asarray(x1, dtype=float)
    out = np.zeros(x1.shape)
    for j in q._order:
        (y1, y2), gam = q.positions[j], q.strengths[j]
        pts = np.stack(np.broadcast_arrays(x1 - y1, y2), axis=-1)
        out += -2.0 * gam * d1d2_h_alpha(pts, a)
    return out


def trace_spectrum(q, a, xi):
    """Exact Fourier transform of g (convention int e^{-i x xi} g(x) dx)."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(xi.shape, dtype=complex)
    for (y1, y2), gam in zip(q.positions, q.strengths):
        out += -2.0 * gam * np.exp(-1j * xi * y1) * f1_d2_h_alpha(xi, y2, a)
    return out


def trace_tail_l1(q, a, half_width):
    """int_{|x1| > L} |g(x1)| dx1 by adaptive quadrature."""
    if len(q) == 0:
        return 0.0

    def f(x):
        return abs(float(boundary_trace(q, a, x)))

    right, _ = integrate.quad(f, half_width, np.inf, limit=200, epsabs=1e-12)
    left, _ = integrate.quad(f, -np.inf, -half_width, limit=200, epsabs=1e-12)
    return right + left


@dataclass(frozen=True)
class SampledTrace:
    """g sampled on x_k = -L + k*dx, k = 0..N-1, with cached spectrum.

    ``fourier[m]`` approximates the continuous transform of g at ``xi[m]``:
    dx * exp(i xi L) * fft(values)[m].
    """

    half_width: float
    values: np.ndarray
    fourier: np.ndarray
    xi: np.ndarray
    alpha: float
    tail: float
    tail_tol: float
    total_variation: float

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def spacing(self):
        return 2.0 * self.half_width / self.n

    @property
    def grid(self):
        return -self.half_width + self.spacing * np.arange(self.n)

    def l1_norm(self):
        """Discrete ||g||_1 on the window."""
        return self.spacing * float(np.sum(np.abs(self.values)))

    def reconstruct(self):
        """Values regenerated from the cached spectrum."""
        spectrum = self.fourier * np.exp(-1j * self.xi * self.half_width) / self.spacing
        return np.fft.ifft(spectrum).real

    def scaled(self, factor):
        return SampledTrace(
            self.half_width, factor * self.values, factor * self.fourier, self.xi,
            self.alpha, abs(factor) * self.tail, self.tail_tol,
            abs(factor) * self.total_variation,
        )

    def to_rows(self):
        return np.column_stack((self.grid, self.values))


def default_window(q, a):
    """Half-width L = 50 max(sqrt(alpha), max y2, span of y1) and grid size N."""
    sa = math.sqrt(alpha_of(a))
    if len(q) == 0:
        return 50.0 * sa, 256
    y = q.positions
    scale = max(sa, float(y[:, 1].max()), float(np.ptp(y[:, 0])))
    half_width = 50.0 * scale
    # g varies on the scale of the vortex heights; spectrum decays like exp(-y2 |xi|)
    dx = float(y[:, 1].min()) / 10.0
    n = 1 << max(8, math.ceil(math.log2(2.0 * half_width / dx)))
    return half_width, min(n, _MAX_MODES)


def build_trace(q, a, half_width=None, n=None, tail_tol=DEFAULT_TAIL_TOL):
    """Sample g on a periodic window and cache its discrete spectrum.

    Raises ``TailTooLarge`` if |g(+-L)| >= tail_tol * ||q||_TV.
    """
    al = alpha_of(a)
    dl, dn = default_window(q, al)
    half_width = dl if half_width is None else float(half_width)
    n = dn if n is None else int(n)
    if n < 2 or n & (n - 1):
        raise ValueError(f"number of trace samples must be a power of two, got {n}")
    if not half_width > 0.0:
        raise ValueError("trace half-width must be positive")
    dx = 2.0 * half_width / n
    x = -half_width + dx * np.arange(n)
    values = boundary_trace(q, al, x)
    tv = q.total_variation
    tail = float(np.max(np.abs(boundary_trace(q, al, np.array([-half_width, half_width])))))
    if tv > 0.0 and tail >= tail_tol * tv:
        raise TailTooLarge(tail, tail_tol * tv, half_width)
    xi = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
    fourier = dx * np.exp(1j * xi * half_width) * np.fft.fft(values)
    values.setflags(write=False)
    fourier.setflags(write=False)
    xi.setflags(write=False)
    return SampledTrace(half_width, values, fourier, xi, al, tail, tail_tol, tv)


def _divided_difference(absxi, x2, al):
    """int_0^x2 exp(-y xi_alpha) exp(-|xi| (x2 - y)) dy, stable for all modes."""
    gap = _xi_gap(absxi, al)
    return np.exp(-x2 * absxi) * (-np.expm1(-x2 * gap)) / gap


def corrector_multipliers(xi, x2, a):
    """Mode multipliers (m1, m2) with w~ = (m1, m2) * g^."""
    al = alpha_of(a)
    xi = np.asarray(xi, dtype=float)
    absxi = np.abs(xi)
    d = _divided_difference(absxi, x2, al)
    m1 = np.exp(-x2 * xi_alpha(xi, al)) - absxi * d
    m2 = -1j * xi * d
    return m1, m2


def ubdry_fourier_profile(ghat, s, x2):
    """(w~1, w~2) for one mode; ``s`` is a ``FourierSymbolAlpha``."""
    if x2 < 0.0:
        raise ValueError("x2 must be nonnegative")
    m1, m2 = corrector_multipliers(s.xi1, x2, s.alpha)
    return complex(m1 * ghat), complex(m2 * ghat)


def _check_targets(tr, targets):
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    if np.any(targets[:, 1] < 0.0):
        raise TargetOutsideWindow("targets must satisfy x2 >= 0")
    if np.any(np.abs(targets[:, 0]) > 0.5 * tr.half_width * (1 + 1e-12)):
        raise TargetOutsideWindow(
            f"targets must satisfy |x1| <= L/2 = {0.5 * tr.half_width:g}"
        )
    return targets


def ubdry_rows(tr, x2_rows):
    """Corrector on every trace node for each height in ``x2_rows``.

    Returns arrays (w1, w2) of shape (len(x2_rows), N).
    """
    x2_rows = np.atleast_1d(np.asarray(x2_rows, dtype=float))
    w1 = np.empty((x2_rows.size, tr.n))
    w2 = np.empty((x2_rows.size, tr.n))
    base = tr.fourier * np.exp(-1j * tr.xi * tr.half_width) / tr.spacing * _nyquist_mask(tr)
    x1 = tr.grid
    for i, x2 in enumerate(x2_rows):
        if x2 == 0.0:
            w1[i] = tr.values
            w2[i] = 0.0
            continue
        m1, m2 = corrector_multipliers(tr.xi, x2, tr.alpha)
        w1[i] = np.fft.ifft(m1 * base).real - _image_correction(tr, x1, x2)
        w2[i] = np.fft.ifft(m2 * base).real
    return w1, w2


def _image_correction(tr, x1, x2):
    """Leading contribution of the periodic copies of g to w1 at (x1, x2).

    The x1-kernel of w1 decays like D0/(pi x1^2) with D0 the divided
    difference at xi1 = 0, so each copy of g at offset 2Lk adds about
    ghat(0) D0 / (pi (x1 - 2Lk)^2).  Summing over k != 0 in closed form
    removes the O(L^-2) wrap-around error; what remains is O(L^-3).
    """
    d0 = float(_divided_difference(np.array(0.0), x2, tr.alpha))
    mass = float(tr.fourier[0].real)
    return mass * d0 / np.pi * _image_sum(np.asarray(x1, dtype=float), tr.half_width)


def _image_sum(x, half_width):
    """sum_{k != 0} 1/(x - 2 L k)^2 for |x| < 2L."""
    c = np.pi / (2.0 * half_width)
    u = c * x
    small = np.abs(u) < 1e-3
    safe = np.where(small, 1.0, u)
    direct = 1.0 / np.sin(safe) ** 2 - 1.0 / safe ** 2
    # 1/sin^2 u - 1/u^2 = 1/3 + u^2/15 + 2u^4/189 + ...
    series = 1.0 / 3.0 + u * u / 15.0 + 2.0 * u ** 4 / 189.0
    return c * c * np.where(small, series, direct)


def _nyquist_mask(tr):
    mask = np.ones(tr.n)
    mask[tr.n // 2] = 0.0
    return mask


def ubdry_field(tr, a, targets):
    """Corrector velocity at arbitrary targets (x2 >= 0, |x1| <= L/2).

    Targets are grouped by height; each group is evaluated by a direct sum
    over the retained modes, which is exact trigonometric interpolation of the
    periodic solution.  The Nyquist mode is dropped so the result is real.
    """
    al = alpha_of(a)
    if abs(al - tr.alpha) > 1e-14 * al:
        raise ValueError("trace was built for a different alpha")
    targets = _check_targets(tr, targets)
    out = np.zeros_like(targets)
    if targets.shape[0] == 0:
        return out
    coef = tr.fourier * _nyquist_mask(tr) / (2.0 * tr.half_width)
    heights, inverse = np.unique(targets[:, 1], return_inverse=True)
    for k, x2 in enumerate(heights):
        idx = np.nonzero(inverse == k)[0]
        x1 = targets[idx, 0]
        if x2 == 0.0:
            # exact boundary condition on the sampling nodes
            on_grid = _node_indices(tr, x1)
            if on_grid is not None:
                out[idx, 0] = tr.values[on_grid]
                continue
        m1, m2 = corrector_multipliers(tr.xi, x2, al)
        waves = np.exp(1j * np.outer(x1, tr.xi))
        out[idx, 0] = (waves @ (m1 * coef)).real - _image_correction(tr, x1, x2)
        out[idx, 1] = (waves @ (m2 * coef)).real
    return out


def _node_indices(tr, x1):
    k = (x1 + tr.half_width) / tr.spacing
    kr = np.rint(k)
    if np.all(np.abs(k - kr) < 1e-9) and np.all((kr >= 0) & (kr < tr.n)):
        return kr.astype(int)
    return None


# ---------------------------------------------------------------------------
# real-space oracle


def _graded_panels(length, n_panels, ratio=0.25):
    """Panel edges on [0, length] refined geometrically toward 0."""
    edges = [length * ratio ** k for k in range(n_panels)]
    return np.array([0.0] + edges[::-1])


def _composite_gauss(edges, n):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    a, b = edges[:-1, None], edges[1:, None]
    x = 0.5 * (b - a) * nodes + 0.5 * (b + a)
    w = 0.5 * (b - a) * weights
    return x.ravel(), w.ravel()


_SMOOTHING_REACH = 40.0


class _Oracle:
    """Tensor Gauss-Legendre evaluation of the corrector at one point."""

    def __init__(self, q, al, x1, x2):
        self.q, self.al, self.x1, self.x2 = q, al, x1, x2
        self.sa = math.sqrt(al)
        y = q.positions
        # length scale of the features of g and of its smoothing P
        self.scale = max(min(float(y[:, 1].min()), x2), 1e-3)

    def smoothed(self, s, y2, n, derivative=False):
        """P(s, y2) = -2 alpha (g *_1 d2G_alpha(., y2))(s) and its s-derivative.

        With t = y2 tan(th) the convolution becomes
        (1/pi) int g(s - y2 tan th) phi(y2 / (sqrt(alpha) cos th)) dth,
        phi(z) = z K1(z).  ``s`` has shape (m,), ``y2`` is a scalar.
        """
        nodes, weights = np.polynomial.legendre.leggauss(n)
        th = 0.25 * np.pi * (nodes + 1.0)  # (0, pi/2), folded
        wts = 0.25 * np.pi * weights
        z = y2 / (self.sa * np.cos(th))
        phi = np.where(z < 700.0, z * special.k1(np.minimum(z, 700.0)), 0.0)
        shift = y2 * np.tan(th)
        trace = boundary_trace_d1 if derivative else boundary_trace
        vals = trace(self.q, self.al, s[:, None] - shift) + trace(self.q, self.al, s[:, None] + shift)
        return vals @ (wts * phi) / np.pi

    def strip_lower(self, n):
        """Contribution of 0 < y2 <= x2/2, where h = x2 - y2 >= x2/2."""
        x1, x2 = self.x1, self.x2
        # P carries the factor z K1(z) <= 5e-17 for y2 >= 40 sqrt(alpha)
        top = min(0.5 * x2, _SMOOTHING_REACH * self.sa)
        y2s, wy = _composite_gauss(_graded_panels(top, 8), n)
        nodes, weights = np.polynomial.legendre.leggauss(2 * n)
        th = 0.5 * np.pi * nodes
        wt = 0.5 * np.pi * weights
        total = np.zeros(2)
        for y2, w in zip(y2s, wy):
            h = x2 - y2
            p = self.smoothed(x1 - h * np.tan(th), y2, 2 * n)
            c1 = np.sum(wt * p * np.cos(2 * th)) / h
            c2 = np.sum(wt * p * np.sin(2 * th)) / (2 * h)
            total += w * np.array([-c1 / np.pi, 2 * c2 / np.pi])
        return total

    def strip_upper(self, n):
        """Contribution of x2/2 < y2 < x2, integrated by parts onto zeta, rho."""
        x1, x2 = self.x1, self.x2
        hs, wh = _composite_gauss(_graded_panels(0.5 * x2, 8), n)
        nodes, weights = np.polynomial.legendre.leggauss(2 * n)
        # zeta part: s = c tan(th) on (0, pi/2), folded
        tz = 0.25 * np.pi * (nodes + 1.0)
        wz = 0.25 * np.pi * weights
        c = self.scale
        sz = c * np.tan(tz)
        jac = c / np.cos(tz) ** 2
        # rho part: s = h tan(th) on (-pi/2, pi/2)
        tr_ = 0.5 * np.pi * nodes
        wr = 0.5 * np.pi * weights
        total = np.zeros(2)
        for h, w in zip(hs, wh):
            y2 = x2 - h
            dp = self.smoothed(np.concatenate([x1 - sz, x1 + sz, x1 - h * np.tan(tr_)]), y2, 2 * n, True)
            m = sz.size
            fold = dp[:m] - dp[m:2 * m]
            c1 = np.sum(wz * fold * sz / (sz * sz + h * h) * jac)
            c2 = -0.5 * np.sum(wr * dp[2 * m:])
            total += w * np.array([-c1 / np.pi, 2 * c2 / np.pi])
        return total

    def evaluate(self, n):
        p0 = self.smoothed(np.array([self.x1]), self.x2, 4 * n)[0]
        strip = self.strip_lower(n)
        if 0.5 * self.x2 < _SMOOTHING_REACH * self.sa:
            strip = strip + self.strip_upper(n)
        return np.array([p0 + strip[0], strip[1]])


def ubdry_quadrature_oracle(q, a, x, tol=1e-5, budget=64):
    """Corrector at one interior point from its real-space representation.

        w1 = -2a g*d2G + (2a/pi) g*d2G *_h eta1,   w2 = -(4a/pi) g*d2G *_h eta2,

    where *_h integrates over the strip 0 < y2 < x2.  The strip is split at
    x2/2; on the upper half the eta kernels are integrated by parts onto zeta
    and rho so all integrands stay bounded.  Each nested integral uses
    Gauss-Legendre rules (graded toward the strip ends) whose order is doubled
    until two successive results agree to ``tol`` relative to |w|.
    Slow: meant for tens of points.
    """
    al = alpha_of(a)
    x1, x2 = (float(v) for v in np.asarray(x, dtype=float).reshape(2))
    if x2 <= 0.0:
        raise ValueError("oracle needs an interior point (x2 > 0)")
    if len(q) == 0:
        return np.zeros(2)
    oracle = _Oracle(q, al, x1, x2)
    n = 8
    prev = oracle.evaluate(n)
    while True:
        n *= 2
        if n > budget:
            raise QuadratureNoConvergence(
                f"corrector quadrature at ({x1:g}, {x2:g}) not converged at order {budget}"
            )
        cur = oracle.evaluate(n)
        if np.max(np.abs(cur - prev)) <= tol * max(np.hypot(*cur), 1e-300):
            return cur
        prev = cur

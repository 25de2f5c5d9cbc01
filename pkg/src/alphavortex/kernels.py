"""Scalar and vector kernels of the half-plane alpha-Euler problem.

All point arguments are array-like with a trailing axis of length 2, so a
single point ``(x1, x2)`` and a stack of shape ``(..., 2)`` are both
accepted.  Scalar results come back with the leading shape, vector results
keep the trailing axis.

Notation: ``G_alpha`` is the Green's function of ``I - alpha*Laplace`` on
the plane, ``H_alpha = alpha*G_alpha + log|x|/(2*pi)``, ``K`` the plane
Biot-Savart kernel and ``K_alpha = grad^perp H_alpha`` its smoothed version.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import special

from .errors import DomainError

EULER_GAMMA = 0.5772156649015329
TWO_PI = 2.0 * np.pi

# below this argument 1 - z*K1(z) is summed from its series
_SERIES_CUTOFF = 0.1


@dataclass(frozen=True)
class AlphaParam:
    """Filtering scale alpha (a squared length)."""

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not math.isfinite(a) or a <= 0.0:
            raise DomainError(f"alpha must be positive and finite, got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @property
    def length(self):
        return math.sqrt(self.alpha)


def alpha_of(a):
    """Return alpha as a validated float from an ``AlphaParam`` or a number."""
    if isinstance(a, AlphaParam):
        return a.alpha
    return AlphaParam(a).alpha


@dataclass(frozen=True)
class FourierSymbolAlpha:
    xi1: float
    alpha: float

    @property
    def xi_alpha(self):
        return xi_alpha(self.xi1, self.alpha)


def xi_alpha(xi1, a):
    """sqrt(xi1**2 + 1/alpha), evaluated with hypot to avoid overflow."""
    return np.hypot(xi1, 1.0 / math.sqrt(alpha_of(a)))


def _points(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (2,):
        raise ValueError(f"points need a trailing axis of length 2, got shape {x.shape}")
    return x


def _nonzero_radius(x, what):
    r = np.hypot(x[..., 0], x[..., 1])
    if np.any(r == 0.0):
        raise DomainError(f"{what} is singular at the origin")
    if not np.all(np.isfinite(r)):
        raise DomainError(f"{what}: non-finite coordinates")
    return r


def bessel_k0_k1(r):
    """Modified Bessel functions of the second kind (K0(r), K1(r)) for r > 0."""
    r = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r <= 0.0):
        raise DomainError("bessel_k0_k1 needs finite r > 0")
    return special.k0(r), special.k1(r)


def one_minus_zk1(z):
    """1 - z*K1(z) for z >= 0, free of cancellation near z = 0.

    The factor lies in [0, 1): it is the fraction of the point-vortex
    velocity removed by the smoothing at distance z*sqrt(alpha).
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < _SERIES_CUTOFF
    zs = z[small]
    if zs.size:
        out[small] = _one_minus_zk1_series(zs)
    zl = z[~small]
    out[~small] = 1.0 - zl * special.k1(zl)
    return out


def _one_minus_zk1_series(z):
    # z K1(z) = 1 + z I1(z) log(z/2) - (z^2/4) sum_k (psi(k+1)+psi(k+2)) t^k/(k!(k+1)!),
    # t = z^2/4; six terms reach round-off for z < 0.1
    t = 0.25 * z * z
    with np.errstate(divide="ignore", invalid="ignore"):
        logz = np.where(z > 0.0, np.log(0.5 * z), 0.0)
    i1_over_half_z = np.zeros_like(z)
    digamma_sum = np.zeros_like(z)
    term = np.ones_like(z)
    psi_k1 = -EULER_GAMMA
    for k in range(6):
        psi_k2 = psi_k1 + 1.0 / (k + 1)
        i1_over_half_z += term
        digamma_sum += (psi_k1 + psi_k2) * term
        psi_k1 = psi_k2
        term = term * t / ((k + 1) * (k + 2))
    # z I1(z) = 2 t * sum_k t^k/(k!(k+1)!)
    return -2.0 * t * i1_over_half_z * logz + t * digamma_sum


def green_alpha(x, a):
    """G_alpha(x) = K0(|x|/sqrt(alpha)) / (2 pi alpha)."""
    al = alpha_of(a)
    x = _points(x)
    r = _nonzero_radius(x, "green_alpha")
    return special.k0(r / math.sqrt(al)) / (TWO_PI * al)


def d2_green_alpha(x, a):
    """Derivative of G_alpha in x2."""
    al = alpha_of(a)
    x = _points(x)
    r = _nonzero_radius(x, "d2_green_alpha")
    sa = math.sqrt(al)
    return -x[..., 1] * special.k1(r / sa) / (TWO_PI * al * sa * r)


def d1d2_green_alpha(x, a):
    """Mixed second derivative of G_alpha."""
    al = alpha_of(a)
    x = _points(x)
    r = _nonzero_radius(x, "d1d2_green_alpha")
    sa = math.sqrt(al)
    # d/dr [K1(z)/r] = -K0(z)/(sqrt(alpha) r) - 2 K1(z)/r^2
    z = r / sa
    return x[..., 0] * x[..., 1] * (special.k0(z) / (sa * r) + 2.0 * special.k1(z) / (r * r)) / (
        TWO_PI * al * sa * r
    )


def f1_d2_green_alpha(xi1, x2, a):
    """Partial Fourier transform in x1 of d2 G_alpha at height x2 > 0."""
    al = alpha_of(a)
    x2 = np.asarray(x2, dtype=float)
    if np.any(x2 <= 0.0):
        raise DomainError("f1_d2_green_alpha needs x2 > 0")
    return -np.exp(-xi_alpha(xi1, al) * x2) / (2.0 * al)


def d2_h_alpha(x, a):
    """Derivative of H_alpha in x2; nonnegative in the upper half-plane."""
    al = alpha_of(a)
    x = _points(x)
    r = _nonzero_radius(x, "d2_h_alpha")
    return x[..., 1] * one_minus_zk1(r / math.sqrt(al)) / (TWO_PI * r * r)


def d1d2_h_alpha(x, a):
    """Mixed second derivative of H_alpha (x1-derivative of the trace kernel)."""
    al = alpha_of(a)
    x = _points(x)
    r = _nonzero_radius(x, "d1d2_h_alpha")
    z = r / math.sqrt(al)
    bracket = z * z * special.k0(z) - 2.0 * one_minus_zk1(z)
    return x[..., 0] * x[..., 1] * bracket / (TWO_PI * r ** 4)


def f1_d2_h_alpha(xi1, x2, a):
    """Partial Fourier transform in x1 of d2 H_alpha at height x2 > 0."""
    al = alpha_of(a)
    x2 = np.asarray(x2, dtype=float)
    if np.any(x2 <= 0.0):
        raise DomainError("f1_d2_h_alpha needs x2 > 0")
    xi1 = np.asarray(xi1, dtype=float)
    absxi = np.abs(xi1)
    gap = _xi_gap(absxi, al)
    # 0.5*(exp(-x2|xi|) - exp(-x2 xi_alpha)) without cancellation
    return -0.5 * np.exp(-x2 * absxi) * np.expm1(-x2 * gap)


def _xi_gap(absxi, al):
    """xi_alpha - |xi1| > 0, computed without cancellation at large |xi1|."""
    return (1.0 / al) / (xi_alpha(absxi, al) + absxi)


def biot_savart_kernel(x):
    """K(x) = x^perp / (2 pi |x|^2)."""
    x = _points(x)
    r = _nonzero_radius(x, "biot_savart_kernel")
    fac = 1.0 / (TWO_PI * r * r)
    return np.stack((-x[..., 1] * fac, x[..., 0] * fac), axis=-1)


def k_alpha(x, a):
    """Smoothed kernel K_alpha(x) = K(x) * (1 - z K1(z)), z = |x|/sqrt(alpha).

    Defined everywhere: the value at the origin is 0.
    """
    al = alpha_of(a)
    x = _points(x)
    r2 = x[..., 0] ** 2 + x[..., 1] ** 2
    r = np.sqrt(r2)
    zero = r2 == 0.0
    safe = np.where(zero, 1.0, r2)
    fac = one_minus_zk1(r / math.sqrt(al)) / (TWO_PI * safe)
    fac = np.where(zero, 0.0, fac)
    return np.stack((-x[..., 1] * fac, x[..., 0] * fac), axis=-1)


def eta_kernels(x):
    """(eta1, eta2, zeta, rho) with eta1 = d1 zeta and eta2 = -d1 rho / 2."""
    x = _points(x)
    r = _nonzero_radius(x, "eta_kernels")
    x1, x2 = x[..., 0], x[..., 1]
    r2 = r * r
    r4 = r2 * r2
    return (x2 * x2 - x1 * x1) / r4, x1 * x2 / r4, x1 / r2, x2 / r2

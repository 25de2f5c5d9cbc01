"""Point-vortex ensembles and image-method velocities in the upper half-plane."""

from dataclasses import dataclass, field
import hashlib
import warnings

import numpy as np

from .errors import DomainError
from .kernels import TWO_PI, _points, alpha_of, biot_savart_kernel, k_alpha, one_minus_zk1

# pair products evaluated per chunk when summing over targets x vortices
_CHUNK = 400_000


@dataclass(frozen=True)
class VortexEnsemble:
    """Atomic potential vorticity: circulations ``strengths`` at ``positions``.

    Positions must lie strictly above the wall.  Instances are immutable;
    transport produces new ensembles with the same strengths array.
    """

    positions: np.ndarray
    strengths: np.ndarray
    _order: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, 2)
        gam = np.array(self.strengths, dtype=float).reshape(-1)
        if pos.shape[0] != gam.shape[0]:
            raise ValueError(f"{pos.shape[0]} positions but {gam.shape[0]} strengths")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(gam))):
            raise ValueError("positions and strengths must be finite")
        if np.any(pos[:, 1] <= 0.0):
            raise DomainError("vortex positions must satisfy x2 > 0")
        if pos.shape[0] > 1:
            d = pos[:, None, :] - pos[None, :, :]
            dist = np.hypot(d[..., 0], d[..., 1])
            np.fill_diagonal(dist, np.inf)
            if dist.min() < 1e-12:
                warnings.warn("vortex ensemble has coincident positions", RuntimeWarning)
        pos.setflags(write=False)
        gam.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "strengths", gam)
        # summation order: ascending |Gamma|
        object.__setattr__(self, "_order", np.argsort(np.abs(gam), kind="stable"))

    @classmethod
    def empty(cls):
        return cls(np.zeros((0, 2)), np.zeros(0))

    def __len__(self):
        return self.strengths.shape[0]

    @property
    def total_variation(self):
        return float(np.sum(np.abs(self.strengths)))

    @property
    def signed_mass(self):
        return float(np.sum(self.strengths))

    def with_positions(self, positions):
        """Same circulations at new positions."""
        return VortexEnsemble(positions, self.strengths)

    def scaled(self, factor):
        return VortexEnsemble(self.positions, factor * self.strengths)

    def combine(self, other):
        """Superposition of two ensembles."""
        return VortexEnsemble(
            np.concatenate([self.positions, other.positions]),
            np.concatenate([self.strengths, other.strengths]),
        )

    def images(self):
        out = self.positions.copy()
        out[:, 1] *= -1.0
        return out

    def digest(self):
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.positions).tobytes())
        h.update(np.ascontiguousarray(self.strengths).tobytes())
        return h.hexdigest()[:16]


def kernel_halfplane(x, y):
    """K(x - y) - K(x - ybar), the half-plane Biot-Savart kernel."""
    x = _points(x)
    y = _points(y)
    if np.any(np.all(x == y, axis=-1)):
        raise DomainError("kernel_halfplane is singular at x = y")
    ybar = y * np.array([1.0, -1.0])
    if np.any(np.all(x == ybar, axis=-1)):
        # only possible for x = y on the wall, where the kernel vanishes
        zero = np.all(x == ybar, axis=-1)[..., None]
        safe = np.where(zero, ybar + 1.0, x)
        return np.where(zero, 0.0, biot_savart_kernel(safe - y) - biot_savart_kernel(safe - ybar))
    return biot_savart_kernel(x - y) - biot_savart_kernel(x - ybar)


def _pair_sum(q, x, profile):
    """sum_j Gamma_j [F(x - y_j) - F(x - ybar_j)] for F = d^perp profile(|d|)/|d|^2."""
    x = _points(x)
    shape = x.shape[:-1]
    flat = x.reshape(-1, 2)
    out = np.zeros_like(flat)
    if len(q) == 0 or flat.shape[0] == 0:
        return out.reshape(shape + (2,))
    order = q._order
    y = q.positions[order]
    gam = q.strengths[order]
    step = max(1, _CHUNK // len(q))
    for start in range(0, flat.shape[0], step):
        xs = flat[start:start + step]
        acc = np.zeros((xs.shape[0], len(q), 2))
        for sign, ys in ((1.0, y), (-1.0, y * np.array([1.0, -1.0]))):
            d = xs[:, None, :] - ys[None, :, :]
            r2 = d[..., 0] ** 2 + d[..., 1] ** 2
            zero = r2 == 0.0
            fac = profile(np.sqrt(r2)) / (TWO_PI * np.where(zero, 1.0, r2))
            fac = np.where(zero, 0.0, sign * gam * fac)
            acc[..., 0] -= d[..., 1] * fac
            acc[..., 1] += d[..., 0] * fac
        out[start:start + step] = np.sum(acc, axis=1)
    return out.reshape(shape + (2,))


def euler_velocity(q, x):
    """Half-plane Biot-Savart velocity of the atoms.

    At a vortex position the singular self term is dropped and the image
    term kept (the wall-bounded point-vortex convention).
    """
    return _pair_sum(q, x, np.ones_like)


def interior_velocity(q, x, a):
    """Interior part K_alpha * (odd extension of q), summed over atoms and images."""
    sa = np.sqrt(alpha_of(a))
    return _pair_sum(q, x, lambda r: one_minus_zk1(r / sa))


def interior_velocity_direct(q, x, a):
    """Same sum written literally with ``k_alpha``; slower, used as a cross-check."""
    x = _points(x)
    out = np.zeros(x.shape)
    ybar = q.images()
    for yj, ybj, gj in zip(q.positions, ybar, q.strengths):
        out += gj * (k_alpha(x - yj, a) - k_alpha(x - ybj, a))
    return out

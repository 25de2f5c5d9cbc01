"""Shared test data."""

from pathlib import Path

import numpy as np

from alphavortex.halfplane import VortexEnsemble

DATA = Path(__file__).parent / "data"
GOLDEN_RUN = DATA / "golden_run"


def blob_ensemble(h=0.08, centre=(0.0, 1.2), radius=0.9, width=0.3):
    """A Gaussian vortex blob of width ``width`` sampled as lattice atoms."""
    k = np.arange(-int(radius / h) - 1, int(radius / h) + 2)
    xx, yy = np.meshgrid(centre[0] + h * k, centre[1] + h * k)
    pts = np.column_stack((xx.ravel(), yy.ravel()))
    r2 = np.sum((pts - centre) ** 2, axis=1)
    keep = r2 <= radius ** 2
    return VortexEnsemble(pts[keep], np.exp(-r2[keep] / (2 * width ** 2)) * h * h)


def three_vortices():
    return VortexEnsemble([[-0.4, 0.8], [0.3, 1.1], [0.0, 0.6]], [1.0, 0.7, -0.5])

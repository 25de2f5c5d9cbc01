"""Point vortices for the alpha-regularised Euler equations in the half-plane."""

from .halfplane import VortexEnsemble
from .kernels import green_alpha, d2_h_alpha, k_alpha
from .boundary import build_trace, ubdry_field
from .velocity import FieldGrid, filtered_velocity, sample_field
from .dynamics import run, step_rk4
from .weak import TestFunction, weak_residual

__all__ = [
    "VortexEnsemble", "green_alpha", "d2_h_alpha", "k_alpha", "build_trace", "ubdry_field",
    "FieldGrid", "filtered_velocity", "sample_field", "run", "step_rk4", "TestFunction",
    "weak_residual",
]
__version__ = "0.1.0"

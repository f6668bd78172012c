"""Quasiclassical propagators of a charged scalar particle in external fields."""

from .errors import CausticError, ConvergenceError, DomainError, NullFieldError, PropkitError, ResonanceError
from .fields import (
    Combined,
    ConstantUniform,
    FieldTensor,
    ParticleParams,
    PlaneWave,
    constant_from_EB,
    crossed_field,
    gaussian_pulse_profile,
    lightcone_basis,
    linear_profile,
    sinusoidal_profile,
    tabulated_profile,
)
from .gauge import ClassicalPath, Sampled, StraightLine, flux_line, flux_surface, potential_from_path
from .kernels import (
    KernelResult,
    greens_function,
    kernel_combined,
    kernel_constant,
    kernel_crossed,
    kernel_for,
    kernel_free,
    kernel_volkov,
)
from .trajectories import WorldlinePath, path_combined, path_constant, path_planewave, shoot_bvp

__version__ = "0.1.0"

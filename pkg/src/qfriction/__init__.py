"""Quantum friction on a polarizable particle moving between planar plates."""

from .forces import (
    ForceReport,
    MotionSpec,
    NonadditivityCurve,
    anisotropy_shift,
    eta_curve,
    force_cavity,
    force_int_general,
    force_rad_general,
    spin_factorization_check,
)
from .greens import derivative_kernel, green_q, sigma_s_decompose
from .quadrature import QuadratureSpec
from .spectrum import dissipation_kernel, dressed_alpha, force_full, power_spectrum
from .units import (
    CavityGeometry,
    InternalDissipationModel,
    ParticleModel,
    ReflectionModel,
    UnitSystem,
    ValidationError,
)

__all__ = [
    "CavityGeometry", "ForceReport", "InternalDissipationModel", "MotionSpec",
    "NonadditivityCurve", "ParticleModel", "QuadratureSpec", "ReflectionModel", "UnitSystem",
    "ValidationError", "anisotropy_shift", "derivative_kernel", "dissipation_kernel",
    "dressed_alpha", "eta_curve", "force_cavity", "force_full", "force_int_general",
    "force_rad_general", "green_q", "power_spectrum", "sigma_s_decompose",
    "spin_factorization_check",
]

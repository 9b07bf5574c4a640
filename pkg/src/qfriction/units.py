"""Reduced units, reflection/particle models and their validity checks.

Internally hbar = eps0 = 1.  Lengths are measured in an arbitrary unit l0
(``UnitSystem.length_unit`` meters); every other quantity is a plain float in
the derived reduced units.  Dimensionless outputs (eta factors, ratios) never
depend on the choice of l0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ValidationError(ValueError):
    """A model violates one of its physical invariants."""


class SingularResponseError(ArithmeticError):
    """A response matrix that must be inverted is singular."""


@dataclass(frozen=True)
class UnitSystem:
    length_unit: float = 1.0

    hbar: float = field(default=1.0, init=False)
    eps0: float = field(default=1.0, init=False)

    def __post_init__(self):
        validate(self)

    def to_meters(self, length):
        return np.asarray(length, dtype=float) * self.length_unit


@dataclass(frozen=True)
class ReflectionModel:
    """Low-frequency TM reflection r(omega) = r0 + 2i eps0 rho omega.

    Parameters
    ----------
    r0 : float
        Static reflection amplitude, in [0, 1].
    rho : float
        Ohmic slope of the imaginary part (surface dissipation), >= 0.
    perfect_conductor : bool
        Ideal mirror; requires r0 = 1 and rho = 0.
    """

    r0: float = 1.0
    rho: float = 0.0
    perfect_conductor: bool = False

    def __post_init__(self):
        validate(self)

    @classmethod
    def perfect(cls) -> "ReflectionModel":
        return cls(r0=1.0, rho=0.0, perfect_conductor=True)

    @property
    def dissipative(self) -> bool:
        return self.rho > 0.0


@dataclass(frozen=True)
class InternalDissipationModel:
    """Ohmic internal bath: mu_Re(0) = diag(mu_xx, mu_yy, mu_zz)."""

    mu_diag: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "mu_diag", tuple(float(m) for m in self.mu_diag))
        validate(self)

    @classmethod
    def isotropic(cls, mu: float) -> "InternalDissipationModel":
        return cls((mu, mu, mu))

    @classmethod
    def from_matrix(cls, mu) -> "InternalDissipationModel":
        mu = np.asarray(mu)
        if mu.shape != (3, 3):
            raise ValidationError(f"mu must be a 3x3 matrix, got shape {mu.shape}")
        if np.any(np.iscomplex(mu)) or np.any(mu != np.diag(np.diag(mu))):
            raise ValidationError("only diagonal, real (Ohmic) mu is supported")
        return cls(tuple(np.real(np.diag(mu))))

    @property
    def is_zero(self) -> bool:
        return not any(self.mu_diag)

    @property
    def is_isotropic(self) -> bool:
        return self.mu_diag[0] == self.mu_diag[1] == self.mu_diag[2]


@dataclass(frozen=True)
class ParticleModel:
    alpha0: float = 1.0
    omega_a: float = 1.0
    dissipation: InternalDissipationModel = field(default_factory=InternalDissipationModel)

    def __post_init__(self):
        validate(self)


@dataclass(frozen=True)
class CavityGeometry:
    """Particle at height z_a between plate1 (z=0) and plate2 (z=2w).

    With ``single_plane=True`` plate2 and ``half_width`` are ignored
    (the w -> infinity limit).
    """

    half_width: float
    z_a: float
    plate1: ReflectionModel
    plate2: ReflectionModel = field(default_factory=ReflectionModel)
    single_plane: bool = False

    def __post_init__(self):
        validate(self)

    @classmethod
    def plane(cls, z_a: float, plate: ReflectionModel) -> "CavityGeometry":
        return cls(half_width=np.inf, z_a=z_a, plate1=plate, single_plane=True)

    @property
    def width(self) -> float:
        return 2.0 * self.half_width

    @property
    def nearest_distance(self) -> float:
        if self.single_plane:
            return self.z_a
        return min(self.z_a, 2.0 * self.half_width - self.z_a)

    @property
    def identical_plates(self) -> bool:
        return not self.single_plane and self.plate1 == self.plate2

    def at(self, z_a: float) -> "CavityGeometry":
        return CavityGeometry(self.half_width, z_a, self.plate1, self.plate2, self.single_plane)

    def mirrored(self) -> "CavityGeometry":
        """Same cavity seen from the other plate."""
        if self.single_plane:
            raise ValidationError("a single plane has no mirror image")
        return CavityGeometry(self.half_width, 2.0 * self.half_width - self.z_a,
                              self.plate2, self.plate1)


def _finite(name, x):
    if not np.isfinite(x):
        raise ValidationError(f"{name} must be finite, got {x!r}")


def validate(model) -> None:
    """Raise ``ValidationError`` if ``model`` violates its invariants."""
    if isinstance(model, UnitSystem):
        if not model.length_unit > 0 or not np.isfinite(model.length_unit):
            raise ValidationError("length_unit must be a positive finite number")
    elif isinstance(model, ReflectionModel):
        _finite("r0", model.r0)
        _finite("rho", model.rho)
        if model.rho < 0:
            raise ValidationError(f"passivity violated: rho = {model.rho} < 0")
        if not 0.0 <= model.r0 <= 1.0:
            raise ValidationError(f"static reflection r0 = {model.r0} outside [0, 1]")
        if model.perfect_conductor and (model.r0 != 1.0 or model.rho != 0.0):
            raise ValidationError("perfect conductor requires r0 = 1 and rho = 0")
    elif isinstance(model, InternalDissipationModel):
        if len(model.mu_diag) != 3:
            raise ValidationError("mu_diag needs exactly three entries")
        for name, m in zip(("mu_xx", "mu_yy", "mu_zz"), model.mu_diag):
            _finite(name, m)
            if m < 0:
                raise ValidationError(f"{name} = {m} < 0: mu_Re(0) must be positive semidefinite")
    elif isinstance(model, ParticleModel):
        _finite("alpha0", model.alpha0)
        _finite("omega_a", model.omega_a)
        if model.alpha0 <= 0:
            raise ValidationError(f"alpha0 = {model.alpha0} must be positive")
        if model.omega_a <= 0:
            raise ValidationError(f"omega_a = {model.omega_a} must be positive")
        validate(model.dissipation)
    elif isinstance(model, CavityGeometry):
        validate(model.plate1)
        _finite("z_a", model.z_a)
        if model.single_plane:
            if model.z_a <= 0:
                raise ValidationError(f"position on plate: z_a = {model.z_a} must be > 0")
            return
        validate(model.plate2)
        _finite("half_width", model.half_width)
        if model.half_width <= 0:
            raise ValidationError(f"half_width = {model.half_width} must be positive")
        if not 0.0 < model.z_a < 2.0 * model.half_width:
            raise ValidationError(
                f"position on plate: z_a = {model.z_a} not inside (0, {2.0 * model.half_width})")
    else:
        raise TypeError(f"don't know how to validate {type(model).__name__}")


REDUCED = UnitSystem()


def reflection_at(model: ReflectionModel, omega, units: UnitSystem = REDUCED):
    """Ohmic TM reflection coefficient; exactly 1 for a perfect conductor."""
    if model.perfect_conductor:
        return np.ones_like(np.asarray(omega, dtype=float)) + 0j
    return model.r0 + 2j * units.eps0 * model.rho * np.asarray(omega, dtype=float)


def reflection_slope(model: ReflectionModel, units: UnitSystem = REDUCED) -> complex:
    """d r / d omega (constant for the Ohmic model)."""
    if model.perfect_conductor:
        return 0j
    return 2j * units.eps0 * model.rho


def mu_tensor(model: InternalDissipationModel, omega=0.0) -> np.ndarray:
    # Ohmic bath: frequency independent, no reactive part.
    return np.diag(np.asarray(model.mu_diag, dtype=complex))


def alpha_mu(particle: ParticleModel, omega: float, units: UnitSystem = REDUCED) -> np.ndarray:
    """Intrinsically damped polarizability alpha0 [1 - w^2/wa^2 - i eps0 w mu]^-1."""
    omega = float(omega)
    mu = np.asarray(particle.dissipation.mu_diag, dtype=float)
    den = 1.0 - omega**2 / particle.omega_a**2 - 1j * units.eps0 * omega * mu
    if np.any(np.abs(den) < 1e-14):
        raise SingularResponseError(
            f"alpha_mu is singular at omega = {omega} (undamped resonance)")
    return np.diag(particle.alpha0 / den)

"""Friction forces to order v^3: internal (bath) and radiative channels.

Two independent routes are provided:

* generic evaluators taking any kernel provider ``q -> GreenDerivative``
  (``force_int_general``, ``force_rad_general``);
* a cavity fast path (``force_cavity``) where the angular integrals are done
  in closed form and only radial moments of the reflection kernels remain.

All evaluators compute the v-independent coefficient and scale it by v^3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .greens import GreenDerivative, L_Y, decay_scale, radial_kernels_at0
from .quadrature import QuadratureSpec, integrate_halfline, integrate_nested
from .units import (
    REDUCED,
    CavityGeometry,
    InternalDissipationModel,
    ParticleModel,
    ReflectionModel,
    UnitSystem,
    ValidationError,
    mu_tensor,
)

# Reference Lorentzian fit of eta_rad(z_a) for r(0) = 1
LORENTZ_LAMBDA = 0.42
LORENTZ_GAMMA = 0.15

ETA_INT_BOUND = (math.pi / 2) ** 6 / 15
ETA_RAD_BOUND = 13249 / 56700 * (math.pi / 2) ** 8


@dataclass(frozen=True)
class MotionSpec:
    v: float

    def __post_init__(self):
        if not (np.isfinite(self.v) and self.v > 0):
            raise ValidationError(f"velocity v = {self.v} must be positive")


@dataclass(frozen=True)
class ForceReport:
    z_a: float
    w: float | None
    v: float
    f_int: float
    f_rad: float
    f_int_additive: float
    f_rad_additive: float
    eta_int: float | None
    eta_rad: float | None
    rad_sigma_term: float
    rad_spin_term: float

    @property
    def spin_suppression(self) -> float | None:
        """phi = sigma term / total radiative force."""
        return self.rad_sigma_term / self.f_rad if self.f_rad else None


@dataclass(frozen=True)
class NonadditivityCurve:
    points: tuple[tuple[float, float], ...]
    lorentz_lambda: float = LORENTZ_LAMBDA
    lorentz_gamma: float = LORENTZ_GAMMA

    @property
    def positions(self) -> np.ndarray:
        return np.array([x for x, _ in self.points])

    @property
    def etas(self) -> np.ndarray:
        return np.array([e for _, e in self.points])

    def model(self, x=None) -> np.ndarray:
        x = self.positions if x is None else x
        return lorentz_eta(x, self.lorentz_lambda, self.lorentz_gamma)


def lorentz_eta(x, lam=LORENTZ_LAMBDA, gamma=LORENTZ_GAMMA):
    """Lorentzian approximation of eta_rad as a function of x = z_a / w."""
    x = np.asarray(x, dtype=float)
    return 1.0 + lam**2 / ((1.0 - x) ** 2 + gamma**2)


def angular_moment(n: int, m: int) -> float:
    """Integral of cos^n sin^m over a full period."""
    if n % 2 or m % 2:
        return 0.0

    def dfact(k):
        return math.prod(range(k, 0, -2)) if k > 0 else 1

    return 2 * math.pi * dfact(n - 1) * dfact(m - 1) / dfact(n + m)


# ---------------------------------------------------------------------------
# single-plane closed forms

def single_plane_f_int(z_a, rho, mu: InternalDissipationModel, alpha0=1.0, v=1.0,
                       units: UnitSystem = REDUCED):
    mxx, myy, mzz = mu.mu_diag
    bracket = 5 * mxx + myy + 6 * mzz
    return (-15 / (2 * math.pi) ** 2 * units.hbar * alpha0 * units.eps0
            * bracket * rho * v**3 / (2 * np.asarray(z_a, dtype=float)) ** 7)


def single_plane_f_rad(z_a, rho, alpha0=1.0, v=1.0, units: UnitSystem = REDUCED):
    return (-18 * units.hbar / math.pi**3 * alpha0**2 * rho**2
            * v**3 / (2 * np.asarray(z_a, dtype=float)) ** 10)


def additive_forces(geom: CavityGeometry, particle: ParticleModel, v: float,
                    units: UnitSystem = REDUCED):
    """Sum of the single-surface forces of each plate alone: (F_int, F_rad)."""
    mu = particle.dissipation
    f_int = single_plane_f_int(geom.z_a, geom.plate1.rho, mu, particle.alpha0, v, units)
    f_rad = single_plane_f_rad(geom.z_a, geom.plate1.rho, particle.alpha0, v, units)
    if not geom.single_plane:
        z2 = 2 * geom.half_width - geom.z_a
        f_int += single_plane_f_int(z2, geom.plate2.rho, mu, particle.alpha0, v, units)
        f_rad += single_plane_f_rad(z2, geom.plate2.rho, particle.alpha0, v, units)
    return float(f_int), float(f_rad)


# ---------------------------------------------------------------------------
# cavity fast path

# (name, power of p, kernel index into (P+', P-', R'))
_MOMENTS = (
    ("P6", 6, 0), ("R6", 6, 2),
    ("P2", 2, 0), ("R2", 2, 2),
    ("P4", 4, 0), ("R4", 4, 2),
    ("M5", 5, 1), ("M3", 3, 1),
)


def radial_moments(geom: CavityGeometry, units: UnitSystem = REDUCED,
                   spec: QuadratureSpec | None = None) -> dict[str, float]:
    """Moments int_0^inf p^k K(p) dp of the omega-derivative kernels.

    Integrated in the dimensionless variable t = 2 z_min p with every
    component normalised to O(1), so one absolute tolerance fits all.
    """
    spec = spec or QuadratureSpec()
    rho_ref = max(geom.plate1.rho, 0.0 if geom.single_plane else geom.plate2.rho)
    if rho_ref == 0.0:
        return {name: 0.0 for name, _, _ in _MOMENTS}
    length = 1.0 / decay_scale(geom)
    powers = np.array([k for _, k, _ in _MOMENTS])
    which = np.array([i for _, _, i in _MOMENTS])
    norm = rho_ref * np.array([math.factorial(k) for k in powers], dtype=float)

    def integrand(t):
        kernels = np.stack(radial_kernels_at0(t / length, geom, units), axis=-1)
        return t[:, None] ** powers * kernels[:, which] / norm

    res = integrate_halfline(integrand, spec.with_(decay_scale=1.0))
    values = res.value * norm / length ** (powers + 1.0)
    return {name: float(val) for (name, _, _), val in zip(_MOMENTS, values)}


def _a(n, m):
    return angular_moment(n, m)


def cavity_f_int(moments, mu: InternalDissipationModel, alpha0=1.0, v=1.0,
                 units: UnitSystem = REDUCED) -> tuple[float, float]:
    """Internal-channel force and the part carried by the R' (anisotropy) term."""
    mxx, myy, mzz = mu.mu_diag
    tr_pi = mxx * _a(6, 0) + myy * _a(4, 2) + mzz * _a(4, 0)
    tr_m_pi = mxx * _a(6, 0) + myy * _a(4, 2) - mzz * _a(4, 0)
    pref = -units.hbar * alpha0 * v**3 / (12 * math.pi) / (2 * math.pi) ** 2
    p_term = pref * moments["P6"] * tr_pi
    r_term = -pref * moments["R6"] * tr_m_pi
    return p_term + r_term, r_term


def cavity_f_rad(moments, alpha0=1.0, v=1.0, units: UnitSystem = REDUCED) -> tuple[float, float]:
    """Radiative force split into (Sigma term, spin term)."""
    m = moments

    def px4(f, g, sign):
        return m[f + "6"] * m[g + "2"] / 6 * (
            _a(6, 0) * _a(2, 0) + _a(4, 2) * _a(0, 2) + sign * _a(4, 0) * _a(0, 0))

    def px2px2(f, g, sign):
        return m[f + "4"] * m[g + "4"] / 2 * (
            _a(4, 0) ** 2 + _a(2, 2) ** 2 + sign * _a(2, 0) ** 2)

    sigma = 0.0
    for f, g, weight, sign in (("P", "P", 1, 1), ("R", "R", 1, 1),
                               ("P", "R", -1, -1), ("R", "P", -1, -1)):
        sigma += weight * (px4(f, g, sign) + px2px2(f, g, sign))
    tr_ll = np.trace(L_Y.T @ L_Y).real
    spin = tr_ll * m["M5"] * m["M3"] * _a(4, 0) * _a(2, 0) * (1 / 2 + 1 / 6)
    pref = (-units.hbar * alpha0**2 * v**3 / math.pi / (2 * math.pi) ** 4
            / (2 * units.eps0) ** 2)
    return pref * sigma, pref * spin


def force_cavity(geom: CavityGeometry, particle: ParticleModel, motion: MotionSpec,
                 units: UnitSystem = REDUCED, spec: QuadratureSpec | None = None) -> ForceReport:
    """Both friction channels for a cavity (or single plane) plus additive baselines."""
    moments = radial_moments(geom, units, spec)
    v = motion.v
    f_int = 0.0
    if not particle.dissipation.is_zero:
        f_int = cavity_f_int(moments, particle.dissipation, particle.alpha0, 1.0, units)[0] * v**3
    sigma, spin = cavity_f_rad(moments, particle.alpha0, 1.0, units)
    sigma, spin = sigma * v**3, spin * v**3
    f_rad = sigma + spin
    add_int, add_rad = additive_forces(geom, particle, v, units)
    return ForceReport(
        z_a=float(geom.z_a),
        w=None if geom.single_plane else float(geom.half_width),
        v=float(v),
        f_int=float(f_int),
        f_rad=float(f_rad),
        f_int_additive=add_int,
        f_rad_additive=add_rad,
        eta_int=f_int / add_int if add_int else None,
        eta_rad=f_rad / add_rad if add_rad else None,
        rad_sigma_term=float(sigma),
        rad_spin_term=float(spin),
    )


def eta_curve(geom: CavityGeometry, particle: ParticleModel, motion: MotionSpec,
              n_points: int, units: UnitSystem = REDUCED, spec: QuadratureSpec | None = None,
              channel: str = "rad", guard: float = 0.05) -> NonadditivityCurve:
    """eta(z_a) over the cavity, ``guard * w`` away from each plate.

    For identical plates the Lorentzian parameters are re-derived from the
    curvature of eta at the centre; otherwise the reference values are kept.
    """
    if n_points < 3:
        raise ValueError("n_points must be >= 3")
    if geom.single_plane:
        raise ValidationError("eta_curve needs a two-plate cavity")
    if channel not in ("rad", "int"):
        raise ValueError(f"unknown channel {channel!r}")
    w = geom.half_width
    xs = np.linspace(guard, 2.0 - guard, n_points)
    points = []
    for x in xs:
        rep = force_cavity(geom.at(x * w), particle, motion, units, spec)
        points.append((float(x), rep.eta_rad if channel == "rad" else rep.eta_int))
    lam, gam = LORENTZ_LAMBDA, LORENTZ_GAMMA
    if geom.identical_plates and channel == "rad":
        lam, gam = fit_lorentzian(geom, units, spec)
    return NonadditivityCurve(tuple(points), lam, gam)


def fit_lorentzian(geom: CavityGeometry, units: UnitSystem = REDUCED,
                   spec: QuadratureSpec | None = None, h: float = 0.02) -> tuple[float, float]:
    """(Lambda, Gamma) matching eta_rad's value and curvature at z_a = w."""
    if not geom.identical_plates:
        raise ValidationError("the Lorentzian fit assumes identical plates")
    particle = ParticleModel()
    motion = MotionSpec(1.0)
    w = geom.half_width

    def eta(x):
        return force_cavity(geom.at(x * w), particle, motion, units, spec).eta_rad

    eta0 = eta(1.0)

    def curvature(step):
        return (2 * eta0 - eta(1 - step) - eta(1 + step)) / (2 * step**2)

    k = (4 * curvature(h / 2) - curvature(h)) / 3
    gamma2 = (eta0 - 1) / k
    return math.sqrt((eta0 - 1) * gamma2), math.sqrt(gamma2)


def anisotropy_shift(geom: CavityGeometry, motion: MotionSpec = MotionSpec(1.0),
                     units: UnitSystem = REDUCED,
                     spec: QuadratureSpec | None = None) -> tuple[float, float]:
    """eta_int at the cavity centre for mu = diag(1,1,0) and mu = diag(0,0,1)."""
    if not geom.identical_plates:
        raise ValidationError("anisotropy_shift is defined for identical plates")
    center = geom.at(geom.half_width)
    out = []
    for mu in ((1.0, 1.0, 0.0), (0.0, 0.0, 1.0)):
        particle = ParticleModel(dissipation=InternalDissipationModel(mu))
        out.append(force_cavity(center, particle, motion, units, spec).eta_int)
    return out[0], out[1]


# ---------------------------------------------------------------------------
# generic evaluators over kernel providers

KernelProvider = Callable[[float], GreenDerivative]


def _probe_spec(f, spec):
    # absolute tolerance relative to the integrand's size on its natural scale
    probe = np.array([f(spec.decay_scale * t) for t in (0.5, 2.0, 6.0)])
    size = float(np.max(np.abs(probe))) * spec.decay_scale
    return spec.with_(abs_tol=max(spec.abs_tol * size, 1e-300))


def force_int_general(kernels: KernelProvider, mu: InternalDissipationModel, motion: MotionSpec,
                      particle: ParticleModel, units: UnitSystem = REDUCED,
                      spec: QuadratureSpec | None = None) -> float:
    """Internal-channel force from Sigma'(q) of any translation-invariant geometry.

    ``spec.decay_scale`` must be the q-width of the kernels.
    """
    spec = spec or QuadratureSpec()
    if mu.is_zero:
        return 0.0
    mu_t = mu_tensor(mu).real.T

    def integrand(q):
        return q**4 / 3 * np.trace(mu_t @ kernels(q).dsigma)

    res = integrate_halfline(integrand, _probe_spec(integrand, spec), vectorized=False)
    coeff = res.value / (2 * math.pi)
    return float(-units.hbar * particle.alpha0 * units.eps0 / math.pi * coeff * motion.v**3)


def force_rad_general(kernels: KernelProvider, motion: MotionSpec, particle: ParticleModel,
                      units: UnitSystem = REDUCED,
                      spec: QuadratureSpec | None = None) -> tuple[float, float, float]:
    """Radiative force (total, Sigma term, spin term) from any kernel provider.

    The double q integral is expanded with the binomial theorem into products
    of single moments int q^k K(q) dq; Sigma' is even and s' odd in q, so
    only half-line moments are evaluated.
    """
    spec = spec or QuadratureSpec()
    scale = spec.decay_scale
    ks = np.arange(5)

    def integrand(q):
        k = kernels(q)
        comps = np.concatenate([np.asarray(k.dsigma, dtype=float).ravel(), k.ds_perp])
        return ((q / scale) ** ks)[:, None] * comps[None, :]

    res = integrate_halfline(lambda q: integrand(q).ravel(), _probe_spec(
        lambda q: np.max(np.abs(integrand(q))), spec), vectorized=False)
    half = res.value.reshape(5, 12) * (scale ** ks)[:, None]
    sig = [2 * half[k, :9].reshape(3, 3) if k % 2 == 0 else np.zeros((3, 3)) for k in ks]
    spn = [2 * half[k, 9:] if k % 2 == 1 else np.zeros(3) for k in ks]
    j_sigma = sum(math.comb(4, k) * np.trace(sig[k] @ sig[4 - k]) for k in ks)
    j_spin = -2 * sum(math.comb(4, k) * spn[k] @ spn[4 - k] for k in ks)
    pref = -units.hbar * particle.alpha0**2 / math.pi * motion.v**3 / 12 / (2 * math.pi) ** 2
    sigma_term = float(pref * j_sigma)
    spin_term = float(pref * j_spin)
    return sigma_term + spin_term, sigma_term, spin_term


def spin_factorization_check(kernel: Callable, spec: QuadratureSpec | None = None
                             ) -> tuple[float, float]:
    """Both sides of the spin-term identity for an odd kernel s(q).

    lhs = int int (q' + q)^4 s(q') s(q) dq' dq over the plane (direct 2D),
    rhs = 32 (int_0^inf q^3 s) (int_0^inf q s).  ``kernel`` must broadcast.
    """
    spec = spec or QuadratureSpec()

    def pair(qt, q):
        return (qt + q) ** 4 * kernel(qt) * kernel(q)

    probe = abs(float(np.max(np.abs(kernel(spec.decay_scale * np.array([0.5, 2.0, 6.0]))))))
    tol_spec = spec.with_(abs_tol=max(spec.abs_tol * (probe * spec.decay_scale ** 3) ** 2, 1e-300))
    lhs = integrate_nested(pair, 2, tol_spec, domains=("full", "full")).value
    m3 = integrate_halfline(lambda q: q**3 * kernel(q), tol_spec).value
    m1 = integrate_halfline(lambda q: q * kernel(q), tol_spec).value
    return float(lhs), float(32 * m3 * m1)


def plane(z_a: float, rho: float, r0: float = 1.0) -> CavityGeometry:
    """Shorthand for a single Ohmic plane."""
    return CavityGeometry.plane(z_a, ReflectionModel(r0, rho))

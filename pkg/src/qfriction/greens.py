"""Near-field scattered Green tensor of a planar cavity (or a single plane).

Only the TM, quasistatic part is kept.  For an in-plane wavevector
(q, p_y), p = |(q, p_y)|, the integrand of the p_y integral is

    (p / 2 eps0) [P+ Pi - R M Pi] - (q / 2 eps0) P- L_y

with Pi = diag(q^2/p^2, p_y^2/p^2, 1) and M = diag(1, 1, -1).  P+, P- and
R carry the Fabry-Perot multiple reflections between the plates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .quadrature import QuadratureSpec, integrate_halfline
from .units import (
    REDUCED,
    CavityGeometry,
    SingularResponseError,
    UnitSystem,
    reflection_at,
    reflection_slope,
)

# (L_i)_jk = -i eps_ijk, generators of rotations
LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _k] = 1.0
    LEVI_CIVITA[_i, _k, _j] = -1.0
L = -1j * LEVI_CIVITA
L_Y = L[1]
MIRROR = np.diag([1.0, 1.0, -1.0])


@dataclass(frozen=True)
class GreenSample:
    q: float
    G: np.ndarray

    @property
    def G_im(self) -> np.ndarray:
        return (self.G - self.G.conj().T) / 2j


@dataclass(frozen=True)
class SigmaSpin:
    sigma: np.ndarray
    s_perp: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.sigma + np.tensordot(self.s_perp, L, axes=1)


@dataclass(frozen=True)
class GreenDerivative:
    """Frequency derivative at omega = 0 of (Sigma, s_perp) at fixed q."""

    dsigma: np.ndarray
    ds_y: float

    @property
    def ds_perp(self) -> np.ndarray:
        return np.array([0.0, self.ds_y, 0.0])


def decay_scale(geom: CavityGeometry) -> float:
    """1/e width in wavevector space of the slowest evanescent factor exp(-2 p z)."""
    return 1.0 / (2.0 * geom.nearest_distance)


def kernel_spec(geom: CavityGeometry, spec: QuadratureSpec | None = None) -> QuadratureSpec:
    spec = spec or QuadratureSpec()
    return spec.with_(decay_scale=decay_scale(geom))


def _reflections(geom, omega, units):
    r1 = reflection_at(geom.plate1, omega, units)
    if geom.single_plane:
        return r1, np.zeros_like(r1)
    return r1, reflection_at(geom.plate2, omega, units)


def _denominator(p, geom, r1r2):
    # 1 - r1 r2 exp(-4pw), written to survive r1 r2 -> 1, p w -> 0
    d = (1.0 - r1r2) - r1r2 * np.expm1(-4.0 * p * geom.half_width)
    if np.any(np.abs(d) < 1e-12):
        raise SingularResponseError("Fabry-Perot denominator vanishes (resonant cavity)")
    return d


def _exponentials(p, geom):
    e1 = np.exp(-2.0 * p * geom.z_a)
    if geom.single_plane:
        return e1, np.zeros_like(e1)
    return e1, np.exp(-2.0 * p * (2.0 * geom.half_width - geom.z_a))


def fabry_perot_R(p, geom: CavityGeometry, omega=0.0, units: UnitSystem = REDUCED):
    """R = 2 r1 r2 e^{-4pw} / (1 - r1 r2 e^{-4pw}); zero for a single plane."""
    p = np.asarray(p, dtype=float)
    if geom.single_plane:
        return np.zeros(np.broadcast(p, np.asarray(omega)).shape, dtype=complex)
    r1, r2 = _reflections(geom, omega, units)
    a = np.exp(-4.0 * p * geom.half_width)
    return 2.0 * r1 * r2 * a / _denominator(p, geom, r1 * r2)


def cavity_P(p, geom: CavityGeometry, omega=0.0, sign: int = +1, units: UnitSystem = REDUCED):
    """P(+/-) = [r1 e^{-2p z_a} +/- r2 e^{-2p(2w - z_a)}] / (1 - r1 r2 e^{-4pw})."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    p = np.asarray(p, dtype=float)
    r1, r2 = _reflections(geom, omega, units)
    e1, e2 = _exponentials(p, geom)
    num = r1 * e1 + sign * r2 * e2
    if geom.single_plane:
        return num + 0j
    return num / _denominator(p, geom, r1 * r2)


def fabry_perot_R_domega(p, geom: CavityGeometry, omega=0.0, units: UnitSystem = REDUCED):
    """Analytic d R / d omega for linear-in-omega reflection coefficients."""
    p = np.asarray(p, dtype=float)
    if geom.single_plane:
        return np.zeros(np.broadcast(p, np.asarray(omega)).shape, dtype=complex)
    r1, r2 = _reflections(geom, omega, units)
    d1, d2 = reflection_slope(geom.plate1, units), reflection_slope(geom.plate2, units)
    a = np.exp(-4.0 * p * geom.half_width)
    den = _denominator(p, geom, r1 * r2)
    return 2.0 * a * (d1 * r2 + r1 * d2) / den**2


def cavity_P_domega(p, geom: CavityGeometry, omega=0.0, sign: int = +1,
                    units: UnitSystem = REDUCED):
    """Analytic d P(+/-) / d omega for linear-in-omega reflection coefficients."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    p = np.asarray(p, dtype=float)
    r1, r2 = _reflections(geom, omega, units)
    d1 = reflection_slope(geom.plate1, units)
    e1, e2 = _exponentials(p, geom)
    if geom.single_plane:
        return d1 * e1 + 0j
    d2 = reflection_slope(geom.plate2, units)
    a = np.exp(-4.0 * p * geom.half_width)
    den = _denominator(p, geom, r1 * r2)
    num = r1 * e1 + sign * r2 * e2
    dnum = d1 * e1 + sign * d2 * e2
    dden = -(d1 * r2 + r1 * d2) * a
    return dnum / den - num * dden / den**2


def radial_kernels_at0(p, geom: CavityGeometry, units: UnitSystem = REDUCED):
    """Im d/domega of (P+, P-, R) at omega = 0, as functions of |p|."""
    return (cavity_P_domega(p, geom, 0.0, +1, units).imag,
            cavity_P_domega(p, geom, 0.0, -1, units).imag,
            fabry_perot_R_domega(p, geom, 0.0, units).imag)


def _tensor_components(q, py, Pp, Pm, R, units):
    """Non-zero entries (xx, yy, zz, L_y coefficient) of the integrand."""
    p = np.hypot(q, py)
    pref = 1.0 / (2.0 * units.eps0)
    xx = pref * (Pp - R) * q * (q / p)
    yy = pref * (Pp - R) * py * (py / p)
    zz = pref * (Pp + R) * p
    cl = -pref * q * Pm
    return np.stack([xx, yy, zz, cl], axis=-1)


def green_integrand(q, py, geom: CavityGeometry, omega=0.0, units: UnitSystem = REDUCED):
    """Integrand of the p_y integral, packed as (..., 4) complex components."""
    p = np.hypot(q, py)
    return _tensor_components(q, py,
                              cavity_P(p, geom, omega, +1, units),
                              cavity_P(p, geom, omega, -1, units),
                              fabry_perot_R(p, geom, omega, units), units)


def derivative_integrand(q, py, geom: CavityGeometry, units: UnitSystem = REDUCED):
    """p_y integrand of (dSigma_xx, dSigma_yy, dSigma_zz, ds_y) at omega = 0."""
    p = np.hypot(q, py)
    Pp, Pm, R = radial_kernels_at0(p, geom, units)
    return _tensor_components(q, py, Pp, Pm, R, units)


def assemble(components) -> np.ndarray:
    """3x3 tensor from packed (xx, yy, zz, L_y coefficient) components."""
    xx, yy, zz, cl = components
    return np.diag([xx, yy, zz]).astype(complex) + cl * L_Y


def _py_integral(integrand, geom, spec):
    # integrand is even in p_y
    res = integrate_halfline(integrand, kernel_spec(geom, spec))
    return 2.0 * res.value / (2.0 * np.pi)


def green_q(q: float, geom: CavityGeometry, omega: float = 0.0, units: UnitSystem = REDUCED,
            spec: QuadratureSpec | None = None) -> GreenSample:
    """p_y-integrated scattered Green tensor at wavevector q along the motion."""
    q = float(q)
    comps = _py_integral(lambda py: green_integrand(q, py, geom, omega, units), geom, spec)
    return GreenSample(q, assemble(comps))


def sigma_s_decompose(G) -> SigmaSpin:
    """Split G_Im into its real symmetric part and a spin vector on the L_i."""
    if isinstance(G, GreenSample):
        G = G.G
    G = np.asarray(G, dtype=complex)
    g_im = (G - G.conj().T) / 2j
    sigma = 0.5 * (g_im.real + g_im.real.T)
    anti = 0.5 * (g_im.imag - g_im.imag.T)
    s = -0.5 * np.einsum("ijk,jk->i", LEVI_CIVITA, anti)
    return SigmaSpin(sigma, s)


def green_derivative_at0(q: float, geom: CavityGeometry, units: UnitSystem = REDUCED,
                         spec: QuadratureSpec | None = None) -> GreenDerivative:
    """Sigma'(q, z_a, 0) and s_y'(q, z_a, 0) from analytic omega-derivatives.

    For a cavity with r1 r2 = 1 the zz entry diverges logarithmically as
    q -> 0; q = 0 itself is then not a valid argument.
    """
    q = float(q)
    xx, yy, zz, cl = _py_integral(lambda py: derivative_integrand(q, py, geom, units),
                                  geom, spec).real
    return GreenDerivative(np.diag([xx, yy, zz]), float(cl))


def derivative_kernel(geom: CavityGeometry, units: UnitSystem = REDUCED,
                      spec: QuadratureSpec | None = None) -> Callable[[float], GreenDerivative]:
    """Kernel provider q -> GreenDerivative for the generic force evaluators."""
    def kernel(q):
        return green_derivative_at0(q, geom, units, spec)
    return kernel

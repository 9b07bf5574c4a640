"""Fluctuation statistics of the moving dipole and the full force functional.

The force functional integrates ``q Tr[S^T(qv - omega) G_Im(q, omega)]`` over
omega > 0 and all q.  With the low-frequency spectrum S = (hbar a0^2/pi) D
the omega integral is folded into a unit interval t, omega = (q + q') v t,
so no frequency cutoff is needed.  Everything in that path runs on fixed
tensor-product grids and is vectorized.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .forces import MotionSpec
from .greens import L_Y, decay_scale, green_integrand, green_q, kernel_spec
from .quadrature import (
    QuadratureSpec,
    gauss_legendre,
    halfline_rule,
    integrate_fullline,
    integrate_halfline,
)
from .units import (
    REDUCED,
    CavityGeometry,
    ParticleModel,
    SingularResponseError,
    UnitSystem,
    alpha_mu,
    mu_tensor,
)


class ExpansionWarning(RuntimeWarning):
    """Velocity too large for the low-velocity expansion to be trusted."""


@dataclass(frozen=True)
class DissipationKernel:
    """D(omega, v); Hermitian, with an imaginary L_y part once v > 0."""

    omega: float
    v: float
    D: np.ndarray


@dataclass(frozen=True)
class PowerSpectrum:
    omega: float
    v: float
    S: np.ndarray

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.S).min())


def _hermitian(m):
    return 0.5 * (m + m.conj().T)


def langevin_spectrum(omega: float, particle: ParticleModel,
                      units: UnitSystem = REDUCED) -> np.ndarray:
    """One-sided density of the internal Langevin force correlator."""
    if omega <= 0:
        return np.zeros((3, 3))
    mu = mu_tensor(particle.dissipation, omega).real
    return 4 * math.pi * units.hbar * units.eps0 * omega * mu / particle.alpha0


def _bath_term(omega, particle, units):
    if omega <= 0:
        return np.zeros((3, 3), dtype=complex)
    mu = mu_tensor(particle.dissipation, omega).real
    return (omega * units.eps0 / particle.alpha0 * mu).astype(complex)


def _field_term(omega, v, geom, units, spec):
    qspec = kernel_spec(geom, spec)

    def g_im(q):
        return green_q(q, geom, omega + q * v, units, spec).G_im

    if v == 0:
        if omega <= 0:
            return np.zeros((3, 3), dtype=complex)
        res = integrate_fullline(g_im, qspec, vectorized=False)
    else:
        # past ~745 decay lengths the integrand underflows, so a farther
        # threshold is the same as an infinite one
        reach = 800.0 * decay_scale(geom)
        start = -omega / v
        if start >= reach:
            return np.zeros((3, 3), dtype=complex)
        if start <= -reach:
            res = integrate_fullline(g_im, qspec, vectorized=False)
        else:
            res = integrate_halfline(g_im, qspec, start=start, vectorized=False)
    return res.value / (2 * math.pi)


def dissipation_kernel(omega: float, v: float, geom: CavityGeometry | None,
                       particle: ParticleModel, units: UnitSystem = REDUCED,
                       spec: QuadratureSpec | None = None, *,
                       channels: tuple[str, ...] = ("bath", "field")) -> DissipationKernel:
    """Internal-bath plus field contribution to D(omega, v).

    ``geom=None`` means no plates.  ``channels`` selects a subset, which is
    how channel additivity is checked.
    """
    if v < 0:
        raise ValueError("v must be nonnegative")
    D = np.zeros((3, 3), dtype=complex)
    if "bath" in channels:
        D = D + _bath_term(omega, particle, units)
    if "field" in channels and geom is not None:
        D = D + _field_term(omega, v, geom, units, spec)
    return DissipationKernel(float(omega), float(v), _hermitian(D))


def _integrated_green(omega, v, geom, units, spec):
    def g(q):
        return green_q(q, geom, omega + q * v, units, spec).G

    return integrate_fullline(g, kernel_spec(geom, spec), vectorized=False).value / (2 * math.pi)


def dressed_alpha(omega: float, v: float, geom: CavityGeometry | None, particle: ParticleModel,
                  units: UnitSystem = REDUCED, spec: QuadratureSpec | None = None) -> np.ndarray:
    """Polarizability dressed by the scattered field seen at speed v."""
    a_mu = alpha_mu(particle, omega, units)
    if geom is None:
        return a_mu
    bracket = np.eye(3) - _integrated_green(omega, v, geom, units, spec) @ a_mu
    cond = np.linalg.cond(bracket)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularResponseError(f"dressing bracket is singular (condition number {cond:.3g})")
    return a_mu @ np.linalg.inv(bracket)


def power_spectrum(omega: float, v: float, geom: CavityGeometry | None, particle: ParticleModel,
                   units: UnitSystem = REDUCED, spec: QuadratureSpec | None = None) -> PowerSpectrum:
    """S = (hbar/pi) alpha D alpha^dagger."""
    alpha = dressed_alpha(omega, v, geom, particle, units, spec)
    D = dissipation_kernel(omega, v, geom, particle, units, spec).D
    S = units.hbar / math.pi * alpha @ D @ alpha.conj().T
    return PowerSpectrum(float(omega), float(v), _hermitian(S))


# ---------------------------------------------------------------------------
# force functional on fixed grids

@dataclass(frozen=True)
class _Grids:
    q_half: tuple[np.ndarray, np.ndarray]
    py: tuple[np.ndarray, np.ndarray]
    t: tuple[np.ndarray, np.ndarray]


def _grids(geom, n_nodes, n_t):
    scale = decay_scale(geom)
    x, w = halfline_rule(n_nodes, scale)
    return _Grids((x, w), (x, w), gauss_legendre(n_t, 0.0, 1.0))


def _split_rule(s, grids):
    """Rule on the q line with breakpoints at q = 0 and q' = s - q = 0."""
    x, w = grids.q_half
    xm, wm = gauss_legendre(len(x), 0.0, s)
    return np.concatenate([-x[::-1], xm, s + x]), np.concatenate([w[::-1], wm, w])


def _g_im(q, omega, geom, units, grids):
    """G_Im(q, omega) as (..., 3, 3) arrays on the fixed p_y rule."""
    py, wy = grids.py
    comps = green_integrand(q[..., None], py, geom, omega[..., None], units).imag
    # even in p_y: full line = 2 x half line, then the 1/2pi of dp_y/2pi
    c = np.einsum("...kc,k->...c", comps, wy) / math.pi
    out = np.zeros(c.shape[:-1] + (3, 3), dtype=complex)
    for i in range(3):
        out[..., i, i] = c[..., i]
    return out + c[..., 3, None, None] * L_Y


class _Dressing:
    """alpha(Omega)/alpha0 on Chebyshev nodes, interpolated (clamped) in between."""

    def __init__(self, geom, particle, v, units, spec, omega_max, n_cheb):
        self.lo, self.hi = -omega_max, omega_max
        k = np.arange(n_cheb)
        nodes = np.cos(math.pi * (k + 0.5) / n_cheb)
        omegas = 0.5 * (self.hi + self.lo) + 0.5 * (self.hi - self.lo) * nodes
        vals = np.array([dressed_alpha(om, v, geom, particle, units, spec) / particle.alpha0
                         for om in omegas])
        self.coef = np.polynomial.chebyshev.chebfit(nodes, vals.reshape(n_cheb, 9), n_cheb - 1)

    def __call__(self, omega):
        omega = np.clip(omega, self.lo, self.hi)
        x = (2 * omega - (self.hi + self.lo)) / (self.hi - self.lo)
        vals = np.polynomial.chebyshev.chebval(x, self.coef)
        return np.moveaxis(vals, 0, -1).reshape(np.shape(omega) + (3, 3))


def _sandwich(A, X):
    return A @ X @ np.swapaxes(A.conj(), -1, -2)


def _tr_t(M, G):
    # Tr[M^T G] = sum_ij M_ij G_ij
    return np.einsum("...ij,...ij->...", M, G).real


def _check_velocity(geom, particle, v):
    limit = particle.omega_a / decay_scale(geom)
    if v > limit:
        warnings.warn(f"v = {v:g} exceeds omega_a x kernel length = {limit:g}; "
                      "the low-velocity expansion is unreliable", ExpansionWarning, stacklevel=3)


def force_full_terms(geom: CavityGeometry, particle: ParticleModel, motion: MotionSpec,
                     units: UnitSystem = REDUCED, spec: QuadratureSpec | None = None, *,
                     full_spectrum: bool = False, n_nodes: int = 48, n_t: int = 12,
                     n_cheb: int = 12) -> tuple[float, float]:
    """(bath, field) contributions of the force functional."""
    v = motion.v
    _check_velocity(geom, particle, v)
    grids = _grids(geom, n_nodes, n_t)
    mu = mu_tensor(particle.dissipation).real
    t, wt = grids.t
    dressing = None
    if full_spectrum:
        omega_max = 12 * v * decay_scale(geom)
        dressing = _Dressing(geom, particle, v, units, spec, omega_max, n_cheb)

    # bath channel: omega = q v t, Omega = q v (1 - t)
    f_int = 0.0
    if not particle.dissipation.is_zero:
        q, wq = grids.q_half
        qq, tt = np.meshgrid(q, t, indexing="ij")
        G = _g_im(qq, qq * v * tt, geom, units, grids)
        M = np.broadcast_to(mu, G.shape)
        if dressing is not None:
            M = _sandwich(dressing(qq * v * (1 - tt)), M)
        integrand = qq**3 * v**2 * (1 - tt) * _tr_t(M, G)
        total = np.einsum("i,j,ij->", wq, wt, integrand)
        f_int = -2 * units.hbar * particle.alpha0 * units.eps0 / math.pi * total / (2 * math.pi)

    # field channel: s = q + q' > 0, omega = s v t, Omega = q v - s v t
    s_nodes, ws = grids.q_half
    acc = 0.0
    for s, w_s in zip(s_nodes, ws):
        q, wq = _split_rule(s, grids)
        qq, tt = np.meshgrid(q, t, indexing="ij")
        g_here = _g_im(qq, s * v * tt, geom, units, grids)
        g_other = _g_im(s - qq, s * v * (1 - tt), geom, units, grids)
        if dressing is not None:
            g_other = _sandwich(dressing(qq * v - s * v * tt), g_other)
        integrand = qq * s * v * _tr_t(g_other, g_here)
        acc += w_s * np.einsum("i,j,ij->", wq, wt, integrand)
    f_rad = -2 * units.hbar * particle.alpha0**2 / math.pi * acc / (2 * math.pi) ** 2
    return float(f_int), float(f_rad)


def force_full(geom: CavityGeometry, particle: ParticleModel, motion: MotionSpec,
               units: UnitSystem = REDUCED, spec: QuadratureSpec | None = None, *,
               full_spectrum: bool = False, n_nodes: int = 48, n_t: int = 12,
               n_cheb: int = 12) -> float:
    """Total drag from the force functional.

    By default S is replaced by its low-frequency form (hbar a0^2/pi) D;
    ``full_spectrum=True`` dresses it with alpha(Omega), tabulated on
    ``n_cheb`` Chebyshev nodes (slow: each node is a full q integral).
    """
    return sum(force_full_terms(geom, particle, motion, units, spec, full_spectrum=full_spectrum,
                                n_nodes=n_nodes, n_t=n_t, n_cheb=n_cheb))


def force_full_density(omega: float, geom: CavityGeometry, particle: ParticleModel,
                       motion: MotionSpec, units: UnitSystem = REDUCED,
                       n_nodes: int = 48) -> float:
    """dF/domega of the low-frequency force functional at one frequency."""
    if omega <= 0:
        return 0.0
    v = motion.v
    grids = _grids(geom, n_nodes, 2)
    x, wx = grids.q_half
    q0 = omega / v
    out = 0.0
    if not particle.dissipation.is_zero:
        q = q0 + x
        G = _g_im(q, np.full_like(q, omega), geom, units, grids)
        mu = mu_tensor(particle.dissipation).real
        vals = q * (q * v - omega) * _tr_t(np.broadcast_to(mu, G.shape), G)
        out += -2 * units.hbar * particle.alpha0 * units.eps0 / math.pi * (wx @ vals) / (2 * math.pi)
    acc = 0.0
    for s, w_s in zip(q0 + x, wx):
        q, wq = _split_rule(s, grids)
        g_here = _g_im(q, np.full_like(q, omega), geom, units, grids)
        g_other = _g_im(s - q, np.full_like(q, s * v - omega), geom, units, grids)
        acc += w_s * (wq @ (q * _tr_t(g_other, g_here)))
    out += -2 * units.hbar * particle.alpha0**2 / math.pi * acc / (2 * math.pi) ** 2
    return float(out)

"""Invariant suite run by ``qfriction validate`` on a configured model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .forces import MotionSpec, cavity_f_int, force_cavity, radial_moments
from .greens import (
    GreenDerivative,
    cavity_P,
    cavity_P_domega,
    decay_scale,
    derivative_kernel,
    fabry_perot_R,
    fabry_perot_R_domega,
)
from .quadrature import QuadratureSpec, derivative_at
from .spectrum import power_spectrum
from .units import REDUCED, CavityGeometry, InternalDissipationModel, ParticleModel, UnitSystem

KernelHook = Callable[[float, GreenDerivative], GreenDerivative]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:<18} {self.detail}"


def parity_fault(q: float, k: GreenDerivative) -> GreenDerivative:
    """Test hook: adds a q-odd piece to Sigma', breaking its parity."""
    bump = np.diag([q, 0.0, 0.0]) * float(np.abs(k.dsigma).max() + 1.0)
    return GreenDerivative(k.dsigma + bump, k.ds_y)


def _sample_q(geom, rng, n=3):
    return decay_scale(geom) * rng.uniform(0.2, 4.0, size=n)


def check_parity(geom, units, spec, rng, hook: KernelHook | None = None) -> CheckResult:
    kernel = derivative_kernel(geom, units, spec)
    worst = 0.0
    for q in _sample_q(geom, rng):
        kp, km = kernel(q), kernel(-q)
        if hook is not None:
            kp, km = hook(q, kp), hook(-q, km)
        scale = max(np.abs(kp.dsigma).max(), abs(kp.ds_y), 1e-300)
        worst = max(worst,
                    np.abs(kp.dsigma - km.dsigma).max() / scale,
                    abs(kp.ds_y + km.ds_y) / scale)
    return CheckResult("parity", worst < 1e-8, f"max rel asymmetry {worst:.2e}")


def check_sigma_psd(geom, units, spec, rng) -> CheckResult:
    kernel = derivative_kernel(geom, units, spec)
    worst = 0.0
    for q in _sample_q(geom, rng):
        sig = kernel(q).dsigma
        ev = np.linalg.eigvalsh(sig)
        worst = min(worst, ev.min() / max(np.abs(ev).max(), 1e-300))
    return CheckResult("sigma_psd", worst >= -1e-12, f"min rel eigenvalue {worst:.2e}")


def check_fd_agreement(geom, units, rng) -> CheckResult:
    p = decay_scale(geom) * rng.uniform(0.2, 4.0, size=4)
    worst = 0.0
    pairs = [(lambda w: cavity_P(p, geom, w, +1, units), cavity_P_domega(p, geom, 0.0, +1, units)),
             (lambda w: cavity_P(p, geom, w, -1, units), cavity_P_domega(p, geom, 0.0, -1, units))]
    if not geom.single_plane:
        pairs.append((lambda w: fabry_perot_R(p, geom, w, units),
                      fabry_perot_R_domega(p, geom, 0.0, units)))
    for f, exact in pairs:
        fd, _ = derivative_at(f, 0.0, h=1e-4)
        scale = max(np.abs(exact).max(), 1e-300)
        worst = max(worst, np.abs(fd - exact).max() / scale)
    return CheckResult("fd_agreement", worst < 1e-6, f"max rel deviation {worst:.2e}")


def check_mirror(geom, particle, units, spec) -> CheckResult:
    if geom.single_plane:
        return CheckResult("mirror", True, "single plane: nothing to mirror")
    a = force_cavity(geom, particle, MotionSpec(1.0), units, spec)
    b = force_cavity(geom.mirrored(), particle, MotionSpec(1.0), units, spec)
    dev = max(abs(a.f_rad - b.f_rad) / max(abs(a.f_rad), 1e-300),
              abs(a.f_int - b.f_int) / max(abs(a.f_int), 1e-300) if a.f_int else 0.0)
    return CheckResult("mirror", dev < 1e-8, f"rel deviation {dev:.2e}")


def check_r_cancellation(geom, units, spec) -> CheckResult:
    moments = radial_moments(geom, units, spec)
    total, r_term = cavity_f_int(moments, InternalDissipationModel.isotropic(1.0), units=units)
    ratio = abs(r_term) / abs(total) if total else 0.0
    return CheckResult("r_cancellation", ratio < 1e-12, f"|R term|/|total| {ratio:.2e}")


def check_velocity_scaling(geom, particle, units, spec) -> CheckResult:
    a = force_cavity(geom, particle, MotionSpec(1.0), units, spec)
    b = force_cavity(geom, particle, MotionSpec(2.0), units, spec)
    dev = abs(b.f_rad / a.f_rad - 8.0) / 8.0 if a.f_rad else 0.0
    return CheckResult("v3_scaling", dev < 1e-12, f"rel deviation {dev:.2e}")


def check_drag_sign(geom, particle, units, spec) -> CheckResult:
    r = force_cavity(geom, particle, MotionSpec(1.0), units, spec)
    ok = r.f_int <= 0 and r.f_rad <= 0 and r.rad_sigma_term <= 0
    return CheckResult("drag_sign", ok, f"f_int={r.f_int:.3e} f_rad={r.f_rad:.3e}")


def check_spectrum_psd(geom, particle, units, spec, rng) -> CheckResult:
    worst = 0.0
    scale = decay_scale(geom)
    for _ in range(2):
        omega = rng.uniform(0.0, 0.2) * particle.omega_a
        v = rng.uniform(0.01, 0.2) * particle.omega_a / scale
        S = power_spectrum(omega, v, geom, particle, units, spec)
        herm = np.abs(S.S - S.S.conj().T).max()
        norm = max(np.abs(S.S).max(), 1e-300)
        worst = min(worst, S.min_eigenvalue() / norm, -herm / norm)
    return CheckResult("spectrum_psd", worst >= -1e-12, f"min rel eigenvalue {worst:.2e}")


def run_checks(geom: CavityGeometry, particle: ParticleModel, units: UnitSystem = REDUCED,
               spec: QuadratureSpec | None = None, seed: int = 0,
               inject_fault: str | None = None) -> list[CheckResult]:
    """All checks in a fixed order; ``seed`` drives the random sample points."""
    spec = spec or QuadratureSpec()
    rng = np.random.default_rng(seed)
    hook = parity_fault if inject_fault == "parity" else None
    if inject_fault not in (None, "parity"):
        raise ValueError(f"unknown fault {inject_fault!r}")
    return [
        check_parity(geom, units, spec, rng, hook),
        check_sigma_psd(geom, units, spec, rng),
        check_fd_agreement(geom, units, rng),
        check_mirror(geom, particle, units, spec),
        check_r_cancellation(geom, units, spec),
        check_velocity_scaling(geom, particle, units, spec),
        check_drag_sign(geom, particle, units, spec),
        check_spectrum_psd(geom, particle, units, spec, rng),
    ]

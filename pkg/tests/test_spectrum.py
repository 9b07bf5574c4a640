import math
import warnings

import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

from qfriction.forces import MotionSpec, force_cavity
from qfriction.greens import decay_scale, green_q
from qfriction.quadrature import QuadratureSpec, integrate_halfline
from qfriction.spectrum import (
    ExpansionWarning,
    dissipation_kernel,
    dressed_alpha,
    force_full,
    force_full_density,
    force_full_terms,
    langevin_spectrum,
    power_spectrum,
)
from qfriction.units import (
    CavityGeometry,
    InternalDissipationModel,
    REDUCED,
    ParticleModel,
    ReflectionModel,
    alpha_mu,
)
from qfriction.spectrum import _integrated_green


def test_langevin_spectrum():
    p = ParticleModel(dissipation=InternalDissipationModel.isotropic(1.0))
    assert np.all(langevin_spectrum(-1.0, p) == 0)
    assert np.all(langevin_spectrum(0.0, p) == 0)
    assert np.allclose(langevin_spectrum(2.0, p), 8 * math.pi * np.eye(3))


def test_kernel_vanishes_below_window(plane, particle):
    D = dissipation_kernel(-0.5, 0.0, plane, particle).D
    assert np.all(D == 0)


def test_bath_only_without_surface_loss(particle):
    g = CavityGeometry(1.0, 0.6, ReflectionModel(1.0, 0.0), ReflectionModel(0.4, 0.0))
    D = dissipation_kernel(0.3, 0.0, g, particle).D
    assert np.allclose(D, 0.3 * np.eye(3), atol=1e-15)


def test_field_term_is_window_integral(plane, particle):
    v = 0.2
    D = dissipation_kernel(0.0, v, plane, particle, channels=("field",)).D
    # direct quadrature of G_Im over q in (0, inf), Omega = q v
    ref = integrate_halfline(lambda q: green_q(q, plane, q * v).G_im,
                             QuadratureSpec(decay_scale=1.0), vectorized=False).value / (2 * math.pi)
    assert np.allclose(D, ref, rtol=1e-8)
    assert np.abs(D).max() > 0
    # the one-sided window leaves a spin part: D is Hermitian, not real
    assert abs(D[0, 2].imag) > 0
    assert np.allclose(D, D.conj().T)


def test_channel_additivity(cavity, particle):
    g = cavity.at(0.7)
    both = dissipation_kernel(0.1, 0.3, g, particle).D
    bath = dissipation_kernel(0.1, 0.3, g, particle, channels=("bath",)).D
    field = dissipation_kernel(0.1, 0.3, g, particle, channels=("field",)).D
    assert np.allclose(both, bath + field, rtol=1e-15, atol=0)


def test_dressed_alpha_limits(particle):
    assert np.allclose(dressed_alpha(0.3, 0.1, None, particle), alpha_mu(particle, 0.3))
    far = CavityGeometry.plane(1e4, ReflectionModel(1.0, 1.0))
    assert np.allclose(dressed_alpha(0.0, 0.0, far, ParticleModel()), np.eye(3), atol=1e-9)


def test_dressed_alpha_third_order_residual(plane):
    g, omega, v = plane, 0.2, 0.1
    G = _integrated_green(omega, v, g, REDUCED, None)

    def residual(a0):
        p = ParticleModel(alpha0=a0, dissipation=InternalDissipationModel.isotropic(0.5))
        am = alpha_mu(p, omega)
        return np.abs(dressed_alpha(omega, v, g, p) - am - am @ G @ am).max()

    ratio = residual(0.02) / residual(0.01)
    assert ratio == pytest.approx(8.0, rel=0.05)


def test_low_frequency_spectrum_limit(plane):
    # omega small enough that alpha_mu's own frequency dependence is negligible
    omega, v = 1e-3, 1e-2

    def deviation(a0):
        p = ParticleModel(alpha0=a0, dissipation=InternalDissipationModel.isotropic(1.0))
        S = power_spectrum(omega, v, plane, p).S
        D = dissipation_kernel(omega, v, plane, p).D
        approx = a0**2 / math.pi * D
        return np.abs(S - approx).max() / np.abs(approx).max()

    d1, d2 = deviation(0.02), deviation(0.01)
    assert d1 < 0.02
    assert d1 / d2 == pytest.approx(2.0, rel=0.1)


@given(st.floats(-1.0, 1.0), st.floats(0.0, 1.0), st.floats(0.2, 1.0),
       st.floats(0.0, 1.0), st.floats(0.0, 2.0))
@example(omega=1.0, v=2.6e-222, x=1.0, r0=0.0, rho=0.0)
@settings(max_examples=8, deadline=None)
def test_spectrum_hermitian_psd(omega, v, x, r0, rho):
    g = CavityGeometry(1.0, 2 * x * 0.99 + 0.01, ReflectionModel(r0, rho), ReflectionModel(1.0, 1.0))
    p = ParticleModel(alpha0=0.1, dissipation=InternalDissipationModel((0.5, 1.0, 0.2)))
    S = power_spectrum(omega, v, g, p)
    assert np.allclose(S.S, S.S.conj().T, rtol=0, atol=1e-15 * max(np.abs(S.S).max(), 1e-300))
    assert S.min_eigenvalue() >= -1e-12 * max(np.abs(S.S).max(), 1e-300)


def test_force_full_zero_without_dissipation():
    g = CavityGeometry(1.0, 0.5, ReflectionModel(1.0, 0.0), ReflectionModel(1.0, 0.0))
    assert force_full(g, ParticleModel(), MotionSpec(0.05)) == 0.0


def test_force_full_single_plane_is_exact(plane, particle):
    rep = force_cavity(plane, particle, MotionSpec(1.0))
    f_int, f_rad = force_full_terms(plane, particle, MotionSpec(0.05))
    assert f_int / 0.05**3 == pytest.approx(rep.f_int, rel=1e-6)
    assert f_rad / 0.05**3 == pytest.approx(rep.f_rad, rel=1e-6)


def test_force_full_converges_in_cavity(cavity, particle):
    ref = force_cavity(cavity, particle, MotionSpec(1.0))
    ref_total = ref.f_int + ref.f_rad
    c = [force_full(cavity, particle, MotionSpec(v)) / v**3 for v in (0.1, 0.05, 0.025)]
    assert all(x < 0 for x in c)
    assert abs(c[2] - c[1]) / abs(c[2]) < 0.05
    assert c[2] == pytest.approx(ref_total, rel=0.1)


def test_full_spectrum_path_close_for_small_alpha(plane):
    p = ParticleModel(alpha0=0.01, dissipation=InternalDissipationModel.isotropic(1.0))
    m = MotionSpec(0.05)
    low = force_full(plane, p, m, n_nodes=24)
    full = force_full(plane, p, m, full_spectrum=True, n_nodes=24, n_cheb=6)
    assert full < 0
    assert full == pytest.approx(low, rel=0.05)


def test_evanescent_dominance(plane, particle):
    m = MotionSpec(0.05)
    total = force_full(plane, particle, m)
    q_max = 10 * decay_scale(plane)
    cut = 10 * q_max * m.v
    tail = integrate_halfline(lambda w: force_full_density(w, plane, particle, m),
                              QuadratureSpec(decay_scale=m.v * decay_scale(plane)),
                              start=cut, vectorized=False).value
    assert abs(tail) < 1e-6 * abs(total)


def test_density_integrates_to_force(plane, particle):
    m = MotionSpec(0.05)
    total = force_full(plane, particle, m)
    dens = integrate_halfline(lambda w: force_full_density(w, plane, particle, m),
                              QuadratureSpec(rel_tol=1e-6, decay_scale=m.v * decay_scale(plane)),
                              vectorized=False).value
    assert dens == pytest.approx(total, rel=1e-4)


def test_velocity_warning(plane, particle):
    with pytest.warns(ExpansionWarning):
        force_full(plane, particle, MotionSpec(5.0), n_nodes=8, n_t=4)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        force_full(plane, particle, MotionSpec(0.1), n_nodes=8, n_t=4)

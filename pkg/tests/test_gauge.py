import numpy as np
import pytest

import oracles as o
from propkit.errors import DomainError
from propkit.fields import (
    Combined,
    ConstantUniform,
    FieldTensor,
    PlaneWave,
    constant_from_EB,
    crossed_field,
    field_at,
    principal_null_directions,
    sinusoidal_profile,
)
from propkit.gauge import (
    ClassicalPath,
    Sampled,
    StraightLine,
    fixed_gauge_potential,
    flux_line,
    flux_surface,
    gauge_transform_kernel,
    line_integral,
    potential_classical_accel,
    potential_from_path,
    potential_sample,
    sampled_path,
    straight_path,
)
from propkit.kernels import kernel_constant



def wave_config(draw):
    k = draw.null_k()
    return PlaneWave.from_profile(sinusoidal_profile(k, draw.transverse(k), draw.amp(), 1.2, 0.3))


def curl(A, x, h=1e-4):
    d = np.empty((4, 4))
    for mu in range(4):
        e = np.zeros(4)
        e[mu] = h
        d[mu] = (A(x + e) - A(x - e)) / (2 * h)
    # d[mu, nu] = d_mu A_nu with lower-index derivatives
    return d - d.T


def test_zero_field_potential_vanishes(particle):
    cfg = ConstantUniform(FieldTensor.zero())
    x = np.array([1.0, 0.2, 0.3, 0.4])
    assert np.all(potential_from_path(cfg, StraightLine(np.zeros(4)), x) == 0)
    assert np.all(potential_from_path(cfg, ClassicalPath(cfg, particle, np.zeros(4), 1.0), x) == 0)


def test_straight_line_is_fock_schwinger(draw):
    for _ in range(5):
        E, B = draw.EB()
        F = constant_from_EB(E, B)
        x, a = draw.endpoints()
        A = potential_from_path(ConstantUniform(F), StraightLine(a), x)
        assert np.allclose(A, -0.5 * F.cov @ (x - a), atol=1e-13)
    s = potential_sample(ConstantUniform(F), StraightLine(a), x)
    assert s.gauge == "straight" and np.array_equal(s.A, A)


def test_crossed_classical_path_potential(draw, particle):
    for _ in range(5):
        F = FieldTensor(draw.null_field())
        x, a = draw.endpoints()
        tau = draw.tau()
        cfg = ConstantUniform(F)
        A = potential_from_path(cfg, ClassicalPath(cfg, particle, a, tau), x)
        expect = -0.5 * (F.cov + particle.lam * tau / 3 * F.cov @ F.mixed) @ (x - a)
        assert np.allclose(A, expect, atol=1e-12)


def test_acceleration_form_agrees(draw, particle):
    E, B = draw.EB()
    cfgs = [ConstantUniform(constant_from_EB(E, B)), wave_config(draw)]
    for cfg in cfgs:
        x, a = draw.endpoints()
        fam = ClassicalPath(cfg, particle, a, 1.3)
        A1 = potential_from_path(cfg, fam, x)
        A2 = potential_classical_accel(fam, particle, x)
        assert np.abs(A1 - A2).max() < 1e-6 * (1 + np.abs(A1).max())


def test_acceleration_form_rejects_non_classical(draw, particle):
    E, B = draw.EB()
    cfg = ConstantUniform(constant_from_EB(E, B))
    x, a = draw.endpoints()

    fam = ClassicalPath(cfg, particle, a, 1.0, generator=lambda y: straight_path(a, y))
    with pytest.raises(DomainError, match="path is not classical"):
        potential_classical_accel(fam, particle, x)


def test_classical_path_potential_has_the_right_curl(draw, particle):
    cfgs = [ConstantUniform(constant_from_EB(*draw.EB())), wave_config(draw)]
    for cfg in cfgs:
        x, a = draw.endpoints()
        fam = ClassicalPath(cfg, particle, a, 1.1)
        F = curl(lambda z: potential_from_path(cfg, fam, z, tol=1e-12), x)
        ref = field_at(cfg, x).cov
        assert np.abs(F - ref).max() < 1e-6


def test_flux_line_along_own_gauge_path_vanishes(draw, particle):
    for cfg in (ConstantUniform(constant_from_EB(*draw.EB())), wave_config(draw)):
        x, a = draw.endpoints()
        fam = ClassicalPath(cfg, particle, a, 1.2)
        assert abs(flux_line(cfg, fam, fam.path_to(x))) < 1e-9
        assert abs(flux_line(cfg, StraightLine(a), straight_path(a, x))) < 1e-12


def test_flux_line_triangle_oracle(draw):
    for _ in range(3):
        E, B = draw.EB()
        F = constant_from_EB(E, B)
        a, b = draw.endpoints()
        c = b + draw.rng.normal(size=4)
        along = sampled_path(np.array([a, b, c]), [0.0, 1.0, 2.0])
        val = flux_line(ConstantUniform(F), StraightLine(a), along)
        assert val == pytest.approx(o.triangle_flux(F.cov, a, b, c), abs=1e-11)


def test_flux_line_zero_field_and_mismatch(draw):
    a, b = draw.endpoints()
    cfg = ConstantUniform(FieldTensor.zero())
    assert flux_line(cfg, StraightLine(a), straight_path(a, b)) == 0
    with pytest.raises(DomainError, match="gauge anchor"):
        flux_line(cfg, StraightLine(a), straight_path(b, a))
    with pytest.raises(DomainError, match="share endpoints"):
        flux_line(cfg, Sampled(np.array([a, b]), [0.0, 1.0]), straight_path(a, 2 * b - a))


def test_flux_surface_identical_paths(draw):
    cfg = ConstantUniform(constant_from_EB(*draw.EB()))
    a, b = draw.endpoints()
    p = straight_path(a, b)
    assert flux_surface(cfg, (p, p)) == 0


def test_stokes_line_equals_surface(draw, particle):
    cfg = wave_config(draw)
    x, a = draw.endpoints()
    fam = ClassicalPath(cfg, particle, a, 1.3)
    P = straight_path(a, x)
    line = flux_line(cfg, fam, P)
    surf = flux_surface(cfg, (P, fam.path_to(x)))
    assert line == pytest.approx(surf, rel=1e-7, abs=1e-10)


def test_flux_surface_requires_shared_endpoints(draw):
    a, b = draw.endpoints()
    with pytest.raises(DomainError):
        flux_surface(ConstantUniform(crossed_field(0.3)), (straight_path(a, b), straight_path(a, 2 * b)))


def test_gauge_transform_kernel(draw, particle):
    E, B = draw.EB()
    x, xp = draw.endpoints()
    K = kernel_constant(constant_from_EB(E, B), particle, x, xp, 1.0)
    same = gauge_transform_kernel(K, 0.7, 0.7, particle.e)
    assert same.amplitude == pytest.approx(K.amplitude, rel=1e-15)
    T = gauge_transform_kernel(K, 0.3, -1.1, particle.e)
    assert abs(T.amplitude) == pytest.approx(abs(K.amplitude), rel=1e-14)
    expect = K.amplitude * np.exp(-1j * particle.e * 0.3) * np.exp(1j * particle.e * -1.1)
    assert T.amplitude == pytest.approx(expect, rel=1e-14)
    back = gauge_transform_kernel(T, -0.3, 1.1, particle.e)
    assert back.amplitude == pytest.approx(K.amplitude, rel=1e-14)
    assert T.gauge.endswith("+phase")


def test_sampled_validation():
    with pytest.raises(DomainError, match=">= 2 points"):
        Sampled(np.zeros((1, 4)), [0.0])
    with pytest.raises(DomainError, match="increase strictly"):
        Sampled(np.zeros((3, 4)), [0.0, 1.0, 1.0])
    p = sampled_path(np.array([[0, 0, 0, 0], [1, 0, 0, 0], [1, 1, 0, 0.0]]), [2.0, 3.0, 5.0])
    assert p.tau == 3.0
    assert np.allclose(p.y(2.0), [1, 0.5, 0, 0])
    assert np.allclose(p.ydot(0.5), [1, 0, 0, 0]) and np.allclose(p.ydot(2.0), [0, 0.5, 0, 0])


def test_fixed_gauge_potential_curl(draw):
    E, B = draw.EB()
    F0 = constant_from_EB(E, B)
    k = principal_null_directions(F0)[0]
    cfg = Combined.build(F0, sinusoidal_profile(k, draw.transverse(k), 0.6, 1.4, 0.1))
    a = draw.rng.normal(size=4)
    A = fixed_gauge_potential(cfg, a)
    x = draw.rng.normal(size=4)
    assert np.abs(curl(A, x, 1e-5) - field_at(cfg, x).cov).max() < 1e-8
    with pytest.raises(TypeError):
        fixed_gauge_potential(object(), a)


def test_line_integral_of_constant_potential(draw):
    c = draw.rng.normal(size=4)
    a, b = draw.endpoints()
    path = sampled_path(np.array([a, 0.5 * (a + b) + 0.3, b]), [0.0, 0.4, 1.0])
    # a constant covariant potential is a pure gradient: only the endpoints matter
    val = line_integral(lambda z: np.broadcast_to(c, np.shape(z)), path)
    assert val == pytest.approx(float(c @ (b - a)), rel=1e-12, abs=1e-14)

import math

import numpy as np
import pytest

import oracles as o
from propkit.errors import DomainError, NullFieldError
from propkit.fields import (
    Combined,
    ConstantUniform,
    FieldTensor,
    ParticleParams,
    PlaneWave,
    align_frame,
    constant_from_EB,
    crossed_field,
    dual,
    field_at,
    gaussian_pulse_profile,
    invariants,
    is_null,
    lightcone_basis,
    linear_profile,
    mixed_field_batch,
    principal_null_directions,
    profile_from_csv,
    secular_amplitudes,
    sinusoidal_profile,
    tabulated_profile,
)

KZ = np.array([1.0, 0, 0, 1])
EX = np.array([0.0, 1, 0, 0])


def test_constant_from_EB_matches_hand_assembly(draw):
    for _ in range(10):
        E, B = draw.EB()
        F = constant_from_EB(E, B)
        assert np.array_equal(F.cov, o.cov_from_EB(E, B))
        assert np.allclose(F.E, E) and np.allclose(F.B, B)


def test_field_tensor_rejects_bad_input():
    with pytest.raises(DomainError):
        FieldTensor(np.zeros((3, 3)))
    with pytest.raises(DomainError):
        constant_from_EB([np.nan, 0, 0], [0, 0, 0])
    with pytest.raises(DomainError):
        constant_from_EB([0, 0], [0, 0, 0])


def test_invariants_direct_formulas(draw):
    for _ in range(10):
        E, B = draw.EB()
        I1, I2 = invariants(constant_from_EB(E, B))
        assert I1 == pytest.approx(2 * (B @ B - E @ E), abs=1e-14)
        assert I2 == pytest.approx(-4 * (E @ B), abs=1e-14)


def test_invariants_are_lorentz_invariant(draw):
    E, B = draw.EB()
    F = constant_from_EB(E, B)
    R = np.eye(4)
    R[1:, 1:] = o.rotation(draw.direction(), 0.8)
    L = R @ o.lorentz_boost(0.6 * draw.direction())
    assert np.allclose(invariants(F.transformed(L)), invariants(F), atol=1e-13)


def test_dual_maps_E_B():
    F = constant_from_EB([1, 2, 3], [4, 5, 6])
    D = dual(F)
    assert np.allclose(D.E, [4, 5, 6]) and np.allclose(D.B, [-1, -2, -3])
    assert np.allclose(dual(D).cov, -F.cov)


def test_is_null_and_secular_amplitudes():
    assert is_null(crossed_field(0.4))
    assert secular_amplitudes(crossed_field(0.4)) == (0.0, 0.0)
    E0, B0 = secular_amplitudes(constant_from_EB([0, 0, 0.3], [0, 0, 0.7]))
    assert E0 == pytest.approx(0.3) and B0 == pytest.approx(-0.7)
    E0, B0 = secular_amplitudes(constant_from_EB([0.5, 0, 0], [0, 0, 0]))
    assert E0 == pytest.approx(0.5) and B0 == 0.0


def test_secular_amplitudes_reproduce_invariants(draw):
    for _ in range(20):
        E, B = draw.EB()
        F = constant_from_EB(E, B)
        E0, B0 = secular_amplitudes(F)
        I1, I2 = invariants(F)
        assert 2 * (B0**2 - E0**2) == pytest.approx(I1, abs=1e-12)
        assert 4 * abs(E0 * B0) == pytest.approx(abs(I2), abs=1e-12)
        assert E0 >= 0 >= B0


def test_lightcone_basis_standard_frame():
    b = lightcone_basis(KZ, EX)
    assert np.allclose(b.kbar, [0.5, 0, 0, -0.5])
    assert np.allclose(b.epsbar, [0, 0, 1, 0])
    assert max(b.residuals().values()) < 1e-15


def test_lightcone_basis_random_and_roundtrip(draw):
    for _ in range(20):
        k = draw.null_k()
        b = lightcone_basis(k, draw.transverse(k))
        assert max(b.residuals().values()) < 1e-12
        v = draw.rng.normal(size=4)
        assert np.allclose(b.assemble(*b.components(v)), v, atol=1e-12)


def test_lightcone_basis_errors():
    with pytest.raises(DomainError, match="not null"):
        lightcone_basis([1, 0, 0, 0.5], EX)
    with pytest.raises(DomainError, match="orthogonal"):
        lightcone_basis(KZ, [0, 0.6, 0, 0.8])
    with pytest.raises(DomainError, match="unit spacelike"):
        lightcone_basis(KZ, [0, 2, 0, 0])


def test_align_frame_identity_for_aligned_field():
    F = constant_from_EB([0, 0, 0.4], [0, 0, -0.3])
    fr = align_frame(F, KZ, EX)
    assert np.allclose(fr.transform, np.eye(4), atol=1e-14)
    assert fr.E0 == pytest.approx(0.4) and fr.B0 == pytest.approx(-0.3)
    fr = align_frame(constant_from_EB([0, 0, 0.5], [0, 0, 0]), KZ, EX)
    assert np.allclose(fr.transform, np.eye(4), atol=1e-14)
    assert fr.E0 == pytest.approx(0.5) and fr.B0 == 0.0


def test_align_frame_random_tensors(draw):
    for _ in range(100):
        E, B = draw.EB()
        F = constant_from_EB(E, B)
        for k in principal_null_directions(F):
            fr = align_frame(F, k)
            L = fr.transform
            assert np.allclose(L.T @ o.G @ L, o.G, atol=1e-10)
            Fa = F.transformed(L)
            scale = F.scale * L[0, 0] ** 2
            assert np.abs(Fa.E[:2]).max() <= 1e-9 * scale and np.abs(Fa.B[:2]).max() <= 1e-9 * scale
            assert np.allclose(invariants(Fa), invariants(F), atol=1e-10 * scale**2)
            E0, B0 = secular_amplitudes(F)
            assert abs(fr.E0) == pytest.approx(E0, rel=1e-10) and fr.B0 == pytest.approx(B0, rel=1e-10)
            assert max(fr.basis.residuals().values()) < 1e-9
        assert align_frame(F, principal_null_directions(F)[0]).E0 >= 0


def test_align_frame_errors(draw):
    with pytest.raises(NullFieldError):
        align_frame(crossed_field(0.3), KZ, EX)
    with pytest.raises(DomainError, match="principal null direction"):
        align_frame(constant_from_EB([0.4, 0, 0], [0, 0, 0.1]), KZ, EX)


def test_field_at_examples():
    F0 = constant_from_EB([0, 0, 0.2], [0, 0, 0.1])
    assert field_at(ConstantUniform(F0), [5, 1, 2, 3]) is F0
    prof = sinusoidal_profile(KZ, EX, 0.5, 2.0)
    x = np.array([0.3, 0.1, 0.2, 0.05])
    F = field_at(PlaneWave.from_profile(prof), x)
    fp = 0.5 * math.cos(2 * o.mdot(KZ, x))
    # F_{mu nu} = (k_mu eps_nu - k_nu eps_mu) f' with lowered k = (1,0,0,-1), eps = (0,-1,0,0)
    assert np.allclose(F.E, [-fp, 0, 0])
    assert np.allclose(F.B, [0, -fp, 0])
    assert is_null(F)
    cfg = Combined.build(F0, prof)
    assert np.allclose(field_at(cfg, x).cov, F0.cov + F.cov)
    assert np.allclose(field_at(cfg, x, frame="aligned").cov, (F0 + F).cov)
    ys = np.array([x, 2 * x])
    batch = mixed_field_batch(cfg, ys)
    assert np.allclose(batch[1], field_at(cfg, 2 * x).mixed)


def test_plane_wave_rejects_bad_geometry():
    with pytest.raises(DomainError, match="future"):
        linear_profile([-1, 0, 0, -1], EX, 1.0)
    with pytest.raises(DomainError, match="transverse"):
        linear_profile(KZ, [0, 0.6, 0, 0.8], 1.0)
    with pytest.raises(DomainError):
        sinusoidal_profile(KZ, EX, 1.0, 0.0)


def test_gaussian_pulse_antiderivative():
    prof = gaussian_pulse_profile(KZ, EX, 0.8, 1.5, 3.0)
    p = np.linspace(-6, 6, 41)
    h = 1e-4
    fd = (prof.f(p + h) - prof.f(p - h)) / (2 * h)
    assert np.abs(fd - prof.fprime(p)).max() < 1e-7
    assert abs(float(prof.f(0.0))) < 1e-15
    # Gaussian integral over the line: E0 w sqrt(2 pi) exp(-omega^2 w^2 / 2)
    total = float(prof.f(1e3) - prof.f(-1e3))
    assert total == pytest.approx(0.8 * 1.5 * math.sqrt(2 * math.pi) * math.exp(-0.5 * 9 * 2.25), abs=1e-13)


def test_tabulated_profile_and_csv(tmp_path):
    phi = np.linspace(-2, 2, 41)
    csv = tmp_path / "wave.csv"
    csv.write_text("phi,fprime\n" + "".join(f"{float(p)!r},{math.cos(p)!r}\n" for p in phi))
    prof = profile_from_csv(KZ, EX, csv)
    q = np.linspace(-1.5, 1.5, 7)
    assert np.abs(prof.fprime(q) - np.cos(q)).max() < 1e-5
    assert np.abs((prof.f(q) - prof.f(-2.0)) - (np.sin(q) - math.sin(-2.0))).max() < 1e-5
    with pytest.raises(DomainError, match="outside its support"):
        prof.fprime(3.0)
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n0,1\n")
    with pytest.raises(DomainError, match="header"):
        profile_from_csv(KZ, EX, bad)
    bad.write_text("phi,fprime\n0,1\n1,oops\n")
    with pytest.raises(DomainError, match="line 3"):
        profile_from_csv(KZ, EX, bad)
    with pytest.raises(DomainError, match="strictly increasing"):
        tabulated_profile(KZ, EX, [0, 1, 1, 2], [0, 0, 0, 0])
    with pytest.raises(DomainError, match="at least 4"):
        tabulated_profile(KZ, EX, [0, 1, 2], [0, 0, 0])


def test_particle_params():
    p = ParticleParams(2.0, -1.0)
    assert p.alpha == 0.25 and p.lam == -0.5
    assert ParticleParams(1.0, 1.0, alpha=3.0).lam == 6.0
    with pytest.raises(DomainError):
        ParticleParams(0.0, 1.0)
    with pytest.raises(DomainError):
        ParticleParams(1.0, 1.0, alpha=-1.0)

import math
import warnings
from types import SimpleNamespace

import numpy as np
import pytest
from scipy.integrate import solve_bvp

import oracles as o
from propkit.errors import DomainError, ResonanceError
from propkit.fields import (
    Combined,
    ConstantUniform,
    FieldTensor,
    PlaneWave,
    constant_from_EB,
    crossed_field,
    linear_profile,
    principal_null_directions,
    sinusoidal_profile,
)
from propkit.trajectories import (
    classical_action,
    eom_residual,
    g_integral,
    path_combined,
    path_constant,
    path_planewave,
    shoot_bvp,
)

KZ = np.array([1.0, 0, 0, 1])
EX = np.array([0.0, 1, 0, 0])


def wave_path(prof, particle, x, xp, tau):
    cfg = PlaneWave.from_profile(prof)
    return cfg, path_planewave(prof, cfg.basis, particle, x, xp, tau)


def combined(draw, amp=None):
    E, B = draw.EB()
    F0 = constant_from_EB(E, B)
    k = principal_null_directions(F0)[0] * draw.rng.uniform(0.5, 2.0)
    prof = sinusoidal_profile(k, draw.transverse(k), amp if amp is not None else draw.amp(), 1.3, 0.4)
    return Combined.build(F0, prof)


def test_path_constant_endpoints_and_eom(draw, particle):
    for _ in range(10):
        E, B = draw.EB()
        F = constant_from_EB(E, B)
        x, xp = draw.endpoints()
        tau = draw.tau()
        path = path_constant(F, particle, x, xp, tau)
        assert np.allclose(path.y(0.0), xp, atol=1e-13) and np.allclose(path.y(tau), x, atol=1e-12)
        assert eom_residual(path, ConstantUniform(F), particle) < 1e-8


def test_free_path_is_straight(draw, particle):
    x, xp = draw.endpoints()
    path = path_constant(FieldTensor.zero(), particle, x, xp, 2.0)
    s = np.linspace(0, 2, 5)
    assert np.allclose(path.y(s), xp + np.outer(s / 2, x - xp), atol=1e-14)


def test_crossed_path_is_cubic(draw, particle):
    x, xp = draw.endpoints()
    tau = 1.7
    path = path_constant(crossed_field(0.6), particle, x, xp, tau)
    s = np.linspace(0, tau, 9)
    y = path.y(s)
    coef = np.polynomial.polynomial.polyfit(s, y, 3)
    assert np.abs(np.polynomial.polynomial.polyval(s, coef).T - y).max() < 1e-12


def test_path_constant_vs_shooting(draw, particle):
    E, B = draw.EB()
    F = constant_from_EB(E, B)
    x, xp = draw.endpoints()
    tau = draw.tau()
    s = np.linspace(0, tau, 7)
    a = path_constant(F, particle, x, xp, tau).y(s)
    b = shoot_bvp(ConstantUniform(F), particle, x, xp, tau).y(s)
    assert np.abs(a - b).max() < 1e-8


def test_path_constant_resonance(particle):
    F = constant_from_EB([0, 0, 0], [0, 0, 1.0])
    tau = 2 * math.pi / abs(particle.lam)
    with pytest.raises(ResonanceError):
        path_constant(F, particle, [1, 1, 0, 0], [0, 0, 0, 0], tau)


def test_shoot_free_velocity(draw, particle):
    x, xp = draw.endpoints()
    path = shoot_bvp(ConstantUniform(FieldTensor.zero()), particle, x, xp, 1.5)
    assert np.allclose(path.diagnostics["initial_velocity"], (x - xp) / 1.5, atol=1e-12)
    assert path.diagnostics["iterations"] == 0


def test_planewave_without_field_is_straight(draw, particle):
    x, xp = draw.endpoints()
    _, path = wave_path(linear_profile(KZ, EX, 0.0), particle, x, xp, 1.2)
    s = np.linspace(0, 1.2, 5)
    assert np.allclose(path.y(s), xp + np.outer(s / 1.2, x - xp), atol=1e-13)


def test_linear_wave_equals_crossed_field(draw, particle):
    prof = linear_profile(KZ, EX, 0.7)
    F = FieldTensor(prof.tensor() * 0.7)
    for _ in range(5):
        x, xp = draw.endpoints()
        tau = draw.tau()
        # the linear profile f(phi) = E0 phi has f(0) = 0 so the path is gauge fixed identically
        _, a = wave_path(prof, particle, x, xp, tau)
        b = path_constant(F, particle, x, xp, tau)
        s = np.linspace(0, tau, 6)
        assert np.abs(a.y(s) - b.y(s)).max() < 1e-10


def bvp_oracle(k, eps, E0, omega, phase, lam, x, xp, tau):
    kl, el = o.G @ k, o.G @ eps
    T = np.outer(kl, el) - np.outer(el, kl)
    M = o.G @ T

    def rhs(s, Y):
        y, v = Y[:4], Y[4:]
        fp = E0 * np.cos(omega * (k @ o.G @ y) + phase)
        return np.vstack([v, lam * fp * (M @ v)])

    def bc(a, b):
        return np.concatenate([a[:4] - xp, b[:4] - x])

    s = np.linspace(0, tau, 60)
    guess = np.vstack([xp[:, None] + np.outer(x - xp, s / tau), np.repeat(((x - xp) / tau)[:, None], 60, 1)])
    sol = solve_bvp(rhs, bc, s, guess, tol=1e-10, max_nodes=100000)
    assert sol.success
    return sol


def test_sinusoidal_wave_vs_bvp_oracle(draw, particle):
    for _ in range(3):
        k = draw.null_k()
        eps = draw.transverse(k)
        x, xp = draw.endpoints()
        tau = draw.tau()
        prof = sinusoidal_profile(k, eps, 0.8, 1.1, 0.3)
        _, path = wave_path(prof, particle, x, xp, tau)
        ref = bvp_oracle(k, eps, 0.8, 1.1, 0.3, particle.lam, x, xp, tau)
        s = np.linspace(0, tau, 11)
        assert np.abs(path.y(s) - ref.sol(s)[:4].T).max() < 1e-7
        assert np.abs(path.ydot(s) - ref.sol(s)[4:].T).max() < 1e-6


def test_planewave_lightlike_endpoints_rejected(particle):
    prof = sinusoidal_profile(KZ, EX, 0.5, 1.0)
    with pytest.raises(DomainError, match="lightlike-degenerate"):
        wave_path(prof, particle, [1.0, 0.3, 0.2, 1.0], [0.0, 0.0, 0.0, 0.0], 1.0)


def test_g_integral_analytic():
    prof = sinusoidal_profile(KZ, EX, 2.0, 1.0)  # f = 2 sin(phi)
    s = np.array([0.0, 0.5, 1.0, 3.0])
    g1 = g_integral(prof, 1.0, 0.0, 1, s)
    g2 = g_integral(prof, 1.0, 0.0, 2, s)
    assert np.allclose(g1, 2 * (1 - np.cos(s)), atol=1e-12)
    assert np.allclose(g2, 2 * s - np.sin(2 * s), atol=1e-12)
    lin = linear_profile(KZ, EX, 1.0)
    assert g_integral(lin, 2.0, 1.0, 1, 1.0) == pytest.approx(2.0, abs=1e-13)
    with pytest.raises(DomainError):
        g_integral(prof, 1.0, 0.0, 3, 1.0)
    with pytest.raises(DomainError):
        g_integral(prof, 1.0, 0.0, 1, -1.0)


def test_combined_reduces_to_constant_and_wave(draw, particle):
    cfg0 = combined(draw, amp=0.0)
    x, xp = draw.endpoints()
    tau = draw.tau()
    s = np.linspace(0, tau, 7)
    a = path_combined(cfg0, particle, x, xp, tau).y(s)
    b = path_constant(cfg0.F0, particle, x, xp, tau).y(s)
    assert np.abs(a - b).max() < 1e-8

    prof = sinusoidal_profile(KZ, EX, 0.6, 1.3, 0.2)
    cfgw = Combined.build(FieldTensor.zero(), prof)
    a = path_combined(cfgw, particle, x, xp, tau).y(s)
    _, pw = wave_path(prof, particle, x, xp, tau)
    assert np.abs(a - pw.y(s)).max() < 1e-8


def test_combined_path_solves_eom(draw, particle):
    for _ in range(3):
        cfg = combined(draw)
        x, xp = draw.endpoints()
        tau = draw.tau()
        path = path_combined(cfg, particle, x, xp, tau)
        assert np.allclose(path.y(tau), x, atol=1e-10) and np.allclose(path.y(0), xp, atol=1e-10)
        assert eom_residual(path, cfg, particle) < 1e-7
        pos, u = path.diagnostics["complex_position"](np.linspace(0, tau, 5))
        assert np.abs(pos.imag).max() == 0.0
        assert np.abs(u).max() < 1e-12


def test_combined_cross_check_agrees(draw, particle):
    cfg = combined(draw)
    x, xp = draw.endpoints()
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        path = path_combined(cfg, particle, x, xp, 1.3, cross_check=True)
    assert path.diagnostics["literal_discrepancy"] < 1e-8


def test_combined_turning_point(draw, particle):
    cfg = combined(draw)
    xp = np.zeros(4)
    x = cfg.aligned.eps * 0.7  # k.(x - x') = 0
    with pytest.raises(DomainError, match="turning point"):
        path_combined(cfg, particle, x, xp, 1.0)


def test_eom_residual_detects_perturbation(draw, particle):
    E, B = draw.EB()
    F = constant_from_EB(E, B)
    cfg = ConstantUniform(F)
    x, xp = draw.endpoints()
    tau = 1.5
    good = path_constant(F, particle, x, xp, tau)
    res = []
    for delta in (1e-2, 1e-3):
        bump = np.array([0.0, 1, 0, 0]) * delta
        p = SimpleNamespace(
            tau=tau,
            y=lambda s, d=bump: good.y(s) + np.multiply.outer(np.sin(math.pi * np.asarray(s) / tau), d),
            ydot=lambda s, d=bump: good.ydot(s) + np.multiply.outer(math.pi / tau * np.cos(math.pi * np.asarray(s) / tau), d),
        )
        res.append(eom_residual(p, cfg, particle))
    assert res[0] > 1e-3
    assert res[0] / res[1] == pytest.approx(10.0, rel=0.05)
    with pytest.raises(DomainError):
        eom_residual(good, cfg, particle, n_samples=4)


def test_velocity_is_derivative_of_position(draw, particle):
    cfg = combined(draw)
    x, xp = draw.endpoints()
    tau = 1.1
    for path in (path_combined(cfg, particle, x, xp, tau), wave_path(cfg.profile, particle, x, xp, tau)[1]):
        s = np.linspace(0.1, 1.0, 5)
        h = 1e-5
        fd = (path.y(s + h) - path.y(s - h)) / (2 * h)
        assert np.abs(fd - path.ydot(s)).max() < 1e-8


def test_action_free_formula(draw, particle):
    x, xp = draw.endpoints()
    tau = draw.tau()
    S = classical_action(path_constant(FieldTensor.zero(), particle, x, xp, tau), particle)
    D = x - xp
    assert S.mass_term == pytest.approx(particle.m**2 * particle.alpha * tau, rel=1e-15)
    assert S.kinetic_term == pytest.approx(o.mdot(D, D) / (4 * particle.alpha * tau), rel=1e-12, abs=1e-14)
    assert S.total == S.mass_term + S.kinetic_term


def test_action_crossed_closed_form(draw, particle):
    for _ in range(5):
        Fc = FieldTensor(draw.null_field())
        x, xp = draw.endpoints()
        tau = draw.tau()
        D = x - xp
        F2 = Fc.cov @ o.G @ Fc.cov
        expect = o.mdot(D, D) / (4 * o.ALPHA * tau) - o.LAM**2 * tau / (48 * o.ALPHA) * float(D @ F2 @ D)
        S = classical_action(path_constant(Fc, particle, x, xp, tau), particle)
        assert S.kinetic_term == pytest.approx(expect, rel=1e-10, abs=1e-12)


def test_action_lightcone_form_matches_direct(draw, particle):
    cfg = combined(draw)
    x, xp = draw.endpoints()
    path = path_combined(cfg, particle, x, xp, 1.4)
    a = classical_action(path, particle)
    b = classical_action(path, particle, form="lightcone")
    assert abs(a.total - b.total) <= 1e-10 * max(1.0, abs(a.total))
    with pytest.raises(DomainError):
        classical_action(path, particle, form="other")


def test_action_is_additive_along_path(draw, particle):
    # splitting a classical path at its midpoint gives two classical sub-paths
    E, B = draw.EB()
    F = constant_from_EB(E, B)
    x, xp = draw.endpoints()
    tau = 2.0
    path = path_constant(F, particle, x, xp, tau)
    mid = path.y(1.0)
    S = classical_action(path, particle).total
    S1 = classical_action(path_constant(F, particle, mid, xp, 1.0), particle).total
    S2 = classical_action(path_constant(F, particle, x, mid, 1.0), particle).total
    assert S1 + S2 == pytest.approx(S, rel=1e-10)

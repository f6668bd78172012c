"""Classical worldlines of the effective Lorentz equation ``y'' = lam F(y) y'``.

Closed forms are provided for the constant field, the plane wave and the
plane wave on top of a parallel constant field.  A shooting solver for the
boundary-value problem serves as an independent oracle for all of them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad, solve_ivp

from .errors import ConvergenceError, DomainError, ResonanceError
from .fields import Combined, ConstantUniform, FieldConfig, LightConeBasis, ParticleParams, PlaneWave, mixed_field_batch
from .minkowski import check_resonance, dot, exprel, four_vector, mixed_tensor, phi1
from .quadrature import default_tolerance, integrate, integrate_batch

SQRT2 = math.sqrt(2.0)


def _sigma_array(sigma):
    s = np.asarray(sigma, dtype=float)
    return s, s.ndim == 0


@dataclass(frozen=True)
class WorldlinePath:
    """A path ``y(sigma)`` on ``[0, tau]`` from ``x_start`` to ``x_end``.

    ``position`` and ``velocity`` map an array of parameters of shape ``(n,)``
    to points of shape ``(n, 4)``.  Light-cone paths also carry their basis and
    a ``lightcone`` evaluator returning the derivative projections
    ``(k.y', kbar.y', eps.y', epsbar.y')`` computed from the closed form.
    """

    tau: float
    x_start: np.ndarray
    x_end: np.ndarray
    position: Callable
    velocity: Callable
    provenance: str
    basis: LightConeBasis | None = None
    lightcone: Callable | None = None
    diagnostics: dict = field(default_factory=dict)

    def _eval(self, fn, sigma):
        s, scalar = _sigma_array(sigma)
        flat = s.reshape(-1)
        if np.any(flat < -1e-12 * self.tau) or np.any(flat > self.tau * (1 + 1e-12)):
            raise DomainError(f"path parameter outside [0, {self.tau}]")
        out = np.asarray(fn(np.clip(flat, 0.0, self.tau)))
        return out[0] if scalar else out.reshape(s.shape + out.shape[1:])

    def y(self, sigma) -> np.ndarray:
        return self._eval(self.position, sigma)

    def ydot(self, sigma) -> np.ndarray:
        return self._eval(self.velocity, sigma)

    def lightcone_velocity(self, sigma) -> np.ndarray:
        if self.lightcone is None:
            if self.basis is None:
                raise DomainError("path carries no light-cone basis")
            v = self.ydot(sigma)
            b = self.basis
            return np.stack([dot(b.k, v), dot(b.kbar, v), dot(b.eps, v), dot(b.epsbar, v)], axis=-1)
        return self._eval(self.lightcone, sigma)


@dataclass(frozen=True)
class ActionValue:
    """Classical action split as ``total = mass_term + kinetic_term``."""

    total: float
    mass_term: float
    kinetic_term: float
    method: str = "direct"

    @classmethod
    def from_parts(cls, mass_term: float, kinetic_term: float, method: str = "direct") -> "ActionValue":
        return cls(mass_term + kinetic_term, mass_term, kinetic_term, method)


def _endpoints(x, xp, tau):
    x, xp = four_vector(x), four_vector(xp)
    if not (np.isfinite(tau) and tau > 0):
        raise DomainError(f"tau must be positive, got {tau}")
    return x, xp, float(tau)


# ---------------------------------------------------------------------------
# constant field


def path_constant(F, p: ParticleParams, x, xp, tau: float) -> WorldlinePath:
    """Closed-form path ``y = x' + sigma phi1(lam F sigma) W`` in a constant field.

    ``W = [tau phi1(lam F tau)]^{-1} (x - x')`` is the initial velocity and
    ``y'(sigma) = exp(lam F sigma) W``.
    """
    x, xp, tau = _endpoints(x, xp, tau)
    Fm = mixed_tensor(F)
    lam = p.lam
    denom = tau * phi1(lam * Fm * tau)
    check_resonance(denom, lam * Fm * tau, 2j * math.pi, tau)
    W = np.linalg.solve(denom, x - xp)

    def position(s):
        out = np.empty((s.size, 4))
        for i, si in enumerate(s):
            out[i] = xp + si * (phi1(lam * Fm * si) @ W)
        return out

    def velocity(s):
        out = np.empty((s.size, 4))
        for i, si in enumerate(s):
            X = lam * Fm * si
            out[i] = W + X @ (phi1(X) @ W)
        return out

    # the endpoints are stored exactly; evaluators reproduce them to rounding
    return WorldlinePath(tau, xp, x, position, velocity, "closed-form-constant",
                         diagnostics={"initial_velocity": W})


# ---------------------------------------------------------------------------
# plane wave


def _integrand_scale(fn, lo, hi) -> float:
    probe = np.linspace(lo, hi, 33)
    return float(np.max(np.abs(fn(probe)))) if hi != lo else 0.0


def g_integral(profile, kx_slope: float, kx_offset: float, n: int, sigma, tol: float = 1e-10):
    """``g_n(sigma) = int_0^sigma f(kx_offset + kx_slope s)^n ds`` for ``n`` in ``{1, 2}``.

    ``sigma`` may be an array; all integrals are refined together.
    """
    if n not in (1, 2):
        raise DomainError(f"g_integral supports n = 1 or 2, got {n}")
    s, scalar = _sigma_array(sigma)
    if np.any(s < 0):
        raise DomainError("sigma must be non-negative")
    flat = s.reshape(-1)

    def fn(t, _i=None):
        return profile.f(kx_offset + kx_slope * t) ** n

    smax = float(flat.max()) if flat.size else 0.0
    scale = _integrand_scale(fn, 0.0, smax) * max(smax, 1e-300)
    res = integrate_batch(fn, np.zeros_like(flat), flat, rtol=tol, atol=1e-3 * tol * scale)
    out = res.value.reshape(s.shape)
    return float(out) if scalar else out


def _lightlike_check(kD: float, D: np.ndarray, what: str):
    if abs(kD) <= 1e-12 * max(float(np.linalg.norm(D)), 1e-300):
        raise DomainError(f"lightlike-degenerate endpoints: k.(x - x') = {kD:.3e}; {what}")


def path_planewave(profile, basis: LightConeBasis, p: ParticleParams, x, xp, tau: float,
                   tol: float | None = None) -> WorldlinePath:
    """Closed-form path in a plane wave, assembled from its light-cone components."""
    x, xp, tau = _endpoints(x, xp, tau)
    tol = default_tolerance() if tol is None else tol
    lam = p.lam
    D = x - xp
    kD = float(dot(basis.k, D))
    _lightlike_check(kD, D, "the kbar component of the plane-wave path divides by it")
    kxp = float(dot(basis.k, xp))
    profile.check_support([kxp, kxp + kD])
    slope = kD / tau
    eD, ebD, kbD = (float(dot(v, D)) for v in (basis.eps, basis.epsbar, basis.kbar))
    exp_, ebxp, kbxp = (float(dot(v, xp)) for v in (basis.eps, basis.epsbar, basis.kbar))
    g1t = g_integral(profile, slope, kxp, 1, tau, tol)
    g2t = g_integral(profile, slope, kxp, 2, tau, tol)
    shift = eD - lam * g1t

    def comps(s):
        g1 = g_integral(profile, slope, kxp, 1, s, tol)
        g2 = g_integral(profile, slope, kxp, 2, s, tol)
        ky = kxp + slope * s
        ey = exp_ + s * eD / tau + lam * (tau * g1 - s * g1t) / tau
        eby = ebxp + s * ebD / tau
        kby = (kbxp + s * kbD / tau + lam * shift * (tau * g1 - s * g1t) / (kD * tau)
               + lam**2 * (tau * g2 - s * g2t) / (2.0 * kD))
        return ky, kby, ey, eby

    def dcomps(s):
        f = profile.f(kxp + slope * s)
        kyd = np.full_like(s, slope)
        eyd = eD / tau + lam * (f - g1t / tau)
        ebyd = np.full_like(s, ebD / tau)
        kbyd = kbD / tau + lam * shift * (tau * f - g1t) / (kD * tau) + lam**2 * (tau * f * f - g2t) / (2.0 * kD)
        return kyd, kbyd, eyd, ebyd

    def position(s):
        return basis.assemble(*comps(s))

    def velocity(s):
        return basis.assemble(*dcomps(s))

    def lightcone(s):
        return np.stack(dcomps(s), axis=-1)

    return WorldlinePath(tau, xp, x, position, velocity, "closed-form-planewave", basis, lightcone,
                         {"g1_tau": g1t, "g2_tau": g2t})


# ---------------------------------------------------------------------------
# plane wave combined with a parallel constant field
#
# Each light-cone component obeys u'' = c u' + lam w s(sigma) with u(0), u(tau)
# fixed, solved by variation of constants in terms of exprel to stay regular
# when E0 or B0 vanish.


class _Driven:
    """Two-point solution of ``u'' = c u' + lam w s`` for several ``c`` at once."""

    def __init__(self, c, w, lam, u0, du, tau, source, tol, atol):
        self.c = np.asarray(c, dtype=complex)
        self.lw = lam * np.asarray(w, dtype=complex)
        self.source = source
        self.tol, self.atol = tol, atol
        self.u0 = np.asarray(u0, dtype=complex)
        den = tau * exprel(self.c * tau)
        if np.any(np.abs(den) < 1e-9 * tau):
            raise ResonanceError(
                f"combined-field resonance: exp(c tau) = 1 for c = {self.c} at tau = {tau}",
                eigenvalue=complex(self.c[np.argmin(np.abs(den))]),
                critical_tau=tau,
            )
        self.den = den
        I2 = self._integrals(np.array([tau]))[0][0] if source is not None else 0.0
        self.C = (np.asarray(du, dtype=complex) - self.lw * I2) / den

    def _integrals(self, s):
        """``(int (s-r) E(c(s-r)) src dr, int e^{c(s-r)} src dr)`` over ``[0, s]``."""
        c = self.c

        def fn(r, idx):
            lag = s[idx] - r
            src = self.source(r)[..., None]
            z = c * lag[..., None]
            return np.concatenate([lag[..., None] * exprel(z) * src, np.exp(z) * src], axis=-1)

        res = integrate_batch(fn, np.zeros_like(s), s, rtol=self.tol, atol=self.atol)
        nc = c.size
        return res.value[:, :nc], res.value[:, nc:]

    def evaluate(self, s, derivative=True):
        zs = self.c * s[:, None]
        u = self.u0 + self.C * s[:, None] * exprel(zs)
        du = self.C * np.exp(zs)
        if self.source is not None and s.size:
            I2, I1 = self._integrals(s)
            u = u + self.lw * I2
            du = du + self.lw * I1
        return u, du


def path_combined(config: Combined, p: ParticleParams, x, xp, tau: float, tol: float | None = None,
                  cross_check: bool = False) -> WorldlinePath:
    """Closed-form path for a plane wave travelling along a parallel constant field.

    The wave-phase component is exponential in ``sigma``, the ``eps_pm``
    components need one quadrature over the wave derivative and the ``kbar``
    component a nested one.  With ``cross_check=True`` the light-cone
    components are also evaluated from the literal two-point formulas (see
    :func:`combined_literal_components`); disagreement is warned about and
    both values are kept in ``diagnostics``.
    """
    if not isinstance(config, Combined):
        raise DomainError("path_combined needs a Combined configuration")
    x, xp, tau = _endpoints(x, xp, tau)
    tol = default_tolerance() if tol is None else tol
    b, prof, lam = config.aligned, config.profile, p.lam
    E0, B0 = config.E0, config.B0
    D = x - xp
    kD = float(dot(b.k, D))
    dscale = 1.0 + float(np.linalg.norm(D))
    if abs(kD) <= 1e-12 * dscale:
        raise DomainError(
            f"turning point, formula domain violated: k.y' vanishes along the path (k.(x - x') = {kD:.3e})"
        )
    ck = -lam * E0
    kxp = float(dot(b.k, xp))
    kden = tau * exprel(ck * tau)

    def ky(s):
        return kxp + kD * s * exprel(ck * s) / kden

    def kyd(s):
        return kD * np.exp(ck * s) / kden

    prof.check_support([kxp, kxp + kD])

    def fdot(r):
        return prof.fprime(ky(r)) * kyd(r)

    atol = 1e-2 * tol * dscale / (1.0 + abs(lam))
    ep, em = b.eps_plus, b.eps_minus
    pm = _Driven([-1j * lam * B0, 1j * lam * B0], [1 / SQRT2, 1 / SQRT2], lam,
                 [dot(ep, xp), dot(em, xp)], [dot(ep, D), dot(em, D)], tau, fdot, tol / 10, atol / 10)

    def eps_vel(r):
        _, du = pm.evaluate(np.asarray(r, dtype=float).reshape(-1))
        return ((du[:, 0] + du[:, 1]) / SQRT2).real.reshape(np.shape(r))

    def kb_source(r):
        return eps_vel(r) * prof.fprime(ky(r))

    kb = _Driven([lam * E0], [1.0], lam, [dot(b.kbar, xp)], [dot(b.kbar, D)], tau, kb_source, tol, atol)

    def comps(s):
        u, du = pm.evaluate(s)
        v, dv = kb.evaluate(s)
        ey = (u[:, 0] + u[:, 1]) / SQRT2
        eby = (u[:, 0] - u[:, 1]) / (1j * SQRT2)
        eyd = (du[:, 0] + du[:, 1]) / SQRT2
        ebyd = (du[:, 0] - du[:, 1]) / (1j * SQRT2)
        return (ky(s), v[:, 0], ey, eby), (kyd(s), dv[:, 0], eyd, ebyd), u

    def _real(vals, what):
        arr = np.stack([np.asarray(v, dtype=complex) for v in vals], axis=-1)
        imag = float(np.max(np.abs(arr.imag))) if arr.size else 0.0
        if imag > 1e-8 * dscale * (1 + abs(lam)):
            raise ConvergenceError(f"combined-field {what} has imaginary part {imag:.3e}", residual=imag)
        return arr.real

    def position(s):
        pos, _, _ = comps(s)
        r = _real(pos, "position")
        return b.assemble(r[:, 0], r[:, 1], r[:, 2], r[:, 3])

    def velocity(s):
        _, vel, _ = comps(s)
        r = _real(vel, "velocity")
        return b.assemble(r[:, 0], r[:, 1], r[:, 2], r[:, 3])

    def lightcone(s):
        _, vel, _ = comps(s)
        return _real(vel, "velocity")

    def complex_position(s):
        """Cartesian position before the imaginary part is dropped, and ``eps_plus.y - conj(eps_minus.y)``."""
        pos, _, u = comps(np.atleast_1d(np.asarray(s, dtype=float)))
        return b.assemble(*pos), u[:, 0] - np.conj(u[:, 1])

    diag = {"E0": E0, "B0": B0, "C_eps_pm": pm.C, "C_kbar": kb.C, "complex_position": complex_position}
    path = WorldlinePath(tau, xp, x, position, velocity, "closed-form-combined", b, lightcone, diag)
    if cross_check:
        probe = tau * np.array([0.25, 0.5, 0.75])
        lit = combined_literal_components(config, p, x, xp, tau, probe, eps_velocity=eps_vel)
        pos, _, u = comps(probe)
        mine = {"k": pos[0], "eps_plus": u[:, 0], "eps_minus": u[:, 1], "kbar": pos[1]}
        worst = max(float(np.max(np.abs(mine[key] - lit[key]))) for key in lit)
        diag["literal_components"] = lit
        diag["closed_form_components"] = mine
        diag["literal_discrepancy"] = worst
        if worst > 1e-6 * dscale:
            warnings.warn(
                f"literal two-point formulas disagree with the variation-of-constants form by {worst:.3e}",
                RuntimeWarning,
                stacklevel=2,
            )
    return path


def combined_literal_components(config: Combined, p: ParticleParams, x, xp, tau: float, sigma,
                                eps_velocity: Callable | None = None) -> dict:
    """Light-cone components from the published two-point formulas, by direct quadrature.

    Needs ``E0 != 0`` and ``B0 != 0`` and ``0 < sigma < tau`` since those
    formulas divide by the amplitudes and by ``1 - e^{i lam B0 sigma}``.
    ``eps_velocity`` supplies ``eps.y'`` for the ``kbar`` integrand; by default
    it is taken from :func:`path_combined`.
    """
    x, xp, tau = _endpoints(x, xp, tau)
    E0, B0, lam = config.E0, config.B0, p.lam
    if E0 == 0 or B0 == 0:
        raise DomainError("the literal formulas need nonzero E0 and B0")
    b, prof = config.aligned, config.profile
    D = x - xp
    kD, kxp = float(dot(b.k, D)), float(dot(b.k, xp))
    if eps_velocity is None:
        path = path_combined(config, p, x, xp, tau)

        def eps_velocity(r):
            return path.lightcone_velocity(np.atleast_1d(r))[:, 2].reshape(np.shape(r))

    def ky(s):
        return (np.expm1(-lam * E0 * s) / np.expm1(-lam * E0 * tau)) * kD + kxp

    def kyd(s):
        return -lam * E0 * np.exp(-lam * E0 * s) / np.expm1(-lam * E0 * tau) * kD

    def fdot(r):
        return prof.fprime(ky(r)) * kyd(r)

    def cquad(fn, a, c):
        re = quad(lambda r: fn(r).real, a, c, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        im = quad(lambda r: fn(r).imag, a, c, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        return re + 1j * im

    out = {"k": [], "eps_plus": [], "eps_minus": [], "kbar": []}
    w = lam * B0
    for s in np.atleast_1d(np.asarray(sigma, dtype=float)):
        if not 0 < s < tau:
            raise DomainError("literal formulas are evaluated strictly inside (0, tau)")
        out["k"].append(ky(s))
        for key, sgn, vec in (("eps_plus", 1, b.eps_plus), ("eps_minus", -1, b.eps_minus)):
            a1 = cquad(lambda r: (1 - np.exp(1j * sgn * w * r)) * fdot(r), 0.0, s)
            a2 = cquad(lambda r: (1 - np.exp(1j * sgn * w * (r - tau))) * fdot(r), tau, s)
            ratio = (np.exp(1j * sgn * w * (s - tau)) - 1) / (1 - np.exp(1j * sgn * w * s))
            pref = np.expm1(-1j * sgn * w * s) / np.expm1(-1j * sgn * w * tau)
            val = pref * (dot(vec, D) - sgn * 1j / (SQRT2 * B0) * (ratio * a1 + a2)) + dot(vec, xp)
            out[key].append(val)

        def src(r):
            return eps_velocity(r) * prof.fprime(ky(r))

        v = lam * E0
        b1 = quad(lambda r: (1 - math.exp(-v * r)) * src(r), 0.0, s, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        b2 = quad(lambda r: (1 - math.exp(-v * (r - tau))) * src(r), tau, s, epsabs=1e-13, epsrel=1e-12,
                  limit=200)[0]
        ratio = (math.exp(v * tau) - math.exp(v * s)) / math.expm1(v * s)
        pref = math.expm1(v * s) / math.expm1(v * tau)
        out["kbar"].append(pref * (dot(b.kbar, D) - (ratio * b1 + b2) / E0) + dot(b.kbar, xp))
    return {key: np.array(val) for key, val in out.items()}


# ---------------------------------------------------------------------------
# shooting oracle


def _rhs_factory(config: FieldConfig, lam: float):
    def rhs(_s, state):
        y, v = state[:4], state[4:]
        Fm = mixed_field_batch(config, y)
        return np.concatenate([v, lam * (Fm @ v)])

    return rhs


def shoot_bvp(config: FieldConfig, p: ParticleParams, x, xp, tau: float, tol: float = 1e-9,
              max_iter: int = 50, rtol: float = 1e-12) -> WorldlinePath:
    """Solve ``y'' = lam F(y) y'`` with ``y(0) = x'``, ``y(tau) = x`` by Newton shooting.

    The initial velocity is corrected with a central-difference Jacobian and
    damped steps; the integrator is DOP853.  For a constant field the endpoint
    map is affine, so the first Newton step is already exact.
    """
    x, xp, tau = _endpoints(x, xp, tau)
    rhs = _rhs_factory(config, p.lam)
    D = x - xp
    scale = 1.0 + float(np.linalg.norm(D))

    def flow(v0, dense=False):
        sol = solve_ivp(rhs, (0.0, tau), np.concatenate([xp, v0]), method="DOP853", rtol=rtol,
                        atol=rtol * scale * 1e-2, dense_output=dense)
        if sol.status != 0:
            raise ConvergenceError(f"trajectory integration failed: {sol.message}")
        return sol

    def residual(v0):
        return flow(v0).y[:4, -1] - x

    v0 = D / tau
    r = residual(v0)
    best = float(np.linalg.norm(r))
    it = 0
    while best >= tol and it < max_iter:
        it += 1
        h = 1e-6 * (1.0 + float(np.linalg.norm(v0)))
        J = np.empty((4, 4))
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            J[:, j] = (residual(v0 + e) - residual(v0 - e)) / (2 * h)
        step = np.linalg.solve(J, -r)
        t = 1.0
        for _ in range(20):
            trial = v0 + t * step
            rt = residual(trial)
            if np.linalg.norm(rt) < best or t < 1e-4:
                break
            t *= 0.5
        v0, r = trial, rt
        best = float(np.linalg.norm(r))
    if best >= tol:
        raise ConvergenceError(f"shooting did not converge in {it} iterations (residual {best:.3e})",
                               estimate=v0, residual=best)
    sol = flow(v0, dense=True)

    def position(s):
        return sol.sol(s)[:4].T

    def velocity(s):
        return sol.sol(s)[4:].T

    return WorldlinePath(tau, xp, x, position, velocity, "shooting",
                         getattr(config, "basis", None) or getattr(config, "aligned", None),
                         diagnostics={"iterations": it, "residual": best, "initial_velocity": v0})


# ---------------------------------------------------------------------------
# diagnostics and the action


def chebyshev_points(tau: float, n: int) -> np.ndarray:
    j = np.arange(n)
    return 0.5 * tau * (1.0 - np.cos(math.pi * (j + 0.5) / n))


def eom_residual(path: WorldlinePath, config: FieldConfig, p: ParticleParams, n_samples: int = 32) -> float:
    """Max relative violation of the equation of motion at Chebyshev points.

    ``y''`` is a five-point central difference of the velocity evaluator, with
    the step shrunk near the ends so the stencil stays inside ``[0, tau]``.
    """
    if n_samples < 8:
        raise DomainError("eom_residual needs at least 8 samples")
    tau = path.tau
    s = chebyshev_points(tau, n_samples)
    h = np.minimum(1e-3 * tau, np.minimum(s, tau - s) / 2.5)
    stencil = np.concatenate([s - 2 * h, s - h, s + h, s + 2 * h, s])
    v = path.ydot(stencil).reshape(5, n_samples, 4)
    acc = (v[0] - 8 * v[1] + 8 * v[2] - v[3]) / (12 * h[:, None])
    y = path.y(s)
    Fm = mixed_field_batch(config, y)
    force = p.lam * np.einsum("nij,nj->ni", Fm, v[4])
    err = np.linalg.norm(acc - force, axis=1) / (1.0 + np.linalg.norm(force, axis=1))
    return float(err.max())


def classical_action(path: WorldlinePath, p: ParticleParams, tol: float = 1e-10, form: str = "direct") -> ActionValue:
    """``S = m^2 alpha tau + int_0^tau y'.y' / (4 alpha) dsigma``.

    ``form="lightcone"`` uses ``2 (k.y')(kbar.y') - (eps.y')^2 - (epsbar.y')^2``
    from the closed-form component derivatives instead of the Cartesian dot.
    """
    mass = p.m**2 * p.alpha * path.tau
    if form == "direct":
        def integrand(s):
            v = path.ydot(s.reshape(-1)).reshape(s.shape + (4,))
            return dot(v, v)
    elif form == "lightcone":
        def integrand(s):
            c = path.lightcone_velocity(s.reshape(-1)).reshape(s.shape + (4,))
            return 2 * c[..., 0] * c[..., 1] - c[..., 2] ** 2 - c[..., 3] ** 2
    else:
        raise DomainError(f"unknown action form {form!r}")
    D = path.x_end - path.x_start
    scale = abs(float(dot(D, D))) / path.tau + 1e-300
    val, _ = integrate(integrand, 0.0, path.tau, rtol=tol, atol=1e-2 * tol * scale)
    return ActionValue.from_parts(mass, float(val) / (4.0 * p.alpha), form)

"""Path-dependent vector potentials, fluxes between paths and kernel gauge changes.

A gauge is fixed by a family of paths ending at every point ``x``.  The
potential of that family is

    A_mu(x) = int_0^1 F_{nu lam}(y) (dy^nu/ds) (dy^lam/dx^mu) ds,

which for straight lines from a fixed anchor is the Fock-Schwinger gauge and
for classical paths at fixed ``tau`` is the classical-path gauge.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import DomainError
from .fields import Combined, ConstantUniform, FieldConfig, ParticleParams, PlaneWave, mixed_field_batch
from .minkowski import METRIC, dot, four_vector, phi1
from .quadrature import integrate, integrate_batch
from .trajectories import (
    WorldlinePath,
    eom_residual,
    path_combined,
    path_constant,
    path_planewave,
)


def _cov_field_batch(config: FieldConfig, y) -> np.ndarray:
    return METRIC @ mixed_field_batch(config, y)


@dataclass(frozen=True)
class ClassicalPath:
    """Gauge family of classical paths of fixed ``tau`` from ``anchor`` to the query point.

    ``generator`` defaults to the closed form matching ``config``; for a
    constant field the endpoint Jacobian ``R(sigma)`` is used analytically.
    """

    config: FieldConfig
    particle: ParticleParams
    anchor: np.ndarray
    tau: float
    generator: Callable | None = None
    tag = "classical"

    def path_to(self, x) -> WorldlinePath:
        if self.generator is not None:
            return self.generator(x)
        c, p = self.config, self.particle
        if isinstance(c, ConstantUniform):
            return path_constant(c.F0, p, x, self.anchor, self.tau)
        if isinstance(c, PlaneWave):
            return path_planewave(c.profile, c.basis, p, x, self.anchor, self.tau)
        if isinstance(c, Combined):
            return path_combined(c, p, x, self.anchor, self.tau)
        raise TypeError(f"unknown configuration {c!r}")

    def constant_jacobian(self, sigma) -> np.ndarray | None:
        """``dy/dx = R(sigma)`` for a constant field, else ``None``."""
        if self.generator is not None or not isinstance(self.config, ConstantUniform):
            return None
        Fm = self.config.F0.mixed
        lam, tau = self.particle.lam, self.tau
        denom_inv = np.linalg.inv(tau * phi1(lam * Fm * tau))
        return np.array([s * phi1(lam * Fm * s) @ denom_inv for s in np.atleast_1d(sigma)])


@dataclass(frozen=True)
class StraightLine:
    """Fock-Schwinger family ``y(s) = s x + (1 - s) anchor``."""

    anchor: np.ndarray
    tag = "straight"


@dataclass(frozen=True)
class Sampled:
    """Polygonal path through ``points`` at increasing ``params``.

    As a gauge family the last vertex is dragged to the query point with
    ``y(s; x) = P(s) + s (x - P(1))`` in the normalized parameter ``s``.
    """

    points: np.ndarray
    params: np.ndarray
    tag = "sampled"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        par = np.asarray(self.params, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 4 or pts.shape[0] < 2 or par.shape != (pts.shape[0],):
            raise DomainError("Sampled path needs >= 2 points of shape (n, 4) with matching parameters")
        if np.any(np.diff(par) <= 0):
            raise DomainError("Sampled path parameters must increase strictly")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "params", par)

    @property
    def anchor(self) -> np.ndarray:
        return self.points[0]


GaugePath = Union[ClassicalPath, StraightLine, Sampled]


@dataclass(frozen=True)
class PotentialSample:
    x: np.ndarray
    A: np.ndarray
    gauge: str


def straight_path(xp, x) -> WorldlinePath:
    """The segment from ``xp`` to ``x`` as a path on ``[0, 1]``."""
    x, xp = four_vector(x), four_vector(xp)
    D = x - xp
    return WorldlinePath(1.0, xp, x, lambda s: xp + s[:, None] * D,
                         lambda s: np.broadcast_to(D, (s.size, 4)).copy(), "straight-line")


def sampled_path(points, params) -> WorldlinePath:
    """Piecewise-linear path through ``points``; the parameter is shifted to start at 0."""
    sp = Sampled(points, params)
    t = sp.params - sp.params[0]
    pts = sp.points

    def position(s):
        return np.stack([np.interp(s, t, pts[:, j]) for j in range(4)], axis=-1)

    slopes = np.diff(pts, axis=0) / np.diff(t)[:, None]

    def velocity(s):
        idx = np.clip(np.searchsorted(t, s, side="right") - 1, 0, len(slopes) - 1)
        return slopes[idx]

    return WorldlinePath(float(t[-1]), pts[0].copy(), pts[-1].copy(), position, velocity, "sampled",
                         diagnostics={"knots": t})


def _knots(path: WorldlinePath) -> np.ndarray:
    k = path.diagnostics.get("knots") if path.diagnostics else None
    return np.asarray(k) if k is not None else np.array([0.0, path.tau])


# ---------------------------------------------------------------------------
# potentials


def _jacobian_fd(family: ClassicalPath, x: np.ndarray, h: float):
    """Paths at ``x +- h e_mu`` for central differences of ``dy/dx``."""
    plus, minus = [], []
    for mu in range(4):
        e = np.zeros(4)
        e[mu] = h
        plus.append(family.path_to(x + e))
        minus.append(family.path_to(x - e))
    return plus, minus


def _family_integrand(config, gpath: GaugePath, x: np.ndarray):
    """Integrand over ``sigma`` in ``[0, T]`` and ``T`` for the potential at ``x``."""
    if isinstance(gpath, StraightLine):
        D = x - four_vector(gpath.anchor)

        def fn(s):
            y = gpath.anchor + s[..., None] * D
            F = _cov_field_batch(config, y)
            # F_{nu lam} D^nu s delta^lam_mu
            return s[..., None] * np.einsum("...nm,n->...m", F, D)

        return fn, 1.0
    if isinstance(gpath, Sampled):
        path = sampled_path(gpath.points, gpath.params)
        T = path.tau
        shift = x - gpath.points[-1]

        def fn(s):
            flat = s.reshape(-1)
            u = flat / T
            y = path.y(flat) + u[:, None] * shift
            v = path.ydot(flat) + shift / T
            F = _cov_field_batch(config, y)
            out = u[:, None] * np.einsum("knm,kn->km", F, v)
            return out.reshape(s.shape + (4,))

        return fn, T
    if isinstance(gpath, ClassicalPath):
        base = gpath.path_to(x)
        if gpath.constant_jacobian(0.0) is not None:
            F = gpath.config.F0.cov

            def fn(s):
                flat = s.reshape(-1)
                v = base.ydot(flat)
                R = gpath.constant_jacobian(flat)
                out = np.einsum("nl,kn,klm->km", F, v, R)
                return out.reshape(s.shape + (4,))

            return fn, gpath.tau
        h = 1e-5 * (1.0 + float(np.linalg.norm(x)))
        plus, minus = _jacobian_fd(gpath, x, h)

        def fn(s):
            flat = s.reshape(-1)
            y = base.y(flat)
            v = base.ydot(flat)
            J = np.stack([(pp.y(flat) - mm.y(flat)) / (2 * h) for pp, mm in zip(plus, minus)], axis=-1)
            F = _cov_field_batch(config, y)
            out = np.einsum("knl,kn,klm->km", F, v, J)
            return out.reshape(s.shape + (4,))

        return fn, gpath.tau
    raise TypeError(f"unknown gauge path {gpath!r}")


def potential_from_path(config: FieldConfig, gpath: GaugePath, x, tol: float = 1e-10) -> np.ndarray:
    """Covariant potential ``A_mu(x)`` generated by the path family ``gpath``."""
    x = four_vector(x)
    fn, T = _family_integrand(config, gpath, x)
    scale = 1e-2 * tol * (1.0 + float(np.linalg.norm(x - gpath.anchor)))
    val, _ = integrate(fn, 0.0, T, rtol=tol, atol=scale)
    return np.asarray(val, dtype=float)


def potential_sample(config: FieldConfig, gpath: GaugePath, x, tol: float = 1e-10) -> PotentialSample:
    x = four_vector(x)
    return PotentialSample(x, potential_from_path(config, gpath, x, tol), gpath.tag)


def potential_classical_accel(family: ClassicalPath, p: ParticleParams, x, tol: float = 1e-10,
                              max_residual: float = 1e-6) -> np.ndarray:
    """Potential from the acceleration form ``-(1/lam) int y''_nu (dy^nu/dx^mu) dsigma``.

    ``y''`` comes from five-point differences of the path velocity, so this is an
    independent route to :func:`potential_from_path` for classical families.
    """
    x = four_vector(x)
    lam = p.lam
    base = family.path_to(x)
    res = eom_residual(base, family.config, p)
    if res > max_residual:
        raise DomainError(f"path is not classical: equation-of-motion residual {res:.3e}")
    if lam == 0:
        return np.zeros(4)
    tau = family.tau
    R0 = family.constant_jacobian(0.0)
    if R0 is None:
        h = 1e-5 * (1.0 + float(np.linalg.norm(x)))
        plus, minus = _jacobian_fd(family, x, h)

        def jac(flat):
            return np.stack([(pp.y(flat) - mm.y(flat)) / (2 * h) for pp, mm in zip(plus, minus)], axis=-1)
    else:
        jac = family.constant_jacobian

    def fn(s):
        flat = s.reshape(-1)
        hs = np.minimum(1e-3 * tau, np.minimum(flat, tau - flat) / 2.5)
        hs = np.maximum(hs, 1e-9 * tau)
        lo = np.clip(flat - 2 * hs, 0, tau), np.clip(flat - hs, 0, tau)
        hi = np.clip(flat + hs, 0, tau), np.clip(flat + 2 * hs, 0, tau)
        acc = (base.ydot(lo[0]) - 8 * base.ydot(lo[1]) + 8 * base.ydot(hi[0]) - base.ydot(hi[1])) / (12 * hs[:, None])
        out = np.einsum("kn,knm->km", acc * np.array([1.0, -1.0, -1.0, -1.0]), jac(flat))
        return (-out / lam).reshape(s.shape + (4,))

    scale = 1e-2 * tol * (1.0 + float(np.linalg.norm(x - family.anchor)))
    val, _ = integrate(fn, 0.0, tau, rtol=tol, atol=scale)
    return np.asarray(val, dtype=float)


# ---------------------------------------------------------------------------
# fluxes


def _check_shared(a0, a1, b0, b1, what):
    scale = 1.0 + max(float(np.linalg.norm(a1 - a0)), float(np.linalg.norm(b1 - b0)))
    gap = max(float(np.linalg.norm(a0 - b0)), float(np.linalg.norm(a1 - b1)))
    if gap > 1e-10 * scale:
        raise DomainError(f"{what}: paths do not share endpoints (mismatch {gap:.3e})")


def flux_line(config: FieldConfig, A_gauge: GaugePath, along: WorldlinePath, tol: float = 1e-10) -> float:
    """``int_along A_mu(A_gauge, y) dy^mu``.

    ``along`` must start at the gauge anchor; its end is the point the gauge
    family reaches.  When ``along`` is itself the gauge path to its endpoint
    the result vanishes.
    """
    anchor = four_vector(A_gauge.anchor)
    gap = float(np.linalg.norm(along.x_start - anchor))
    if gap > 1e-10 * (1.0 + float(np.linalg.norm(along.x_end - anchor))):
        raise DomainError(f"flux_line: path does not start at the gauge anchor (mismatch {gap:.3e})")
    if isinstance(A_gauge, (Sampled,)):
        _check_shared(along.x_start, along.x_end, A_gauge.points[0], A_gauge.points[-1], "flux_line")

    def fn(s):
        flat = s.reshape(-1)
        ys = along.y(flat)
        vs = along.ydot(flat)
        A = np.array([potential_from_path(config, A_gauge, yk, tol / 10) for yk in ys])
        return dot(A * np.array([1.0, -1.0, -1.0, -1.0]), vs).reshape(s.shape)

    knots = _knots(along)
    seg = np.diff(knots)
    length = float(np.linalg.norm(along.x_end - along.x_start)) + 1.0
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        mid = 0.5 * (a + b)
        scale = float(np.linalg.norm(potential_from_path(config, A_gauge, along.y(mid), tol))) * length
        val, _ = integrate(fn, a, b, rtol=tol, atol=1e-2 * tol * (scale + 1e-300) * (b - a) / seg.sum())
        total += float(val)
    return total


def flux_surface(config: FieldConfig, loop: tuple[WorldlinePath, WorldlinePath], tol: float = 1e-10) -> float:
    """Flux of ``F`` through the ruled surface ``Y = (1 - v) P'(u) + v P(u)``.

    ``loop = (P, P')`` share both endpoints; the orientation is such that
    ``flux_surface((P, G), ...) == flux_line(config, gauge, P)`` when ``G`` is the
    gauge path of ``gauge`` to the common endpoint.
    """
    P, Q = loop
    _check_shared(P.x_start, P.x_end, Q.x_start, Q.x_end, "flux_surface")
    kp, kq = _knots(P) / P.tau, _knots(Q) / Q.tau
    knots = np.union1d(kp, kq)

    def inner(u):
        uf = u.reshape(-1)
        Pu, Qu = P.y(uf * P.tau), Q.y(uf * Q.tau)
        dP, dQ = P.ydot(uf * P.tau) * P.tau, Q.ydot(uf * Q.tau) * Q.tau

        def fv(v, idx):
            vv = v[..., None]
            Y = (1 - vv) * Qu[idx] + vv * Pu[idx]
            dYu = (1 - vv) * dQ[idx] + vv * dP[idx]
            dYv = Pu[idx] - Qu[idx]
            F = _cov_field_batch(config, Y)
            return np.einsum("...mn,...m,...n->...", F, dYv, dYu)

        scale = (float(np.max(np.abs(Pu - Qu))) + 1e-300) * (float(np.max(np.abs(dP) + np.abs(dQ))) + 1.0)
        res = integrate_batch(fv, np.zeros_like(uf), np.ones_like(uf), rtol=tol / 10, atol=1e-3 * tol * scale)
        return res.value.reshape(u.shape)

    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        val, _ = integrate(inner, a, b, rtol=tol, atol=1e-3 * tol * (b - a))
        total += float(val)
    return total


# ---------------------------------------------------------------------------
# kernels


def gauge_transform_kernel(K, phi_x: float, phi_xp: float, e: float):
    """``K -> exp(-i e Phi(x)) K exp(i e Phi(x'))``; the modulus is untouched."""
    delta = e * (phi_xp - phi_x)
    rot = complex(math.cos(delta), math.sin(delta))
    return dataclasses.replace(
        K,
        amplitude=complex(K.amplitude) * rot,
        phase_exponent=complex(K.phase_exponent) + 1j * delta,
        gauge=f"{getattr(K, 'gauge', 'unknown')}+phase",
    )


def fixed_gauge_potential(config: FieldConfig, anchor) -> Callable:
    """An endpoint-independent potential ``A_mu(z)`` for ``config`` (batched over ``z``).

    The constant part is in Fock-Schwinger form about ``anchor`` and the wave
    part is ``eps_mu f(k.z)``; its curl is the configured field.
    """
    anchor = four_vector(anchor)
    F0 = None
    prof = None
    if isinstance(config, ConstantUniform):
        F0 = config.F0.cov
    elif isinstance(config, PlaneWave):
        prof = config.profile
    elif isinstance(config, Combined):
        F0, prof = config.F0.cov, config.profile
    elif config is not None:
        raise TypeError(f"unknown configuration {config!r}")

    def A(z):
        z = np.asarray(z, dtype=float)
        out = np.zeros(z.shape)
        if F0 is not None:
            out = out - 0.5 * np.einsum("mn,...n->...m", F0, z - anchor)
        if prof is not None:
            eps_cov = prof.eps * np.array([1.0, -1.0, -1.0, -1.0])
            out = out + np.asarray(prof.f(dot(prof.k, z)))[..., None] * eps_cov
        return out

    return A


def line_integral(A: Callable, path: WorldlinePath, tol: float = 1e-12) -> float:
    """``int A_mu(y) dy^mu`` along ``path`` for a batched potential ``A``."""

    def fn(s):
        flat = s.reshape(-1)
        return dot(A(path.y(flat)) * np.array([1.0, -1.0, -1.0, -1.0]), path.ydot(flat)).reshape(s.shape)

    knots = _knots(path)
    D = path.x_end - path.x_start
    scale = float(np.linalg.norm(A(path.x_end))) * float(np.linalg.norm(D)) + 1e-300
    return float(sum(integrate(fn, a, b, rtol=tol, atol=1e-3 * tol * scale)[0] for a, b in zip(knots[:-1], knots[1:])))

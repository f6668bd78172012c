"""Quasiclassical proper-time kernels and the Green's function built from them.

All kernels share the layout ``K = prefactor * exp(phase_exponent)`` with
``phase_exponent = -i S_c`` in the classical-path gauge, where the interaction
term of the action drops out.  Prefactors are normalized so that the field-free
limit is ``(4 pi alpha tau)^-2``.

The determinant that fixes the prefactor is taken from the action written in
an endpoint-independent gauge: the classical-path gauge moves with the
endpoints, and its bare mixed Hessian does not solve the tau-evolution
equation except for null fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import CausticError, ConvergenceError, DomainError
from .fields import (
    Combined,
    ConstantUniform,
    FieldConfig,
    FieldTensor,
    ParticleParams,
    PlaneWave,
    invariants,
)
from .gauge import ClassicalPath, fixed_gauge_potential, line_integral, potential_from_path
from .minkowski import METRIC, BranchedSqrt, check_resonance, dot, four_vector, sinhc_and_cosh, sqrt_continuous
from .quadrature import default_tolerance, integrate
from .trajectories import WorldlinePath, g_integral, path_combined, path_constant, path_planewave

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class KernelResult:
    """``amplitude = prefactor * exp(phase_exponent)``.

    ``prefactor_ratio`` is the prefactor divided by ``(4 pi alpha tau)^-2`` and
    ``excess_exponent`` is ``phase_exponent + i (x-x')^2 / (4 alpha tau)``;
    both are computed without the large free pieces, which keeps the Green's
    function integrand accurate at small ``tau``.
    """

    amplitude: complex
    prefactor: complex
    phase_exponent: complex
    branch_index: int
    config_tag: str
    gauge: str = "classical-path"
    prefactor_ratio: complex = 1.0
    excess_exponent: complex = 0.0
    diagnostics: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class GreensResult:
    value: complex
    epsilon_used: float
    tau_cutoff: float
    quadrature_error_estimate: float
    per_epsilon: tuple = ()


def _check(x, xp, tau):
    x, xp = four_vector(x), four_vector(xp)
    if not (np.isfinite(tau) and tau > 0):
        raise DomainError(f"tau must be positive, got {tau}")
    return x, xp, float(tau)


def _assemble(p: ParticleParams, D, tau, ratio: complex, excess: complex, branch: int, tag: str,
              **diag) -> KernelResult:
    a = p.alpha
    free_kin = -1j * float(dot(D, D)) / (4.0 * a * tau)
    base = (FOUR_PI * a * tau) ** -2
    prefactor = base * complex(ratio)
    phase = free_kin + complex(excess)
    amplitude = prefactor * np.exp(phase)
    return KernelResult(complex(amplitude), complex(prefactor), complex(phase), int(branch), tag,
                        prefactor_ratio=complex(ratio), excess_exponent=complex(excess), diagnostics=diag)


def kernel_free(p: ParticleParams, x, xp, tau: float) -> KernelResult:
    """``(4 pi alpha tau)^-2 exp(-i (x-x')^2 / (4 alpha tau) - i m^2 alpha tau)``."""
    x, xp, tau = _check(x, xp, tau)
    return _assemble(p, x - xp, tau, 1.0, -1j * p.m**2 * p.alpha * tau, 0, "free")


# ---------------------------------------------------------------------------
# constant field


def _inv_det_sinhc(X) -> complex:
    S, _ = sinhc_and_cosh(X)
    return 1.0 / complex(np.linalg.det(S))


def _x_over_sinh(x: float) -> float:
    return 1.0 if x == 0 else x / math.sinh(x)


def _x_over_sin(y: float) -> float:
    return 1.0 if y == 0 else y / math.sin(y)


def constant_field_prefactor(X: np.ndarray, detour: float = 0.05, max_depth: int = 40) -> BranchedSqrt:
    """``det(X / sinh X)^{1/2}`` continued from ``X -> 0`` along ``t X``.

    A real ``X = lam F tau / 2`` has eigenvalues ``+-a`` and ``+-i b``, so the
    root is ``(a / sinh a)(b / sin b)`` and each focal point ``|b| = n pi``
    passed adds ``-pi`` to its phase (the side of the ``tau - i0``
    prescription).  Complex ``X`` is tracked numerically along the ramp
    ``t -> t - i detour sin(pi t)``.
    """
    X = np.asarray(X)
    if not np.iscomplexobj(X) or not np.any(np.imag(X)):
        Xr = np.real(X).astype(float)
        T = 0.5 * float(np.trace(Xr @ Xr))  # a^2 - b^2
        P = -float(np.linalg.det(Xr))  # a^2 b^2
        disc = math.hypot(T, 2.0 * math.sqrt(max(P, 0.0)))  # a^2 + b^2
        if T >= 0:
            a2 = 0.5 * (T + disc)
            b2 = max(P, 0.0) / a2 if a2 > 0 else 0.0
        else:
            b2 = 0.5 * (disc - T)
            a2 = max(P, 0.0) / b2 if b2 > 0 else 0.0
        b = math.sqrt(b2)
        n = int(b // math.pi)
        value = _x_over_sinh(math.sqrt(a2)) * abs(_x_over_sin(b))
        return BranchedSqrt(complex(value * (-1.0) ** n), -n)
    nrm = float(np.linalg.norm(X, 2))

    def point(t):
        return _inv_det_sinhc((t - 1j * detour * math.sin(math.pi * t)) * X)

    n0 = max(8, int(8 * math.ceil(nrm)))
    ts = list(np.linspace(0.0, 1.0, n0 + 1))
    ref = BranchedSqrt(1.0 + 0j, 0)
    prev_t, prev_d = 0.0, 1.0 + 0j
    stack = ts[:0:-1]
    while stack:
        t = stack.pop()
        d = point(t)
        jump = abs(math.remainder(float(np.angle(d)) - float(np.angle(prev_d)), 2 * math.pi))
        # near a focal pole det turns a full 2 pi between samples, invisible to the phase test
        growth = abs(math.log(abs(d) / abs(prev_d)))
        if (jump > math.pi / 4 or growth > math.log(2.0)) and t - prev_t > 2.0**-max_depth:
            stack.append(t)
            stack.append(0.5 * (prev_t + t))
            continue
        ref, _ = sqrt_continuous(d, ref)
        prev_t, prev_d = t, d
    # the end point lies on the real axis; reproduce it exactly on the tracked branch
    final, _ = sqrt_continuous(_inv_det_sinhc(X.astype(complex)), ref)
    return final


def kernel_constant(F: FieldTensor, p: ParticleParams, x, xp, tau: float) -> KernelResult:
    """Kernel in a constant uniform field, classical-path gauge.

    The exponent is ``-i (x-x') g M (x-x') / (4 alpha) - i m^2 alpha tau`` with
    ``M = h(lam F tau / 2) / tau`` and ``h(X) = X^2 sinh^-2 X``; the prefactor
    is ``(4 pi alpha tau)^-2 det(X / sinh X)^{1/2}``.
    """
    x, xp, tau = _check(x, xp, tau)
    F = F if isinstance(F, FieldTensor) else FieldTensor(F)
    if F.scale == 0.0:
        k = kernel_free(p, x, xp, tau)
        return KernelResult(k.amplitude, k.prefactor, k.phase_exponent, 0, "constant",
                            prefactor_ratio=k.prefactor_ratio, excess_exponent=k.excess_exponent)
    D = x - xp
    a = p.alpha
    X = p.lam * F.mixed * tau / 2.0
    S, _ = sinhc_and_cosh(X)
    check_resonance(S, X, 1j * math.pi, tau, error=CausticError)
    Sinv = np.linalg.inv(S)
    hm = Sinv @ Sinv
    excess = -1j * float(D @ METRIC @ (hm - np.eye(4)) @ D) / (4.0 * a * tau) - 1j * p.m**2 * a * tau
    branch = constant_field_prefactor(X)
    literal = 1.0 / complex(np.linalg.det(S))
    return _assemble(p, D, tau, branch.value, excess, branch.branch_index, "constant",
                     literal_sqrt_det=literal, M=hm / tau)


def kernel_crossed(F: FieldTensor, p: ParticleParams, x, xp, tau: float) -> KernelResult:
    """Crossed (null) field kernel: the series terminates and no matrix functions are needed."""
    x, xp, tau = _check(x, xp, tau)
    I1, I2 = invariants(F)
    if abs(I1) > 1e-10 * max(F.scale**2, 1e-300) or abs(I2) > 1e-10 * max(F.scale**2, 1e-300):
        raise DomainError(f"not a crossed/null field: invariants ({I1:.3e}, {I2:.3e})")
    D = x - xp
    a, lam = p.alpha, p.lam
    F2 = F.cov @ METRIC @ F.cov
    excess = 1j * lam**2 * tau / (48.0 * a) * float(D @ F2 @ D) - 1j * p.m**2 * a * tau
    return _assemble(p, D, tau, 1.0, excess, 0, "crossed")


# ---------------------------------------------------------------------------
# plane wave


def kernel_volkov(profile, basis, p: ParticleParams, x, xp, tau: float, tol: float | None = None) -> KernelResult:
    """Volkov kernel; the path integrals of the wave enter only via ``g1(tau)`` and ``g2(tau)``."""
    x, xp, tau = _check(x, xp, tau)
    tol = default_tolerance(1e-12) if tol is None else tol
    D = x - xp
    kD = float(dot(basis.k, D))
    if abs(kD) <= 1e-12 * max(float(np.linalg.norm(D)), 1e-300):
        raise DomainError(f"lightlike-degenerate endpoints: k.(x - x') = {kD:.3e}")
    kxp = float(dot(basis.k, xp))
    profile.check_support([kxp, kxp + kD])
    a, lam = p.alpha, p.lam
    g1 = g_integral(profile, kD / tau, kxp, 1, tau, tol)
    g2 = g_integral(profile, kD / tau, kxp, 2, tau, tol)
    excess = -1j * p.m**2 * a * tau - 1j * lam**2 / (4 * a * tau) * g1 * g1 + 1j * lam**2 / (4 * a) * g2
    return _assemble(p, D, tau, 1.0, excess, 0, "planewave", g1=g1, g2=g2)


# ---------------------------------------------------------------------------
# generic Van Vleck determinant by finite differences


def closed_form_path(config: FieldConfig, p: ParticleParams, x, xp, tau: float, tol: float | None = None) -> WorldlinePath:
    if isinstance(config, ConstantUniform):
        return path_constant(config.F0, p, x, xp, tau)
    if isinstance(config, PlaneWave):
        return path_planewave(config.profile, config.basis, p, x, xp, tau, tol)
    if isinstance(config, Combined):
        return path_combined(config, p, x, xp, tau, tol)
    raise TypeError(f"unknown configuration {config!r}")


def excess_action(path: WorldlinePath, p: ParticleParams, tol: float = 1e-13) -> float:
    """``S_c - m^2 alpha tau - (x-x')^2 / (4 alpha tau)`` as ``int (y' - D/tau)^2 / (4 alpha)``.

    Integrating the deviation from the straight-line velocity avoids the
    cancellation of the direct form, which matters for finite differences.
    """
    Dv = (path.x_end - path.x_start) / path.tau

    def fn(s):
        dv = path.ydot(s.reshape(-1)) - Dv
        return dot(dv, dv).reshape(s.shape)

    scale = float(np.linalg.norm(Dv)) ** 2 * path.tau + 1e-300
    val, _ = integrate(fn, 0.0, path.tau, rtol=tol, atol=1e-3 * tol * scale)
    return float(val) / (4.0 * p.alpha)


def _action_excess_fn(config, p, tau, gauge: str, anchor, tol):
    A_fix = fixed_gauge_potential(config, anchor) if gauge == "fixed" else None

    def S(x, xp):
        path = closed_form_path(config, p, x, xp, tau, tol)
        val = excess_action(path, p, tol)
        if A_fix is not None and p.e != 0:
            val += p.e * line_integral(A_fix, path, tol)
        return val

    return S


def vanvleck_fd(config: FieldConfig, p: ParticleParams, x, xp, tau: float, h: float | None = None,
                gauge: str = "classical-path", richardson: bool = False, tol: float = 1e-13):
    """Mixed Hessian ``d^2 S_c / dx^mu dx'^nu`` by central differences and its determinant.

    Only the part of the action beyond the free one is differenced; the free
    Hessian ``-g / (2 alpha tau)`` is added analytically.  ``gauge="fixed"``
    adds the interaction term ``e int A.dy`` of an endpoint-independent
    potential, which is the Hessian that enters the kernel prefactor.
    """
    x, xp, tau = _check(x, xp, tau)
    if gauge not in ("classical-path", "fixed"):
        raise DomainError(f"unknown gauge {gauge!r}")
    if config is None or (isinstance(config, ConstantUniform) and config.F0.scale == 0):
        H = -METRIC / (2 * p.alpha * tau)
        return H, complex(np.linalg.det(H))
    h = 1e-4 * (1.0 + float(np.linalg.norm(x - xp))) if h is None else float(h)
    S = _action_excess_fn(config, p, tau, gauge, xp, tol)

    def hess(step):
        H = np.empty((4, 4))
        E = np.eye(4) * step
        for mu in range(4):
            for nu in range(4):
                pp = S(x + E[mu], xp + E[nu])
                pm = S(x + E[mu], xp - E[nu])
                mp = S(x - E[mu], xp + E[nu])
                mm = S(x - E[mu], xp - E[nu])
                H[mu, nu] = (pp - pm - mp + mm) / (4 * step * step)
        return H

    Hex = hess(h)
    if richardson:
        Hex = (4 * hess(h / 2) - Hex) / 3
    H = Hex - METRIC / (2 * p.alpha * tau)
    return H, complex(np.linalg.det(H))


def vanvleck_ratio(H: np.ndarray, p: ParticleParams, tau: float) -> complex:
    """``det H / det H_free``, the square of the prefactor ratio."""
    Hex = H + METRIC / (2 * p.alpha * tau)
    return complex(np.linalg.det(np.eye(4) - 2 * p.alpha * tau * METRIC @ Hex))


def kernel_combined(config: Combined, p: ParticleParams, x, xp, tau: float, fd_step: float | None = None,
                    tol: float = 1e-13) -> KernelResult:
    """Kernel for a plane wave along a parallel constant field.

    The exponent uses the classical action of :func:`path_combined`; the
    prefactor is the square root of the Van Vleck determinant obtained by
    Richardson-refined finite differences, on the branch closest to the
    constant-field kernel of the same ``F0``.
    """
    x, xp, tau = _check(x, xp, tau)
    if not isinstance(config, Combined):
        raise DomainError("kernel_combined needs a Combined configuration")
    D = x - xp
    h = 1e-3 * (1.0 + float(np.linalg.norm(D))) if fd_step is None else fd_step
    path = path_combined(config, p, x, xp, tau, tol)
    excess = -1j * (excess_action(path, p, tol) + p.m**2 * p.alpha * tau)
    H, _ = vanvleck_fd(config, p, x, xp, tau, h, gauge="fixed", richardson=True, tol=tol)
    ratio = vanvleck_ratio(H, p, tau)
    if not np.isfinite(ratio) or abs(ratio) < 1e-14:
        raise CausticError(f"caustic: Van Vleck determinant ratio {ratio:.3e} at tau = {tau}", critical_tau=tau)
    if config.F0.scale > 0:
        ref = constant_field_prefactor(p.lam * config.F0.mixed * tau / 2.0)
    else:
        ref = BranchedSqrt(1.0 + 0j, 0)
    root, _ = sqrt_continuous(ratio, ref)
    return _assemble(p, D, tau, root.value, excess, root.branch_index, "combined", hessian=H, fd_step=h)


def kernel_for(config: FieldConfig | None, p: ParticleParams, x, xp, tau: float, **kw) -> KernelResult:
    """Dispatch to the closed-form kernel of ``config`` (``None`` means field-free)."""
    if config is None:
        return kernel_free(p, x, xp, tau)
    if isinstance(config, ConstantUniform):
        return kernel_constant(config.F0, p, x, xp, tau)
    if isinstance(config, PlaneWave):
        return kernel_volkov(config.profile, config.basis, p, x, xp, tau, **kw)
    if isinstance(config, Combined):
        return kernel_combined(config, p, x, xp, tau, **kw)
    raise TypeError(f"unknown configuration {config!r}")


# ---------------------------------------------------------------------------
# tau-evolution check


def kernel_pde_residual(config: FieldConfig | None, p: ParticleParams, x, xp, tau: float, h: float,
                        mass: float | None = None, gauge: str = "classical-path", kernel_kw: dict | None = None) -> complex:
    """Normalized residual of ``-i dK/dtau - alpha [(i d - e A)^2 - m^2] K``.

    Central differences with step ``h`` in ``tau`` and in every coordinate of
    ``x``.  In the classical-path gauge the potential belongs to the family at
    the central ``tau``; kernels at ``tau +- h`` are brought into that gauge
    with the phase ``exp(-i e int_{P_c} A.dy)``.  ``gauge="fixed"`` uses the
    endpoint-independent potential instead, with the matching phase on every
    stencil kernel.  ``mass`` replaces the mass in the operator (negative
    control).
    """
    x, xp, tau = _check(x, xp, tau)
    kernel_kw = kernel_kw or {}
    e, a = p.e, p.alpha
    mop = p.m if mass is None else mass
    if config is None or e == 0:
        def A(z):
            return np.zeros(4)

        def phase(z, t):
            return 0.0
    elif gauge == "classical-path":
        family = ClassicalPath(config, p, xp, tau)

        def A(z):
            return potential_from_path(config, family, z, 1e-13)

        def phase(z, t):
            if t == tau:
                return 0.0
            path = closed_form_path(config, p, z, xp, t)
            return line_integral(lambda y: np.array([A(yk) for yk in np.atleast_2d(y)]).reshape(np.shape(y)),
                                 path, 1e-13)
    elif gauge == "fixed":
        A_fix = fixed_gauge_potential(config, xp)

        def A(z):
            return A_fix(z)

        def phase(z, t):
            return line_integral(A_fix, closed_form_path(config, p, z, xp, t), 1e-13)
    else:
        raise DomainError(f"unknown gauge {gauge!r}")

    def K(z, t):
        return kernel_for(config, p, z, xp, t, **kernel_kw).amplitude * np.exp(-1j * e * phase(z, t))

    K0 = K(x, tau)
    dt = (K(x, tau + h) - K(x, tau - h)) / (2 * h)
    A0 = A(x)
    box = 0.0 + 0j
    grad = np.zeros(4, dtype=complex)
    divA = 0.0
    E = np.eye(4) * h
    for mu in range(4):
        kp, km = K(x + E[mu], tau), K(x - E[mu], tau)
        box += METRIC[mu, mu] * (kp - 2 * K0 + km) / (h * h)
        grad[mu] = (kp - km) / (2 * h)
        divA += METRIC[mu, mu] * (A(x + E[mu])[mu] - A(x - E[mu])[mu]) / (2 * h)
    # (i d - eA)^2 K = -box K - i e (d.A) K - 2 i e A.dK + e^2 A.A K
    A_up = METRIC @ A0
    cov = -box - 1j * e * divA * K0 - 2j * e * (A_up @ grad) + e * e * float(A_up @ A0) * K0
    res = -1j * dt - a * (cov - mop**2 * K0)
    return complex(res / abs(K0))


# ---------------------------------------------------------------------------
# Green's function


def _richardson(eps: np.ndarray, vals: np.ndarray) -> tuple[complex, float]:
    """Polynomial extrapolation to ``eps = 0``; the spread to the next-lower order is the error."""
    n = len(eps)
    if n == 1:
        return complex(vals[0]), float("nan")

    def extrap(e, v):
        coef_re = np.polyfit(e, v.real, len(e) - 1)
        coef_im = np.polyfit(e, v.imag, len(e) - 1)
        return complex(coef_re[-1], coef_im[-1])

    best = extrap(eps, vals)
    lower = extrap(eps[1:], vals[1:])
    return best, abs(best - lower)


def _cquad(fn, a, b, **kw):
    re = quad(lambda t: fn(t).real, a, b, full_output=1, **kw)
    im = quad(lambda t: fn(t).imag, a, b, full_output=1, **kw)
    return re[0] + 1j * im[0], re[1] + im[1], (len(re) > 3 and re[3]) or (len(im) > 3 and im[3])


def _osc_quad(fn, a, omega, tol):
    """``int_a^inf fn(t) e^{i omega t} dt`` for smooth decaying ``fn`` using Fourier-weighted quadrature."""
    if omega == 0:
        val, err, msg = _cquad(fn, a, np.inf, epsabs=tol, epsrel=tol, limit=500)
        return val, err
    w = abs(omega)
    sgn = 1.0 if omega > 0 else -1.0
    total, err = 0j, 0.0
    for part, fpart in (("re", lambda t: fn(t).real), ("im", lambda t: fn(t).imag)):
        c, ec = quad(fpart, a, np.inf, weight="cos", wvar=w, epsabs=tol, limlst=200)
        s, es = quad(fpart, a, np.inf, weight="sin", wvar=w, epsabs=tol, limlst=200)
        piece = c + 1j * sgn * s
        total += piece if part == "re" else 1j * piece
        err += ec + es
    return total, err


def greens_function(config: FieldConfig | None, p: ParticleParams, x, xp, eps_list=(0.004, 0.002, 0.001),
                    tau_max: float = 40.0, tol: float = 1e-8, kernel: Callable | None = None) -> GreensResult:
    """``G = -i alpha int_0^inf K(tau) e^{-eps tau} dtau`` extrapolated to ``eps -> 0``.

    The integral is split at ``tau0`` (a fraction of the separation scale):
    below it ``u = 1 / tau`` turns the ``tau^-2 exp(i b / tau)`` singularity
    into a Fourier integral on ``[1 / tau0, inf)``, whose constant limit is
    summed exactly (Abel regularization) and whose remainder goes to
    Fourier-weighted quadrature.  ``[tau0, tau_max]`` is adaptive and the tail
    beyond ``tau_max`` is Fourier-weighted in the mass oscillation.
    """
    x, xp = four_vector(x), four_vector(xp)
    eps = np.asarray(sorted(eps_list, reverse=True), dtype=float)
    if np.any(eps <= 0):
        raise DomainError("eps_list must be positive")
    if not tau_max > 0:
        raise DomainError("tau_max must be positive")
    D = x - xp
    D2 = float(dot(D, D))
    a = p.alpha
    b = -D2 / (4.0 * a)
    if abs(b) < 1e-12:
        raise DomainError("lightlike separation: the proper-time integral is not regularized by the kernel phase")
    kfun = kernel or (lambda t: kernel_for(config, p, x, xp, t))
    norm = (FOUR_PI * a) ** -2
    omega = p.m**2 * a
    tau0 = min(abs(b) / (4 * math.pi), 0.5 * tau_max)

    def smooth(t, e):
        # K(t) t^2 e^{-i D^2/(4 a t)}... without the free kinetic phase
        k = kfun(t)
        return norm * k.prefactor_ratio * np.exp(k.excess_exponent - e * t)

    g_inf = norm  # limit of smooth(t) as t -> 0
    vals, errs = [], []
    for e in eps:
        U = 1.0 / tau0
        near_const = g_inf * 1j * np.exp(1j * b * U) / b
        near_rest, e1 = _osc_quad(lambda u: smooth(1.0 / u, e) - g_inf, U, b, tol * norm)

        def mid_fn(t):
            return smooth(t, e) * np.exp(1j * b / t) / (t * t)

        mid, e2, bad = _cquad(mid_fn, tau0, tau_max, epsabs=tol * norm, epsrel=tol, limit=2000)
        if bad:
            raise ConvergenceError(f"Green's function mid-range quadrature failed: {bad}", estimate=mid)

        def tail_fn(t):
            k = kfun(t)
            return norm * k.prefactor_ratio * np.exp(k.excess_exponent + 1j * omega * t + 1j * b / t - e * t) / (t * t)

        tail, e3 = _osc_quad(tail_fn, tau_max, -omega, tol * norm)
        total = -1j * a * (near_const + near_rest + mid + tail)
        vals.append(total)
        errs.append(a * (e1 + e2 + e3))
    vals = np.array(vals)
    G, spread = _richardson(eps, vals)
    err = max(spread if np.isfinite(spread) else 0.0, max(errs))
    return GreensResult(complex(G), float(eps[-1]), float(tau_max), float(err),
                        tuple((float(e), complex(v)) for e, v in zip(eps, vals)))

"""Field tensors, plane-wave profiles, light-cone bases and the field configurations.

A configuration is one of :class:`ConstantUniform`, :class:`PlaneWave` or
:class:`Combined`.  All solvers in the package dispatch on these three types.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, NullFieldError
from .minkowski import METRIC, dot, four_vector, lower

_LEVI_CIVITA = np.zeros((4, 4, 4, 4))
for _perm in itertools.permutations(range(4)):
    _LEVI_CIVITA[_perm] = np.linalg.det(np.eye(4)[list(_perm)])  # epsilon^{0123} = +1


class FieldTensor:
    """Covariant antisymmetric field strength ``F_{mu nu}`` with ``F_{0i} = E_i``."""

    __slots__ = ("_cov",)

    def __init__(self, cov):
        cov = np.array(cov, dtype=float)
        if cov.shape != (4, 4):
            raise DomainError(f"field tensor must be 4x4, got {cov.shape}")
        if not np.all(np.isfinite(cov)):
            raise DomainError("field tensor has non-finite entries")
        # enforce exact antisymmetry
        cov = 0.5 * (cov - cov.T)
        cov.setflags(write=False)
        self._cov = cov

    @classmethod
    def from_EB(cls, E, B) -> "FieldTensor":
        return constant_from_EB(E, B)

    @classmethod
    def zero(cls) -> "FieldTensor":
        return cls(np.zeros((4, 4)))

    @property
    def cov(self) -> np.ndarray:
        return self._cov

    @property
    def con(self) -> np.ndarray:
        """Contravariant components ``F^{mu nu}``."""
        return METRIC @ self._cov @ METRIC

    @property
    def mixed(self) -> np.ndarray:
        """Mixed components ``F^mu_nu`` (the matrix acting on contravariant vectors)."""
        return METRIC @ self._cov

    @property
    def E(self) -> np.ndarray:
        return self._cov[0, 1:].copy()

    @property
    def B(self) -> np.ndarray:
        c = self._cov
        return np.array([-c[2, 3], -c[3, 1], -c[1, 2]])

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self._cov)))

    def __add__(self, other: "FieldTensor") -> "FieldTensor":
        return FieldTensor(self._cov + other.cov)

    def __mul__(self, c: float) -> "FieldTensor":
        return FieldTensor(c * self._cov)

    __rmul__ = __mul__

    def __neg__(self) -> "FieldTensor":
        return FieldTensor(-self._cov)

    def __repr__(self) -> str:
        return f"FieldTensor(E={self.E.tolist()}, B={self.B.tolist()})"

    def transformed(self, L) -> "FieldTensor":
        """Components in the frame ``x' = L x``."""
        con = L @ self.con @ L.T
        return FieldTensor(METRIC @ con @ METRIC)


def constant_from_EB(E, B) -> FieldTensor:
    """Assemble ``F_{mu nu}`` from electric and magnetic 3-vectors."""
    E = np.asarray(E, dtype=float)
    B = np.asarray(B, dtype=float)
    if E.shape != (3,) or B.shape != (3,):
        raise DomainError("E and B must be 3-vectors")
    if not (np.all(np.isfinite(E)) and np.all(np.isfinite(B))):
        raise DomainError("E and B must be finite")
    F = np.zeros((4, 4))
    F[0, 1:] = E
    F[1:, 0] = -E
    F[1, 2], F[2, 3], F[3, 1] = -B[2], -B[0], -B[1]
    F[2, 1], F[3, 2], F[1, 3] = B[2], B[0], B[1]
    return FieldTensor(F)


def crossed_field(E0: float) -> FieldTensor:
    """The crossed field ``E = E0 x, B = E0 y`` (null field, nilpotent mixed tensor)."""
    return constant_from_EB([E0, 0.0, 0.0], [0.0, E0, 0.0])


def invariants(F: FieldTensor) -> tuple[float, float]:
    """Lorentz invariants ``I1 = F_{mu nu} F^{mu nu}`` and ``I2 = G_{mu nu} F^{mu nu}``."""
    I1 = float(np.sum(F.cov * F.con))
    I2 = float(np.sum(dual(F).cov * F.con))
    return I1, I2


def dual(F: FieldTensor) -> FieldTensor:
    """Dual tensor ``G^{mu nu} = epsilon^{mu nu a b} F_{a b} / 2`` with ``epsilon^{0123} = 1``.

    In components this maps ``(E, B)`` to ``(B, -E)``, so that
    ``G_{mu nu} F^{mu nu} = -4 E.B``.
    """
    Gcon = 0.5 * np.einsum("mnab,ab->mn", _LEVI_CIVITA, F.cov)
    return FieldTensor(METRIC @ Gcon @ METRIC)


def is_null(F: FieldTensor, tol: float = 1e-12) -> bool:
    I1, I2 = invariants(F)
    s = max(F.scale, 1e-300) ** 2
    return abs(I1) <= tol * s and abs(I2) <= tol * s


def secular_amplitudes(F0: FieldTensor) -> tuple[float, float]:
    """Field strengths in the frame where E and B are parallel.

    ``E0 = sqrt(sqrt(I1^2 + I2^2) - I1) / 2 >= 0`` and
    ``B0 = -sqrt(sqrt(I1^2 + I2^2) + I1) / 2 <= 0``.
    """
    I1, I2 = invariants(F0)
    s = max(F0.scale, 1e-300) ** 2
    if abs(I1) <= 1e-12 * s and abs(I2) <= 1e-12 * s:
        return 0.0, 0.0
    root = math.hypot(I1, I2)
    E0 = 0.5 * math.sqrt(max(root - I1, 0.0))
    B0 = -0.5 * math.sqrt(max(root + I1, 0.0))
    return E0, B0


# ---------------------------------------------------------------------------
# plane-wave profiles


@dataclass(frozen=True)
class PlaneWaveProfile:
    """Plane wave ``F_{mu nu}(x) = (k_mu eps_nu - k_nu eps_mu) f'(k.x)``.

    ``f`` is the integrated profile and ``fprime`` the physical waveform; both
    accept numpy arrays.  ``params`` records the constructor arguments for
    serialization.
    """

    k: np.ndarray
    eps: np.ndarray
    f: Callable
    fprime: Callable
    profile_kind: str
    params: dict = field(default_factory=dict)
    support: tuple[float, float] | None = None

    def __post_init__(self):
        k = four_vector(self.k)
        eps = four_vector(self.eps)
        scale = float(np.linalg.norm(k))
        if scale == 0:
            raise DomainError("wave vector must be nonzero")
        if k[0] <= 0:
            raise DomainError("wave vector must be future-directed (k0 > 0)")
        if abs(dot(k, k)) > 1e-12 * scale**2:
            raise DomainError(f"wave vector not null: k.k = {dot(k, k)}")
        if abs(dot(eps, eps) + 1.0) > 1e-12:
            raise DomainError(f"polarization not unit spacelike: eps.eps = {dot(eps, eps)}")
        if abs(dot(k, eps)) > 1e-12 * scale:
            raise DomainError(f"polarization not transverse: k.eps = {dot(k, eps)}")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "eps", eps)

    def tensor(self) -> np.ndarray:
        """Covariant ``k_mu eps_nu - k_nu eps_mu``."""
        kl, el = lower(self.k), lower(self.eps)
        return np.outer(kl, el) - np.outer(el, kl)

    def check_support(self, phi):
        if self.support is None:
            return
        lo, hi = self.support
        phi = np.asarray(phi)
        span = hi - lo
        if np.any(phi < lo - 1e-12 * span) or np.any(phi > hi + 1e-12 * span):
            raise DomainError(
                f"tabulated profile evaluated outside its support [{lo}, {hi}] "
                f"(phase range [{np.min(phi)}, {np.max(phi)}])"
            )

    def with_polarization(self, eps) -> "PlaneWaveProfile":
        return PlaneWaveProfile(self.k, eps, self.f, self.fprime, self.profile_kind, self.params, self.support)

    def scaled(self, c: float) -> "PlaneWaveProfile":
        """Same profile with the amplitude multiplied by ``c``."""
        f, fp = self.f, self.fprime
        params = dict(self.params, amplitude_scale=self.params.get("amplitude_scale", 1.0) * c)
        return PlaneWaveProfile(
            self.k, self.eps, lambda p: c * f(p), lambda p: c * fp(p), self.profile_kind, params, self.support
        )


def linear_profile(k, eps, E0: float) -> PlaneWaveProfile:
    """Constant waveform ``f'(phi) = E0`` (a constant crossed field)."""
    E0 = float(E0)
    return PlaneWaveProfile(
        k,
        eps,
        lambda p: E0 * np.asarray(p, dtype=float),
        lambda p: np.full_like(np.asarray(p, dtype=float), E0),
        "linear",
        {"E0": E0},
    )


def sinusoidal_profile(k, eps, E0: float, omega: float, phase: float = 0.0) -> PlaneWaveProfile:
    """``f(phi) = (E0/omega) sin(omega phi + phase)``."""
    E0, omega, phase = float(E0), float(omega), float(phase)
    if omega == 0:
        raise DomainError("sinusoidal profile needs omega != 0")
    return PlaneWaveProfile(
        k,
        eps,
        lambda p: (E0 / omega) * np.sin(omega * np.asarray(p) + phase),
        lambda p: E0 * np.cos(omega * np.asarray(p) + phase),
        "sinusoidal",
        {"E0": E0, "omega": omega, "phase": phase},
    )


_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def _cell_integrals(fp, nodes: np.ndarray) -> np.ndarray:
    a, b = nodes[:-1, None], nodes[1:, None]
    x = 0.5 * (b - a) * _GL_X + 0.5 * (b + a)
    return (0.5 * (b - a)[:, 0]) * (fp(x) @ _GL_W)


def gaussian_pulse_profile(k, eps, E0: float, width: float, omega: float, cells: int = 400) -> PlaneWaveProfile:
    """``f'(phi) = E0 exp(-phi^2 / 2 w^2) cos(omega phi)``; ``f(phi) = int_0^phi f'``.

    ``f`` is tabulated once on a grid over ``[-12 w, 12 w]`` by Gauss-Legendre
    cell integrals and refined in each cell on demand.  Beyond the grid the
    waveform is below 1e-31 of its peak and ``f`` is held constant.
    """
    E0, w, omega = float(E0), float(width), float(omega)
    if w <= 0:
        raise DomainError("pulse width must be positive")

    def fp(p):
        p = np.asarray(p, dtype=float)
        return E0 * np.exp(-0.5 * (p / w) ** 2) * np.cos(omega * p)

    L = 12.0 * w
    nodes = np.linspace(-L, L, 2 * (cells // 2) + 1)
    cum = np.concatenate([[0.0], np.cumsum(_cell_integrals(fp, nodes))])
    cum -= cum[len(nodes) // 2]  # f(0) = 0

    def f(p):
        p = np.asarray(p, dtype=float)
        pc = np.clip(p, -L, L)
        j = np.clip(np.searchsorted(nodes, pc) - 1, 0, len(nodes) - 2)
        a = nodes[j]
        half = 0.5 * (pc - a)
        x = half[..., None] * (_GL_X + 1.0) + a[..., None]
        return cum[j] + half * (fp(x) @ _GL_W)

    return PlaneWaveProfile(k, eps, f, fp, "gaussian-pulse", {"E0": E0, "width": w, "omega": omega})


def tabulated_profile(k, eps, phi, fprime_values) -> PlaneWaveProfile:
    """Cubic interpolation of sampled ``f'``; ``f`` is the exact antiderivative of the interpolant."""
    phi = np.asarray(phi, dtype=float)
    vals = np.asarray(fprime_values, dtype=float)
    if phi.ndim != 1 or phi.shape != vals.shape:
        raise DomainError("tabulated profile needs matching 1-D phi and fprime arrays")
    if len(phi) < 4:
        raise DomainError("tabulated profile needs at least 4 rows")
    if np.any(np.diff(phi) <= 0):
        raise DomainError("tabulated phi must be strictly increasing")
    spline = CubicSpline(phi, vals)
    anti = spline.antiderivative()
    support = (float(phi[0]), float(phi[-1]))
    prof = None

    def fp(p):
        prof.check_support(p)
        return spline(np.asarray(p, dtype=float))

    def f(p):
        prof.check_support(p)
        return anti(np.asarray(p, dtype=float))

    prof = PlaneWaveProfile(
        k, eps, f, fp, "tabulated", {"phi": phi.tolist(), "fprime": vals.tolist()}, support
    )
    return prof


def read_profile_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a ``phi,fprime`` CSV (header required)."""
    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != ["phi", "fprime"]:
            raise DomainError(f"profile CSV header must be 'phi,fprime', got {header}")
        try:
            rows = [(float(a), float(b)) for a, b in reader if (a, b) != ("", "")]
        except ValueError as exc:
            raise DomainError(f"profile CSV line {reader.line_num}: {exc}") from None
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def profile_from_csv(k, eps, path) -> PlaneWaveProfile:
    phi, fp = read_profile_csv(path)
    return tabulated_profile(k, eps, phi, fp)


# ---------------------------------------------------------------------------
# light-cone bases and frame alignment


@dataclass(frozen=True)
class LightConeBasis:
    """Null tetrad adapted to a wave vector ``k``."""

    k: np.ndarray
    kbar: np.ndarray
    eps: np.ndarray
    epsbar: np.ndarray

    @property
    def eps_plus(self) -> np.ndarray:
        return (self.eps + 1j * self.epsbar) / math.sqrt(2.0)

    @property
    def eps_minus(self) -> np.ndarray:
        return (self.eps - 1j * self.epsbar) / math.sqrt(2.0)

    def residuals(self) -> dict[str, float]:
        k, kb, e, eb = self.k, self.kbar, self.eps, self.epsbar
        ep, em = self.eps_plus, self.eps_minus
        comp = np.outer(k, kb) + np.outer(kb, k) - np.outer(e, e) - np.outer(eb, eb)
        return {
            "k.k": abs(dot(k, k)),
            "kbar.kbar": abs(dot(kb, kb)),
            "eps.k": abs(dot(e, k)),
            "epsbar.k": abs(dot(eb, k)),
            "eps.kbar": abs(dot(e, kb)),
            "epsbar.kbar": abs(dot(eb, kb)),
            "eps.epsbar": abs(dot(e, eb)),
            "eps.eps+1": abs(dot(e, e) + 1),
            "epsbar.epsbar+1": abs(dot(eb, eb) + 1),
            "k.kbar-1": abs(dot(k, kb) - 1),
            "eps+.eps-+1": abs(dot(ep, em) + 1),
            "eps+.eps+": abs(dot(ep, ep)),
            "eps-.eps-": abs(dot(em, em)),
            "completeness": float(np.max(np.abs(comp - METRIC))),
        }

    def components(self, v) -> np.ndarray:
        """Projections ``(k.v, kbar.v, eps.v, epsbar.v)``."""
        return np.array([dot(self.k, v), dot(self.kbar, v), dot(self.eps, v), dot(self.epsbar, v)])

    def assemble(self, kv, kbv, ev, ebv):
        """Inverse of :meth:`components` via the completeness relation (broadcasts)."""
        kv, kbv, ev, ebv = (np.asarray(a)[..., None] for a in (kv, kbv, ev, ebv))
        return self.k * kbv + self.kbar * kv - self.eps * ev - self.epsbar * ebv

    def transformed(self, L) -> "LightConeBasis":
        return LightConeBasis(L @ self.k, L @ self.kbar, L @ self.eps, L @ self.epsbar)


def _levi_cross(a, b, c) -> np.ndarray:
    """``w^mu = epsilon^{mu nu rho sigma} a_nu b_rho c_sigma``."""
    return np.einsum("mnrs,n,r,s->m", _LEVI_CIVITA, lower(a), lower(b), lower(c))


def _orientation(k, kb, e, eb) -> float:
    return float(np.sign(np.linalg.det(np.array([k, kb, e, eb]))))


# orientation of the standard frame k=(1,0,0,1), kbar=(1,0,0,-1)/2, eps=x, epsbar=y
_STANDARD_ORIENTATION = _orientation(
    np.array([1.0, 0, 0, 1]), np.array([0.5, 0, 0, -0.5]), np.array([0.0, 1, 0, 0]), np.array([0.0, 0, 1, 0])
)


def lightcone_basis(k, eps) -> LightConeBasis:
    """Complete ``(k, eps)`` to a null tetrad ``(k, kbar, eps, epsbar)``.

    ``kbar`` is built from the spatial reflection of ``k`` and corrected to be
    orthogonal to ``eps``; ``epsbar`` follows from the Levi-Civita tensor with
    the orientation of the standard frame.
    """
    k = four_vector(k)
    eps = four_vector(eps)
    scale = float(np.linalg.norm(k))
    if scale == 0 or k[0] == 0:
        raise DomainError("k must be a nonzero null vector")
    if abs(dot(k, k)) > 1e-12 * scale**2:
        raise DomainError(f"k is not null: k.k = {dot(k, k)}")
    if abs(dot(eps, eps) + 1.0) > 1e-12:
        raise DomainError(f"eps is not unit spacelike: eps.eps = {dot(eps, eps)}")
    if abs(dot(k, eps)) > 1e-12 * scale:
        raise DomainError(f"eps is not orthogonal to k: k.eps = {dot(k, eps)}")
    kb = np.concatenate([[k[0]], -k[1:]]) / (2.0 * k[0] ** 2)
    kb = kb / dot(k, kb)
    a = dot(kb, eps)
    kb = kb + a * eps - 0.5 * a * a * k
    eb = _levi_cross(k, kb, eps)
    eb = eb / math.sqrt(-dot(eb, eb))
    if _orientation(k, kb, eps, eb) != _STANDARD_ORIENTATION:
        eb = -eb
    return LightConeBasis(k, kb, eps, eb)


def boost_matrix(beta) -> np.ndarray:
    """Passive boost into the frame moving with velocity ``beta``."""
    beta = np.asarray(beta, dtype=float)
    b2 = float(beta @ beta)
    L = np.eye(4)
    if b2 == 0.0:
        return L
    if b2 >= 1.0:
        raise DomainError("superluminal boost velocity")
    g = 1.0 / math.sqrt(1.0 - b2)
    L[0, 0] = g
    L[0, 1:] = -g * beta
    L[1:, 0] = -g * beta
    L[1:, 1:] += (g - 1.0) * np.outer(beta, beta) / b2
    return L


def rotation_to_z(n) -> np.ndarray:
    """4x4 spatial rotation taking the unit 3-vector ``n`` to ``+z``."""
    n = np.asarray(n, dtype=float) / np.linalg.norm(n)
    z = np.array([0.0, 0.0, 1.0])
    c = float(n @ z)
    axis = np.cross(n, z)
    s = float(np.linalg.norm(axis))
    if s < 1e-15:
        R3 = np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    else:
        u = axis / s
        K = np.array([[0, -u[2], u[1]], [u[2], 0, -u[0]], [-u[1], u[0], 0]])
        R3 = np.eye(3) + s * K + (1 - c) * K @ K
    R = np.eye(4)
    R[1:, 1:] = R3
    return R


@dataclass(frozen=True)
class AlignedFrame:
    """Result of :func:`align_frame`.

    ``transform`` maps lab coordinates to the frame where ``E || B || k``;
    ``basis`` is expressed in lab components and satisfies
    ``F0^{mu nu} = E0 (k kbar - kbar k) - B0 (eps epsbar - epsbar eps)``.
    """

    transform: np.ndarray
    E0: float
    B0: float
    basis: LightConeBasis


def align_frame(F0: FieldTensor, k, eps=None) -> AlignedFrame:
    """Find the frame where the constant field is parallel to the wave direction.

    A drift boost makes ``E`` and ``B`` parallel, then a rotation puts the wave
    direction on ``+z``.  This only succeeds when ``k`` is a principal null
    direction of ``F0``; otherwise no such frame exists and
    :class:`DomainError` is raised.  ``E0`` is returned with the sign of
    ``E.k_hat`` in the aligned frame, ``B0 <= 0`` and the transverse basis
    orientation absorbs the sign of the magnetic field.
    """
    k = four_vector(k)
    if eps is None:
        eps = lightcone_basis(k, _any_transverse(k)).eps
    eps = four_vector(eps)
    if F0.scale == 0.0:
        return AlignedFrame(np.eye(4), 0.0, 0.0, lightcone_basis(k, eps))
    if is_null(F0):
        raise NullFieldError("constant field is null (E perpendicular to B, |E| = |B|): no alignment frame exists")
    Lb, _ = _drift_frame(F0)
    kb = Lb @ k
    kdir = kb[1:] / np.linalg.norm(kb[1:])
    if np.linalg.norm(kb[1:]) < 1e-14 * np.linalg.norm(k):
        raise DomainError("transformed wave vector is degenerate")
    Rot = rotation_to_z(kdir)
    L = Rot @ Lb
    Fa = F0.transformed(L)
    Ea, Ba = Fa.E, Fa.B
    scale = F0.scale * float(Lb[0, 0]) ** 2
    transverse = max(np.linalg.norm(Ea[:2]), np.linalg.norm(Ba[:2]))
    if transverse > 1e-9 * scale:
        raise DomainError(
            "wave vector is not a principal null direction of the constant field; "
            f"no frame with E || B || k exists (transverse residual {transverse:.3e})"
        )
    E0_mag, B0 = secular_amplitudes(F0)
    E0 = E0_mag if Ea[2] >= 0 else -E0_mag
    ka = L @ k
    kappa = ka[0]
    kbar_a = np.array([1.0, 0.0, 0.0, -1.0]) / (2.0 * kappa)
    ea = L @ eps
    ea = ea - dot(ea, kbar_a) * ka
    ea = np.array([0.0, ea[1], ea[2], 0.0])
    ea /= np.linalg.norm(ea)
    orient = 1.0
    if B0 != 0.0 and Ba[2] != 0.0:
        orient = -math.copysign(1.0, Ba[2])
    eba = orient * np.concatenate([[0.0], np.cross([0.0, 0.0, 1.0], ea[1:])])
    Linv = METRIC @ L.T @ METRIC
    basis = LightConeBasis(Linv @ ka, Linv @ kbar_a, Linv @ ea, Linv @ eba)
    basis = LightConeBasis(k, basis.kbar, basis.eps, basis.epsbar)
    rebuilt = E0 * (np.outer(basis.k, basis.kbar) - np.outer(basis.kbar, basis.k)) - B0 * (
        np.outer(basis.eps, basis.epsbar) - np.outer(basis.epsbar, basis.eps)
    )
    if np.max(np.abs(rebuilt - F0.con)) > 1e-9 * F0.scale:
        raise DomainError("aligned-frame reconstruction of the constant field failed")
    return AlignedFrame(L, float(E0), float(B0), basis)


def _drift_frame(F0: FieldTensor) -> tuple[np.ndarray, np.ndarray]:
    """Boost making E and B parallel and their common unit direction in that frame."""
    E, B = F0.E, F0.B
    S = E @ E + B @ B
    P = np.cross(E, B)
    P2 = float(P @ P)
    v = P * (S - math.sqrt(max(S * S - 4 * P2, 0.0))) / (2 * P2) if P2 > 0 else np.zeros(3)
    Lb = boost_matrix(v)
    Fb = F0.transformed(Lb)
    n = Fb.E if np.linalg.norm(Fb.E) >= np.linalg.norm(Fb.B) else Fb.B
    return Lb, n / np.linalg.norm(n)


def principal_null_directions(F0: FieldTensor) -> tuple[np.ndarray, np.ndarray]:
    """The two future null eigen-directions of a non-null constant field (unit time component).

    The first one is parallel to the electric field in the drift frame, so
    :func:`align_frame` returns ``E0 >= 0`` for it.
    """
    if F0.scale == 0.0 or is_null(F0):
        raise NullFieldError("principal null directions need a non-null, nonzero field")
    Lb, n = _drift_frame(F0)
    Fb = F0.transformed(Lb)
    if Fb.E @ n < 0:
        n = -n
    Linv = METRIC @ Lb.T @ METRIC
    out = []
    for s in (1.0, -1.0):
        kk = Linv @ np.concatenate([[1.0], s * n])
        out.append(kk / kk[0])
    return out[0], out[1]


def _any_transverse(k) -> np.ndarray:
    kdir = k[1:] / np.linalg.norm(k[1:])
    trial = np.array([1.0, 0.0, 0.0]) if abs(kdir[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e = trial - (trial @ kdir) * kdir
    return np.concatenate([[0.0], e / np.linalg.norm(e)])


# ---------------------------------------------------------------------------
# configurations and particle parameters


@dataclass(frozen=True)
class ParticleParams:
    """Mass, charge and einbein; ``lam = 2 alpha e`` couples the field into the equations of motion."""

    m: float
    e: float
    alpha: float | None = None

    def __post_init__(self):
        if not self.m > 0:
            raise DomainError(f"mass must be positive, got {self.m}")
        if self.alpha is None:
            object.__setattr__(self, "alpha", 1.0 / (2.0 * self.m))
        if not self.alpha > 0:
            raise DomainError(f"einbein alpha must be positive, got {self.alpha}")

    @property
    def lam(self) -> float:
        return 2.0 * self.alpha * self.e


@dataclass(frozen=True)
class ConstantUniform:
    F0: FieldTensor
    tag = "constant"


@dataclass(frozen=True)
class PlaneWave:
    profile: PlaneWaveProfile
    basis: LightConeBasis
    tag = "planewave"

    @classmethod
    def from_profile(cls, profile: PlaneWaveProfile) -> "PlaneWave":
        return cls(profile, lightcone_basis(profile.k, profile.eps))


@dataclass(frozen=True)
class Combined:
    F0: FieldTensor
    profile: PlaneWaveProfile
    aligned: LightConeBasis
    E0: float
    B0: float
    frame_transform: np.ndarray
    tag = "combined"

    @classmethod
    def build(cls, F0: FieldTensor, profile: PlaneWaveProfile) -> "Combined":
        fr = align_frame(F0, profile.k, profile.eps)
        # the projected polarization gives the same wave tensor and is orthogonal to kbar
        prof = profile.with_polarization(fr.basis.eps)
        return cls(F0, prof, fr.basis, fr.E0, fr.B0, fr.transform)


FieldConfig = Union[ConstantUniform, PlaneWave, Combined]


def plane_wave_tensor(profile: PlaneWaveProfile, phase) -> np.ndarray:
    """Covariant plane-wave tensor at the given phase(s); shape ``(..., 4, 4)``."""
    fp = np.asarray(profile.fprime(phase))
    return fp[..., None, None] * profile.tensor()


def field_at(config: FieldConfig, x, frame: str = "lab") -> FieldTensor:
    """Field tensor of ``config`` at the point ``x``.

    For a combined configuration ``frame="aligned"`` returns the components in
    the frame where ``E || B || k`` (``x`` is then taken as lab coordinates).
    """
    x = four_vector(x)
    if isinstance(config, ConstantUniform):
        return config.F0
    if isinstance(config, PlaneWave):
        return FieldTensor(plane_wave_tensor(config.profile, dot(config.profile.k, x)))
    if isinstance(config, Combined):
        F = config.F0 + FieldTensor(plane_wave_tensor(config.profile, dot(config.profile.k, x)))
        if frame == "aligned":
            return F.transformed(config.frame_transform)
        return F
    raise TypeError(f"unknown field configuration {config!r}")


def mixed_field_batch(config: FieldConfig, y) -> np.ndarray:
    """Mixed tensors ``F^mu_nu(y)`` for a batch of points ``y`` of shape ``(..., 4)``."""
    y = np.asarray(y, dtype=float)
    if isinstance(config, ConstantUniform):
        return np.broadcast_to(config.F0.mixed, y.shape[:-1] + (4, 4))
    prof = config.profile
    pw = METRIC @ plane_wave_tensor(prof, dot(prof.k, y))
    if isinstance(config, Combined):
        pw = pw + config.F0.mixed
    return pw

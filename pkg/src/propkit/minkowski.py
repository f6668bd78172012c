"""Minkowski-space linear algebra and analytic matrix functions of the field tensor.

Four-vectors are plain ``numpy`` arrays of shape ``(4,)`` (or ``(..., 4)`` for
batches) with the time component first.  The metric is ``diag(+1, -1, -1, -1)``
and natural units (hbar = c = 1) are used throughout the package.

The matrix functions here are evaluated by scaled truncated Taylor series plus
doubling formulas and linear solves.  Eigendecomposition is avoided because the
crossed-field tensor is nilpotent and not diagonalizable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CausticError, ConvergenceError, DomainError, ResonanceError

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])
IDENTITY = np.eye(4)

# scaled series argument norm; keeps the Taylor tail below double precision in ~20 terms
_SERIES_NORM = 0.5
_MAX_TERMS = 60
_COND_LIMIT = 1e12


def four_vector(v) -> np.ndarray:
    """Validate and return ``v`` as a finite float array of shape ``(4,)``."""
    arr = np.asarray(v, dtype=float)
    if arr.shape != (4,):
        raise DomainError(f"four-vector must have 4 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"four-vector has non-finite components: {arr}")
    return arr


def dot(a, b):
    """Minkowski product ``a0 b0 - a1 b1 - a2 b2 - a3 b3`` (broadcasts over leading axes)."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 0] - a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2] - a[..., 3] * b[..., 3]


def lower(v):
    """Lower the index of a contravariant vector (also works on batches)."""
    v = np.asarray(v)
    return v * np.array([1.0, -1.0, -1.0, -1.0])


raise_index = lower  # the metric is its own inverse


def _cov_array(F) -> np.ndarray:
    return np.asarray(getattr(F, "cov", F))


def mixed_tensor(F) -> np.ndarray:
    """Return ``F^mu_nu = g^{mu rho} F_{rho nu}`` from a covariant tensor.

    ``F`` may be a :class:`propkit.fields.FieldTensor` or a 4x4 array.  The
    time row is kept and the spatial rows flip sign.
    """
    return METRIC @ _cov_array(F)


def minkowski_norm(v) -> float:
    """Euclidean norm of the components, used only for tolerance scaling."""
    return float(np.linalg.norm(np.asarray(v)))


def exprel(z):
    """``(exp(z) - 1) / z`` for real or complex ``z`` with the removable point at 0."""
    z = np.asarray(z)
    out = np.ones_like(z, dtype=np.result_type(z, float))
    small = np.abs(z) < 1e-8
    big = ~small
    out[big] = np.expm1(z[big]) / z[big]
    zs = z[small]
    out[small] = 1.0 + zs / 2.0 + zs * zs / 6.0
    return out if out.ndim else out[()]


def _scaling(X: np.ndarray) -> int:
    nrm = np.linalg.norm(X, 1)
    if nrm <= _SERIES_NORM:
        return 0
    return int(math.ceil(math.log2(nrm / _SERIES_NORM)))


def phi1(X, tol: float = 1e-16) -> np.ndarray:
    """Matrix function ``phi1(X) = sum_n X^n / (n+1)!``, i.e. ``(e^X - 1) X^{-1}``.

    Evaluated by the Taylor series of ``X / 2^s`` followed by ``s`` applications
    of ``phi1(2Y) = phi1(Y) (e^Y + 1) / 2``.  Nilpotent inputs terminate exactly.
    """
    X = np.asarray(X)
    dtype = np.result_type(X, float)
    s = _scaling(X)
    Y = X / (2.0**s)
    ident = np.eye(X.shape[0], dtype=dtype)
    total = ident.copy()
    term = ident.copy()
    residual = np.inf
    for n in range(1, _MAX_TERMS):
        term = term @ Y / (n + 1)
        total = total + term
        residual = np.linalg.norm(term, 1)
        if residual <= tol * np.linalg.norm(total, 1):
            break
    else:
        raise ConvergenceError("phi1 series did not converge", estimate=total, residual=residual)
    for _ in range(s):
        expY = ident + Y @ total
        total = total @ (expY + ident) / 2.0
        Y = 2.0 * Y
    return total


def expm(X) -> np.ndarray:
    """Matrix exponential as ``I + X phi1(X)``."""
    X = np.asarray(X)
    return np.eye(X.shape[0]) + X @ phi1(X)


def _resonant_eigenvalue(X: np.ndarray, period: complex):
    """Eigenvalue of ``X`` closest to a nonzero multiple of ``period`` (diagnostics only)."""
    eig = np.linalg.eigvals(X)
    best = None
    for lam in eig:
        k = round((lam / period).real)
        if k == 0:
            continue
        d = abs(lam - k * period)
        if best is None or d < best[0]:
            best = (d, lam, k)
    return (None, 0) if best is None else (best[1], best[2])


def path_ratio(F, lam: float, sigma: float, tau: float) -> np.ndarray:
    """Singularity-safe ``(e^{lam F sigma} - 1)(e^{lam F tau} - 1)^{-1}`` for mixed ``F``.

    Written as ``sigma phi1(lam F sigma) [tau phi1(lam F tau)]^{-1}`` so that a
    non-invertible field tensor is harmless.  ``R(0) = 0`` and ``R(tau) = I``.
    """
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau}")
    if not 0.0 <= sigma <= tau * (1 + 1e-14):
        raise DomainError(f"sigma={sigma} outside [0, tau={tau}]")
    Fm = mixed_tensor(F)
    denom = tau * phi1(lam * Fm * tau)
    check_resonance(denom, lam * Fm * tau, 2j * math.pi, tau)
    return np.linalg.solve(denom.T, (sigma * phi1(lam * Fm * sigma)).T).T


def check_resonance(denom: np.ndarray, X: np.ndarray, period: complex, tau: float, error=ResonanceError):
    """Raise ``error`` when ``denom`` is numerically singular, naming the offending eigenvalue."""
    if np.linalg.cond(denom) > _COND_LIMIT:
        lam, k = _resonant_eigenvalue(X, period)
        crit = None
        if lam is not None and k:
            crit = tau * abs(k * period / lam) if lam != 0 else None
        raise error(
            f"singular matrix function: eigenvalue {lam} of the scaled field tensor sits on the "
            f"resonance {k}*{period} (critical tau ~ {crit})",
            eigenvalue=lam,
            critical_tau=crit,
        )


def sinhc_and_cosh(X) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(sinh(X) X^{-1}, cosh(X))`` by scaled even series and doubling."""
    X = np.asarray(X)
    dtype = np.result_type(X, float)
    s = _scaling(X)
    Y = X / (2.0**s)
    Y2 = Y @ Y
    ident = np.eye(X.shape[0], dtype=dtype)
    S = ident.copy()
    C = ident.copy()
    term = ident.copy()
    for n in range(1, _MAX_TERMS):
        term = term @ Y2 / ((2 * n) * (2 * n + 1))
        S = S + term
        C = C + term * (2 * n + 1)
        if np.linalg.norm(term, 1) * (2 * n + 1) <= 1e-17 * np.linalg.norm(C, 1):
            break
    for _ in range(s):
        S = S @ C
        C = 2.0 * C @ C - ident
    return S, C


def sinhc_inv_sq(X) -> np.ndarray:
    """``h(X) = X^2 sinh^{-2}(X)``, an even function analytic at ``X = 0`` with ``h(0) = I``.

    Raises :class:`CausticError` when an eigenvalue of ``X`` lies at ``i pi k``
    with ``k != 0`` (where ``sinh`` vanishes).
    """
    X = np.asarray(X)
    S, _ = sinhc_and_cosh(X)
    check_resonance(S, X, 1j * math.pi, 1.0, error=CausticError)
    Sinv = np.linalg.inv(S)
    return Sinv @ Sinv


@dataclass(frozen=True)
class BranchedSqrt:
    """Square root of a determinant with an explicit winding count.

    ``value**2`` reproduces the determinant; ``branch_index`` counts how many
    times the continuously tracked argument of the determinant has wound past
    the principal range, so ``arg(det) = angle(det) + 2 pi branch_index``.
    """

    value: complex
    branch_index: int = 0

    @property
    def det(self) -> complex:
        return self.value * self.value

    @property
    def arg(self) -> float:
        """Continuous argument of the determinant."""
        return float(np.angle(self.det)) + 2.0 * math.pi * self.branch_index


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


def sqrt_continuous(d: complex, reference: BranchedSqrt | None = None) -> tuple[BranchedSqrt, float]:
    """Continue ``sqrt(d)`` from ``reference``; also return the argument jump used."""
    d = complex(d)
    if d == 0 or not np.isfinite(d):
        raise DomainError(f"cannot take square-root branch of determinant {d}")
    a = float(np.angle(d))
    if reference is None:
        theta, jump = a, 0.0
    else:
        jump = _wrap(a - float(np.angle(reference.det)))
        theta = reference.arg + jump
    k = int(round((theta - a) / (2.0 * math.pi)))
    value = math.sqrt(abs(d)) * complex(math.cos(theta / 2.0), math.sin(theta / 2.0))
    return BranchedSqrt(value, k), jump


def det_sqrt_continuous(M, reference: BranchedSqrt | None = None) -> BranchedSqrt:
    """Square root of ``det(M)`` on the branch continuous with ``reference``.

    Without a reference the principal branch is used (branch index 0), which is
    the branch of the free-particle limit where ``M`` tends to the identity.
    """
    M = np.asarray(M)
    d = complex(np.linalg.det(M))
    if d == 0 or not np.isfinite(d) or abs(d) < 1e-300 or abs(d) > 1e300:
        raise DomainError(f"determinant under/overflow or zero: {d}")
    return sqrt_continuous(d, reference)[0]

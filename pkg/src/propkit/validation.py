"""Seeded invariant suite behind the ``validate`` CLI task.

Every check draws its random instances from one ``numpy`` generator, runs
sequentially and reports values with ``repr`` precision, so two runs with
the same seed give identical reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import k1

from . import fields as fl
from . import gauge as gg
from . import kernels as kr
from . import trajectories as tr
from .minkowski import METRIC, path_ratio


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "value": float(self.value), "threshold": float(self.threshold),
                "passed": bool(self.passed), "detail": self.detail}


def _rel(a: complex, b: complex) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


class Instances:
    """Random inputs in the ranges used throughout the test-suite."""

    def __init__(self, seed: int):
        self.rng = np.random.default_rng(seed)

    def endpoints(self):
        xp = self.rng.uniform(-1, 1, 4)
        d = self.rng.normal(size=4)
        d *= self.rng.uniform(0.1, 5.0) / np.linalg.norm(d)
        return xp + d, xp

    def tau(self, hi=3.0):
        return float(self.rng.uniform(0.1, hi))

    def amplitude(self):
        return float(self.rng.uniform(0.1, 1.0))

    def constant_field(self):
        E = self.rng.normal(size=3)
        B = self.rng.normal(size=3)
        return fl.constant_from_EB(E / np.linalg.norm(E) * self.amplitude(), B / np.linalg.norm(B) * self.amplitude())

    def wave(self, k=None):
        if k is None:
            n = self.rng.normal(size=3)
            k = np.concatenate([[1.0], n / np.linalg.norm(n)])
        eps = fl.lightcone_basis(k, fl._any_transverse(k)).eps
        return fl.sinusoidal_profile(k, eps, self.amplitude(), float(self.rng.uniform(0.5, 2.0)),
                                     float(self.rng.uniform(0, 2 * math.pi)))

    def combined(self):
        F0 = self.constant_field()
        k = fl.principal_null_directions(F0)[0]
        return fl.Combined.build(F0, self.wave(k))


def _particle() -> fl.ParticleParams:
    return fl.ParticleParams(1.0, -1.0)


def run_suite(seed: int = 0, instances: int = 2, log: Callable[[str], None] | None = None) -> list[Check]:
    """Run every invariant family on ``instances`` random draws each."""
    gen = Instances(seed)
    p = _particle()
    checks: list[Check] = []

    def add(name, value, threshold, detail=""):
        ok = bool(np.isfinite(value) and value <= threshold)
        checks.append(Check(name, float(value), threshold, ok, detail))
        if log is not None:
            log(f"{'PASS' if ok else 'FAIL'} {name}: {value:.3e} (<= {threshold:.1e})")

    for i in range(instances):
        F = gen.constant_field()
        x, xp = gen.endpoints()
        tau = gen.tau()
        add(f"antisymmetry[{i}]", float(np.max(np.abs(F.cov + F.cov.T))), 0.0)
        k = gen.wave().k
        b = fl.lightcone_basis(k, fl._any_transverse(k))
        add(f"lightcone_basis[{i}]", max(b.residuals().values()), 1e-12)
        R0, R1 = path_ratio(F, p.lam, 0.0, tau), path_ratio(F, p.lam, tau, tau)
        add(f"path_ratio_boundary[{i}]", max(np.abs(R0).max(), np.abs(R1 - np.eye(4)).max()), 1e-12)

        # reduction lattice
        K0 = kr.kernel_free(p, x, xp, tau)
        add(f"reduce_constant_zero[{i}]", _rel(kr.kernel_constant(fl.FieldTensor.zero(), p, x, xp, tau).amplitude,
                                               K0.amplitude), 0.0)
        Fc = fl.crossed_field(gen.amplitude())
        add(f"reduce_crossed[{i}]", _rel(kr.kernel_crossed(Fc, p, x, xp, tau).amplitude,
                                         kr.kernel_constant(Fc, p, x, xp, tau).amplitude), 1e-10)
        wave = gen.wave(np.array([1.0, 0, 0, 1.0]))
        lin = fl.linear_profile(wave.k, wave.eps, gen.amplitude())
        basis = fl.lightcone_basis(lin.k, lin.eps)
        add(f"reduce_volkov_linear[{i}]", _rel(kr.kernel_volkov(lin, basis, p, x, xp, tau).amplitude,
                                               kr.kernel_crossed(fl.FieldTensor(lin.tensor() * lin.params["E0"]),
                                                                 p, x, xp, tau).amplitude), 1e-8)
        add(f"reduce_volkov_zero[{i}]", _rel(kr.kernel_volkov(wave.scaled(0.0), basis, p, x, xp, tau).amplitude,
                                             K0.amplitude), 1e-12)

        # trajectories against shooting
        s = np.linspace(0, tau, 41)
        cfg = fl.ConstantUniform(F)
        P = tr.path_constant(F, p, x, xp, tau)
        add(f"oracle_constant[{i}]", float(np.abs(P.y(s) - tr.shoot_bvp(cfg, p, x, xp, tau).y(s)).max()), 1e-5)
        add(f"eom_constant[{i}]", tr.eom_residual(P, cfg, p), 1e-8)
        pw = fl.PlaneWave.from_profile(wave)
        Q = tr.path_planewave(wave, pw.basis, p, x, xp, tau)
        add(f"oracle_planewave[{i}]", float(np.abs(Q.y(s) - tr.shoot_bvp(pw, p, x, xp, tau).y(s)).max()), 1e-5)
        add(f"eom_planewave[{i}]", tr.eom_residual(Q, pw, p), 1e-8)

        # vanishing line integral and the Fock-Schwinger gauge function
        scale = 1.0 + float(np.linalg.norm(x - xp)) * F.scale
        add(f"vanishing_constant[{i}]", abs(gg.flux_line(cfg, gg.ClassicalPath(cfg, p, xp, tau), P)), 1e-9 * scale)
        add(f"vanishing_planewave[{i}]", abs(gg.flux_line(pw, gg.ClassicalPath(pw, p, xp, tau), Q)),
            1e-9 * (1.0 + float(np.linalg.norm(x - xp))))
        cc = fl.ConstantUniform(Fc)
        Pc = tr.path_constant(Fc, p, x, xp, tau)
        D = x - xp
        chi = p.lam * tau / 12.0 * float(D @ Fc.cov @ METRIC @ Fc.cov @ D)
        flux = gg.flux_surface(cc, (Pc, gg.straight_path(xp, x)))
        add(f"fock_schwinger_chi[{i}]", _rel(flux, chi), 1e-8)
        Kc = kr.kernel_constant(Fc, p, x, xp, tau)
        Kfs = gg.gauge_transform_kernel(Kc, chi, 0.0, p.e)
        add(f"gauge_modulus[{i}]", abs(abs(Kfs.amplitude) - abs(Kc.amplitude)) / abs(Kc.amplitude), 4.5e-16)

        # Van Vleck and the tau-evolution equation
        Kf = kr.kernel_constant(F, p, x, xp, tau)
        H, _ = kr.vanvleck_fd(cfg, p, x, xp, tau)
        Hc = -METRIC @ Kf.diagnostics["M"] / (2 * p.alpha)
        add(f"vanvleck_matrix[{i}]", float(np.abs(H - Hc).max() / np.abs(Hc).max()), 1e-4)
        H, _ = kr.vanvleck_fd(cfg, p, x, xp, tau, gauge="fixed")
        add(f"vanvleck_prefactor[{i}]", _rel(kr.vanvleck_ratio(H, p, tau), Kf.prefactor_ratio**2), 1e-4)
        tpde = 0.5 + tau / 3
        for tag, c in (("free", None), ("constant", cfg)):
            r1 = abs(kr.kernel_pde_residual(c, p, x, xp, tpde, 4e-3))
            r2 = abs(kr.kernel_pde_residual(c, p, x, xp, tpde, 2e-3))
            add(f"pde_order_{tag}[{i}]", abs(r1 / r2 - 4.0), 0.5)

        # combined configuration
        cb = gen.combined()
        xc, xpc = gen.endpoints()
        tc = gen.tau(1.5)
        Pcb = tr.path_combined(cb, p, xc, xpc, tc)
        sc = np.linspace(0, tc, 21)
        add(f"oracle_combined[{i}]", float(np.abs(Pcb.y(sc) - tr.shoot_bvp(cb, p, xc, xpc, tc).y(sc)).max()), 1e-4)
        add(f"eom_combined[{i}]", tr.eom_residual(Pcb, cb, p), 1e-6)
        add(f"vanishing_combined[{i}]", abs(gg.flux_line(cb, gg.ClassicalPath(cb, p, xpc, tc), Pcb)),
            1e-9 * (1.0 + float(np.linalg.norm(xc - xpc)) * cb.F0.scale))

    # Green's function of the free particle against the Bessel form
    for r in (0.5, 2.0):
        G = kr.greens_function(None, p, np.array([0.0, r, 0.0, 0.0]), np.zeros(4))
        add(f"greens_free_r={r}", _rel(G.value, p.m * k1(p.m * r) / (4 * math.pi**2 * r)), 1e-4)
    return checks


def report(checks: list[Check], seed: int, instances: int) -> dict:
    return {
        "seed": seed,
        "instances": instances,
        "passed": all(c.passed for c in checks),
        "n_checks": len(checks),
        "n_failed": sum(not c.passed for c in checks),
        "checks": [c.as_dict() for c in checks],
    }

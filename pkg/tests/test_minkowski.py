import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles as o
from propkit.errors import CausticError, DomainError, ResonanceError
from propkit.fields import FieldTensor, constant_from_EB, crossed_field
from propkit.minkowski import (
    BranchedSqrt,
    det_sqrt_continuous,
    dot,
    expm,
    exprel,
    four_vector,
    mixed_tensor,
    path_ratio,
    phi1,
    sinhc_inv_sq,
    sqrt_continuous,
)

finite = st.floats(-3, 3, allow_nan=False)
mat4 = arrays(np.float64, (4, 4), elements=finite)


def test_dot_examples():
    assert dot([1, 0, 0, 0], [1, 0, 0, 0]) == 1
    assert dot([0, 1, 0, 0], [0, 1, 0, 0]) == -1
    assert dot([1, 0, 0, 1], [1, 0, 0, 1]) == 0


@given(arrays(np.float64, (4,), elements=finite), arrays(np.float64, (4,), elements=finite))
def test_dot_matches_metric(a, b):
    assert dot(a, b) == pytest.approx(o.mdot(a, b), abs=1e-12)


@pytest.mark.parametrize("bad", [[1, 2, 3], [0, np.nan, 0, 0], [np.inf, 0, 0, 0]])
def test_four_vector_rejects(bad):
    with pytest.raises(DomainError):
        four_vector(bad)


def test_mixed_tensor_examples():
    assert np.all(mixed_tensor(FieldTensor.zero()) == 0)
    C = mixed_tensor(crossed_field(0.7))
    assert np.abs(C @ C @ C).max() < 1e-16
    F = constant_from_EB([0, 0, 0], [0, 0, 0.8])
    ev = np.sort_complex(np.linalg.eigvals(mixed_tensor(F)))
    assert np.allclose(np.sort_complex(np.array([-0.8j, 0, 0, 0.8j])), ev, atol=1e-14)


def test_mixed_tensor_rows(draw):
    E, B = draw.EB()
    F = constant_from_EB(E, B)
    Fm = mixed_tensor(F)
    assert np.array_equal(Fm[0], F.cov[0])
    assert np.array_equal(Fm[1:], -F.cov[1:])
    assert np.trace(Fm) == 0


def test_phi1_examples():
    assert np.array_equal(phi1(np.zeros((4, 4))), np.eye(4))
    X = mixed_tensor(crossed_field(1.3)) * 2.0
    assert np.abs(phi1(X) - (np.eye(4) + X / 2 + X @ X / 6)).max() < 1e-15


@settings(max_examples=60, deadline=None)
@given(mat4)
def test_phi1_matches_dense_oracle(X):
    if abs(np.linalg.det(X)) < 1e-3 or np.linalg.cond(X) > 1e6:
        return
    ref = o.phi1_eig(X)
    assert np.abs(phi1(X) - ref).max() <= 1e-11 * max(1.0, np.abs(ref).max())


def test_expm_matches_scipy(draw):
    import scipy.linalg as sla

    for _ in range(10):
        X = draw.rng.normal(size=(4, 4)) * 2
        assert np.allclose(expm(X), sla.expm(X), rtol=1e-12, atol=1e-12)


def test_exprel():
    z = np.array([0.0, 1e-10, 1e-3, 1.0, -2.0, 0.5j])
    ref = np.array([1.0] + [np.expm1(v) / v for v in z[1:]])
    assert np.allclose(exprel(z), ref, rtol=1e-15)


def test_path_ratio_free_limit():
    R = path_ratio(FieldTensor.zero(), -1.0, 0.3, 1.2)
    assert np.allclose(R, 0.25 * np.eye(4), atol=1e-15)


def test_path_ratio_boundary_identities(draw):
    for _ in range(20):
        E, B = draw.EB()
        F = constant_from_EB(E, B)
        tau = draw.tau()
        lam = draw.rng.choice([-1.0, 1.0]) * draw.rng.uniform(0.1, 2)
        assert np.abs(path_ratio(F, lam, 0.0, tau)).max() <= 1e-12
        assert np.abs(path_ratio(F, lam, tau, tau) - np.eye(4)).max() <= 1e-12


def test_path_ratio_small_lambda_expansion(draw):
    E, B = draw.EB()
    F = constant_from_EB(E, B)
    tau, sigma = 1.0, 0.37
    errs = []
    for lam in (1e-3, 5e-4, 2.5e-4):
        two_term = sigma / tau * np.eye(4) + lam * (sigma**2 - sigma * tau) / (2 * tau) * F.mixed
        errs.append(np.abs(path_ratio(F, lam, sigma, tau) - two_term).max())
    assert errs[0] < 1e-5
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 1.95


def test_path_ratio_dense_oracle(draw):
    for _ in range(20):
        E, B = draw.EB()
        F = constant_from_EB(E, B)
        tau = draw.tau()
        sigma = draw.rng.uniform(0, tau)
        ref = o.path_ratio_dense(F.cov, -1.0, sigma, tau)
        assert np.abs(path_ratio(F, -1.0, sigma, tau) - ref).max() < 1e-10


def test_path_ratio_resonance_names_eigenvalue():
    B = 1.0
    F = constant_from_EB([0, 0, 0], [0, 0, B])
    tau = 2 * math.pi / B  # lam F tau has eigenvalues +-2 pi i
    with pytest.raises(ResonanceError) as exc:
        path_ratio(F, 1.0, 0.5, tau)
    assert exc.value.eigenvalue is not None
    assert abs(abs(exc.value.eigenvalue) - 2 * math.pi) < 1e-8


def test_path_ratio_rejects_sigma_outside():
    with pytest.raises(DomainError):
        path_ratio(FieldTensor.zero(), 1.0, 2.0, 1.0)
    with pytest.raises(DomainError):
        path_ratio(FieldTensor.zero(), 1.0, 0.0, 0.0)


def test_sinhc_inv_sq_examples():
    assert np.allclose(sinhc_inv_sq(np.zeros((4, 4))), np.eye(4), atol=1e-16)
    X = mixed_tensor(crossed_field(0.9)) * 1.7
    assert np.abs(sinhc_inv_sq(X) - (np.eye(4) - X @ X / 3)).max() < 1e-14
    d = np.array([0.3, -1.1, 2.0, 1e-9])
    ref = np.array([(x / math.sinh(x)) ** 2 for x in d])
    assert np.allclose(np.diag(sinhc_inv_sq(np.diag(d))), ref, rtol=1e-12)


def test_sinhc_inv_sq_eigen_oracle(draw):
    for _ in range(20):
        E, B = draw.EB()
        X = mixed_tensor(constant_from_EB(E, B)) * draw.tau() / 2
        ref = o.h_eig(X)
        assert np.abs(sinhc_inv_sq(X) - ref).max() < 1e-12 * max(1.0, np.abs(ref).max())


def test_sinhc_inv_sq_caustic():
    X = mixed_tensor(constant_from_EB([0, 0, 0], [0, 0, math.pi]))
    with pytest.raises(CausticError):
        sinhc_inv_sq(X)


def test_det_sqrt_examples():
    r = det_sqrt_continuous(np.eye(4))
    assert r.value == 1 and r.branch_index == 0
    r = det_sqrt_continuous(2.5 * np.eye(4))
    assert r.value == pytest.approx(2.5**2, rel=1e-14) and r.branch_index == 0


def test_det_sqrt_value_squares_to_det(draw):
    for _ in range(20):
        M = draw.rng.normal(size=(4, 4)) + 1j * draw.rng.normal(size=(4, 4))
        r = det_sqrt_continuous(M)
        d = np.linalg.det(M)
        assert abs(r.value**2 - d) <= 1e-12 * abs(d)


def test_det_sqrt_branch_tracking_across_winding():
    # det = exp(i t) winds twice around the origin; the root must stay smooth
    ref = None
    values, branches = [], []
    for t in np.linspace(0, 4 * math.pi, 400):
        M = np.diag([np.exp(1j * t), 1, 1, 1])
        ref = det_sqrt_continuous(M, ref)
        values.append(ref.value)
        branches.append(ref.branch_index)
    values = np.array(values)
    assert np.abs(np.diff(values)).max() < 0.05
    assert np.allclose(values, np.exp(0.5j * np.linspace(0, 4 * math.pi, 400)), atol=1e-12)
    assert branches[-1] == 2 and all(b1 >= b0 for b0, b1 in zip(branches, branches[1:]))


def test_det_sqrt_rejects_singular():
    with pytest.raises(DomainError):
        det_sqrt_continuous(np.zeros((4, 4)))
    with pytest.raises(DomainError):
        sqrt_continuous(0.0)


def test_branched_sqrt_arg():
    b = BranchedSqrt(np.exp(0.5j * 3 * math.pi), 1)
    assert b.arg == pytest.approx(3 * math.pi - 2 * math.pi + 2 * math.pi)

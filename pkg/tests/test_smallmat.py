import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from hypothesis.extra.numpy import arrays

from lyadim.smallmat import (charpoly, eigen_general, eigen_symmetric, log_omega_d, omega_d,
                             qr_posdiag, singular_values)
from oracles import cofactor_det, random_orthogonal

entries = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def square(n_min=2, n_max=4):
    return st.integers(n_min, n_max).flatmap(lambda n: arrays(float, (n, n), elements=entries))


# --- QR ----------------------------------------------------------------------------

def test_qr_identity():
    q, r = qr_posdiag(np.eye(3))
    assert np.allclose(q, np.eye(3)) and np.allclose(r, np.eye(3))


def test_qr_sign_convention():
    q, r = qr_posdiag(np.diag([2.0, -3.0]))
    assert np.allclose(q, np.diag([1.0, -1.0]))
    assert np.allclose(r, np.diag([2.0, 3.0]))


def test_qr_random_well_conditioned():
    rng = np.random.default_rng(0)
    for _ in range(50):
        m = rng.normal(size=(3, 3)) + 3 * np.eye(3)
        if np.linalg.cond(m) >= 1e3:
            continue
        q, r = qr_posdiag(m)
        assert np.linalg.norm(q @ r - m) < 1e-12 * np.linalg.norm(m)


@given(square())
def test_qr_properties(m):
    q, r = qr_posdiag(m)
    n = len(m)
    assert np.allclose(q.T @ q, np.eye(n), atol=1e-12)
    assert np.allclose(np.tril(r, -1), 0.0)
    assert np.all(np.diag(r) >= 0)
    assert np.linalg.norm(q @ r - m) <= 1e-12 * max(1.0, np.linalg.norm(m))
    det = abs(cofactor_det(m))
    assert abs(np.prod(np.diag(r)) - det) <= 1e-10 * max(1.0, np.prod(np.abs(np.linalg.svd(
        m, compute_uv=False)[:1])) ** n)


def test_qr_singular_has_zero_diagonal():
    q, r = qr_posdiag(np.zeros((3, 3)))
    assert np.all(np.diag(r) == 0.0)


# --- singular values -------------------------------------------------------------

def test_singular_values_diagonal_and_identity():
    assert np.allclose(singular_values(np.diag([3.0, 2.0, 0.5])), [3.0, 2.0, 0.5])
    assert np.allclose(singular_values(np.diag([-0.5, 3.0, -2.0])), [3.0, 2.0, 0.5])
    assert np.allclose(singular_values(np.eye(3)), [1, 1, 1])


@given(square())
def test_singular_values_match_gram_eigenvalues(m):
    sv = singular_values(m)
    assert np.all(np.diff(sv) <= 0) and np.all(sv >= 0)
    ev = np.sort(np.linalg.eigvalsh(m.T @ m))[::-1]
    assert np.allclose(sv ** 2, np.clip(ev, 0, None), rtol=1e-10, atol=1e-10 * max(1, ev[0]))


@given(square())
def test_singular_value_product_is_abs_det(m):
    det = abs(cofactor_det(m))
    scale = max(1.0, float(np.max(np.abs(m)))) ** len(m)
    assert abs(np.prod(singular_values(m)) - det) <= 1e-9 * max(det, 1e-3 * scale)


@given(square(), st.integers(0, 2 ** 32 - 1))
def test_singular_values_orthogonal_invariance(m, seed):
    rng = np.random.default_rng(seed)
    n = len(m)
    u, v = random_orthogonal(rng, n), random_orthogonal(rng, n)
    a, b = singular_values(m), singular_values(u @ m @ v.T)
    assert np.allclose(a, b, atol=1e-9 * max(1.0, a[0]))


# --- omega_d -------------------------------------------------------------------------

def test_omega_examples():
    sp = np.array([3.0, 2.0, 0.5])
    assert omega_d(sp, 0) == 1.0
    assert math.isclose(omega_d(sp, 2.5), 6 * 0.5 ** 0.5)
    assert math.isclose(omega_d(sp, 3), 3.0)
    assert math.isclose(log_omega_d(sp, 2.5), math.log(6 * 0.5 ** 0.5))


def test_omega_rejects_out_of_range():
    with pytest.raises(ValueError):
        omega_d([1.0, 0.5], 2.5)
    with pytest.raises(ValueError):
        omega_d([1.0, 0.5], -0.1)


def test_omega_zero_singular_value():
    assert omega_d([2.0, 0.0], 1.5) == 0.0
    assert omega_d([2.0, 0.0], 1.0) == 2.0
    assert log_omega_d([2.0, 0.0], 1.5) == -math.inf


@given(arrays(float, (2, 4, 4), elements=entries), st.integers(2, 4))
def test_horn_inequality(pair, n):
    a, c = pair[0][:n, :n], pair[1][:n, :n]
    sa, sc, sac = singular_values(a), singular_values(c), singular_values(a @ c)
    # fractional powers of roundoff-level singular values are not meaningful
    assume(sa[-1] > 1e-3 and sc[-1] > 1e-3)
    for d in np.arange(0.0, n + 1e-12, 0.25):
        lhs = omega_d(sac, d)
        rhs = omega_d(sa, d) * omega_d(sc, d)
        assert lhs <= rhs * (1 + 1e-9) + 1e-9


@given(arrays(float, 4, elements=st.floats(0.01, 10)), st.integers(0, 3),
       st.floats(0, 0.999))
def test_omega_split_identity(vals, j, s):
    sp = np.sort(vals)[::-1]
    lhs = omega_d(sp, j + s)
    rhs = omega_d(sp, j) ** (1 - s) * omega_d(sp, j + 1) ** s
    assert math.isclose(lhs, rhs, rel_tol=1e-12)


# --- eigenvalues ---------------------------------------------------------------------

def test_eigen_symmetric_examples():
    assert np.allclose(eigen_symmetric(np.diag([1.0, 3.0, 2.0])), [3, 2, 1])
    assert np.allclose(eigen_symmetric(np.eye(3)), [1, 1, 1])


def test_eigen_symmetric_lorenz_origin():
    s, r, b = 10.0, 28.0, 8.0 / 3.0
    j = np.array([[-s, s, 0], [r, -1, 0], [0, 0, -b]])
    sym = 0.5 * (j + j.T)
    ev = eigen_symmetric(sym)
    assert math.isclose(ev.sum(), -(s + 1 + b), rel_tol=1e-12)
    # oracle: the 2x2 block's quadratic and the decoupled entry
    tr, det = -(s + 1), s - ((s + r) / 2) ** 2
    disc = math.sqrt(tr * tr - 4 * det)
    ref = sorted([(tr + disc) / 2, (tr - disc) / 2, -b], reverse=True)
    assert np.allclose(ev, ref, rtol=1e-12)


def test_eigen_symmetric_rejects_asymmetric():
    with pytest.raises(ValueError):
        eigen_symmetric(np.array([[1.0, 2.0], [0.0, 1.0]]))


@given(square())
def test_eigen_symmetric_trace_and_det(m):
    sym = m + m.T
    ev = eigen_symmetric(sym)
    assert np.all(np.diff(ev) <= 0)
    scale = max(1.0, float(np.max(np.abs(sym))))
    assert abs(ev.sum() - np.trace(sym)) <= 1e-10 * scale * len(m)
    det = cofactor_det(sym)
    assert abs(np.prod(ev) - det) <= 1e-10 * scale ** len(m)


def test_eigen_general_lorenz_origin():
    s, r, b = 10.0, 28.0, 8.0 / 3.0
    ev = eigen_general(np.array([[-s, s, 0], [r, -1, 0], [0, 0, -b]]))
    ref = [(-11 + math.sqrt(1201)) / 2, -8 / 3, (-11 - math.sqrt(1201)) / 2]
    assert np.allclose([z.real for z in ev], ref, rtol=1e-12)
    assert math.isclose(ev[0].real, 11.8277, abs_tol=1e-4)


def test_eigen_general_examples():
    assert [z.real for z in eigen_general(np.diag([1.0, 2.0, 3.0]))] == pytest.approx([3, 2, 1])
    th = 0.7
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    ev = eigen_general(rot)
    assert ev[0] == pytest.approx(complex(math.cos(th), math.sin(th)))
    assert ev[1] == pytest.approx(complex(math.cos(th), -math.sin(th)))


@given(square())
def test_eigen_general_roots_of_charpoly(m):
    ev = eigen_general(m)
    coeffs = np.poly(np.array(ev))
    ref = charpoly(m)
    scale = np.abs(ref) + max(1.0, float(np.max(np.abs(m)))) ** np.arange(len(ref))
    assert np.all(np.abs(coeffs.real - ref) <= 1e-9 * scale)


@given(square())
def test_charpoly_matches_numpy(m):
    ref = np.poly(m)
    scale = max(1.0, float(np.max(np.abs(m)))) ** np.arange(len(ref))
    assert np.all(np.abs(charpoly(m) - ref) <= 1e-9 * scale)

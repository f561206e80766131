"""Dense linear algebra for small square matrices (n <= 4).

Everything here works on plain ``numpy`` arrays. The QR kernel is compiled
with numba because the product SVD calls it once per factor per sweep.
"""

import math

import numpy as np
from numba import njit

__all__ = [
    "qr_posdiag",
    "singular_values",
    "omega_d",
    "log_omega_d",
    "eigen_symmetric",
    "eigen_general",
    "charpoly",
]


def _as_square(m):
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


@njit(cache=True)
def _qr_posdiag(a):
    # Householder QR, then flip rows of R / columns of Q so diag(R) >= 0.
    n = a.shape[0]
    r = a.copy()
    q = np.eye(n)
    v = np.empty(n)
    for k in range(n - 1):
        norm_x = 0.0
        for i in range(k, n):
            norm_x += r[i, k] * r[i, k]
        norm_x = math.sqrt(norm_x)
        if norm_x == 0.0:
            continue
        alpha = -norm_x if r[k, k] >= 0.0 else norm_x
        vnorm2 = 0.0
        for i in range(k, n):
            v[i] = r[i, k]
        v[k] -= alpha
        for i in range(k, n):
            vnorm2 += v[i] * v[i]
        if vnorm2 == 0.0:
            continue
        # R <- H R
        for j in range(k, n):
            dot = 0.0
            for i in range(k, n):
                dot += v[i] * r[i, j]
            f = 2.0 * dot / vnorm2
            for i in range(k, n):
                r[i, j] -= f * v[i]
        # Q <- Q H
        for i in range(n):
            dot = 0.0
            for l in range(k, n):
                dot += q[i, l] * v[l]
            f = 2.0 * dot / vnorm2
            for l in range(k, n):
                q[i, l] -= f * v[l]
        for i in range(k + 1, n):
            r[i, k] = 0.0
    for k in range(n):
        if r[k, k] < 0.0:
            for j in range(n):
                r[k, j] = -r[k, j]
            for i in range(n):
                q[i, k] = -q[i, k]
    return q, r


def qr_posdiag(m):
    """QR factorization with a nonnegative diagonal in ``r``.

    The sign convention makes the factorization unique for invertible input.
    Exactly singular input leaves zeros on the diagonal of ``r``.
    """
    a = _as_square(m)
    return _qr_posdiag(a)


def singular_values(m, max_sweeps=60):
    """Singular values in descending order via one-sided Jacobi rotations."""
    a = _as_square(m)
    n = a.shape[0]
    scale = float(np.sum(a * a))
    if scale == 0.0:
        return np.zeros(n)
    tol = 1e-14 * scale
    u = a.copy()
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = float(u[:, p] @ u[:, p])
                beta = float(u[:, q] @ u[:, q])
                gamma = float(u[:, p] @ u[:, q])
                off += gamma * gamma
                if gamma == 0.0:
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                up = u[:, p].copy()
                u[:, p] = c * up - s * u[:, q]
                u[:, q] = s * up + c * u[:, q]
        if math.sqrt(off) <= tol:
            break
    sv = np.sqrt(np.sum(u * u, axis=0))
    return np.sort(sv)[::-1]


def log_omega_d(spectrum, d):
    """Natural log of the singular value function; ``-inf`` when it vanishes."""
    sv = np.asarray(spectrum, dtype=float)
    n = sv.shape[0]
    if not 0.0 <= d <= n:
        raise ValueError(f"order d={d} outside [0, {n}]")
    j = int(math.floor(d))
    s = d - j
    out = 0.0
    for i in range(j):
        if sv[i] == 0.0:
            return -math.inf
        out += math.log(sv[i])
    if s > 0.0:
        if sv[j] == 0.0:
            return -math.inf
        out += s * math.log(sv[j])
    return out


def omega_d(spectrum, d):
    """Singular value function: sigma_1 ... sigma_j * sigma_{j+1}^s for d = j + s."""
    sv = np.asarray(spectrum, dtype=float)
    n = sv.shape[0]
    if not 0.0 <= d <= n:
        raise ValueError(f"order d={d} outside [0, {n}]")
    j = int(math.floor(d))
    s = d - j
    out = float(np.prod(sv[:j]))
    if s > 0.0:
        out *= sv[j] ** s
    return out


def eigen_symmetric(m, tol=1e-12, max_sweeps=60):
    """Eigenvalues of a symmetric matrix, descending (cyclic Jacobi)."""
    a = _as_square(m)
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > tol * scale:
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    for _ in range(max_sweeps):
        off = float(np.sum(np.triu(a, 1) ** 2))
        if off <= 1e-30 * float(np.sum(a * a)) or off == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))[::-1]


def charpoly(m):
    """Monic characteristic polynomial coefficients [1, c1, ..., cn] (Faddeev-LeVerrier)."""
    a = _as_square(m)
    n = a.shape[0]
    coeffs = [1.0]
    mk = np.zeros_like(a)
    eye = np.eye(n)
    for k in range(1, n + 1):
        mk = a @ mk + coeffs[-1] * eye
        coeffs.append(-float(np.trace(a @ mk)) / k)
    return np.array(coeffs)


def _quadratic_roots(b, c):
    # x^2 + b x + c = 0, cancellation-free form
    disc = b * b - 4.0 * c
    if disc >= 0.0:
        sq = math.sqrt(disc)
        q = -0.5 * (b + math.copysign(sq, b))
        if q == 0.0:
            return [complex(0.0), complex(0.0)]
        return [complex(q), complex(c / q)]
    sq = math.sqrt(-disc)
    return [complex(-0.5 * b, 0.5 * sq), complex(-0.5 * b, -0.5 * sq)]


def _polish(coeffs, x, iters=3):
    # Newton steps, kept only while they shrink the residual (multiple roots
    # have a vanishing derivative and Newton can jump far away)
    der = np.polyder(coeffs)
    f = np.polyval(coeffs, x)
    for _ in range(iters):
        df = np.polyval(der, x)
        if df == 0.0 or f == 0.0:
            break
        step = f / df
        cand = x - step
        fc = np.polyval(coeffs, cand)
        if not abs(fc) < abs(f):
            break
        x, f = cand, fc
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            break
    return x


def _cubic_real_root(a, b, c):
    # one real root of x^3 + a x^2 + b x + c by Cardano on the depressed cubic
    p = b - a * a / 3.0
    q = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc >= 0.0:
        sq = math.sqrt(disc)
        t = math.copysign(abs(-q / 2.0 + sq) ** (1.0 / 3.0), -q / 2.0 + sq) + \
            math.copysign(abs(-q / 2.0 - sq) ** (1.0 / 3.0), -q / 2.0 - sq)
    else:
        # three real roots, trigonometric form; take the largest
        rad = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * rad)
        arg = min(1.0, max(-1.0, arg))
        t = rad * math.cos(math.acos(arg) / 3.0)
    return t - a / 3.0


def _sort_eigs(vals):
    return sorted(vals, key=lambda z: (-z.real, -z.imag))


def eigen_general(m):
    """Complex eigenvalues sorted by descending real part, then imaginary part."""
    a = _as_square(m)
    n = a.shape[0]
    if n > 4:
        raise ValueError("eigen_general supports n <= 4")
    coeffs = charpoly(a)
    if n == 1:
        roots = [complex(-coeffs[1])]
    elif n == 2:
        roots = _quadratic_roots(coeffs[1], coeffs[2])
    elif n == 3:
        x = _cubic_real_root(coeffs[1], coeffs[2], coeffs[3])
        x = _polish(coeffs, x)
        # deflate: (x^3 + a x^2 + b x + c) / (x - r)
        b1 = coeffs[1] + x
        c1 = coeffs[2] + x * b1
        roots = [complex(x)] + _quadratic_roots(b1, c1)
    else:
        roots = [complex(z) for z in np.roots(coeffs)]
        roots = [complex(_polish(coeffs, z)) for z in roots]
    # snap numerically real pairs
    out = []
    for z in roots:
        if abs(z.imag) <= 1e-14 * max(1.0, abs(z.real)):
            z = complex(z.real, 0.0)
        out.append(z)
    return _sort_eigs(out)

"""Reference computations written independently of the package code."""

import math

import numpy as np


def expm(a, terms=30):
    """Matrix exponential by scaling and squaring around a Taylor series."""
    a = np.asarray(a, dtype=float)
    norm = np.max(np.sum(np.abs(a), axis=1))
    k = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0 else 0
    b = a / 2.0 ** k
    out = np.eye(len(a))
    term = np.eye(len(a))
    for i in range(1, terms):
        term = term @ b / i
        out = out + term
    for _ in range(k):
        out = out @ out
    return out


def cofactor_det(m):
    m = np.asarray(m, dtype=float)
    n = len(m)
    if n == 1:
        return float(m[0, 0])
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        total += (-1) ** j * m[0, j] * cofactor_det(minor)
    return total


def central_jacobian(fun, u, h=1e-6):
    u = np.asarray(u, dtype=float)
    n = len(u)
    out = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        out[:, k] = (fun(u + e) - fun(u - e)) / (2.0 * h)
    return out


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


def lorenz_origin_exponents(sigma, r, b):
    disc = math.sqrt((sigma - 1.0) ** 2 + 4.0 * sigma * r)
    return sorted([(-(sigma + 1.0) + disc) / 2.0, -b, (-(sigma + 1.0) - disc) / 2.0],
                  reverse=True)


def explicit_log_singular_values(factors):
    prod = np.eye(factors[0].shape[0])
    for f in factors:
        prod = f @ prod
    return np.log(np.linalg.svd(prod, compute_uv=False))

"""Catalog of benchmark flows and maps.

Each catalog entry carries its vector field (or step map) and analytic
Jacobian as numba-compiled functions with the signature ``f(u, p)`` where
``p`` is a float array of parameters in the order of ``param_names``.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from numba import njit

from .smallmat import eigen_general

__all__ = [
    "SystemSpec",
    "Equilibrium",
    "CATALOG",
    "make_system",
    "vector_field",
    "jacobian",
    "equilibria",
    "tigan_to_yang",
    "gd_to_generalized_lorenz",
    "gd_state_to_generalized_lorenz",
    "generalized_lorenz_state_to_gd",
    "tigan_state_to_yang",
    "yang_state_to_tigan",
    "shimizu_morioka_to_transformed",
    "transformed_to_shimizu_morioka",
]


# --- vector fields and Jacobians -----------------------------------------------------

@njit(cache=True)
def _lorenz_f(u, p):
    s, r, b = p[0], p[1], p[2]
    x, y, z = u[0], u[1], u[2]
    out = np.empty(3)
    out[0] = s * (y - x)
    out[1] = r * x - y - x * z
    out[2] = -b * z + x * y
    return out


@njit(cache=True)
def _lorenz_j(u, p):
    s, r, b = p[0], p[1], p[2]
    x, y, z = u[0], u[1], u[2]
    out = np.empty((3, 3))
    out[0, 0] = -s
    out[0, 1] = s
    out[0, 2] = 0.0
    out[1, 0] = r - z
    out[1, 1] = -1.0
    out[1, 2] = -x
    out[2, 0] = y
    out[2, 1] = x
    out[2, 2] = -b
    return out


@njit(cache=True)
def _genlorenz_f(u, p):
    s, r, b, a = p[0], p[1], p[2], p[3]
    x, y, z = u[0], u[1], u[2]
    out = np.empty(3)
    out[0] = s * (y - x) - a * y * z
    out[1] = r * x - y - x * z
    out[2] = -b * z + x * y
    return out


@njit(cache=True)
def _genlorenz_j(u, p):
    s, r, b, a = p[0], p[1], p[2], p[3]
    x, y, z = u[0], u[1], u[2]
    out = np.empty((3, 3))
    out[0, 0] = -s
    out[0, 1] = s - a * z
    out[0, 2] = -a * y
    out[1, 0] = r - z
    out[1, 1] = -1.0
    out[1, 2] = -x
    out[2, 0] = y
    out[2, 1] = x
    out[2, 2] = -b
    return out


@njit(cache=True)
def _gd_f(u, p):
    s, big_r, a0 = p[0], p[1], p[2]
    x, y, z = u[0], u[1], u[2]
    out = np.empty(3)
    out[0] = -s * x + z + a0 * y * z
    out[1] = big_r - y - x * z
    out[2] = -z + x * y
    return out


@njit(cache=True)
def _gd_j(u, p):
    s, a0 = p[0], p[2]
    x, y, z = u[0], u[1], u[2]
    out = np.empty((3, 3))
    out[0, 0] = -s
    out[0, 1] = a0 * z
    out[0, 2] = 1.0 + a0 * y
    out[1, 0] = -z
    out[1, 1] = -1.0
    out[1, 2] = -x
    out[2, 0] = y
    out[2, 1] = x
    out[2, 2] = -1.0
    return out


@njit(cache=True)
def _yang_f(u, p):
    s, r, b = p[0], p[1], p[2]
    x, y, z = u[0], u[1], u[2]
    out = np.empty(3)
    out[0] = s * (y - x)
    out[1] = r * x - x * z
    out[2] = -b * z + x * y
    return out


@njit(cache=True)
def _yang_j(u, p):
    s, r, b = p[0], p[1], p[2]
    x, y, z = u[0], u[1], u[2]
    out = np.empty((3, 3))
    out[0, 0] = -s
    out[0, 1] = s
    out[0, 2] = 0.0
    out[1, 0] = r - z
    out[1, 1] = 0.0
    out[1, 2] = -x
    out[2, 0] = y
    out[2, 1] = x
    out[2, 2] = -b
    return out


@njit(cache=True)
def _tigan_f(u, p):
    a, c, b = p[0], p[1], p[2]
    x, y, z = u[0], u[1], u[2]
    out = np.empty(3)
    out[0] = a * (y - x)
    out[1] = (c - a) * x - a * x * z
    out[2] = -b * z + x * y
    return out


@njit(cache=True)
def _tigan_j(u, p):
    a, c, b = p[0], p[1], p[2]
    x, y, z = u[0], u[1], u[2]
    out = np.empty((3, 3))
    out[0, 0] = -a
    out[0, 1] = a
    out[0, 2] = 0.0
    out[1, 0] = (c - a) - a * z
    out[1, 1] = 0.0
    out[1, 2] = -a * x
    out[2, 0] = y
    out[2, 1] = x
    out[2, 2] = -b
    return out


@njit(cache=True)
def _sm_f(u, p):
    alpha, lam = p[0], p[1]
    x, y, z = u[0], u[1], u[2]
    out = np.empty(3)
    out[0] = y
    out[1] = x - lam * y - x * z
    out[2] = -alpha * z + x * x
    return out


@njit(cache=True)
def _sm_j(u, p):
    alpha, lam = p[0], p[1]
    x, y, z = u[0], u[1], u[2]
    out = np.empty((3, 3))
    out[0, 0] = 0.0
    out[0, 1] = 1.0
    out[0, 2] = 0.0
    out[1, 0] = 1.0 - z
    out[1, 1] = -lam
    out[1, 2] = -x
    out[2, 0] = 2.0 * x
    out[2, 1] = 0.0
    out[2, 2] = -alpha
    return out


@njit(cache=True)
def _smt_f(u, p):
    alpha, lam = p[0], p[1]
    x, y, z = u[0], u[1], u[2]
    out = np.empty(3)
    out[0] = y
    out[1] = x - lam * y - x * z + 0.5 * x ** 3
    out[2] = -alpha * z + x * y + (1.0 + 0.5 * alpha) * x * x
    return out


@njit(cache=True)
def _smt_j(u, p):
    alpha, lam = p[0], p[1]
    x, y, z = u[0], u[1], u[2]
    out = np.empty((3, 3))
    out[0, 0] = 0.0
    out[0, 1] = 1.0
    out[0, 2] = 0.0
    out[1, 0] = 1.0 - z + 1.5 * x * x
    out[1, 1] = -lam
    out[1, 2] = -x
    out[2, 0] = y + (2.0 + alpha) * x
    out[2, 1] = x
    out[2, 2] = -alpha
    return out


@njit(cache=True)
def _henon_f(u, p):
    a, b = p[0], p[1]
    out = np.empty(2)
    out[0] = a + b * u[1] - u[0] * u[0]
    out[1] = u[0]
    return out


@njit(cache=True)
def _henon_j(u, p):
    b = p[1]
    out = np.empty((2, 2))
    out[0, 0] = -2.0 * u[0]
    out[0, 1] = b
    out[1, 0] = 1.0
    out[1, 1] = 0.0
    return out


@njit(cache=True)
def _linear_f(u, p):
    return -p[0] * u


@njit(cache=True)
def _linear_j(u, p):
    return -p[0] * np.eye(u.shape[0])


# --- parameter validation ------------------------------------------------------------

def _positive(*names):
    def check(params):
        for name in names:
            if not params[name] > 0:
                raise ValueError(f"parameter {name} must be > 0, got {params[name]}")
    return check


def _check_henon(params):
    if not params["a"] > 0:
        raise ValueError(f"parameter a must be > 0, got {params['a']}")
    if not 0 < params["b"] < 1:
        raise ValueError(f"parameter b must lie in (0, 1), got {params['b']}")


def _check_genlorenz(params):
    _positive("sigma", "r", "b")(params)
    if params["A"] < 0:
        raise ValueError(f"parameter A must be >= 0, got {params['A']}")


def _check_gd(params):
    _positive("sigma", "R")(params)
    if params["a0"] < 0:
        raise ValueError(f"parameter a0 must be >= 0, got {params['a0']}")


# --- equilibria ----------------------------------------------------------------------

def _eq_lorenz(p):
    s, r, b = p
    pts = [np.zeros(3)]
    if r > 1:
        c = math.sqrt(b * (r - 1))
        pts += [np.array([c, c, r - 1]), np.array([-c, -c, r - 1])]
    return pts


def _eq_genlorenz(p):
    s, r, b, a = p
    pts = [np.zeros(3)]
    # nonzero x: with w = x^2, y = r b x / (b + w), z = r w / (b + w), and
    # -s w^2 + (s (r b - 2 b) - a r^2 b) w + s b^2 (r - 1) = 0
    qa = -s
    qb = s * (r * b - 2.0 * b) - a * r * r * b
    qc = s * b * b * (r - 1.0)
    ws = []
    if qa != 0.0:
        disc = qb * qb - 4.0 * qa * qc
        if disc >= 0.0:
            sq = math.sqrt(disc)
            ws = [(-qb + sq) / (2.0 * qa), (-qb - sq) / (2.0 * qa)]
    for w in sorted(set(ws), reverse=True):
        if w <= 0.0:
            continue
        x = math.sqrt(w)
        for sx in (x, -x):
            y = r * b * sx / (b + w)
            z = r * w / (b + w)
            pts.append(np.array([sx, y, z]))
    return pts


def _eq_gd(p):
    s, big_r, a0 = p
    gp = gd_to_generalized_lorenz(s, big_r, a0)
    return [generalized_lorenz_state_to_gd(e, s, big_r, a0)
            for e in _eq_genlorenz((gp["sigma"], gp["r"], gp["b"], gp["A"]))]


def _eq_yang(p):
    s, r, b = p
    pts = [np.zeros(3)]
    if r > 0:
        c = math.sqrt(b * r)
        pts += [np.array([c, c, r]), np.array([-c, -c, r])]
    return pts


def _eq_tigan(p):
    a, c, b = p
    pts = [np.zeros(3)]
    if c > a:
        w = math.sqrt(b * (c - a) / a)
        pts += [np.array([w, w, (c - a) / a]), np.array([-w, -w, (c - a) / a])]
    return pts


def _eq_sm(p):
    alpha, lam = p
    c = math.sqrt(alpha)
    return [np.zeros(3), np.array([c, 0.0, 1.0]), np.array([-c, 0.0, 1.0])]


def _eq_smt(p):
    alpha, lam = p
    c = math.sqrt(alpha)
    return [np.zeros(3), np.array([c, 0.0, 1.0 + 0.5 * alpha]),
            np.array([-c, 0.0, 1.0 + 0.5 * alpha])]


def _eq_henon(p):
    a, b = p
    sq = math.sqrt((b - 1.0) ** 2 + 4.0 * a)
    xp = 0.5 * (b - 1.0 + sq)
    xm = 0.5 * (b - 1.0 - sq)
    return [np.array([xp, xp]), np.array([xm, xm])]


def _eq_linear(p):
    return []


# --- catalog -------------------------------------------------------------------------

@dataclass(frozen=True)
class _Entry:
    kind: str
    n: int
    param_names: tuple
    defaults: dict
    field: object
    jac: object
    check: object
    equilibria: object
    description: str


CATALOG = {
    "lorenz": _Entry(
        "flow", 3, ("sigma", "r", "b"), {"sigma": 10.0, "r": 28.0, "b": 8.0 / 3.0},
        _lorenz_f, _lorenz_j, _positive("sigma", "r", "b"), _eq_lorenz,
        "classical Lorenz system"),
    "glukhovsky_dolzhansky": _Entry(
        "flow", 3, ("sigma", "R", "a0"),
        # the generalized Lorenz hidden-attractor parameters mapped back:
        # k = sigma - A r = 0.36, R = r k, a0 = A / k^2
        {"sigma": 4.0, "R": 252.0, "a0": 0.0052 / 0.36 ** 2},
        _gd_f, _gd_j, _check_gd, _eq_gd,
        "Glukhovsky-Dolzhansky convection model"),
    "generalized_lorenz": _Entry(
        "flow", 3, ("sigma", "r", "b", "A"),
        {"sigma": 4.0, "r": 700.0, "b": 1.0, "A": 0.0052},
        _genlorenz_f, _genlorenz_j, _check_genlorenz, _eq_genlorenz,
        "generalized Lorenz system (x' = sigma(y-x) - A y z)"),
    "yang": _Entry(
        "flow", 3, ("sigma", "r", "b"), {"sigma": 10.0, "r": 16.0, "b": 8.0 / 3.0},
        _yang_f, _yang_j, _positive("sigma", "b"), _eq_yang,
        "Yang system (r may be any real)"),
    "tigan": _Entry(
        "flow", 3, ("a", "c", "b"), {"a": 2.1, "c": 30.0, "b": 0.6},
        _tigan_f, _tigan_j, _positive("a", "b"), _eq_tigan,
        "Tigan (T) system"),
    "shimizu_morioka": _Entry(
        "flow", 3, ("alpha", "lam"), {"alpha": 0.4, "lam": 0.9},
        _sm_f, _sm_j, _positive("alpha", "lam"), _eq_sm,
        "Shimizu-Morioka system"),
    "shimizu_morioka_transformed": _Entry(
        "flow", 3, ("alpha", "lam"), {"alpha": 0.4, "lam": 0.9},
        _smt_f, _smt_j, _positive("alpha", "lam"), _eq_smt,
        "Shimizu-Morioka system after z -> z + x^2/2"),
    "henon": _Entry(
        "map", 2, ("a", "b"), {"a": 1.4, "b": 0.3},
        _henon_f, _henon_j, _check_henon, _eq_henon,
        "Henon map"),
}

# Test-only linear decay u' = -rate u; any dimension, not listed in CATALOG.
_LINEAR = _Entry("flow", 0, ("rate",), {"rate": 1.0}, _linear_f, _linear_j,
                 _positive("rate"), _eq_linear, "linear decay")


@dataclass(frozen=True)
class SystemSpec:
    """A catalog system with validated parameters. Immutable."""

    id: str
    kind: str
    n: int
    params: dict = field(hash=False)

    @property
    def entry(self):
        if self.id == "linear":
            return _LINEAR
        return CATALOG[self.id]

    @property
    def p(self):
        return np.array([float(self.params[k]) for k in self.entry.param_names])

    @property
    def is_map(self):
        return self.kind == "map"

    def divergence_constant(self):
        """Trace of the Jacobian when it is constant in u, else None."""
        pr = self.params
        if self.id in ("lorenz", "generalized_lorenz"):
            return -(pr["sigma"] + 1.0 + pr["b"])
        if self.id == "glukhovsky_dolzhansky":
            return -(pr["sigma"] + 2.0)
        if self.id == "yang":
            return -(pr["sigma"] + pr["b"])
        if self.id == "tigan":
            return -(pr["a"] + pr["b"])
        if self.id in ("shimizu_morioka", "shimizu_morioka_transformed"):
            return -(pr["lam"] + pr["alpha"])
        if self.id == "linear":
            return -pr["rate"] * self.n
        return None


def make_system(system_id, n=None, **params):
    """Build a SystemSpec, filling defaults and enforcing parameter constraints.

    ``n`` is only used for the internal ``linear`` test system.
    """
    if system_id == "linear":
        entry = _LINEAR
        dim = int(n or 1)
    else:
        if system_id not in CATALOG:
            raise KeyError(f"unknown system {system_id!r}")
        entry = CATALOG[system_id]
        dim = entry.n
    defaults = entry.defaults
    unknown = set(params) - set(entry.param_names)
    if unknown:
        raise ValueError(f"unknown parameters for {system_id}: {sorted(unknown)}")
    full = {k: float(params.get(k, defaults[k])) for k in entry.param_names}
    for k, v in full.items():
        if not math.isfinite(v):
            raise ValueError(f"parameter {k} must be finite")
    entry.check(full)
    return SystemSpec(system_id, entry.kind, dim, full)


def _state(spec, u):
    a = np.asarray(u, dtype=float)
    if a.shape != (spec.n,):
        raise ValueError(f"{spec.id} expects a state of length {spec.n}, got shape {a.shape}")
    return a


def vector_field(spec, u):
    """f(u) for flows, the step map phi(u) for maps."""
    return spec.entry.field(_state(spec, u), spec.p)


def jacobian(spec, u):
    return spec.entry.jac(_state(spec, u), spec.p)


@dataclass(frozen=True)
class Equilibrium:
    coordinates: np.ndarray = field(hash=False)
    stability_class: str
    eigenvalues: tuple = field(hash=False, default=())


def _classify(spec, eigs, tol=1e-12):
    if spec.is_map:
        mods = [abs(z) for z in eigs]
        if all(m < 1 - tol for m in mods):
            return "stable"
        if any(abs(m - 1) <= tol for m in mods):
            return "center-margin"
        return "saddle" if any(m < 1 for m in mods) else "unstable"
    re = [z.real for z in eigs]
    if all(x < -tol for x in re):
        return "stable"
    if any(abs(x) <= tol for x in re):
        return "center-margin"
    return "saddle" if any(x < 0 for x in re) else "unstable"


def equilibria(spec):
    """Analytic equilibria (fixed points for maps) with a stability label."""
    out = []
    for pt in spec.entry.equilibria(tuple(spec.p)):
        eigs = tuple(eigen_general(jacobian(spec, pt)))
        out.append(Equilibrium(np.asarray(pt, dtype=float), _classify(spec, eigs), eigs))
    return out


def equilibrium_residual(spec, u):
    """||f(u)|| for flows, ||phi(u) - u|| for maps."""
    v = vector_field(spec, u)
    if spec.is_map:
        v = v - np.asarray(u, dtype=float)
    return float(np.linalg.norm(v))


# --- parameter and coordinate transforms ---------------------------------------------

def tigan_to_yang(a, c, b):
    """Tigan parameters (a, c, b) to Yang parameters (sigma, r, b)."""
    if not a > 0:
        raise ValueError("Tigan parameter a must be > 0")
    return {"sigma": a, "r": c - a, "b": b}


def tigan_state_to_yang(u, a):
    x, y, z = u
    sa = math.sqrt(a)
    return np.array([sa * x, sa * y, a * z])


def yang_state_to_tigan(w, a):
    x, y, z = w
    sa = math.sqrt(a)
    return np.array([x / sa, y / sa, z / a])


def gd_to_generalized_lorenz(sigma, R, a0):
    """Glukhovsky-Dolzhansky (sigma, R, a0) to generalized Lorenz (sigma, r, b, A)."""
    if not (sigma > 0 and R > 0 and a0 >= 0):
        raise ValueError("need sigma > 0, R > 0, a0 >= 0")
    return {
        "sigma": sigma,
        "r": R / sigma * (a0 * R + 1.0),
        "b": 1.0,
        "A": a0 * sigma ** 2 / (a0 * R + 1.0) ** 2,
    }


def gd_state_to_generalized_lorenz(u, sigma, R, a0):
    k = sigma / (a0 * R + 1.0)
    x, y, z = u
    return np.array([x, z / k, (R - y) / k])


def generalized_lorenz_state_to_gd(w, sigma, R, a0):
    k = sigma / (a0 * R + 1.0)
    x, y, z = w
    return np.array([x, R - k * z, k * y])


def shimizu_morioka_to_transformed(u):
    x, y, z = u
    return np.array([x, y, z + 0.5 * x * x])


def transformed_to_shimizu_morioka(w):
    x, y, z = w
    return np.array([x, y, z - 0.5 * x * x])

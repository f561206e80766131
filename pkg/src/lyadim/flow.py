"""Time evolution of catalog systems and their fundamental matrices.

Flows are integrated with an embedded Dormand-Prince 5(4) pair on the
extended system ``u' = f(u), Phi' = J(u) Phi``; maps are iterated exactly
and their Jacobians multiplied along the orbit.
"""

from dataclasses import dataclass
import math

import numpy as np
from numba import njit

__all__ = [
    "IntegratorConfig",
    "IntegrationError",
    "ExtendedState",
    "FactorSequence",
    "integrate_segment",
    "factor_sequence",
    "orbit",
    "evolve",
]


class IntegrationError(RuntimeError):
    """Raised when the integrator cannot continue; ``time`` is where it stopped."""

    def __init__(self, message, time=None):
        super().__init__(message if time is None else f"{message} at t={time:.17g}")
        self.time = time


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-8
    initial_step: float = 1e-9
    max_step: float = math.inf
    max_steps: int = 1_000_000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "initial_step", "max_step"):
            v = getattr(self, name)
            if not v > 0:
                raise ValueError(f"{name} must be > 0, got {v}")
        if not self.max_steps >= 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")


@dataclass
class ExtendedState:
    u: np.ndarray
    phi: np.ndarray


@dataclass
class FactorSequence:
    """Per-segment fundamental matrices, oldest first.

    ``factors[k]`` maps tangent vectors from the start of segment k to its end,
    so the ordered product ``factors[-1] @ ... @ factors[0]`` is D phi^T(origin).
    """

    factors: np.ndarray
    seg_len: float
    origin: np.ndarray
    final: np.ndarray = None

    @property
    def horizon(self):
        return self.seg_len * len(self.factors)

    def product(self):
        out = np.eye(self.factors.shape[1])
        for f in self.factors:
            out = f @ out
        return out


# --- Dormand-Prince 5(4) -------------------------------------------------------------

_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# fifth-order weights minus embedded fourth-order weights
_E1, _E3, _E4, _E5, _E6, _E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                                22 / 525, -1 / 40)

_OK, _UNDERFLOW, _NONFINITE, _MAXSTEPS = 0, 1, 2, 3


@njit(cache=True)
def _rhs(field, jac, p, y, n, with_var):
    out = np.empty_like(y)
    u = y[:n]
    f = field(u, p)
    for i in range(n):
        out[i] = f[i]
    if with_var:
        jm = jac(u, p)
        # Phi stored row-major after the state: y[n + i*n + k] = Phi[i, k]
        for i in range(n):
            for k in range(n):
                acc = 0.0
                for l in range(n):
                    acc += jm[i, l] * y[n + l * n + k]
                out[n + i * n + k] = acc
    return out


@njit(cache=True)
def _dopri(field, jac, p, y0, n, with_var, t_end, rtol, atol, h0, hmax, max_steps):
    """Integrate from t=0 to t_end. Returns (y, status, t_reached, h_next, n_steps)."""
    y = y0.copy()
    t = 0.0
    h = min(h0, hmax, t_end)
    k1 = _rhs(field, jac, p, y, n, with_var)
    err_old = 1e-4
    beta = 0.04
    alpha = 0.2 - 0.75 * beta
    steps = 0
    last_h = h
    m = y.shape[0]
    while t < t_end:
        if steps >= max_steps:
            return y, _MAXSTEPS, t, h, steps
        final = False
        if t + h >= t_end:
            h = t_end - t
            final = True
        if h <= 1e-14 * max(1.0, abs(t)):
            return y, _UNDERFLOW, t, h, steps
        k2 = _rhs(field, jac, p, y + h * _A21 * k1, n, with_var)
        k3 = _rhs(field, jac, p, y + h * (_A31 * k1 + _A32 * k2), n, with_var)
        k4 = _rhs(field, jac, p, y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), n, with_var)
        k5 = _rhs(field, jac, p, y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4),
                  n, with_var)
        k6 = _rhs(field, jac, p, y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4
                                          + _A65 * k5), n, with_var)
        y_new = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = _rhs(field, jac, p, y_new, n, with_var)
        err = 0.0
        finite = True
        for i in range(m):
            e = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i]
                     + _E6 * k6[i] + _E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
            err += (e / sc) ** 2
            if not math.isfinite(y_new[i]):
                finite = False
        err = math.sqrt(err / m)
        if not finite or not math.isfinite(err):
            if h <= 1e-14 * max(1.0, abs(t)):
                return y, _NONFINITE, t, h, steps
            h *= 0.1
            continue
        steps += 1
        if err <= 1.0:
            # PI step-size control (accepted step)
            if err == 0.0:
                fac = 10.0
            else:
                fac = 0.9 * err ** (-alpha) * err_old ** beta
                fac = min(10.0, max(0.2, fac))
            err_old = max(err, 1e-4)
            t = t_end if final else t + h
            y = y_new
            k1 = k7
            last_h = h
            h = min(h * fac, hmax)
        else:
            fac = max(0.2, 0.9 * err ** (-alpha))
            h *= fac
    if not final:
        last_h = h
    return y, _OK, t, max(last_h, h), steps


def _raise_status(status, t_reached, offset=0.0):
    t = offset + t_reached
    if status == _UNDERFLOW:
        raise IntegrationError("step size underflow", t)
    if status == _NONFINITE:
        raise IntegrationError("non-finite state", t)
    if status == _MAXSTEPS:
        raise IntegrationError("maximum number of steps exceeded", t)


def _cfg(cfg):
    return cfg if cfg is not None else IntegratorConfig()


def _require_flow(spec):
    if spec.is_map:
        raise ValueError(f"{spec.id} is a map; use factor_sequence or orbit")


def integrate_segment(spec, u0, dt, cfg=None):
    """Integrate state and fundamental matrix over [0, dt] from ``u0``.

    The fundamental matrix starts at the identity. Raises IntegrationError on
    step-size underflow or a non-finite state.
    """
    _require_flow(spec)
    cfg = _cfg(cfg)
    if not dt > 0:
        raise ValueError("dt must be > 0")
    n = spec.n
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (n,):
        raise ValueError(f"state must have length {n}")
    y0 = np.concatenate([u0, np.eye(n).ravel()])
    y, status, t, _, _ = _dopri(spec.entry.field, spec.entry.jac, spec.p, y0, n, True, float(dt),
                                cfg.rel_tol, cfg.abs_tol, cfg.initial_step,
                                min(cfg.max_step, float(dt)), cfg.max_steps)
    _raise_status(status, t)
    return ExtendedState(y[:n].copy(), y[n:].reshape(n, n).copy())


@njit(cache=True)
def _flow_chain(field, jac, p, u0, n, seg_len, n_factors, rtol, atol, h0, hmax, max_steps):
    factors = np.empty((n_factors, n, n))
    u = u0.copy()
    eye = np.eye(n).ravel()
    y0 = np.empty(n + n * n)
    h = h0
    for k in range(n_factors):
        y0[:n] = u
        y0[n:] = eye
        y, status, t, h_next, _ = _dopri(field, jac, p, y0, n, True, seg_len, rtol, atol, h,
                                         hmax, max_steps)
        if status != _OK:
            return factors[:k], u, status, k * seg_len + t
        for i in range(n):
            for j in range(n):
                factors[k, i, j] = y[n + i * n + j]
        u = y[:n].copy()
        h = min(h_next, hmax)
    return factors, u, _OK, n_factors * seg_len


@njit(cache=True)
def _map_chain(step, jac, p, u0, seg_len, n_factors):
    n = u0.shape[0]
    factors = np.empty((n_factors, n, n))
    u = u0.copy()
    for k in range(n_factors):
        acc = np.eye(n)
        for _ in range(seg_len):
            acc = jac(u, p) @ acc
            u = step(u, p)
        for i in range(n):
            for j in range(n):
                factors[k, i, j] = acc[i, j]
        for i in range(n):
            if not math.isfinite(u[i]):
                return factors[:k + 1], u, _NONFINITE, float((k + 1) * seg_len)
    return factors, u, _OK, float(n_factors * seg_len)


def factor_sequence(spec, u0, seg_len=None, n_factors=1, cfg=None):
    """Chain ``n_factors`` segments, resetting the fundamental matrix per segment.

    For flows ``seg_len`` is a duration (default 0.1) and steps are capped at
    ``seg_len``. For maps it is a whole number of iterations (default 1) and
    each factor is the ordered Jacobian product over that many steps.
    """
    if n_factors < 1:
        raise ValueError("n_factors must be >= 1")
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (spec.n,):
        raise ValueError(f"state must have length {spec.n}")
    e = spec.entry
    if spec.is_map:
        seg = 1 if seg_len is None else int(seg_len)
        if seg != seg_len and seg_len is not None or seg < 1:
            raise ValueError("map segments must be a positive whole number of iterations")
        factors, u, status, t = _map_chain(e.field, e.jac, spec.p, u0, seg, int(n_factors))
        _raise_status(status, t)
        return FactorSequence(factors, seg, u0.copy(), u)
    cfg = _cfg(cfg)
    seg = 0.1 if seg_len is None else float(seg_len)
    if not seg > 0:
        raise ValueError("seg_len must be > 0")
    factors, u, status, t = _flow_chain(e.field, e.jac, spec.p, u0, spec.n, seg, int(n_factors),
                                        cfg.rel_tol, cfg.abs_tol, cfg.initial_step,
                                        min(cfg.max_step, seg), cfg.max_steps)
    _raise_status(status, t)
    return FactorSequence(factors, seg, u0.copy(), u)


@njit(cache=True)
def _flow_samples(field, jac, p, u0, n, every, n_samples, rtol, atol, h0, hmax, max_steps, bound):
    out = np.empty((n_samples + 1, n))
    out[0] = u0
    u = u0.copy()
    h = h0
    dummy = np.empty(0)
    for k in range(n_samples):
        y, status, t, h_next, _ = _dopri(field, jac, p, u, n, False, every, rtol, atol, h,
                                         hmax, max_steps)
        if status != _OK:
            return out[:k + 1], status, k * every + t
        u = y
        out[k + 1] = u
        h = min(h_next, hmax)
        norm = 0.0
        for i in range(n):
            norm += u[i] * u[i]
        if math.sqrt(norm) > bound:
            return out[:k + 2], -1, (k + 1) * every
    return out, _OK, n_samples * every


@njit(cache=True)
def _map_samples(step, p, u0, every, n_samples, bound):
    n = u0.shape[0]
    out = np.empty((n_samples + 1, n))
    out[0] = u0
    u = u0.copy()
    for k in range(n_samples):
        for _ in range(every):
            u = step(u, p)
        out[k + 1] = u
        norm = 0.0
        finite = True
        for i in range(n):
            norm += u[i] * u[i]
            if not math.isfinite(u[i]):
                finite = False
        if not finite:
            return out[:k + 2], _NONFINITE, float((k + 1) * every)
        if math.sqrt(norm) > bound:
            return out[:k + 2], -1, float((k + 1) * every)
    return out, _OK, float(n_samples * every)


class DivergenceError(IntegrationError):
    """The orbit left the ball of radius ``bound``."""


def _sample_orbit(spec, u0, t_total, sample_every, cfg, bound):
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (spec.n,):
        raise ValueError(f"state must have length {spec.n}")
    if not t_total > 0:
        raise ValueError("t_total must be > 0")
    e = spec.entry
    if spec.is_map:
        every = int(sample_every)
        if every < 1 or every != sample_every:
            raise ValueError("maps sample every whole number of iterations")
        count = int(t_total) // every
        pts, status, t = _map_samples(e.field, spec.p, u0, every, count, bound)
        times = np.arange(len(pts)) * every
    else:
        cfg = _cfg(cfg)
        count = int(round(t_total / sample_every))
        if count < 1 or abs(count * sample_every - t_total) > 1e-9 * t_total:
            raise ValueError("t_total must be a whole multiple of sample_every")
        pts, status, t = _flow_samples(e.field, e.jac, spec.p, u0, spec.n, float(sample_every),
                                       count, cfg.rel_tol, cfg.abs_tol, cfg.initial_step,
                                       min(cfg.max_step, float(sample_every)), cfg.max_steps,
                                       bound)
        times = np.arange(len(pts)) * float(sample_every)
    if status == -1:
        raise DivergenceError(f"orbit norm exceeded {bound:g}", t)
    _raise_status(status, t)
    return times, pts


def orbit(spec, u0, t_total, sample_every, cfg=None, bound=math.inf):
    """Sample the orbit at t = 0, every, 2*every, ..., t_total.

    Returns a list of ``(time, state)`` pairs. Maps count iterations.
    """
    times, pts = _sample_orbit(spec, u0, t_total, sample_every, cfg, bound)
    return [(float(t), p.copy()) for t, p in zip(times, pts)]


def evolve(spec, u0, t, cfg=None):
    """phi^t(u0): the state after time (or iterations) ``t``."""
    if spec.is_map:
        steps = int(t)
        if steps == 0:
            return np.asarray(u0, dtype=float).copy()
        return _sample_orbit(spec, u0, steps, steps, cfg, math.inf)[1][-1]
    if t == 0:
        return np.asarray(u0, dtype=float).copy()
    return _sample_orbit(spec, u0, t, t, cfg, math.inf)[1][-1]

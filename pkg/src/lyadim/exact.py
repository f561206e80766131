"""Closed-form Lyapunov dimensions with their parameter conditions.

Every report lists each inequality as a signed margin (positive means the
inequality holds), the branch outcome, and the closed-form value. When the
conditions fail the value is still attached but flagged as a candidate.
"""

from dataclasses import dataclass, field
import json
import math

import numpy as np

from .smallmat import eigen_symmetric, singular_values
from .systems import jacobian, tigan_to_yang

__all__ = [
    "ConditionMargin",
    "ExactDimReport",
    "henon_exact",
    "henon_sigma1",
    "lorenz_exact",
    "lorenz_formula",
    "lorenz_gamma_coefficients",
    "gd_exact",
    "yang_exact",
    "yang_formula",
    "yang_gamma_coefficients",
    "tigan_exact",
    "shimizu_morioka_exact",
    "shimizu_morioka_formula",
    "shimizu_morioka_s_matrix",
    "LeonovMargin",
    "leonov_margin",
]

FORMULA = "formula"
CONVERGENCE = "convergence_to_equilibria"
NOT_APPLICABLE = "not_applicable"

_EQ_RTOL = 1e-12
_DISTINCT_RTOL = 1e-12


@dataclass(frozen=True)
class ConditionMargin:
    """One inequality rewritten as ``lhs - rhs`` compared against zero.

    ``relation`` is ``">"``, ``">="`` or ``"=="``. Equalities carry
    ``-|lhs - rhs|`` and hold up to a relative tolerance of 1e-12.
    """

    id: str
    lhs_minus_rhs: float
    relation: str = ">"
    scale: float = 1.0

    @property
    def strict(self):
        return self.relation == ">"

    @property
    def satisfied(self):
        m = self.lhs_minus_rhs
        if self.relation == ">":
            return m > 0.0
        if self.relation == ">=":
            return m >= 0.0
        return -m <= _EQ_RTOL * max(1.0, self.scale)

    def to_dict(self):
        return {"id": self.id, "lhs_minus_rhs": self.lhs_minus_rhs, "relation": self.relation,
                "scale": self.scale, "strict": self.strict, "satisfied": self.satisfied}

    @classmethod
    def from_dict(cls, d):
        return cls(d["id"], float(d["lhs_minus_rhs"]), d["relation"], float(d["scale"]))


@dataclass
class ExactDimReport:
    theorem: str
    params: dict
    conditions: list
    outcome: str
    value: float = None
    candidate: float = None
    failing: list = field(default_factory=list)
    gamma_roots: tuple = None

    @property
    def certified(self):
        return self.outcome == FORMULA

    def condition(self, cid):
        for c in self.conditions:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def to_dict(self):
        return {
            "theorem": self.theorem,
            "params": dict(self.params),
            "conditions": [c.to_dict() for c in self.conditions],
            "outcome": self.outcome,
            "value": self.value,
            "candidate": self.candidate,
            "failing": list(self.failing),
            "gamma_roots": None if self.gamma_roots is None else list(self.gamma_roots),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        g = d.get("gamma_roots")
        return cls(d["theorem"], dict(d["params"]),
                   [ConditionMargin.from_dict(c) for c in d["conditions"]], d["outcome"],
                   d.get("value"), d.get("candidate"), list(d.get("failing", [])),
                   None if g is None else tuple(g))


def _failing(conds):
    return [c.id for c in conds if not c.satisfied]


def _real_roots(a, b, c):
    """Roots of a g^2 + b g + c when real and distinct, ascending; else None.

    Also returns the distinctness margin: disc - 1e-12 * max(|a|,|b|,|c|)^2.
    """
    disc = b * b - 4.0 * a * c
    margin = disc - _DISTINCT_RTOL * max(abs(a), abs(b), abs(c)) ** 2
    if a == 0.0 or margin <= 0.0:
        return None, margin
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b))
    r1, r2 = q / a, c / q
    return (min(r1, r2), max(r1, r2)), margin


def _positive(**kw):
    for k, v in kw.items():
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"{k} must be a positive number, got {v}")


# --- Henon ---------------------------------------------------------------------------

def henon_sigma1(a, b):
    """Largest singular-value-type factor at the fixed point (x_-, x_-)."""
    xm = 0.5 * (b - 1.0 - math.sqrt((b - 1.0) ** 2 + 4.0 * a))
    return xm, math.sqrt(xm * xm + b) - xm


def henon_exact(a, b):
    _positive(a=a)
    if not 0.0 < b < 1.0:
        raise ValueError(f"b must lie in (0, 1), got {b}")
    xm, s1 = henon_sigma1(a, b)
    conds = [ConditionMargin("a_positive", a, ">"),
             ConditionMargin("b_below_one", 1.0 - b, ">"),
             ConditionMargin("b_positive", b, ">")]
    value = 1.0 + 1.0 / (1.0 - math.log(b) / math.log(s1))
    return ExactDimReport("henon", {"a": a, "b": b}, conds, FORMULA, value, value)


# --- Lorenz --------------------------------------------------------------------------

def lorenz_formula(sigma, r, b):
    return 3.0 - 2.0 * (sigma + b + 1.0) / (sigma + 1.0 + math.sqrt((sigma - 1.0) ** 2
                                                                      + 4.0 * sigma * r))


def _lorenz_pq(sigma, r, b):
    base = b * (b + sigma - 1.0) ** 2 - 4.0 * sigma * (sigma * b + b - b * b)
    p = base + sigma ** 2 * (r - 1.0) * (b - 4.0)
    q = base - 3.0 * sigma ** 2 * (r - 1.0)
    return base, p, q


def lorenz_gamma_coefficients(sigma, r, b):
    """(a2, a1, a0) of the gamma-quadratic after expanding the square."""
    _, p, q = _lorenz_pq(sigma, r, b)
    c = 2.0 * sigma - b
    return p, 2.0 * p * c + 4.0 * b * (sigma + 1.0) * q, p * c * c


def lorenz_gamma_residual(sigma, r, b, gamma):
    """The gamma-equation in its unexpanded product form."""
    _, p, q = _lorenz_pq(sigma, r, b)
    return (2.0 * sigma - b + gamma) ** 2 * p + 4.0 * b * gamma * (sigma + 1.0) * q


def lorenz_exact(sigma, r, b):
    _positive(sigma=sigma, r=r, b=b)
    base, p, q = _lorenz_pq(sigma, r, b)
    sr = sigma * r
    conds = [
        ConditionMargin("r_above_one", r - 1.0, ">", max(1.0, r)),
        ConditionMargin("r_lower_bound", (r - 1.0) - base / (3.0 * sigma ** 2), ">=",
                        max(1.0, r, abs(base) / (3.0 * sigma ** 2))),
        # case a rewritten: 4 sigma (sigma b + b - b^2) - b (b + sigma - 1)^2 - sigma^2 (r-1)(b-4) >= 0
        ConditionMargin("case_a", -p, ">="),
        ConditionMargin("case_b_sign", p, ">"),
    ]
    coeffs = lorenz_gamma_coefficients(sigma, r, b)
    roots, dmargin = _real_roots(*coeffs)
    conds.append(ConditionMargin("case_b_distinct_roots", dmargin, ">"))
    if roots is not None:
        conds.append(ConditionMargin("case_b_gamma_ii_positive", roots[1], ">"))
    case_a = conds[2].satisfied
    case_b = conds[3].satisfied and roots is not None and roots[1] > 0.0
    branch = [
        ConditionMargin("convergence_lower", sr - (b - sigma) * (b - 1.0), ">"),
        ConditionMargin("convergence_upper", (b + 1.0) * (b + sigma) - sr, ">"),
        ConditionMargin("formula_branch", sr - (b + 1.0) * (b + sigma), ">"),
    ]
    conds += branch
    value = lorenz_formula(sigma, r, b)
    params = {"sigma": sigma, "r": r, "b": b}
    pre_ok = conds[0].satisfied and conds[1].satisfied and (case_a or case_b)
    if not pre_ok:
        failing = [c.id for c in conds[:2] if not c.satisfied]
        if not (case_a or case_b):
            failing += [c.id for c in conds[2:len(conds) - 3] if not c.satisfied]
        return ExactDimReport("lorenz", params, conds, NOT_APPLICABLE, None, value, failing, roots)
    if branch[0].satisfied and branch[1].satisfied:
        return ExactDimReport("lorenz", params, conds, CONVERGENCE, None, value, [], roots)
    if branch[2].satisfied:
        return ExactDimReport("lorenz", params, conds, FORMULA, value, value, [], roots)
    return ExactDimReport("lorenz", params, conds, NOT_APPLICABLE, None, value,
                          _failing(branch), roots)


# --- generalized Lorenz / Glukhovsky-Dolzhansky -----------------------------------

def gd_exact(sigma, r, b, A):
    """Exact dimension for the generalized Lorenz system at (sigma, r, b, A)."""
    _positive(sigma=sigma, r=r, b=b, A=A)
    ar = A * r
    c_lo = (-3.0 + 2.0 * math.sqrt(3.0)) / 3.0
    case1 = [ConditionMargin("case1_sigma_equals_Ar", -abs(sigma - ar), "==", max(sigma, ar)),
             ConditionMargin("case1_growth", 4.0 * sigma * r - (b + 1.0) * (b + sigma), ">")]
    case2 = [ConditionMargin("case2_b_equals_one", -abs(b - 1.0), "=="),
             ConditionMargin("case2_r_above_two", r - 2.0, ">"),
             ConditionMargin("case2_sigma_lower", sigma - c_lo * ar, ">")]
    if r > 4.0:
        c_hi = (3.0 * r + 2.0 * math.sqrt(r * (2.0 * r + 1.0))) / (r - 4.0)
        case2.append(ConditionMargin("case2_sigma_upper", c_hi * ar - sigma, ">"))
    conds = case1 + case2
    value = lorenz_formula(sigma, r, b)
    params = {"sigma": sigma, "r": r, "b": b, "A": A}
    if all(c.satisfied for c in case1) or all(c.satisfied for c in case2):
        return ExactDimReport("gd", params, conds, FORMULA, value, value)
    return ExactDimReport("gd", params, conds, NOT_APPLICABLE, None, value, _failing(conds))


# --- Yang / Tigan --------------------------------------------------------------------

def yang_formula(sigma, r, b):
    return 3.0 - 2.0 * (sigma + b) / (sigma + math.sqrt(sigma ** 2 + 4.0 * sigma * r))


def yang_gamma_coefficients(sigma, r, b):
    w = r * sigma ** 2 + b * (sigma + b) ** 2 - 4.0 * sigma * (sigma * r + sigma * b - b * b)
    p = 4.0 * b * r * sigma ** 2
    c = 2.0 * sigma - b
    return p, 2.0 * p * c + 16.0 * sigma * b * w, p * c * c


def yang_gamma_residual(sigma, r, b, gamma):
    w = r * sigma ** 2 + b * (sigma + b) ** 2 - 4.0 * sigma * (sigma * r + sigma * b - b * b)
    return (4.0 * b * r * sigma ** 2 * (gamma + 2.0 * sigma - b) ** 2
            + 16.0 * sigma * b * gamma * w)


def yang_exact(sigma, r, b, theorem="yang_tigan"):
    _positive(sigma=sigma, b=b)
    if not math.isfinite(r):
        raise ValueError("r must be finite")
    params = {"sigma": sigma, "r": r, "b": b}
    cand = None
    if sigma ** 2 + 4.0 * sigma * r >= 0.0:
        cand = yang_formula(sigma, r, b)
    if r == 0.0:
        conds = [ConditionMargin("zero_r_b_gap", b * (sigma - b), ">")]
        if sigma != b:
            conds.append(ConditionMargin("zero_r_bound",
                                         sigma - (sigma + b) ** 2 / (4.0 * (sigma - b)), ">="))
        ok = all(c.satisfied for c in conds) and len(conds) == 2
        return ExactDimReport(theorem, params, conds, CONVERGENCE if ok else NOT_APPLICABLE,
                              None, cand, _failing(conds))
    if r < 0.0:
        conds = [ConditionMargin("negative_r_bound", r * sigma + b * (sigma - b), ">")]
        ok = conds[0].satisfied
        return ExactDimReport(theorem, params, conds, CONVERGENCE if ok else NOT_APPLICABLE,
                              None, cand, _failing(conds))
    roots, dmargin = _real_roots(*yang_gamma_coefficients(sigma, r, b))
    conds = [ConditionMargin("distinct_roots", dmargin, ">")]
    if roots is not None:
        conds.append(ConditionMargin("gamma_ii_positive", roots[1], ">"))
    branch = [
        ConditionMargin("convergence_lower", r * sigma - b * (b - sigma), ">"),
        ConditionMargin("convergence_upper", b * (sigma + b) - r * sigma, ">"),
        ConditionMargin("formula_branch", r * sigma - b * (sigma + b), ">"),
    ]
    pre = [c for c in conds]
    conds = conds + branch
    if not (roots is not None and roots[1] > 0.0):
        return ExactDimReport(theorem, params, conds, NOT_APPLICABLE, None, cand,
                              _failing(pre), roots)
    if branch[0].satisfied and branch[1].satisfied:
        return ExactDimReport(theorem, params, conds, CONVERGENCE, None, cand, [], roots)
    if branch[2].satisfied:
        return ExactDimReport(theorem, params, conds, FORMULA, cand, cand, [], roots)
    return ExactDimReport(theorem, params, conds, NOT_APPLICABLE, None, cand,
                          _failing(branch), roots)


def tigan_exact(a, c, b):
    """Tigan parameters routed through the equivalent Yang system."""
    y = tigan_to_yang(a, c, b)
    rep = yang_exact(y["sigma"], y["r"], y["b"])
    rep.params = {"a": a, "c": c, "b": b, **{f"yang_{k}": v for k, v in y.items()}}
    return rep


# --- Shimizu-Morioka -----------------------------------------------------------------

def shimizu_morioka_formula(alpha, lam):
    return 3.0 - 2.0 * (lam + alpha) / (lam + math.sqrt(4.0 + lam * lam))


def _sqrt_margin(arg, rhs):
    # sqrt(arg) - rhs; a negative argument makes the inequality fail, and the
    # (negative) argument itself is reported as the margin.
    if arg < 0.0:
        return arg
    return math.sqrt(arg) - rhs


def shimizu_morioka_exact(alpha, lam):
    _positive(alpha=alpha, lam=lam)
    x1 = 10.0 + 3.0 / alpha - 13.0 * alpha
    x3 = (8.0 + 15.0 * alpha - 8.0 * alpha ** 2 - 24.0 * alpha ** 3) / (2.0 * alpha * (alpha + 1.0))
    conds = [
        ConditionMargin("first", _sqrt_margin(x1, lam - 4.0), ">="),
        ConditionMargin("second", (1.0 / alpha - alpha) - lam, ">"),
        ConditionMargin("third", _sqrt_margin(x3, 4.0 - lam), ">="),
    ]
    failing = _failing(conds)
    value = shimizu_morioka_formula(alpha, lam)
    params = {"alpha": alpha, "lam": lam}
    if not failing:
        return ExactDimReport("shimizu_morioka", params, conds, FORMULA, value, value)
    return ExactDimReport("shimizu_morioka", params, conds, NOT_APPLICABLE, None, value, failing)


def shimizu_morioka_s_matrix(alpha, lam, k):
    """The lower-triangular similarity used with the transformed system; k != 0."""
    if k == 0 or not math.isfinite(k):
        raise ValueError("k must be finite and nonzero")
    return np.array([[-1.0 / k, 0.0, 0.0], [lam - alpha, 1.0, 0.0], [0.0, 0.0, 1.0]])


# --- sampled Leonov-type condition ---------------------------------------------------

@dataclass
class LeonovMargin:
    worst: float
    worst_index: int
    margins: np.ndarray


def _leonov_point(spec, s_mat, s_inv, v_term, j, s, u):
    m = s_mat @ jacobian(spec, u) @ s_inv
    if spec.is_map:
        sv = singular_values(m)
        with np.errstate(divide="ignore"):
            lam = np.log(sv)
    else:
        lam = eigen_symmetric(0.5 * (m + m.T), tol=1e-9)
    total = float(np.sum(lam[:j]))
    if s > 0.0:
        total += s * float(lam[j])
    return total + float(v_term(np.asarray(u, dtype=float)))


def leonov_margin(spec, S, v_term, j, s, points):
    """Worst sampled value of the Leonov-type dimension condition.

    Flows: eigenvalues of the symmetric part of S J(u) S^-1, and ``v_term(u)``
    is the derivative of V along the field. Maps: logarithms of the singular
    values of S J(u) S^-1, and ``v_term(u)`` is V(phi(u)) - V(u). The returned
    ``worst`` is a maximum over ``points`` only; a negative value supports the
    condition on those samples and proves nothing about unsampled states.
    """
    s_mat = np.asarray(S, dtype=float)
    n = spec.n
    if s_mat.shape != (n, n):
        raise ValueError(f"S must be {n}x{n}")
    sv = singular_values(s_mat)
    if sv[-1] <= 1e-14 * max(sv[0], 1.0):
        raise ValueError("S is singular")
    if not (0 <= j <= n and 0.0 <= s <= 1.0 and j + s <= n):
        raise ValueError("need 0 <= j, 0 <= s <= 1 and j + s <= n")
    if s == 1.0:
        j, s = j + 1, 0.0
    pts = list(points)
    if not pts:
        raise ValueError("points must be nonempty")
    s_inv = np.linalg.inv(s_mat)
    vals = np.array([_leonov_point(spec, s_mat, s_inv, v_term, j, s, u) for u in pts])
    k = int(np.argmax(vals))
    return LeonovMargin(float(vals[k]), k, vals)

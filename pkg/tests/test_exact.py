import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from lyadim import exact
from lyadim.exact import (CONVERGENCE, FORMULA, NOT_APPLICABLE, ConditionMargin, ExactDimReport,
                          gd_exact, henon_exact, leonov_margin, lorenz_exact, lorenz_formula,
                          lorenz_gamma_coefficients, shimizu_morioka_exact,
                          shimizu_morioka_formula, shimizu_morioka_s_matrix, tigan_exact,
                          yang_exact, yang_formula, yang_gamma_coefficients)
from lyadim.lyap import local_dimension_at_equilibrium
from lyadim.systems import equilibria, make_system

pos = st.floats(0.2, 30)


# --- worked values -------------------------------------------------------------------

@pytest.mark.parametrize("r, value", [(28.0, 2.401312763583084), (24.5, 2.3727001),
                                      (5.0, 2.0154781700672975)])
def test_lorenz_formula_values(r, value):
    rep = lorenz_exact(10.0, r, 8.0 / 3.0)
    assert rep.outcome == FORMULA and rep.certified
    assert rep.value == pytest.approx(value, abs=1e-7)
    assert rep.failing == []


def test_lorenz_below_threshold_and_convergence_branch():
    low = lorenz_exact(10.0, 0.5, 8.0 / 3.0)
    assert low.outcome == NOT_APPLICABLE and low.value is None
    assert low.failing == ["r_above_one"]
    assert low.candidate == pytest.approx(lorenz_formula(10.0, 0.5, 8.0 / 3.0))
    assert lorenz_exact(10.0, 4.0, 8.0 / 3.0).outcome == CONVERGENCE


def test_gd_hidden_parameters():
    rep = gd_exact(4.0, 700.0, 1.0, 0.0052)
    assert rep.outcome == FORMULA
    assert rep.value == pytest.approx(2.8917676, abs=1e-7)
    # b = 1, so sigma + b + 1 = sigma + 2
    assert rep.value == pytest.approx(3 - 2 * 6.0 / (5.0 + math.sqrt(9 + 16 * 700)))
    assert rep.condition("case2_sigma_upper").satisfied


def test_gd_upper_condition_only_for_large_r():
    rep = gd_exact(1.0, 3.0, 1.0, 0.1)
    with pytest.raises(KeyError):
        rep.condition("case2_sigma_upper")


def test_gd_case1_equality():
    rep = gd_exact(2.0, 10.0, 3.0, 0.2)
    assert rep.condition("case1_sigma_equals_Ar").satisfied
    assert rep.outcome == FORMULA
    off = gd_exact(2.0, 10.0, 3.0, 0.21)
    assert not off.condition("case1_sigma_equals_Ar").satisfied


def test_yang_example_and_roots():
    rep = yang_exact(10.0, 16.0, 8.0 / 3.0)
    assert rep.outcome == FORMULA
    assert rep.value == pytest.approx(2.3190503, abs=1e-7)
    assert rep.gamma_roots == pytest.approx((3.3056959, 90.8868967), abs=1e-6)


def test_yang_nonpositive_r_branches():
    assert yang_exact(10.0, 0.0, 8.0 / 3.0).outcome == CONVERGENCE
    assert yang_exact(10.0, -1.0, 8.0 / 3.0).outcome == CONVERGENCE
    rep = yang_exact(1.0, -5.0, 2.0)
    assert rep.outcome == NOT_APPLICABLE and rep.failing == ["negative_r_bound"]
    assert rep.candidate is None


def test_tigan_routes_through_yang():
    t = tigan_exact(2.1, 30.0, 0.6)
    y = yang_exact(2.1, 27.9, 0.6)
    assert t.value == y.value and t.outcome == y.outcome
    assert t.params["yang_r"] == pytest.approx(27.9)


def test_shimizu_morioka_example_margins():
    rep = shimizu_morioka_exact(0.4, 0.9)
    assert rep.outcome == FORMULA
    assert rep.value == pytest.approx(2.1594387, abs=1e-7)
    margins = [c.lhs_minus_rhs for c in rep.conditions]
    assert margins == pytest.approx([6.6071356, 1.2, 0.0600181], abs=1e-6)


def test_shimizu_morioka_negative_radicand_margin():
    rep = shimizu_morioka_exact(2.0, 0.1)
    first = rep.condition("first")
    assert first.lhs_minus_rhs == pytest.approx(10.0 + 1.5 - 26.0)
    assert not first.satisfied and rep.outcome == NOT_APPLICABLE
    assert "first" in rep.failing and rep.candidate is not None


def test_henon_example():
    rep = henon_exact(1.4, 0.3)
    assert rep.value == pytest.approx(1.4953262, abs=1e-7)
    with pytest.raises(ValueError):
        henon_exact(1.4, 1.0)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        lorenz_exact(-1.0, 28.0, 1.0)
    with pytest.raises(ValueError):
        yang_exact(10.0, float("inf"), 1.0)
    with pytest.raises(ValueError):
        shimizu_morioka_s_matrix(0.4, 0.9, 0.0)


# --- agreement with the local dimension at equilibria --------------------------------

@given(pos, st.floats(1.01, 200), pos)
def test_lorenz_formula_is_origin_dimension(sigma, r, b):
    assume(sigma * r > (b + 1) * (b + sigma) * 1.001)
    spec = make_system("lorenz", sigma=sigma, r=r, b=b)
    d = local_dimension_at_equilibrium(spec, equilibria(spec)[0]).d
    assert d == pytest.approx(lorenz_formula(sigma, r, b), abs=1e-9)


@given(pos, st.floats(0.01, 200), pos)
def test_yang_formula_is_origin_dimension(sigma, r, b):
    assume(r * sigma > b * (sigma + b) * 1.001)
    spec = make_system("yang", sigma=sigma, r=r, b=b)
    d = local_dimension_at_equilibrium(spec, equilibria(spec)[0]).d
    assert d == pytest.approx(yang_formula(sigma, r, b), abs=1e-9)


@given(st.floats(0.05, 3), st.floats(0.05, 3))
def test_shimizu_morioka_formula_is_origin_dimension(alpha, lam):
    spec = make_system("shimizu_morioka", alpha=alpha, lam=lam)
    ky = local_dimension_at_equilibrium(spec, equilibria(spec)[0])
    assume(ky.j == 2)
    assert ky.d == pytest.approx(shimizu_morioka_formula(alpha, lam), abs=1e-9)


@given(st.floats(0.1, 3), st.floats(0.01, 0.99))
def test_henon_formula_is_fixed_point_dimension(a, b):
    spec = make_system("henon", a=a, b=b)
    xm = min(equilibria(spec), key=lambda e: e.coordinates[0])
    ky = local_dimension_at_equilibrium(spec, xm)
    assume(ky.j == 1)
    assert ky.d == pytest.approx(henon_exact(a, b).value, abs=1e-9)


# --- gamma quadratics ----------------------------------------------------------------

@given(pos, st.floats(1.01, 200), pos)
def test_lorenz_gamma_roots_solve_product_form(sigma, r, b):
    rep = lorenz_exact(sigma, r, b)
    if rep.gamma_roots is None:
        return
    scale = sum(abs(c) for c in lorenz_gamma_coefficients(sigma, r, b))
    for g in rep.gamma_roots:
        res = exact.lorenz_gamma_residual(sigma, r, b, g)
        assert abs(res) <= 1e-9 * scale * max(1.0, g * g)


@given(pos, st.floats(0.01, 200), pos)
def test_yang_gamma_roots_solve_product_form(sigma, r, b):
    rep = yang_exact(sigma, r, b)
    if rep.gamma_roots is None:
        return
    scale = sum(abs(c) for c in yang_gamma_coefficients(sigma, r, b))
    for g in rep.gamma_roots:
        assert abs(exact.yang_gamma_residual(sigma, r, b, g)) <= 1e-9 * scale * max(1.0, g * g)


# --- margins -------------------------------------------------------------------------

@given(pos, st.floats(0.5, 200), pos)
def test_lorenz_branch_margins_match_direct_inequalities(sigma, r, b):
    rep = lorenz_exact(sigma, r, b)
    assert rep.condition("r_above_one").satisfied == (r > 1)
    assert rep.condition("formula_branch").satisfied == (sigma * r > (b + 1) * (b + sigma))
    if rep.outcome == FORMULA:
        assert not rep.failing and rep.value == rep.candidate


@given(st.floats(0.05, 3), st.floats(0.05, 6))
def test_shimizu_morioka_margin_signs(alpha, lam):
    rep = shimizu_morioka_exact(alpha, lam)
    assert rep.condition("second").satisfied == (1 / alpha - alpha > lam)
    x1 = 10 + 3 / alpha - 13 * alpha
    assert rep.condition("first").satisfied == (x1 >= 0 and math.sqrt(x1) >= lam - 4)
    assert (rep.outcome == FORMULA) == all(c.satisfied for c in rep.conditions)


@given(st.floats(0.05, 3), st.floats(0.05, 6), st.floats(-1e-7, 1e-7))
def test_margins_continuous(alpha, lam, h):
    a = shimizu_morioka_exact(alpha, lam).condition("second").lhs_minus_rhs
    b = shimizu_morioka_exact(alpha, lam + h).condition("second").lhs_minus_rhs
    assert abs(a - b) <= abs(h) * 1.0000001


def test_condition_margin_relations():
    assert ConditionMargin("x", 0.0, ">=").satisfied
    assert not ConditionMargin("x", 0.0, ">").satisfied
    assert ConditionMargin("x", -1e-13, "==").satisfied
    assert not ConditionMargin("x", -1e-9, "==").satisfied
    assert ConditionMargin("x", -1e-9, "==", scale=1e4).satisfied


@pytest.mark.parametrize("rep", [lorenz_exact(10, 28, 8 / 3), lorenz_exact(10, 0.5, 8 / 3),
                                 gd_exact(4, 700, 1, 0.0052), yang_exact(10, 16, 8 / 3),
                                 shimizu_morioka_exact(2.0, 0.1), henon_exact(1.4, 0.3)])
def test_json_round_trip(rep):
    back = ExactDimReport.from_dict(json.loads(rep.to_json()))
    assert back.to_dict() == rep.to_dict()
    assert back.outcome == rep.outcome


# --- Leonov margin -------------------------------------------------------------------

def test_leonov_linear_flow():
    spec = make_system("linear", n=3, rate=2.0)
    pts = [np.ones(3), np.zeros(3)]
    m = leonov_margin(spec, np.eye(3), lambda u: 0.0, 1, 0.5, pts)
    assert m.worst == pytest.approx(-3.0)
    assert np.allclose(m.margins, -3.0)


def test_leonov_s_one_normalized():
    spec = make_system("lorenz")
    pts = [np.array([1.0, 2.0, 3.0]), np.array([-4.0, 0.5, 20.0])]
    a = leonov_margin(spec, np.eye(3), lambda u: 0.0, 1, 1.0, pts)
    b = leonov_margin(spec, np.eye(3), lambda u: 0.0, 2, 0.0, pts)
    assert np.allclose(a.margins, b.margins)


def test_leonov_similarity_invariance_of_trace():
    # with d = n the condition is the divergence, whatever S is
    spec = make_system("lorenz")
    rng = np.random.default_rng(0)
    s_mat = rng.normal(size=(3, 3)) + 3 * np.eye(3)
    m = leonov_margin(spec, s_mat, lambda u: 0.0, 3, 0.0, [rng.normal(size=3) for _ in range(5)])
    assert np.allclose(m.margins, -41.0 / 3.0)


def test_leonov_map_uses_log_singular_values():
    spec = make_system("henon")
    u = np.array([0.3, 0.1])
    m = leonov_margin(spec, np.eye(2), lambda v: 0.5, 2, 0.0, [u])
    assert m.worst == pytest.approx(math.log(0.3) + 0.5)


def test_leonov_shimizu_morioka_transformed_example():
    alpha, lam = 0.4, 0.9
    spec = make_system("shimizu_morioka_transformed", alpha=alpha, lam=lam)
    s_mat = shimizu_morioka_s_matrix(alpha, lam, 1.0)
    pts = [e.coordinates for e in equilibria(spec)]
    m = leonov_margin(spec, s_mat, lambda u: 0.0, 2, 0.5, pts)
    assert m.margins.shape == (3,)
    assert 0 <= m.worst_index < 3


def test_leonov_validation():
    spec = make_system("lorenz")
    with pytest.raises(ValueError):
        leonov_margin(spec, np.zeros((3, 3)), lambda u: 0.0, 1, 0.5, [np.zeros(3)])
    with pytest.raises(ValueError):
        leonov_margin(spec, np.eye(3), lambda u: 0.0, 3, 0.5, [np.zeros(3)])
    with pytest.raises(ValueError):
        leonov_margin(spec, np.eye(3), lambda u: 0.0, 1, 0.5, [])

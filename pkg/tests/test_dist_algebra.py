from __future__ import annotations

import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from sbfoverlap.dist_algebra import (GREATER, PRIME_GREATER, DistExpr, ExactCoeff, Term, apply_D,
                                     canonicalize, delta, eval_regular, pole_order, singular_part,
                                     smear)
from sbfoverlap.double_sbf import base_expr, closed_form, gr_direct
from sbfoverlap.errors import DiagonalPoint
from sbfoverlap.oracle import TestFunction, smeared_double

HALF_PI = ExactCoeff(Fraction(1, 2), 1)


def _empty(ell=0, ellp=0, n=0):
    return DistExpr(ell, ellp, n % 2, n, ())


def test_base_zero_zero_raises_to_closure():
    out = apply_D(base_expr(0, 0, 0))
    assert out.current_n == 2 and not out.regular_terms()
    (s,) = singular_part(out)
    assert s.m == 0 and s.coeff == HALF_PI
    assert s.render() == "1/2·π·r^-1·r'^-1·δ(r−r')"


@pytest.mark.parametrize("ell", range(6))
def test_closure_for_equal_orders(ell):
    sing = singular_part(closed_form(ell, ell, 2))
    assert len(sing) == 1 and sing[0].m == 0 and sing[0].coeff == HALF_PI
    assert_allclose(sing[0].value(1.3), math.pi / (2 * 1.3**2), rtol=1e-15)


@pytest.mark.parametrize("ell", range(4))
def test_half_weight_jump_gives_half_closure(ell):
    sing = singular_part(closed_form(ell, ell, 2, jump_weight=Fraction(1, 2)))
    assert len(sing) == 1 and sing[0].coeff == ExactCoeff(Fraction(1, 4), 1)


def test_empty_expression_stays_empty():
    out = apply_D(_empty())
    assert out.terms == () and out.current_n == 2


def test_zero_one_raises_without_deltas_and_matches_direct():
    expr = apply_D(base_expr(0, 1, 0))
    assert not singular_part(expr)
    axis = np.arange(1, 21) / 10
    R, RP = (g.ravel() for g in np.meshgrid(axis, axis))
    off = R != RP
    assert_allclose(eval_regular(expr, R[off], RP[off]), gr_direct(0, 1, 2, R[off], RP[off]),
                    rtol=1e-10)


def test_eval_regular_examples():
    assert_allclose(eval_regular(base_expr(0, 0, 0), 0.5, 1.0), math.pi / 2, rtol=1e-14)
    assert_allclose(eval_regular(base_expr(0, 0, 0), 2.0, 1.0), math.pi / 4, rtol=1e-14)
    assert eval_regular(closed_form(0, 0, 2), 0.5, 1.0) == 0.0
    with pytest.raises(DiagonalPoint):
        eval_regular(base_expr(0, 1, 0), 1.0, 1.0)


def test_singular_part_examples():
    assert singular_part(closed_form(0, 1, 2)) == []
    (s,) = singular_part(closed_form(1, 1, 2))
    assert s.coeff == HALF_PI and s.m == 0


def test_higher_ladder_has_delta_derivatives():
    ms = {s.m for s in singular_part(closed_form(1, 1, 4))}
    assert max(ms) >= 1


# --- canonicalization -------------------------------------------------------

def test_canonicalize_cancels_opposite_terms():
    t1 = Term(GREATER, ExactCoeff(Fraction(1, 2)), -1, 0)
    t2 = Term(GREATER, ExactCoeff(Fraction(-1, 2)), -1, 0)
    assert canonicalize(_empty().with_terms([t1, t2])).terms == ()


def test_canonicalize_keeps_distinct_regions():
    t1 = Term(GREATER, ExactCoeff(1), -1, 0)
    t2 = Term(PRIME_GREATER, ExactCoeff(1), -1, 0)
    out = canonicalize(_empty().with_terms([t2, t1]))
    assert len(out.terms) == 2
    assert [t.region for t in out.terms] == [PRIME_GREATER, GREATER]


def test_canonicalize_merges_and_orders_deterministically():
    ts = [Term(GREATER, ExactCoeff(Fraction(1, 3)), -2, 1),
          Term(PRIME_GREATER, ExactCoeff(2), 0, -1),
          Term(GREATER, ExactCoeff(Fraction(2, 3)), -2, 1)]
    a = canonicalize(_empty().with_terms(ts))
    b = canonicalize(_empty().with_terms(ts[::-1]))
    assert a.dumps() == b.dumps()
    assert any(t.coeff.q == 1 and t.pow_r == -2 for t in a.terms)


def test_delta_coefficients_are_restricted_to_the_diagonal():
    # r'^2 / r^4 * delta collapses onto r^-2
    t = Term(delta(0), ExactCoeff(3), -4, 2)
    (s,) = singular_part(canonicalize(_empty().with_terms([t])))
    assert_allclose(s.value(1.7), 3 / 1.7**2, rtol=1e-15)


# --- algebraic properties ----------------------------------------------------

_SPECS = list(itertools.product(range(3), range(3), (0, 1)))


@pytest.mark.parametrize("ell,ellp,nb", _SPECS)
def test_apply_D_is_linear(ell, ellp, nb):
    e = apply_D(base_expr(ell, ellp, nb))
    a, b = Fraction(3, 7), Fraction(-5, 2)
    lhs = apply_D(e.scaled(a) + e.scaled(b))
    rhs = apply_D(e).scaled(a) + apply_D(e).scaled(b)
    assert lhs.dumps() == rhs.dumps()


@pytest.mark.parametrize("ell,ellp,nb", _SPECS)
def test_parity_is_preserved(ell, ellp, nb):
    e = base_expr(ell, ellp, nb)
    for _ in range(3):
        e = apply_D(e)
        assert (e.current_n - e.base_n) % 2 == 0 and e.current_n % 2 == nb


@pytest.mark.parametrize("ell,ellp,n", [(0, 0, 2), (0, 1, 0), (1, 1, 4), (2, 1, 3), (0, 3, 5)])
def test_json_round_trip(ell, ellp, n):
    e = closed_form(ell, ellp, n)
    text = e.dumps()
    back = DistExpr.from_json(json.loads(text))
    assert back.dumps() == text
    assert back == e


def test_json_shape():
    obj = closed_form(0, 1, 0).to_json()
    assert set(obj) == {"ell", "ellp", "n", "terms"}
    assert {t["region"] for t in obj["terms"]} == {"H(r'>r)", "H(r>r')"}
    t = obj["terms"][0]
    assert set(t) == {"region", "coeff", "gamma", "pow_r", "pow_rp", "hyper"}
    assert set(t["coeff"]) == {"num", "den", "pi_pow"}
    assert set(t["hyper"]) == {"orientation", "x", "y", "z"}


def test_odd_parity_has_no_deltas():
    for ell, ellp, n in [(0, 0, 1), (0, 0, 3), (1, 2, 2), (0, 1, 4), (2, 3, 4)]:
        assert not singular_part(closed_form(ell, ellp, n))


@settings(max_examples=30, deadline=None)
@given(ell=st.integers(0, 3), ellp=st.integers(0, 3), n=st.integers(0, 5),
       r=st.floats(0.2, 2.0), rp=st.floats(0.2, 2.0))
def test_regular_part_matches_direct_formula(ell, ellp, n, r, rp):
    if abs(r - rp) < 1e-3:
        return
    lad = float(eval_regular(closed_form(ell, ellp, n), r, rp))
    ref = float(gr_direct(ell, ellp, n, r, rp))
    scale = max(abs(ref), 1e-8 * (1 / min(r, rp)) ** (n + 1))
    assert abs(lad - ref) <= 1e-9 * scale


def test_pole_order():
    assert pole_order(closed_form(0, 0, 0)) == 0
    assert pole_order(closed_form(0, 1, 2)) >= 0


# --- smearing ----------------------------------------------------------------

def test_smear_closure_gives_point_value():
    phi = TestFunction(1.0, 0.05)
    assert_allclose(smear(closed_form(0, 0, 2), phi, 1.0), math.pi / 2 * phi(1.0), rtol=1e-12)


def test_smear_empty_is_zero():
    assert smear(_empty(), TestFunction(1.0, 0.05), 1.0) == 0.0


@pytest.mark.parametrize("ell,ellp,n", [(0, 0, 2), (0, 1, 2), (1, 1, 2), (0, 0, 4), (1, 1, 4),
                                        (0, 2, 2), (0, 0, 3), (1, 2, 3), (0, 1, 1)])
def test_smear_matches_oracle(ell, ellp, n):
    phi = TestFunction(1.0, 0.08)
    r = 1.03
    got = smear(closed_form(ell, ellp, n), phi, r)
    ref = smeared_double(ell, ellp, n, r, phi)
    assert_allclose(got, ref, rtol=1e-6, atol=1e-9 * max(1.0, abs(ref)))


def test_half_weight_mode_disagrees_with_oracle():
    phi = TestFunction(1.0, 0.05)
    half = smear(closed_form(0, 0, 2, jump_weight=Fraction(1, 2)), phi, 1.0)
    ref = smeared_double(0, 0, 2, 1.0, phi)
    assert_allclose(half, 0.5 * ref, rtol=1e-6)

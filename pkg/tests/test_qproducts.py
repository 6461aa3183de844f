"""Product atoms, the expression grammar, and eta-quotient structure."""

from fractions import Fraction

import pickle

import pytest
from hypothesis import given, settings, strategies as st

from qcrank.qproducts import (
    P2,
    Call,
    EvalError,
    FractionalPower,
    GeneralizedEtaProduct,
    LevelMismatch,
    NotMonomial,
    Num,
    ParseError,
    bracket,
    euler_product,
    euler_product_naive,
    eval_expr,
    jab,
    jab_naive,
    monomial_parts,
    parse,
    pochhammer,
    to_generalized_eta,
    to_text,
)
from qcrank.series import LaurentSeries, first_mismatch


def test_p2_values():
    assert P2(Fraction(0)) == Fraction(1, 6)
    assert P2(Fraction(1, 2)) == Fraction(-1, 12)
    assert P2(Fraction(7, 2)) == Fraction(-1, 12)
    assert P2(Fraction(-1, 3)) == P2(Fraction(2, 3))


def test_euler_product_pentagonal():
    s = euler_product(1, 13)
    assert [s.coeff(n) for n in range(13)] == \
        [1, -1, -1, 0, 0, 1, 0, 1, 0, 0, 0, 0, -1]


def test_euler_product_matches_naive():
    for a in (1, 2, 5):
        assert first_mismatch(euler_product(a, 40),
                              euler_product_naive(a, 40)) is None


def test_jab_matches_naive():
    for a, b in ((1, 5), (2, 7), (3, 11), (5, 11)):
        assert first_mismatch(jab(a, b, 60), jab_naive(a, b, 60)) is None


def test_pochhammer_and_bracket():
    # (q; q^5)_inf times its bracket partner recovers a J quotient
    p = pochhammer(1, 5, 30)
    q = pochhammer(4, 5, 30)
    j = jab(1, 5, 30)
    e5 = euler_product(5, 30)
    assert first_mismatch(p.mul(q).mul(e5), j) is None
    br = bracket(1, 5, 30)
    assert first_mismatch(br, p.mul(q)) is None


# ---------------------------------------------------------------------------
# parsing


def test_parse_round_trip():
    for text in (
        "J(1)",
        "J(2,11)^3*J(11)^3/(J(1,11)^3*J(3,11))",
        "q^11*J(44,121)*J(121)^6/(J(11,121)^2*J(55,121))",
        "1/2*T + 3*t^2",
        "(X(1,11) - X(2,11))^2",
        "V10@11*T@11",
        "eta(121,11)",
        "H(3,11)",
        "q^-1*J(1)",
    ):
        node = parse(text)
        again = parse(to_text(node))
        assert again == node, text


def test_parse_precedence():
    # '^' binds before '@', '@' before '*'
    a = parse("T^2@11")
    b = parse("(T^2)@11")
    assert a == b
    c = parse("2*T@11")
    d = parse("2*(T@11)")
    assert c == d


def test_parse_rationals():
    assert parse("3/4") == Num(Fraction(3, 4))
    assert parse("7") == Num(Fraction(7))


def test_parse_rejects_fraction_without_numerator():
    with pytest.raises(ParseError):
        parse("/3")


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        parse("J(1,")
    err = info.value
    assert err.line == 1
    assert err.col >= 4


def test_parse_error_multiline():
    with pytest.raises(ParseError) as info:
        parse("T +\n@")
    assert info.value.line == 2
    assert info.value.col == 1


def test_parse_unknown_atom_lists_expectations():
    with pytest.raises(ParseError) as info:
        parse("W")
    assert "q" in info.value.expected
    assert "J" in info.value.expected


def test_parse_validates_argument_ranges():
    with pytest.raises(ParseError):
        parse("J(5,3)")
    with pytest.raises(ParseError):
        parse("X(11,11)")
    with pytest.raises(ParseError):
        parse("eta(5,7)")
    with pytest.raises(ParseError):
        parse("Y6")


def test_parse_trailing_input():
    with pytest.raises(ParseError):
        parse("T T")


def test_call_node_survives_round_trip():
    node = parse("F(3)")
    assert node == Call("F", (Num(Fraction(3)),))
    assert parse(to_text(node)) == node


# ---------------------------------------------------------------------------
# evaluation


def test_eval_partition_series():
    s = eval_expr(parse("1/J(1)"), 10)
    assert [s.coeff(n) for n in range(10)] == \
        [1, 1, 2, 3, 5, 7, 11, 15, 22, 30]


def test_eval_matches_product_functions():
    assert first_mismatch(eval_expr(parse("J(2,7)"), 50),
                          jab(2, 7, 50)) is None
    assert first_mismatch(eval_expr(parse("J(3)"), 50),
                          euler_product(3, 50)) is None


def test_eval_q_power():
    s = eval_expr(parse("q^-2*J(1)"), 8)
    assert s.lo == -2
    assert s.coeff(-2) == 1
    assert s.coeff(-1) == -1


def test_eval_scale_operator():
    direct = eval_expr(parse("J(1)@11"), 60)
    scaled = euler_product(11, 60)
    assert first_mismatch(direct, scaled) is None


def test_eval_dissect_call():
    node = Call("dissect", (parse("1/J(1)"), Num(Fraction(11)),
                            Num(Fraction(6))))
    s = eval_expr(node, 6)
    # p(11n + 6) for n = 0..5
    assert [s.coeff(n) for n in range(6)] == \
        [11, 297, 3718, 31185, 204226, 1121505]


def test_eval_named_atoms():
    T = eval_expr(parse("T"), 20)
    explicit = eval_expr(parse("J(2,11)^2*J(5,11)/(J(1,11)*J(4,11)^2)"), 20)
    assert first_mismatch(T, explicit) is None
    t = eval_expr(parse("t"), 20)
    t_explicit = eval_expr(parse("q*J(1,11)*J(4,11)/J(5,11)^2"), 20)
    assert first_mismatch(t, t_explicit) is None
    assert t.valuation() == 1


def test_eta_atom_structure():
    # eta(delta, g) = q^(delta/2 * P2(g/delta)) * J(g,delta)/J(delta);
    # the fractional prefactor lives in the eta-product bookkeeping
    _, g = monomial_parts("eta(11,2)", 11)
    assert g.exponents.get((11, 2)) == 1
    assert g.total_shift() == Fraction(11, 2) * P2(Fraction(2, 11))
    with pytest.raises(FractionalPower):
        eval_expr(parse("eta(11,2)"), 10)


def test_eval_fractional_power_rejected():
    # eta(121, 11) alone carries a fractional q-prefactor
    with pytest.raises(FractionalPower):
        eval_expr(parse("eta(121,11)"), 10)


def test_eval_unknown_call_without_resolver():
    with pytest.raises(EvalError):
        eval_expr(parse("F(1)"), 10)


def test_eval_division_by_non_unit():
    with pytest.raises(EvalError):
        eval_expr(parse("1/(J(1) - J(1))"), 10)


# ---------------------------------------------------------------------------
# eta-quotient structure


def test_monomial_parts_basic():
    c, g = monomial_parts("q^11*J(44,121)*J(121)^6/(J(11,121)^2*J(55,121))",
                          121)
    assert c == 1
    assert g.level == 121
    # each J(a,b) factor carries one Euler factor at b: 1 + 6 - 2 - 1
    assert g.classical.get(121, 0) == 4
    direct = eval_expr(
        parse("q^11*J(44,121)*J(121)^6/(J(11,121)^2*J(55,121))"), 40)
    assert first_mismatch(g.expand(40), direct) is None


def test_monomial_parts_coefficient():
    c, g = monomial_parts("3/2*J(1,11)^2", 11)
    assert c == Fraction(3, 2)
    assert first_mismatch(g.expand(30).mul(c),
                          eval_expr(parse("3/2*J(1,11)^2"), 30)) is None


def test_monomial_parts_rejects_sums():
    with pytest.raises(NotMonomial):
        monomial_parts("J(1) + J(2)", 121)


def test_to_generalized_eta_level_check():
    with pytest.raises(LevelMismatch):
        to_generalized_eta(parse("J(1,7)"), 11)


def test_gep_weight_and_shift():
    _, g = monomial_parts("J(11)^2/J(1)", 11)
    # one classical eta of positive degree: weight 1/2
    assert g.weight == Fraction(1, 2)
    _, g4 = monomial_parts("J(11)^4/J(1)^2", 11)
    assert g4.weight == 1


def test_gep_mul_div_expand():
    _, a = monomial_parts("J(1,11)", 11)
    _, b = monomial_parts("J(2,11)", 11)
    prod = a * b
    assert first_mismatch(prod.expand(30),
                          a.expand(30).mul(b.expand(30))) is None
    ratio = a / b
    assert first_mismatch(ratio.expand(30).mul(b.expand(30)),
                          a.expand(30)) is None


def test_gep_combine_cancels():
    _, a = monomial_parts("J(3,11)^2", 11)
    same = a / a
    assert not any(same.exponents.values())
    assert first_mismatch(same.expand(10), LaurentSeries.one(10)) is None


def test_gep_picklable():
    _, g = monomial_parts("q*J(3,121)^3*J(121)^3/(J(4,121)^3*J(1,121))", 121)
    clone = pickle.loads(pickle.dumps(g))
    assert clone == g
    assert first_mismatch(clone.expand(25), g.expand(25)) is None


def test_series_picklable():
    s = eval_expr(parse("1/J(1)"), 15)
    clone = pickle.loads(pickle.dumps(s))
    assert first_mismatch(clone, s) is None
    assert clone.lo == s.lo and clone.prec == s.prec


# ---------------------------------------------------------------------------
# randomized round trips


@settings(max_examples=60)
@given(st.integers(min_value=1, max_value=10),
       st.integers(min_value=2, max_value=12))
def test_jab_triple_product_random(a, b):
    if not a < b:
        a, b = b, a + b
    assert first_mismatch(jab(a, b, 35), jab_naive(a, b, 35)) is None


@settings(max_examples=40)
@given(st.integers(min_value=1, max_value=5),
       st.integers(min_value=0, max_value=4),
       st.integers(min_value=-3, max_value=3))
def test_text_round_trip_random(a, e, p):
    b = a + e + 1
    text = f"q^{p}*J({a},{b})" + (f"^{e}" if e else "")
    node = parse(text)
    assert parse(to_text(node)) == node

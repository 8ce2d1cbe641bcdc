import json
from fractions import Fraction

from expbound.bound import Bound, format_decimal, parse_bound
from expbound.logic import LinExpr
from expbound.potential import BaseFnSet

x, n, s, s_min = (LinExpr.var(v) for v in ("x", "n", "s", "s_min"))

TRADER = "5·|[s_min,s]|^2 + 10·|[s_min,s]|·|[0,s_min]| + 5·|[s_min,s]|"


def test_text_forms():
    assert Bound.from_coeffs({(x,): Fraction(3, 5)}).text() == "3/5·|[0,x]|"
    assert Bound.from_coeffs({}).text() == "0"
    assert Bound.from_coeffs({(n - x + 1,): 2}).text() == "2·|[x,n+1]|"
    assert Bound.from_coeffs({(n,): Fraction(15, 2)}).text() == "15/2·|[0,n]|"


def test_trader_canonical_order():
    b = Bound.from_coeffs({(s - s_min,): 5, (s - s_min, s_min): 10,
                           (s - s_min, s - s_min): 5})
    assert b.text() == TRADER
    assert parse_bound(TRADER) == b


def test_round_trip_and_zero():
    for text in ("3/5·|[0,x]|", "2·|[x,n+1]|", "1/4·|[l,h]|^2 + 7/4·|[l,h]|", TRADER, "0"):
        assert parse_bound(text).text() == text


def test_decimal():
    assert format_decimal(Fraction(91, 11)) == "8.27273"
    assert format_decimal(Fraction(8, 7)) == "1.14286"
    assert format_decimal(Fraction(15, 2)) == "7.5"
    assert Bound.from_coeffs({(x,): Fraction(3, 5)}).text(decimal=True) == "0.6·|[0,x]|"


def test_eval():
    assert parse_bound("2·|[x,n+1]|").eval({"x": 0, "n": 100}) == 202
    assert parse_bound("0").eval({"x": 3}) == 0
    assert parse_bound(TRADER).eval({"s": 10, "s_min": 0}) == 550
    assert parse_bound("|[s_min,s]|·|[0,s_min]|").eval({"s": 7, "s_min": 3}) == 12
    # atoms are clamped at zero
    assert parse_bound("2·|[x,n]|").eval({"x": 9, "n": 3}) == 0


def test_potential_eval_examples():
    B = BaseFnSet([(x,), (x - 1,), (x - 2,)])
    coeffs = {B.index[(x,)]: Fraction(3, 5)}
    assert B.eval(coeffs, {"x": 10}) == 6
    assert B.eval({}, {"x": 10}) == 0


def test_json():
    data = json.loads(parse_bound("3/5·|[0,x]|").json())
    assert data == {"terms": [{"coeff": "3/5", "atoms": [{"lo": "0", "hi": "x"}]}]}

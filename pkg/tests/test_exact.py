from fractions import Fraction

from hypothesis import given, strategies as st

from tsfp.exact import GaussianRational, coerce, format_coeff, parse_coeff

fracs = st.fractions(max_denominator=50).filter(lambda f: abs(f) < 1000)
gauss = st.builds(GaussianRational, fracs, fracs)


def test_arithmetic_is_exact():
    i = GaussianRational(0, 1)
    assert i * i == -1
    assert (GaussianRational(1, 2) / GaussianRational(3, -4)) * GaussianRational(3, -4) == GaussianRational(1, 2)
    assert GaussianRational(Fraction(1, 3)) * 3 == 1


def test_float_mix_degrades_to_complex():
    z = GaussianRational(1, 1) * 0.5j
    assert isinstance(z, complex)


def test_coerce_takes_float_bits_exactly():
    c = coerce(0.1)
    assert c.re == Fraction(0.1)
    assert coerce(float("inf")) == complex(float("inf"))


@given(gauss, gauss)
def test_field_laws(a, b):
    assert a + b == b + a
    assert a * b == b * a
    assert (a * b).conjugate() == a.conjugate() * b.conjugate()
    if b:
        assert (a / b) * b == a


@given(gauss)
def test_text_round_trip(c):
    re_tok, im_tok = format_coeff(c).split()
    assert parse_coeff(re_tok, im_tok) == c


def test_parse_accepts_fractions_and_floats():
    assert parse_coeff("1/3", "-2") == GaussianRational(Fraction(1, 3), -2)
    assert parse_coeff("0.25", "0") == GaussianRational(Fraction(1, 4))

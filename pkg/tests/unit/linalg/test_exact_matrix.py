import pytest
import sympy
from sp4monodromy.errors import MatrixLiteralError
from sp4monodromy.linalg import (
    ExactMatrix4,
    format_entry,
    frobenius_form,
    frobenius_monodromy,
    is_symplectic,
    parse_entry,
    standard_form,
)


def test_parse_entry_accepts_integers_and_fractions():
    """Test that literal entries parse to exact rationals."""
    assert parse_entry(3) == 3
    assert parse_entry("1/2") == sympy.Rational(1, 2)
    assert parse_entry(" -5/6 ") == sympy.Rational(-5, 6)
    assert parse_entry("4/2") == 2


def test_parse_entry_rejects_bad_values():
    """Test that floats, booleans and junk strings are rejected."""
    for bad in (True, 0.5, "abc", None, [1]):
        with pytest.raises(MatrixLiteralError):
            parse_entry(bad)


def test_format_entry_keeps_integers_plain():
    """Test that integer entries stay ints and fractions become strings."""
    assert format_entry(sympy.Rational(7)) == 7
    assert isinstance(format_entry(sympy.Rational(7)), int)
    assert format_entry(sympy.Rational(-1, 6)) == "-1/6"


def test_literal_shape_is_checked():
    """Test that only 4x4 literals are accepted."""
    with pytest.raises(MatrixLiteralError):
        ExactMatrix4([[1, 0], [0, 1]])
    with pytest.raises(MatrixLiteralError):
        ExactMatrix4([[1, 0, 0, 0]] * 3)
    with pytest.raises(MatrixLiteralError):
        ExactMatrix4([[1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 0, 0]])


def test_literal_round_trip_preserves_fractions():
    """Test that to_literal gives back what from_literal read."""
    literal = frobenius_monodromy().to_literal()
    assert literal[0] == [1, 1, "1/2", "1/6"]
    assert ExactMatrix4.from_literal(literal) == frobenius_monodromy()


def test_arithmetic_is_exact():
    """Test products, inverses and powers without rounding."""
    m = frobenius_monodromy()
    identity = ExactMatrix4.identity()
    assert m @ m.inverse() == identity
    assert m**0 == identity
    assert m**3 @ m ** (-3) == identity
    assert (m - identity).rank() == 3
    assert ((m - identity) ** 4).is_zero()
    assert m.determinant() == 1
    assert not m.is_integral()
    assert m.scale(6).is_integral()


def test_singular_inverse_raises():
    """Test that inverting a singular matrix fails loudly."""
    zero = ExactMatrix4([[0] * 4] * 4)
    with pytest.raises(ZeroDivisionError):
        zero.inverse()


def test_equality_and_hash():
    """Test that equal matrices hash equal and differ from other types."""
    a = ExactMatrix4.identity()
    b = ExactMatrix4([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    assert a == b
    assert hash(a) == hash(b)
    assert len({a, b}) == 1
    assert a != standard_form()
    assert a != "identity"


def test_forms_are_symplectic_for_themselves():
    """Test the standard and Frobenius forms and the Frobenius monodromy."""
    s = standard_form()
    f = frobenius_form()
    assert s.transpose() == -s
    assert f.transpose() == -f
    assert s.determinant() == 1
    assert is_symplectic(s, s)
    assert is_symplectic(frobenius_monodromy(), f)
    assert not is_symplectic(frobenius_monodromy(), s)


def test_integer_rows():
    """Test integer extraction for integral matrices."""
    rows = standard_form().integer_rows()
    assert rows[0] == [0, 0, 1, 0]
    assert all(isinstance(x, int) for row in rows for x in row)

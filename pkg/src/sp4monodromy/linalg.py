"""Exact 4x4 linear algebra over Q and Z/N.

Group elements of Sp4(Z) live in ``ExactMatrix4`` (sympy rationals, never
rounded). Their reductions mod N live in ``ModMatrix4`` (numpy residues with a
fixed-width byte key for hashing).
"""

import logging
import numbers
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
import sympy

from .errors import MatrixLiteralError, NotSymplecticError


logger = logging.getLogger(__name__)

Entry = Union[int, str]
Literal = List[List[Entry]]


def parse_entry(entry) -> sympy.Rational:
    """Parse one literal entry: an integer or a ``"p/q"`` string."""
    if isinstance(entry, bool):
        raise MatrixLiteralError(f"boolean is not a matrix entry: {entry!r}")
    if isinstance(entry, (numbers.Integral, sympy.Rational)):
        return sympy.Rational(entry)
    if isinstance(entry, str):
        try:
            value = sympy.Rational(entry.strip())
        except (TypeError, ValueError, sympy.SympifyError) as exc:
            raise MatrixLiteralError(f"not a rational: {entry!r}") from exc
        return value
    raise MatrixLiteralError(f"unsupported entry type: {entry!r}")


def format_entry(value: sympy.Rational) -> Entry:
    """Inverse of ``parse_entry``: integers stay integers."""
    if value.q == 1:
        return int(value)
    return f"{value.p}/{value.q}"


class ExactMatrix4:
    """Immutable 4x4 matrix over the rationals."""

    __slots__ = ("_m",)

    def __init__(self, rows):
        if isinstance(rows, sympy.MatrixBase):
            m = sympy.ImmutableMatrix(rows)
        else:
            rows = [list(row) for row in rows]
            if len(rows) != 4 or any(len(row) != 4 for row in rows):
                raise MatrixLiteralError("matrix literal must have 4 rows of 4 entries")
            m = sympy.ImmutableMatrix([[parse_entry(e) for e in row] for row in rows])
        if m.shape != (4, 4):
            raise MatrixLiteralError(f"expected a 4x4 matrix, got {m.shape}")
        if not all(e.is_Rational for e in m):
            raise MatrixLiteralError("matrix entries must be rational")
        self._m = m

    @classmethod
    def identity(cls) -> "ExactMatrix4":
        """The 4x4 identity."""
        return cls(sympy.eye(4))

    @classmethod
    def from_literal(cls, literal) -> "ExactMatrix4":
        """Build from nested rows of ints, fraction strings or numbers.

        Raises:
            MatrixLiteralError: The literal is not a 4x4 array of rationals.
        """
        if not isinstance(literal, (list, tuple)):
            raise MatrixLiteralError("matrix literal must be an array of rows")
        return cls(literal)

    @property
    def matrix(self) -> sympy.ImmutableMatrix:
        """The underlying sympy matrix."""
        return self._m

    def __getitem__(self, index):
        return self._m[index]

    def rows(self) -> Tuple[Tuple[sympy.Rational, ...], ...]:
        """Row tuples of sympy Rationals."""
        return tuple(tuple(self._m[i, j] for j in range(4)) for i in range(4))

    def to_literal(self) -> Literal:
        """Rows with integers as ints and other entries as "p/q" strings."""
        return [[format_entry(e) for e in row] for row in self.rows()]

    def __matmul__(self, other: "ExactMatrix4") -> "ExactMatrix4":
        return ExactMatrix4(self._m * other._m)

    def __add__(self, other: "ExactMatrix4") -> "ExactMatrix4":
        return ExactMatrix4(self._m + other._m)

    def __sub__(self, other: "ExactMatrix4") -> "ExactMatrix4":
        return ExactMatrix4(self._m - other._m)

    def __neg__(self) -> "ExactMatrix4":
        return ExactMatrix4(-self._m)

    def __pow__(self, exponent: int) -> "ExactMatrix4":
        """Integer power; negative exponents invert."""
        return ExactMatrix4(self._m**exponent)

    def scale(self, factor) -> "ExactMatrix4":
        """Multiply every entry by a rational factor."""
        return ExactMatrix4(self._m * sympy.Rational(factor))

    def transpose(self) -> "ExactMatrix4":
        return ExactMatrix4(self._m.T)

    def inverse(self) -> "ExactMatrix4":
        """Exact inverse.

        Raises:
            ZeroDivisionError: The determinant is zero.
        """
        if self._m.det() == 0:
            raise ZeroDivisionError("matrix is singular")
        return ExactMatrix4(self._m.inv())

    def determinant(self) -> sympy.Rational:
        """Exact determinant."""
        return self._m.det()

    def rank(self) -> int:
        """Rank over Q."""
        return self._m.rank()

    def is_zero(self) -> bool:
        return all(e == 0 for e in self._m)

    def is_identity(self) -> bool:
        return self._m == sympy.eye(4)

    def is_integral(self) -> bool:
        """True iff every entry has denominator 1."""
        return all(e.q == 1 for e in self._m)

    def integer_rows(self) -> List[List[int]]:
        """Entries as Python ints; raises NotSymplecticError unless integral."""
        if not self.is_integral():
            raise NotSymplecticError("matrix is not integral")
        return [[int(e) for e in row] for row in self.rows()]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExactMatrix4):
            return NotImplemented
        return self._m == other._m

    def __hash__(self) -> int:
        return hash(self._m)

    def __repr__(self) -> str:
        return f"ExactMatrix4({self.to_literal()})"


_STANDARD_FORM_ROWS = np.array(
    [[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]], dtype=np.int64
)


def key_dtype(modulus: int) -> np.dtype:
    if modulus <= 256:
        return np.dtype("u1")
    if modulus <= 1 << 16:
        return np.dtype("<u2")
    return np.dtype("<u4")


class ModMatrix4:
    """Immutable 4x4 matrix with entries in Z/N."""

    __slots__ = ("modulus", "entries", "_key")

    def __init__(self, entries, modulus: int):
        if modulus < 2:
            raise ValueError(f"modulus must be at least 2, got {modulus}")
        array = np.asarray(entries, dtype=np.int64).reshape(4, 4) % modulus
        array.setflags(write=False)
        self.modulus = modulus
        self.entries = array
        self._key = None

    @classmethod
    def identity(cls, modulus: int) -> "ModMatrix4":
        return cls(np.eye(4, dtype=np.int64), modulus)

    def key(self) -> bytes:
        """Little-endian packed entries; injective for a fixed modulus."""
        if self._key is None:
            self._key = self.entries.astype(key_dtype(self.modulus)).tobytes()
        return self._key

    def _check_modulus(self, other: "ModMatrix4") -> None:
        if other.modulus != self.modulus:
            raise ValueError(f"moduli differ: {self.modulus} and {other.modulus}")

    def __matmul__(self, other: "ModMatrix4") -> "ModMatrix4":
        self._check_modulus(other)
        return ModMatrix4(self.entries @ other.entries, self.modulus)

    def __pow__(self, exponent: int) -> "ModMatrix4":
        if exponent < 0:
            raise ValueError("negative powers are not supported mod N")
        result = ModMatrix4.identity(self.modulus)
        base = self
        while exponent:
            if exponent & 1:
                result = result @ base
            base = base @ base
            exponent >>= 1
        return result

    def apply(self, vector: Sequence[int]) -> Tuple[int, ...]:
        """Image of a column vector."""
        image = (self.entries @ np.asarray(vector, dtype=np.int64)) % self.modulus
        return tuple(int(x) for x in image)

    def is_symplectic(self) -> bool:
        form = _STANDARD_FORM_ROWS % self.modulus
        return bool(np.array_equal((self.entries.T @ form @ self.entries) % self.modulus, form))

    def to_rows(self) -> List[List[int]]:
        return self.entries.tolist()

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModMatrix4):
            return NotImplemented
        return self.modulus == other.modulus and self.key() == other.key()

    def __hash__(self) -> int:
        return hash((self.modulus, self.key()))

    def __repr__(self) -> str:
        return f"ModMatrix4({self.to_rows()}, modulus={self.modulus})"


class QuadraticVector4:
    """Vector with entries c*sqrt(r), c rational and r in {1, 2}."""

    __slots__ = ("entries",)

    def __init__(self, entries: Iterable):
        values = tuple(sympy.sympify(e) for e in entries)
        if len(values) != 4:
            raise MatrixLiteralError("vector must have 4 entries")
        root2 = sympy.sqrt(2)
        for value in values:
            if not (value.is_rational or (value / root2).is_rational):
                raise MatrixLiteralError(
                    f"entry {value} is not of the form c*sqrt(r), r in {{1,2}}"
                )
        self.entries = values

    @classmethod
    def from_literal(cls, literal) -> "QuadraticVector4":
        """Parse ``[[coeff, radicand], ...]``; radicands are reduced (sqrt 8 = 2 sqrt 2)."""
        try:
            pairs = [(parse_entry(coeff), int(radicand)) for coeff, radicand in literal]
        except (TypeError, ValueError) as exc:
            raise MatrixLiteralError(f"malformed vector literal: {literal!r}") from exc
        if any(radicand < 1 for _, radicand in pairs):
            raise MatrixLiteralError("radicands must be positive")
        return cls(coeff * sympy.sqrt(radicand) for coeff, radicand in pairs)

    def outer(self) -> ExactMatrix4:
        """The rational matrix v v^T."""
        products = [[sympy.expand(a * b) for b in self.entries] for a in self.entries]
        if not all(p.is_rational for row in products for p in row):
            raise MatrixLiteralError(f"outer product of {self} is not rational")
        return ExactMatrix4([[sympy.Rational(p) for p in row] for row in products])

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuadraticVector4):
            return NotImplemented
        return all(sympy.simplify(a - b) == 0 for a, b in zip(self.entries, other.entries))

    def __hash__(self) -> int:
        return hash(self.entries)

    def __repr__(self) -> str:
        return f"QuadraticVector4({', '.join(str(e) for e in self.entries)})"


def standard_form() -> ExactMatrix4:
    """The form S preserved by Sp4(Z)."""
    return ExactMatrix4(
        [
            [0, 0, 1, 0],
            [0, 0, 0, 1],
            [-1, 0, 0, 0],
            [0, -1, 0, 0],
        ]
    )


def frobenius_form() -> ExactMatrix4:
    """The invariant form in the normalised Frobenius basis."""
    return ExactMatrix4(
        [
            [0, 0, 0, 1],
            [0, 0, -1, 0],
            [0, 1, 0, 0],
            [-1, 0, 0, 0],
        ]
    )


def frobenius_monodromy() -> ExactMatrix4:
    """Monodromy around 0 in the normalised Frobenius basis."""
    return ExactMatrix4(
        [
            [1, 1, "1/2", "1/6"],
            [0, 1, 1, "1/2"],
            [0, 0, 1, 1],
            [0, 0, 0, 1],
        ]
    )


def is_symplectic(m: ExactMatrix4, form: ExactMatrix4) -> bool:
    """Return True iff m^T form m == form."""
    return m.transpose() @ form @ m == form


def _column(c: Sequence) -> sympy.ImmutableMatrix:
    values = [parse_entry(x) if not isinstance(x, sympy.Basic) else x for x in c]
    if len(values) != 4:
        raise MatrixLiteralError("vector must have 4 entries")
    return sympy.ImmutableMatrix(4, 1, values)


def reflection_from_outer(
    outer: ExactMatrix4, d, form: ExactMatrix4, sign: int = 1
) -> ExactMatrix4:
    """Reflection I - (sign/d) form^T (c c^T) given the outer product c c^T.

    With form S this is the row action v -> v - (1/d) <c, v> c written in
    column convention.
    """
    d = sympy.Rational(d)
    if d == 0:
        raise ValueError("reflection divisor d must be non-zero")
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    correction = ExactMatrix4(form.matrix.T * outer.matrix * (sympy.Rational(sign) / d))
    return ExactMatrix4.identity() - correction


def symplectic_reflection(c: Sequence, d, form: ExactMatrix4, sign: int = 1) -> ExactMatrix4:
    """Matrix of v -> v - (1/d)<c, v> c with the pairing given by form.

    Args:
        c: Four rationals (ints or ``"p/q"`` strings).
        d: Non-zero rational divisor.
        form: Antisymmetric invertible pairing matrix.
        sign: Orientation of the pairing, +1 for every shipped case.

    Returns:
        T with (T - I)^2 = 0, rank(T - I) <= 1 and T^T form T = form.
    """
    column = _column(c)
    return reflection_from_outer(ExactMatrix4(column * column.T), d, form, sign)


def is_symplectic_reflection(t: ExactMatrix4) -> bool:
    """True iff t preserves S and t - I is a rank one square-zero matrix."""
    if not is_symplectic(t, standard_form()):
        return False
    nilpotent = t - ExactMatrix4.identity()
    return (nilpotent @ nilpotent).is_zero() and nilpotent.rank() == 1


def mod_reduce(m: ExactMatrix4, n: int) -> ModMatrix4:
    """Entrywise reduction of an integral matrix mod n."""
    if n < 2:
        raise ValueError(f"modulus must be at least 2, got {n}")
    if not m.is_integral():
        raise NotSymplecticError("only integral matrices can be reduced mod n")
    return ModMatrix4(m.integer_rows(), n)

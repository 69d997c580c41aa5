"""Operator catalog: records, invariants derived from exponents, congruence subgroups."""

import json
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import sympy

from .errors import CatalogError, UnknownCaseError, UsageError
from .linalg import (
    ExactMatrix4,
    QuadraticVector4,
    frobenius_monodromy,
    is_symplectic,
    is_symplectic_reflection,
    reflection_from_outer,
    standard_form,
)


logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"
CATALOG_PATH = DATA_DIR / "catalog.json"

HYPERGEOMETRIC = "hypergeometric"
CONIFOLD = "conifold"
STATUSES = ("finite", "infinite", "unknown")

# m(s) as prime -> exponent; the closed formula printed next to this table
# disagrees with it (s = 5 gives 5^(1/5)), the table is used.
M_S_TABLE: Dict[int, Dict[int, sympy.Rational]] = {
    2: {2: sympy.Rational(2)},
    3: {3: sympy.Rational(3, 2)},
    4: {2: sympy.Rational(3)},
    5: {5: sympy.Rational(5, 4)},
    6: {2: sympy.Rational(2), 3: sympy.Rational(3, 2)},
    8: {2: sympy.Rational(4)},
    10: {2: sympy.Rational(2), 5: sympy.Rational(5, 4)},
    12: {2: sympy.Rational(3), 3: sympy.Rational(3, 2)},
}


@dataclass(frozen=True, order=True)
class CyclotomicExponent:
    """Reduced fraction r/s in (0, 1)."""

    r: int
    s: int

    def __post_init__(self):
        if not 0 < self.r < self.s:
            raise UsageError(f"exponent {self.r}/{self.s} is not in (0, 1)")
        if math.gcd(self.r, self.s) != 1:
            raise UsageError(f"exponent {self.r}/{self.s} is not reduced")

    @classmethod
    def parse(cls, text: str) -> "CyclotomicExponent":
        value = sympy.Rational(text)
        return cls(int(value.p), int(value.q))

    @property
    def value(self) -> sympy.Rational:
        return sympy.Rational(self.r, self.s)

    def complement(self) -> "CyclotomicExponent":
        return CyclotomicExponent(self.s - self.r, self.s)

    def __str__(self) -> str:
        return f"{self.r}/{self.s}"


@dataclass(frozen=True)
class OperatorRecord:
    """One Calabi-Yau operator: hypergeometric or with an extra conifold point."""

    aesz: int
    kind: str
    d: int
    k: int
    c2h: int
    c3: int
    exponents: Optional[Tuple[CyclotomicExponent, ...]] = None
    discriminant: Optional[int] = None
    n1: Optional[int] = None
    extra_generators: Tuple[ExactMatrix4, ...] = ()
    reflection_vectors: Tuple[QuadraticVector4, ...] = ()
    reflection_sign: int = 1
    reflection_divisor: int = 1
    label: Optional[str] = None
    status: str = "unknown"
    known_index: Optional[int] = None
    index_is_lower_bound: bool = False
    companion_index: Optional[int] = None
    printed_discriminant: Optional[int] = None
    printed_c2h: Optional[int] = None

    @property
    def dk(self) -> Tuple[int, int]:
        return (self.d, self.k)

    @property
    def b(self) -> sympy.Rational:
        """The characteristic number c2.H / 24."""
        return sympy.Rational(self.c2h, 24)

    @property
    def alphas(self) -> Optional[Tuple[CyclotomicExponent, CyclotomicExponent]]:
        if self.exponents is None:
            return None
        return self.exponents[0], self.exponents[1]

    @property
    def case_name(self) -> str:
        if self.kind == HYPERGEOMETRIC:
            return f"({self.d},{self.k})"
        return f"AESZ {self.aesz}"

    def generators(self, include_extra: bool = True) -> List[ExactMatrix4]:
        """M, N and, when asked, the extra conifold matrices."""
        m, n = integral_generators(self.d, self.k)
        gens = [m, n]
        if include_extra:
            gens.extend(self.extra_generators)
        return gens


def integral_generators(d: int, k: int) -> Tuple[ExactMatrix4, ExactMatrix4]:
    """Integral monodromy M (around 0) and N (around the conifold point)."""
    if d < 1 or k < 1:
        raise UsageError(f"(d,k) must be positive, got ({d},{k})")
    m = ExactMatrix4(
        [
            [1, 1, 0, 0],
            [0, 1, 0, 0],
            [d, d, 1, 0],
            [0, -k, -1, 1],
        ]
    )
    n = ExactMatrix4(
        [
            [1, 0, 0, 0],
            [0, 1, 0, 1],
            [0, 0, 1, 0],
            [0, 0, 0, 1],
        ]
    )
    return m, n


def base_change(d: int, b, a=0) -> ExactMatrix4:
    """Matrix A conjugating the Frobenius-basis monodromy to the integral one."""
    if d == 0:
        raise UsageError("d = 0 makes the base change singular")
    d = sympy.Rational(d)
    b = sympy.Rational(b)
    a = sympy.Rational(a)
    return ExactMatrix4(
        sympy.ImmutableMatrix(
            [
                [0, 0, 1, 0],
                [0, 0, 0, 1],
                [0, d, d / 2, -b],
                [-d, 0, -b, -a],
            ]
        )
    )


def frobenius_conifold_vector(d: int, b, a=0) -> Tuple[sympy.Rational, ...]:
    """Vanishing cycle C = (d, 0, b, a) in the Frobenius basis."""
    return (sympy.Rational(d), sympy.Rational(0), sympy.Rational(b), sympy.Rational(a))


def conjugated_monodromy(d: int, b, a=0) -> ExactMatrix4:
    """A M_F A^-1."""
    change = base_change(d, b, a)
    return change @ frobenius_monodromy() @ change.inverse()


def _integer_root(expression, what: str) -> int:
    x = sympy.Symbol("x")
    poly = sympy.Poly(sympy.minimal_polynomial(expression, x), x)
    if poly.degree() != 1:
        raise UsageError(f"{what} is not rational (minimal polynomial {poly.as_expr()})")
    lead, const = poly.all_coeffs()
    root = sympy.Rational(-const, lead)
    if root.q != 1:
        raise UsageError(f"{what} = {root} is not an integer")
    return int(root)


def dk_from_exponents(a1: CyclotomicExponent, a2: CyclotomicExponent) -> Tuple[int, int]:
    """(d, k) with 2 - 2cos(2 pi a_i) the roots of X^2 - kX + d.

    Both symmetric functions are checked through their minimal polynomials,
    so no floating point tolerance is involved.
    """
    roots = [2 - 2 * sympy.cos(2 * sympy.pi * a.value) for a in (a1, a2)]
    k = _integer_root(roots[0] + roots[1], "k")
    d = _integer_root(sympy.expand(roots[0] * roots[1]), "d")
    return d, k


def discriminant(exponents: Sequence[CyclotomicExponent]) -> int:
    """Product of m(s) over the exponents, via exact prime-exponent vectors."""
    exponents = list(exponents)
    if sorted(exponents) != sorted(a.complement() for a in exponents):
        raise UsageError("exponents are not closed under a -> 1 - a")

    total: Dict[int, sympy.Rational] = {}
    for alpha in exponents:
        if alpha.s not in M_S_TABLE:
            raise UsageError(f"no m(s) value for s = {alpha.s}")
        for prime, power in M_S_TABLE[alpha.s].items():
            total[prime] = total.get(prime, sympy.Rational(0)) + power

    result = 1
    for prime, power in sorted(total.items()):
        if power.q != 1:
            raise AssertionError(f"non-integral power {prime}^{power} in discriminant")
        result *= prime ** int(power)
    return result


def lambda_classifier(d: int, k: int) -> Tuple[sympy.Rational, str]:
    """Lambda = (7k - 2d)/24 and the index type it predicts."""
    value = sympy.Rational(7 * k - 2 * d, 24)
    if value > 1:
        return value, "infinite"
    if value < 1:
        return value, "finite"
    return value, "boundary"


def _check_divides(d1: int, d2: int) -> None:
    if d1 < 1 or d2 < 1 or d1 % d2:
        raise UsageError(f"need positive d2 dividing d1, got d1={d1}, d2={d2}")


# (row, column, residue) constraints of Gamma(d1, d2).
_PATTERN_D1 = ((0, 0, 1), (1, 0, 0), (2, 0, 0), (3, 0, 0), (2, 1, 0), (2, 2, 1), (2, 3, 0))
_PATTERN_D2 = ((1, 1, 1), (3, 1, 0), (3, 3, 1))


def gamma_membership(m: ExactMatrix4, d1: int, d2: int) -> bool:
    """True iff m matches the Gamma(d1, d2) residue patterns."""
    _check_divides(d1, d2)
    rows = m.integer_rows()

    def matches(constraints, modulus):
        return all((rows[i][j] - value) % modulus == 0 for i, j, value in constraints)

    return matches(_PATTERN_D1, d1) and matches(_PATTERN_D2, d2)


def gamma_index(d1: int, d2: int) -> int:
    """Index of Gamma(d1, d2) in Sp4(Z)."""
    _check_divides(d1, d2)
    index = sympy.Rational(d1**4 * d2**2)
    for p in sympy.primefactors(d1):
        index *= 1 - sympy.Rational(1, p**4)
    for p in sympy.primefactors(d2):
        index *= 1 - sympy.Rational(1, p**2)
    if index.q != 1:
        raise AssertionError(f"gamma index {index} is not an integer")
    return int(index)


def _optional_int(data: dict, key: str) -> Optional[int]:
    value = data.get(key)
    return None if value is None else int(value)


def record_from_dict(data: dict) -> OperatorRecord:
    """Parse one catalog JSON object (schema errors raise CatalogError)."""
    aesz = data.get("aesz", "?")
    try:
        exponents = None
        if data.get("alphas"):
            exponents = tuple(CyclotomicExponent.parse(a) for a in data["alphas"])
        return OperatorRecord(
            aesz=int(data["aesz"]),
            kind=data["kind"],
            d=int(data["d"]),
            k=int(data["k"]),
            c2h=int(data["c2H"]),
            c3=int(data["c3"]),
            exponents=exponents,
            discriminant=_optional_int(data, "discriminant"),
            n1=_optional_int(data, "n1"),
            extra_generators=tuple(
                ExactMatrix4.from_literal(lit) for lit in data.get("extra_generators", [])
            ),
            reflection_vectors=tuple(
                QuadraticVector4.from_literal(lit) for lit in data.get("reflection_vectors", [])
            ),
            reflection_sign=int(data.get("reflection_sign", 1)),
            reflection_divisor=int(data.get("reflection_divisor", 1)),
            label=data.get("label"),
            status=data.get("status", "unknown"),
            known_index=_optional_int(data, "known_index"),
            index_is_lower_bound=bool(data.get("index_is_lower_bound", False)),
            companion_index=_optional_int(data, "companion_index"),
            printed_discriminant=_optional_int(data, "printed_discriminant"),
            printed_c2h=_optional_int(data, "printed_c2H"),
        )
    except KeyError as exc:
        raise CatalogError(aesz, "schema", f"missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise CatalogError(aesz, "schema", str(exc)) from exc


def validate_record(record: OperatorRecord) -> None:
    """Run every record invariant; raise CatalogError naming the first failure."""
    aesz = record.aesz
    if record.kind not in (HYPERGEOMETRIC, CONIFOLD):
        raise CatalogError(aesz, "kind", record.kind)
    if record.status not in STATUSES:
        raise CatalogError(aesz, "status", record.status)

    if sympy.Rational(record.d, 6) + sympy.Rational(record.c2h, 12) != record.k:
        raise CatalogError(aesz, "k = d/6 + c2H/12")

    if record.kind == HYPERGEOMETRIC:
        if record.exponents is None or len(record.exponents) != 4:
            raise CatalogError(aesz, "exponents", "hypergeometric records need 4 alphas")
        if dk_from_exponents(*record.alphas) != record.dk:
            raise CatalogError(aesz, "dk_from_exponents")
        if discriminant(record.exponents) != record.discriminant:
            raise CatalogError(aesz, "discriminant", f"computed {discriminant(record.exponents)}")

    s = standard_form()
    for m in record.generators(include_extra=False):
        if not is_symplectic(m, s):
            raise CatalogError(aesz, "generators symplectic")
        if not gamma_membership(m, record.d, math.gcd(record.d, record.k)):
            raise CatalogError(aesz, "Gamma(d, gcd(d,k)) membership")

    if len(record.reflection_vectors) != len(record.extra_generators):
        raise CatalogError(aesz, "one reflection vector per extra generator")
    for extra, vector in zip(record.extra_generators, record.reflection_vectors):
        if not is_symplectic_reflection(extra):
            raise CatalogError(aesz, "extra generator is a symplectic reflection")
        rebuilt = reflection_from_outer(
            vector.outer(), record.reflection_divisor, s, record.reflection_sign
        )
        if rebuilt != extra:
            raise CatalogError(aesz, "reflection vector reproduces extra generator")


def _log_printed_values(record: OperatorRecord) -> None:
    if record.printed_discriminant is not None:
        logger.warning(
            "AESZ %s: discriminant printed as %s, using %s",
            record.aesz,
            record.printed_discriminant,
            record.discriminant,
        )
    if record.printed_c2h is not None:
        logger.warning(
            "AESZ %s: c2.H printed as %s, using %s so that k = d/6 + c2H/12",
            record.aesz,
            record.printed_c2h,
            record.c2h,
        )


def load_catalog(path: Optional[Path] = None) -> List[OperatorRecord]:
    """Load and validate a catalog file; the bundled one by default."""
    path = Path(path) if path is not None else CATALOG_PATH
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError as exc:
        raise CatalogError("-", "load", f"no catalog at {path}") from exc
    except json.JSONDecodeError as exc:
        raise CatalogError("-", "load", f"invalid JSON: {exc}") from exc

    if not isinstance(data, list):
        raise CatalogError("-", "schema", "top level must be an array")

    records = []
    for item in data:
        record = record_from_dict(item)
        validate_record(record)
        _log_printed_values(record)
        records.append(record)
    logger.debug("loaded %d catalog records from %s", len(records), path)
    return records


@lru_cache(maxsize=1)
def bundled_catalog() -> Tuple[OperatorRecord, ...]:
    """Records of the catalog shipped with the package, in file order."""
    return tuple(load_catalog())


def hypergeometric_records(records: Sequence[OperatorRecord]) -> List[OperatorRecord]:
    """The hypergeometric records, in input order."""
    return [r for r in records if r.kind == HYPERGEOMETRIC]


def hypergeometric_exponents(record: OperatorRecord) -> Tuple[CyclotomicExponent, ...]:
    """Local exponents at infinity; only hypergeometric records carry them."""
    if record.exponents is None:
        raise UsageError(f"{record.case_name} has no hypergeometric exponents")
    return record.exponents


def find_record(
    records: Sequence[OperatorRecord],
    aesz: Optional[int] = None,
    dk: Optional[Tuple[int, int]] = None,
) -> OperatorRecord:
    """Select a record by AESZ id, or the hypergeometric record with given (d,k)."""
    if aesz is not None:
        for record in records:
            if record.aesz == aesz:
                return record
        raise UnknownCaseError(f"unknown AESZ id {aesz}")
    if dk is not None:
        for record in hypergeometric_records(records):
            if record.dk == tuple(dk):
                return record
        raise UnknownCaseError(f"no hypergeometric case with (d,k) = {tuple(dk)}")
    raise UnknownCaseError("a case needs an AESZ id or a (d,k) pair")


def plot_data(records: Sequence[OperatorRecord]) -> List[dict]:
    """One row per hypergeometric case: d, k, Lambda, prediction and known status."""
    rows = []
    for record in hypergeometric_records(records):
        value, predicted = lambda_classifier(record.d, record.k)
        rows.append(
            {
                "aesz": record.aesz,
                "d": record.d,
                "k": record.k,
                "Lambda": str(value),
                "predicted": predicted,
                "status": record.status,
            }
        )
    return rows


def ordering_check(records: Sequence[OperatorRecord]) -> bool:
    """Do (d ascending, k descending), n1 descending and N descending agree?"""
    cases = hypergeometric_records(records)
    by_dk = [r.aesz for r in sorted(cases, key=lambda r: (r.d, -r.k))]
    by_n1 = [r.aesz for r in sorted(cases, key=lambda r: -r.n1)]
    by_discriminant = [r.aesz for r in sorted(cases, key=lambda r: -r.discriminant)]
    return by_dk == by_n1 == by_discriminant

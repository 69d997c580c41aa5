"""Behr presentation of Sp4(Z): words, evaluation and word decomposition."""

import json
import logging
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from .errors import InvariantViolation, MatrixLiteralError, NotSymplecticError, PresentationError
from .linalg import ExactMatrix4, is_symplectic, standard_form


logger = logging.getLogger(__name__)

PRESENTATION_PATH = Path(__file__).parent / "data" / "presentation.json"

IntMatrix = List[List[int]]


class GeneratorSymbol(str, Enum):
    """The six root-system generators."""

    XA = "xa"
    XB = "xb"
    XAB = "xab"
    X2AB = "x2ab"
    WA = "wa"
    WB = "wb"

    def __str__(self) -> str:
        return self.value


UNIPOTENT = (GeneratorSymbol.XA, GeneratorSymbol.XB, GeneratorSymbol.XAB, GeneratorSymbol.X2AB)

Letter = Tuple[GeneratorSymbol, int]

_TOKEN = re.compile(r"^([a-z0-9]+)(?:\^(-?\d+))?$")


def _symbol(name) -> GeneratorSymbol:
    try:
        return GeneratorSymbol(name)
    except ValueError as exc:
        raise MatrixLiteralError(f"unknown generator {name!r}") from exc


def _normalize(letters: Iterable[Letter]) -> Tuple[Letter, ...]:
    stack: List[Letter] = []
    for symbol, exponent in letters:
        if exponent == 0:
            continue
        if stack and stack[-1][0] == symbol:
            merged = stack[-1][1] + exponent
            stack.pop()
            if merged:
                stack.append((symbol, merged))
        else:
            stack.append((symbol, exponent))
    return tuple(stack)


@dataclass(frozen=True)
class Word:
    """Word in the six generators; adjacent letters always have distinct symbols."""

    letters: Tuple[Letter, ...] = ()

    def __post_init__(self):
        letters = []
        for symbol, exponent in self.letters:
            if isinstance(exponent, bool) or not isinstance(exponent, int):
                raise MatrixLiteralError(f"exponent must be an integer, got {exponent!r}")
            letters.append((_symbol(symbol), exponent))
        object.__setattr__(self, "letters", _normalize(letters))

    @classmethod
    def letter(cls, symbol, exponent: int = 1) -> "Word":
        return cls(((symbol, exponent),))

    @classmethod
    def parse(cls, text: str) -> "Word":
        """Parse ``"xa^2 wb^-1 x2ab"``; ``""`` and ``"1"`` are the identity."""
        letters = []
        for token in text.replace("*", " ").split():
            if token == "1":
                continue
            match = _TOKEN.match(token)
            if not match:
                raise MatrixLiteralError(f"malformed word token {token!r}")
            letters.append((match.group(1), int(match.group(2) or 1)))
        return cls(tuple(letters))

    @classmethod
    def from_json(cls, data) -> "Word":
        try:
            return cls(tuple((name, exponent) for name, exponent in data))
        except (TypeError, ValueError) as exc:
            raise MatrixLiteralError(f"malformed word {data!r}") from exc

    def to_json(self) -> List[list]:
        return [[symbol.value, exponent] for symbol, exponent in self.letters]

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def inverse(self) -> "Word":
        return Word(tuple((symbol, -exponent) for symbol, exponent in reversed(self.letters)))

    def __pow__(self, n: int) -> "Word":
        base = self if n >= 0 else self.inverse()
        return Word(base.letters * abs(n))

    def conjugate(self, by: "Word") -> "Word":
        """by * self * by^-1."""
        return by * self * by.inverse()

    @property
    def length(self) -> int:
        """Number of generator occurrences, counting exponents."""
        return sum(abs(exponent) for _, exponent in self.letters)

    def expand(self) -> List[Letter]:
        """Letters with exponents +1 or -1 only."""
        out = []
        for symbol, exponent in self.letters:
            step = 1 if exponent > 0 else -1
            out.extend([(symbol, step)] * abs(exponent))
        return out

    def __len__(self) -> int:
        return len(self.letters)

    def __bool__(self) -> bool:
        return bool(self.letters)

    def __str__(self) -> str:
        if not self.letters:
            return "1"
        return " ".join(
            symbol.value if exponent == 1 else f"{symbol.value}^{exponent}"
            for symbol, exponent in self.letters
        )


IDENTITY_WORD = Word()


def behr_matrices() -> Dict[GeneratorSymbol, ExactMatrix4]:
    """The six generating matrices of Sp4(Z)."""
    return {
        GeneratorSymbol.XA: ExactMatrix4(
            [[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, -1, 1]]
        ),
        GeneratorSymbol.XB: ExactMatrix4(
            [[1, 0, 0, 0], [0, 1, 0, 1], [0, 0, 1, 0], [0, 0, 0, 1]]
        ),
        GeneratorSymbol.XAB: ExactMatrix4(
            [[1, 0, 0, 1], [0, 1, 1, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
        ),
        GeneratorSymbol.X2AB: ExactMatrix4(
            [[1, 0, 1, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
        ),
        GeneratorSymbol.WA: ExactMatrix4(
            [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]]
        ),
        GeneratorSymbol.WB: ExactMatrix4(
            [[1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0]]
        ),
    }


def evaluate(
    w: Word, images: Optional[Mapping[GeneratorSymbol, ExactMatrix4]] = None
) -> ExactMatrix4:
    """Product of the image powers in word order."""
    if images is None:
        images = behr_matrices()
    result = ExactMatrix4.identity()
    for symbol, exponent in w.letters:
        result = result @ images[symbol] ** exponent
    return result


def generator_words() -> List[Word]:
    """One-letter words for all six generators."""
    return [Word.letter(symbol) for symbol in GeneratorSymbol]


def monodromy_words(d: int, k: int) -> Tuple[Word, Word]:
    """Words g1, g2 evaluating to N and M(d, k)."""
    if d < 1 or k < 1:
        raise MatrixLiteralError(f"(d,k) must be positive, got ({d},{k})")
    square_inverse = Word.parse("wa wb") ** -2
    g1 = Word.letter(GeneratorSymbol.XB)
    g2 = (
        square_inverse
        * Word(((GeneratorSymbol.X2AB, -d), (GeneratorSymbol.XB, k)))
        * Word.parse("xa^-1 wa^-3 xa^-1")
        * square_inverse
    )
    return g1, g2


@dataclass(frozen=True)
class Presentation:
    """Generators, relators and the matrix images realising them."""

    generators: Tuple[GeneratorSymbol, ...]
    relators: Tuple[Word, ...]
    matrix_images: Mapping[GeneratorSymbol, ExactMatrix4]
    name: str = ""
    provenance: str = ""

    def __hash__(self) -> int:
        return hash((self.generators, self.relators))


def load_presentation(path: Optional[Path] = None) -> Presentation:
    """Load a presentation file and check every relator evaluates to I.

    Raises:
        PresentationError: Malformed file, wrong generators, or a relator
            whose image is not the identity.
    """
    path = Path(path) if path is not None else PRESENTATION_PATH
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError as exc:
        raise PresentationError(f"no presentation at {path}") from exc
    except json.JSONDecodeError as exc:
        raise PresentationError(f"presentation {path} is not valid JSON: {exc}") from exc

    try:
        generators = tuple(GeneratorSymbol(name) for name in data["generators"])
        relators = tuple(Word.from_json(relator) for relator in data["relators"])
    except (KeyError, ValueError, TypeError) as exc:
        raise PresentationError(f"malformed presentation {path}: {exc}") from exc

    if sorted(generators) != sorted(GeneratorSymbol):
        raise PresentationError(f"expected the six generators, got {[g.value for g in generators]}")

    images = behr_matrices()
    for number, relator in enumerate(relators, start=1):
        if not evaluate(relator, images).is_identity():
            raise PresentationError(
                f"relator {number} ({relator}) does not evaluate to the identity"
            )

    logger.debug("loaded presentation with %d relators from %s", len(relators), path)
    return Presentation(
        generators=generators,
        relators=relators,
        matrix_images=images,
        name=data.get("name", ""),
        provenance=data.get("provenance", ""),
    )


@lru_cache(maxsize=1)
def bundled_presentation() -> Presentation:
    return load_presentation()


# Integer fast path for decompose.


def _int_mul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    return [[sum(a[i][t] * b[t][j] for t in range(4)) for j in range(4)] for i in range(4)]


_INT_IDENTITY = [[int(i == j) for j in range(4)] for i in range(4)]


@lru_cache(maxsize=1)
def _int_images() -> Dict[GeneratorSymbol, IntMatrix]:
    return {symbol: m.integer_rows() for symbol, m in behr_matrices().items()}


def _int_power(symbol: GeneratorSymbol, exponent: int) -> IntMatrix:
    image = _int_images()[symbol]
    if symbol in UNIPOTENT:
        # (x - I)^2 = 0 for the root elements
        return [
            [_INT_IDENTITY[i][j] + exponent * (image[i][j] - _INT_IDENTITY[i][j]) for j in range(4)]
            for i in range(4)
        ]
    result = _INT_IDENTITY
    for _ in range(exponent % 4):
        result = _int_mul(result, image)
    return result


def _int_evaluate(w: Word) -> IntMatrix:
    result = _INT_IDENTITY
    for symbol, exponent in w.letters:
        result = _int_mul(result, _int_power(symbol, exponent))
    return result


_SQUARE = Word.parse("wa wb wa wb")


class _Reduction:
    """Left row operations on an integer symplectic matrix, recorded as words."""

    def __init__(self, rows: IntMatrix):
        self.rows = [list(row) for row in rows]
        self.operations: List[Word] = []

    def entry(self, i: int, column: int) -> int:
        return self.rows[i][column]

    def apply(self, w: Word) -> None:
        if not w:
            return
        self.rows = _int_mul(_int_evaluate(w), self.rows)
        self.operations.append(w)

    def euclid(self, column: int, i: int, j: int, up, down) -> None:
        """Clear entry j of a column with up(t): v_i += t v_j and down(t): v_j -= t v_i."""
        while self.entry(j, column) != 0:
            if self.entry(i, column) == 0:
                self.apply(up(1))
                continue
            self.apply(down(self.entry(j, column) // self.entry(i, column)))
            if self.entry(j, column) == 0:
                break
            self.apply(up(-(self.entry(i, column) // self.entry(j, column))))


def _x(symbol: GeneratorSymbol):
    return lambda t: Word.letter(symbol, t)


def _conjugated(symbol: GeneratorSymbol, by: Word):
    return lambda t: Word.letter(symbol, t).conjugate(by) if t else IDENTITY_WORD


def decompose(m: ExactMatrix4) -> Word:
    """Write an integral symplectic matrix as a word in the six generators.

    The first column is reduced to e1 by Euclidean steps on the coordinate
    pairs (1,3), (2,4), (1,2); the second column to e2 on the pair (2,4).
    What remains is unipotent and is read off as x2ab^p xb^s xab^q.

    Raises:
        NotSymplecticError: m is not integral or does not preserve S.
    """
    if not m.is_integral() or not is_symplectic(m, standard_form()):
        raise NotSymplecticError("decompose needs an integral symplectic matrix")

    xa, xb, x2ab = GeneratorSymbol.XA, GeneratorSymbol.XB, GeneratorSymbol.X2AB
    wa, wb = Word.letter(GeneratorSymbol.WA), Word.letter(GeneratorSymbol.WB)

    state = _Reduction(m.integer_rows())
    state.euclid(0, 0, 2, _x(x2ab), _conjugated(x2ab, _SQUARE))
    state.euclid(0, 1, 3, _x(xb), _conjugated(xb, wb))
    state.euclid(0, 0, 1, _x(xa), _conjugated(xa, wa))
    if state.entry(0, 0) == -1:
        state.apply(wa**2)

    state.euclid(1, 1, 3, _x(xb), _conjugated(xb, wb))
    if state.entry(1, 1) == -1:
        state.apply(wb**2)
    state.apply(Word.letter(xa, -state.entry(0, 1)))

    u = state.rows
    p, q, r, s = u[0][2], u[0][3], u[1][2], u[1][3]
    expected = [[1, 0, p, q], [0, 1, r, s], [0, 0, 1, 0], [0, 0, 0, 1]]
    if u != expected or q != r:
        raise InvariantViolation(f"reduction did not end in a symmetric unipotent matrix: {u}")

    word = IDENTITY_WORD
    for operation in state.operations:
        word = word * operation.inverse()
    word = word * Word(((x2ab, p), (xb, s), (GeneratorSymbol.XAB, q)))

    if evaluate(word) != m:
        raise InvariantViolation(f"decomposition {word} does not evaluate to the input")
    return word


def random_word(rng, length: int, max_exponent: int = 3) -> Word:
    """Word of at most ``length`` letters with exponents in [-max, max]."""
    symbols = list(GeneratorSymbol)
    letters = []
    for _ in range(length):
        exponent = rng.randint(1, max_exponent) * rng.choice((1, -1))
        letters.append((rng.choice(symbols), exponent))
    return Word(tuple(letters))

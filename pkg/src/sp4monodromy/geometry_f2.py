"""Finite symplectic geometry of (Z/2)^4.

The 15 nonzero vectors are labeled a..o, letter i being the binary
expansion of i (most significant bit first). Sp4(Z/2) acts on column
vectors and permutes six pentads of points, ten synthemes and six
pentads of Lagrangian lines.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from sympy.combinatorics import Permutation

from .catalog import bundled_catalog, find_record
from .coset_enum import enumerate_cosets
from .errors import InvariantViolation, UsageError
from .fpgroup import behr_matrices, bundled_presentation, monodromy_words
from .linalg import ModMatrix4, mod_reduce
from .modgroup import group_elements


logger = logging.getLogger(__name__)

LETTERS = "abcdefghijklmno"
ROMAN = ("I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X")

PENTAD_LABELS: Dict[str, str] = {
    "1": "adgmo",
    "2": "aefln",
    "3": "bhkno",
    "4": "bijlm",
    "5": "cdeik",
    "6": "cfghj",
}

SYNTHEME_LABELS: Dict[str, Tuple[str, str]] = {
    "I": ("ade", "bhj"),
    "II": ("afg", "bik"),
    "III": ("alm", "chk"),
    "IV": ("ano", "cij"),
    "V": ("bln", "cdg"),
    "VI": ("bmo", "cef"),
    "VII": ("dim", "fhn"),
    "VIII": ("dko", "fjl"),
    "IX": ("eil", "gho"),
    "X": ("ekn", "gjm"),
}

LINE_PENTAD_LABELS: Dict[str, Tuple[str, ...]] = {
    "1'": ("abc", "dhl", "ejo", "fkm", "gin"),
    "2'": ("abc", "djn", "ehm", "fio", "gkl"),
    "3'": ("ajk", "beg", "cmn", "dhl", "fio"),
    "4'": ("ahi", "bdf", "cmn", "ejo", "gkl"),
    "5'": ("ahi", "beg", "clo", "djn", "fkm"),
    "6'": ("ajk", "bdf", "clo", "ehm", "gin"),
}

# Permutations of synthemes as printed alongside the labeled lists.
PRINTED_SYNTHEME_PERMUTATIONS: Dict[str, str] = {
    "M(1,2)": "(I,IV,II,III)(VII,X,IX,IIIV)",
    "N": "(II,VI)(III,IX)(VI,X)",
}

PENTAD = "pentad"
SYNTHEME = "syntheme"
LINE_PENTAD = "line_pentad"
KINDS = (PENTAD, SYNTHEME, LINE_PENTAD)

_BITS = np.array([8, 4, 2, 1], dtype=np.int64)
_VECTORS = np.array([[(i >> s) & 1 for s in (3, 2, 1, 0)] for i in range(16)], dtype=np.int64)


@dataclass(frozen=True, order=True)
class F2Point:
    """Nonzero vector of (Z/2)^4; ``value`` is its 4-bit integer."""

    value: int

    def __post_init__(self):
        if not 1 <= self.value <= 15:
            raise UsageError(f"{self.value} is not a nonzero vector of (Z/2)^4")

    @classmethod
    def from_label(cls, label: str) -> "F2Point":
        if len(label) != 1 or label not in LETTERS:
            raise UsageError(f"unknown point label {label!r}")
        return cls(LETTERS.index(label) + 1)

    @classmethod
    def from_vector(cls, vector: Sequence[int]) -> "F2Point":
        return cls(int(np.asarray(vector, dtype=np.int64) % 2 @ _BITS))

    @property
    def label(self) -> str:
        return LETTERS[self.value - 1]

    @property
    def vector(self) -> Tuple[int, ...]:
        return tuple(int(x) for x in _VECTORS[self.value])

    def __add__(self, other: "F2Point") -> "F2Point":
        return F2Point(self.value ^ other.value)

    def __str__(self) -> str:
        return self.label


def pairing(u: F2Point, v: F2Point) -> int:
    """Standard symplectic form mod 2: u1 v3 + u2 v4 + u3 v1 + u4 v2."""
    a, b = u.vector, v.vector
    return (a[0] * b[2] + a[1] * b[3] + a[2] * b[0] + a[3] * b[1]) % 2


def all_points() -> List[F2Point]:
    return [F2Point(i) for i in range(1, 16)]


def _points(labels: Iterable[str]) -> FrozenSet[F2Point]:
    return frozenset(F2Point.from_label(x) for x in labels)


def _text(points: Iterable[F2Point]) -> str:
    return "".join(sorted(p.label for p in points))


PointMap = Callable[[F2Point], F2Point]


@dataclass(frozen=True)
class Pentad:
    """Five points with pairwise pairing 1."""

    points: FrozenSet[F2Point]

    def __post_init__(self):
        if len(self.points) != 5:
            raise UsageError("a pentad has five points")
        if any(pairing(u, v) != 1 for u, v in combinations(self.points, 2)):
            raise UsageError(f"{{{','.join(sorted(map(str, self.points)))}}} is not a pentad")

    @classmethod
    def from_labels(cls, labels: str) -> "Pentad":
        return cls(_points(labels))

    def image(self, mapping: PointMap) -> "Pentad":
        return Pentad(frozenset(mapping(p) for p in self.points))

    def point_sets(self) -> List[FrozenSet[F2Point]]:
        return [frozenset([p]) for p in self.points]

    @property
    def label(self) -> str:
        return _labels(PENTAD)[self]

    def __str__(self) -> str:
        return "{" + ",".join(sorted(p.label for p in self.points)) + "}"


@dataclass(frozen=True)
class Syntheme:
    """Two disjoint triples; pairing 1 inside a triple and 0 across."""

    triples: FrozenSet[FrozenSet[F2Point]]

    def __post_init__(self):
        if len(self.triples) != 2 or any(len(t) != 3 for t in self.triples):
            raise UsageError("a syntheme is a pair of triples")
        first, second = self.triples
        if first & second:
            raise UsageError("syntheme triples must be disjoint")
        inside = all(pairing(u, v) == 1 for t in self.triples for u, v in combinations(t, 2))
        across = all(pairing(u, v) == 0 for u in first for v in second)
        if not (inside and across):
            raise UsageError(f"{self} is not a syntheme")

    @classmethod
    def from_labels(cls, first: str, second: str) -> "Syntheme":
        return cls(frozenset([_points(first), _points(second)]))

    def image(self, mapping: PointMap) -> "Syntheme":
        return Syntheme(frozenset(frozenset(mapping(p) for p in t) for t in self.triples))

    def point_sets(self) -> List[FrozenSet[F2Point]]:
        return [frozenset([p]) for t in self.triples for p in t]

    @property
    def label(self) -> str:
        return _labels(SYNTHEME)[self]

    def __str__(self) -> str:
        parts = ("{" + ",".join(t) + "}" for t in sorted(map(_text, self.triples)))
        return "{" + ",".join(parts) + "}"


def is_lagrangian_line(line: FrozenSet[F2Point]) -> bool:
    """Three collinear points (summing to zero) with pairwise pairing 0."""
    if len(line) != 3:
        return False
    u, v, w = line
    return u + v == w and pairing(u, v) == 0


@dataclass(frozen=True)
class LinePentad:
    """Five disjoint Lagrangian lines covering all 15 points."""

    lines: FrozenSet[FrozenSet[F2Point]]

    def __post_init__(self):
        if len(self.lines) != 5 or not all(is_lagrangian_line(line) for line in self.lines):
            raise UsageError("a line pentad consists of five Lagrangian lines")
        if len(frozenset().union(*self.lines)) != 15:
            raise UsageError("the lines of a line pentad must partition the 15 points")

    @classmethod
    def from_labels(cls, lines: Sequence[str]) -> "LinePentad":
        return cls(frozenset(_points(line) for line in lines))

    def image(self, mapping: PointMap) -> "LinePentad":
        return LinePentad(frozenset(frozenset(mapping(p) for p in line) for line in self.lines))

    def point_sets(self) -> List[FrozenSet[F2Point]]:
        return [frozenset([p]) for line in self.lines for p in line]

    @property
    def label(self) -> str:
        return _labels(LINE_PENTAD)[self]

    def __str__(self) -> str:
        return "{" + ",".join(sorted(_text(line) for line in self.lines)) + "}"


GeometricObject = Union[Pentad, Syntheme, LinePentad]


@lru_cache(maxsize=None)
def _labels(kind: str) -> Dict[GeometricObject, str]:
    if kind == PENTAD:
        return {Pentad.from_labels(v): k for k, v in PENTAD_LABELS.items()}
    if kind == SYNTHEME:
        return {Syntheme.from_labels(*v): k for k, v in SYNTHEME_LABELS.items()}
    if kind == LINE_PENTAD:
        return {LinePentad.from_labels(v): k for k, v in LINE_PENTAD_LABELS.items()}
    raise UsageError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")


def _sorted_by_label(objects: Iterable[GeometricObject], kind: str) -> list:
    labels = _labels(kind)
    order = list(labels.values())
    found = []
    for obj in objects:
        if obj not in labels:
            raise InvariantViolation(f"{kind} {obj} is missing from the labeled list")
        found.append(obj)
    return sorted(found, key=lambda obj: order.index(labels[obj]))


@lru_cache(maxsize=1)
def enumerate_pentads() -> Tuple[Pentad, ...]:
    """All six pentads by exhaustive search, in label order 1..6."""
    points = all_points()
    found = []
    for first in points:
        partners = [p for p in points if p > first and pairing(first, p) == 1]
        for rest in combinations(partners, 4):
            if all(pairing(u, v) == 1 for u, v in combinations(rest, 2)):
                found.append(Pentad(frozenset((first,) + rest)))
    if len(found) != 6:
        raise InvariantViolation(f"found {len(found)} pentads, expected 6")
    return tuple(_sorted_by_label(found, PENTAD))


def _triangles() -> List[FrozenSet[F2Point]]:
    return [
        frozenset(t)
        for t in combinations(all_points(), 3)
        if all(pairing(u, v) == 1 for u, v in combinations(t, 2))
    ]


@lru_cache(maxsize=1)
def enumerate_synthemes() -> Tuple[Syntheme, ...]:
    """All ten synthemes, in label order I..X."""
    found = []
    for first, second in combinations(_triangles(), 2):
        if first & second:
            continue
        if all(pairing(u, v) == 0 for u in first for v in second):
            found.append(Syntheme(frozenset([first, second])))
    if len(found) != 10:
        raise InvariantViolation(f"found {len(found)} synthemes, expected 10")
    return tuple(_sorted_by_label(found, SYNTHEME))


def lagrangian_lines() -> List[FrozenSet[F2Point]]:
    """The 15 isotropic lines {u, v, u+v}."""
    lines = {
        frozenset([u, v, u + v])
        for u, v in combinations(all_points(), 2)
        if pairing(u, v) == 0
    }
    return sorted(lines, key=_text)


@lru_cache(maxsize=1)
def enumerate_line_pentads() -> Tuple[LinePentad, ...]:
    """All six partitions of the points into Lagrangian lines, in label order 1'..6'."""
    lines = lagrangian_lines()
    found = []

    def extend(chosen: List[FrozenSet[F2Point]], covered: FrozenSet[F2Point]) -> None:
        if len(covered) == 15:
            found.append(LinePentad(frozenset(chosen)))
            return
        smallest = min(p for p in all_points() if p not in covered)
        for line in lines:
            if smallest in line and not line & covered:
                extend(chosen + [line], covered | line)

    extend([], frozenset())
    if len(found) != 6:
        raise InvariantViolation(f"found {len(found)} line pentads, expected 6")
    return tuple(_sorted_by_label(found, LINE_PENTAD))


def enumerate_objects(kind: str) -> Tuple[GeometricObject, ...]:
    if kind == PENTAD:
        return enumerate_pentads()
    if kind == SYNTHEME:
        return enumerate_synthemes()
    if kind == LINE_PENTAD:
        return enumerate_line_pentads()
    raise UsageError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")


def _check_mod2(m: ModMatrix4) -> None:
    if m.modulus != 2:
        raise UsageError(f"expected a matrix mod 2, got modulus {m.modulus}")
    if not m.is_symplectic():
        raise UsageError("matrix is not symplectic mod 2")


def point_map(m: ModMatrix4) -> Tuple[int, ...]:
    """Images of the point values 0..15 under v -> m v."""
    _check_mod2(m)
    images = (_VECTORS @ m.entries.T) % 2
    return tuple(int(x) for x in images @ _BITS)


def act(m: ModMatrix4, obj: GeometricObject) -> GeometricObject:
    """Image of a pentad, syntheme or line pentad under m."""
    images = point_map(m)
    return obj.image(lambda p: F2Point(images[p.value]))


def object_permutation(m: ModMatrix4, kind: str) -> Permutation:
    """Permutation of the labeled objects of one kind; position i is label i."""
    objects = enumerate_objects(kind)
    position = {obj: i for i, obj in enumerate(objects)}
    return Permutation([position[act(m, obj)] for obj in objects])


def permutation_image(m: ModMatrix4) -> Permutation:
    """Induced permutation of the pentads (0-based: pentad 1 is 0).

    With left actions, the image of g h is image(h) * image(g) in sympy's
    left-to-right composition.
    """
    return object_permutation(m, PENTAD)


def syntheme_permutation(m: ModMatrix4) -> Permutation:
    return object_permutation(m, SYNTHEME)


def line_pentad_permutation(m: ModMatrix4) -> Permutation:
    return object_permutation(m, LINE_PENTAD)


def cycle_notation(perm: Permutation, kind: str = PENTAD) -> str:
    """Cycles with object labels, e.g. ``(3,6,4,5)``; ``()`` for the identity."""
    labels = [obj.label for obj in enumerate_objects(kind)]
    cycles = [c for c in perm.cyclic_form if len(c) > 1]
    if not cycles:
        return "()"
    return "".join("(" + ",".join(labels[i] for i in c) + ")" for c in cycles)


def fixed_objects(
    gens: Sequence[ModMatrix4], kind: str, pointwise: bool = False
) -> List[GeometricObject]:
    """Objects of ``kind`` fixed by every generator, setwise unless ``pointwise``."""
    maps = [point_map(g) for g in gens]
    fixed = []
    for obj in enumerate_objects(kind):
        if pointwise:
            points = [p for s in obj.point_sets() for p in s]
            keep = all(images[p.value] == p.value for images in maps for p in points)
        else:
            keep = all(
                obj.image(lambda p, im=images: F2Point(im[p.value])) == obj for images in maps
            )
        if keep:
            fixed.append(obj)
    return fixed


def transvection(p: F2Point) -> ModMatrix4:
    """T_p: v -> v + (v, p) p as a matrix mod 2."""
    vector = np.array(p.vector, dtype=np.int64)
    form = np.array([[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]], dtype=np.int64)
    return ModMatrix4(np.eye(4, dtype=np.int64) + np.outer(vector, form @ vector), 2)


@lru_cache(maxsize=1)
def sp4_mod2_elements() -> Tuple[ModMatrix4, ...]:
    """The 720 elements of Sp4(Z/2), generated by the reduced Behr matrices."""
    gens = [mod_reduce(m, 2) for m in behr_matrices().values()]
    elements = tuple(group_elements(gens))
    if len(elements) != 720:
        raise InvariantViolation(f"Sp4(Z/2) has 720 elements, generated {len(elements)}")
    return elements


def stabilizer(
    obj: GeometricObject,
    pointwise: bool = False,
    elements: Optional[Sequence[ModMatrix4]] = None,
) -> List[ModMatrix4]:
    """Elements of Sp4(Z/2) fixing ``obj``."""
    elements = sp4_mod2_elements() if elements is None else elements
    if pointwise:
        points = [p.value for s in obj.point_sets() for p in s]
        return [g for g in elements if all(point_map(g)[v] == v for v in points)]
    return [g for g in elements if act(g, obj) == obj]


def point_permutation_character(group: Iterable[ModMatrix4]) -> List[int]:
    """Sorted fixed-point counts on the 15 points, one per element."""
    counts = []
    for g in group:
        images = point_map(g)
        counts.append(sum(1 for v in range(1, 16) if images[v] == v))
    return sorted(counts)


def permutation_is_homomorphism(pairs: Iterable[Tuple[ModMatrix4, ModMatrix4]]) -> bool:
    return all(
        permutation_image(g @ h) == permutation_image(h) * permutation_image(g) for g, h in pairs
    )


def is_isomorphism_onto_s6(elements: Optional[Sequence[ModMatrix4]] = None) -> bool:
    """Pentad images of all 720 elements are distinct, so the action is faithful onto S6."""
    elements = sp4_mod2_elements() if elements is None else elements
    images = {tuple(permutation_image(g).array_form) for g in elements}
    return len(images) == len(elements) == 720


@dataclass
class OuterAutomorphismReport:
    transvections_on_pentads: List[str]
    transvections_on_line_pentads: List[str]
    stabilizers_conjugate: bool

    @property
    def passed(self) -> bool:
        return (
            all(_cycle_type(c) == [2] for c in self.transvections_on_pentads)
            and all(_cycle_type(c) == [2, 2, 2] for c in self.transvections_on_line_pentads)
            and not self.stabilizers_conjugate
        )


def _cycle_type(cycles: str) -> List[int]:
    return sorted(len(c.split(",")) for c in cycles.strip("()").split(")(") if c)


def outer_automorphism_check() -> OuterAutomorphismReport:
    """Transvections move two pentads but six line pentads; stabilizers are not conjugate."""
    on_pentads = []
    on_lines = []
    for p in all_points():
        t = transvection(p)
        on_pentads.append(cycle_notation(permutation_image(t), PENTAD))
        on_lines.append(cycle_notation(line_pentad_permutation(t), LINE_PENTAD))
    point_stab = stabilizer(enumerate_pentads()[0])
    line_stab = stabilizer(enumerate_line_pentads()[0])
    conjugate = point_permutation_character(point_stab) == point_permutation_character(line_stab)
    return OuterAutomorphismReport(on_pentads, on_lines, conjugate)


def _parse_cycles(text: str) -> List[List[str]]:
    return [c.split(",") for c in text.strip("()").split(")(") if c]


def syntheme_misprint_report(
    matrices: Optional[Dict[str, ModMatrix4]] = None,
) -> List[dict]:
    """Compare the printed syntheme permutations of M(1,2) and N with the computed ones."""
    if matrices is None:
        m, n = find_record(bundled_catalog(), dk=(1, 2)).generators(include_extra=False)
        matrices = {"M(1,2)": mod_reduce(m, 2), "N": mod_reduce(n, 2)}
    report = []
    for name, printed in PRINTED_SYNTHEME_PERMUTATIONS.items():
        computed = cycle_notation(syntheme_permutation(matrices[name]), SYNTHEME)
        differences = []
        for printed_cycle, computed_cycle in zip(_parse_cycles(printed), _parse_cycles(computed)):
            for shown, actual in zip(printed_cycle, computed_cycle):
                if shown != actual:
                    differences.append(
                        {"printed": shown, "computed": actual, "valid_label": shown in ROMAN}
                    )
        report.append(
            {"matrix": name, "printed": printed, "computed": computed, "differences": differences}
        )
        for diff in differences:
            logger.warning(
                "%s syntheme permutation: printed %s, computed %s",
                name,
                diff["printed"],
                diff["computed"],
            )
    return report


STABILIZER_CASES = {(1, 3): PENTAD, (1, 2): SYNTHEME}


@dataclass
class StabilizerReport:
    """Checks that G(d,k) is the preimage of a mod-2 stabilizer."""

    case: Tuple[int, int]
    kind: str
    fixed: List[str]
    stabilizer_order: int
    stabilizer_index: int
    image_order: int
    generators_contained: bool
    enumeration_index: Optional[int]
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "case": f"({self.case[0]},{self.case[1]})",
            "kind": self.kind,
            "fixed": self.fixed,
            "stabilizer_order": self.stabilizer_order,
            "stabilizer_index": self.stabilizer_index,
            "image_order": self.image_order,
            "generators_contained": self.generators_contained,
            "enumeration_index": self.enumeration_index,
            "passed": self.passed,
            "failures": list(self.failures),
        }


def verify_stabilizer_index(
    case: Tuple[int, int],
    generators: Optional[Sequence[ModMatrix4]] = None,
    enumeration_index: Optional[int] = None,
    budget: int = 1 << 16,
) -> StabilizerReport:
    """Verify that G(1,3) and G(1,2) are the preimages of a pentad and a syntheme stabilizer.

    The generators must fix the object, and the index of its stabilizer in
    Sp4(Z/2) must equal the coset enumeration index. Since reduction mod 2
    is onto, both facts together give the equality of groups.
    ``enumeration_index`` skips the enumeration when already known.
    """
    case = tuple(case)
    if case not in STABILIZER_CASES:
        raise UsageError(f"stabilizer characterizations exist for (1,3) and (1,2), not {case}")
    kind = STABILIZER_CASES[case]
    if generators is None:
        record = find_record(bundled_catalog(), dk=case)
        generators = [mod_reduce(g, 2) for g in record.generators(include_extra=False)]
    if enumeration_index is None:
        result = enumerate_cosets(bundled_presentation(), list(monodromy_words(*case)), budget)
        enumeration_index = result.index

    failures = []
    reference = enumerate_objects(kind)
    candidates = fixed_objects(generators, kind)
    target = candidates[0] if len(candidates) == 1 else None
    if target is None:
        failures.append(f"generators fix {len(candidates)} {kind}s, expected exactly one")
        target = reference[0]

    stab = stabilizer(target)
    stab_keys = {g.key() for g in stab}
    contained = all(g.key() in stab_keys for g in generators)
    image_order = len(group_elements(list(generators)))
    index = 720 // len(stab)

    if not contained:
        failures.append("a generator does not fix the object")
    if image_order != len(stab):
        failures.append(f"mod-2 image has order {image_order}, stabilizer has {len(stab)}")
    if enumeration_index is None:
        failures.append("coset enumeration did not complete")
    elif enumeration_index != index:
        failures.append(f"coset index {enumeration_index} differs from stabilizer index {index}")

    report = StabilizerReport(
        case=case,
        kind=kind,
        fixed=[obj.label for obj in candidates],
        stabilizer_order=len(stab),
        stabilizer_index=index,
        image_order=image_order,
        generators_contained=contained,
        enumeration_index=enumeration_index,
        failures=failures,
    )
    logger.info("stabilizer check %s: %s", case, "passed" if report.passed else failures)
    return report

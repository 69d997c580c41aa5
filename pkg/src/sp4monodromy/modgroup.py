"""Computation in Sp4(Z/N): orders, subgroup orders and image indices."""

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache
from itertools import combinations
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np
import sympy
from sympy.combinatorics import Permutation, PermutationGroup

from .catalog import HYPERGEOMETRIC, OperatorRecord
from .errors import InvariantViolation, OrderCapExceeded, UsageError
from .linalg import ModMatrix4, key_dtype, mod_reduce


logger = logging.getLogger(__name__)

REFERENCE_PATH = Path(__file__).parent / "data" / "modn_reference.csv"

BFS_CAP = 1 << 25
SIMS_MAX_POINTS = 9**4
FEASIBLE_MODULUS = 9
BFS_CHUNK = 1 << 15
# Sixteen entries of at most four bits fill one uint64 key.
PACKED_MAX_MODULUS = 16
# Images at most this large are closed by BFS even when Schreier-Sims applies.
BFS_PREFERRED = 1 << 18

BFS = "bfs"
SCHREIER_SIMS = "schreier_sims"
METHODS = ("auto", BFS, SCHREIER_SIMS)


def sp4_order(n: int) -> int:
    """|Sp4(Z/n)| = n^10 prod_{p | n} (1 - p^-2)(1 - p^-4)."""
    if n < 2:
        raise UsageError(f"modulus must be at least 2, got {n}")
    order = n**10
    for p in sympy.primefactors(n):
        order = order // p**6 * (p**2 - 1) * (p**4 - 1)
    return order


@dataclass(frozen=True)
class ModGroupContext:
    """The ambient group Sp4(Z/N)."""

    modulus: int
    order: int

    @classmethod
    def for_modulus(cls, n: int) -> "ModGroupContext":
        return cls(modulus=n, order=sp4_order(n))


@dataclass(frozen=True)
class SubgroupHandle:
    """Generators of a subgroup of Sp4(Z/N) together with its computed order."""

    generators: Tuple[ModMatrix4, ...]
    order: int
    method: str

    def __post_init__(self):
        if self.context.order % self.order:
            raise InvariantViolation(
                f"subgroup order {self.order} does not divide |Sp4(Z/{self.modulus})|"
            )

    @property
    def modulus(self) -> int:
        return self.generators[0].modulus

    @property
    def context(self) -> ModGroupContext:
        return ModGroupContext.for_modulus(self.modulus)

    @property
    def index(self) -> int:
        return self.context.order // self.order


def _common_modulus(gens: Sequence[ModMatrix4]) -> int:
    if not gens:
        raise UsageError("at least one generator is needed")
    moduli = {g.modulus for g in gens}
    if len(moduli) != 1:
        raise UsageError(f"generators have different moduli {sorted(moduli)}")
    return moduli.pop()


def _key_bits(n: int) -> int:
    return max(1, (n - 1).bit_length())


def _key_shifts(n: int) -> np.ndarray:
    return np.arange(16, dtype=np.uint64) * np.uint64(_key_bits(n))


def pack_keys(mats: np.ndarray, n: int) -> np.ndarray:
    """One uint64 per 4x4 matrix mod n (n <= PACKED_MAX_MODULUS)."""
    flat = mats.reshape(len(mats), 16).astype(np.uint64)
    return np.bitwise_or.reduce(flat << _key_shifts(n), axis=1)


def unpack_keys(keys: np.ndarray, n: int) -> np.ndarray:
    mask = np.uint64((1 << _key_bits(n)) - 1)
    entries = (keys[:, None] >> _key_shifts(n)) & mask
    return entries.astype(np.int64).reshape(-1, 4, 4)


def _packed_closure(gens: Sequence[ModMatrix4], n: int, cap: int, keep: bool):
    """BFS with the visited set as a sorted uint64 array, merged once per level."""
    gen_stack = np.stack([g.entries for g in gens])
    identity = np.eye(4, dtype=np.int64)[None]
    visited = pack_keys(identity, n)
    frontier = visited
    elements = [identity] if keep else []
    level = 0
    while len(frontier):
        candidates = []
        for start in range(0, len(frontier), BFS_CHUNK):
            block = unpack_keys(frontier[start : start + BFS_CHUNK], n)
            products = (block[:, None] @ gen_stack[None]) % n
            candidates.append(np.unique(pack_keys(products.reshape(-1, 4, 4), n)))
        keys = np.unique(np.concatenate(candidates))
        pos = np.minimum(np.searchsorted(visited, keys), len(visited) - 1)
        frontier = keys[visited[pos] != keys]
        visited = np.union1d(visited, frontier)
        if len(visited) > cap:
            raise OrderCapExceeded(cap)
        if keep and len(frontier):
            elements.append(unpack_keys(frontier, n))
        level += 1
        logger.debug("bfs mod %d: level %d, %d elements", n, level, len(visited))
    return len(visited), elements


def _hashed_closure(gens: Sequence[ModMatrix4], n: int, cap: int, keep: bool):
    dtype = key_dtype(n)
    width = 16 * dtype.itemsize
    gen_stack = np.stack([g.entries for g in gens])
    identity = np.eye(4, dtype=np.int64)

    seen: Set[bytes] = {identity.astype(dtype).tobytes()}
    elements = [identity[None]] if keep else []
    frontier = identity[None]
    level = 0
    while len(frontier):
        fresh_blocks = []
        for start in range(0, len(frontier), BFS_CHUNK):
            block = frontier[start : start + BFS_CHUNK]
            products = (block[:, None] @ gen_stack[None]) % n
            products = products.reshape(-1, 4, 4)
            raw = products.astype(dtype).tobytes()
            fresh = []
            for i in range(len(products)):
                key = raw[i * width : (i + 1) * width]
                if key not in seen:
                    seen.add(key)
                    fresh.append(i)
            if len(seen) > cap:
                raise OrderCapExceeded(cap)
            if fresh:
                fresh_blocks.append(products[fresh])
        frontier = np.concatenate(fresh_blocks) if fresh_blocks else frontier[:0]
        if keep and len(frontier):
            elements.append(frontier)
        level += 1
        logger.debug("bfs mod %d: level %d, %d elements", n, level, len(seen))
    return len(seen), elements


def _closure(gens: Sequence[ModMatrix4], cap: int, keep: bool):
    n = _common_modulus(gens)
    if n <= PACKED_MAX_MODULUS:
        return _packed_closure(gens, n, cap, keep)
    return _hashed_closure(gens, n, cap, keep)


def subgroup_order_bfs(gens: Sequence[ModMatrix4], cap: int = BFS_CAP) -> int:
    """Order of <gens> by closure BFS over packed or hashed matrix keys.

    Raises:
        OrderCapExceeded: More than ``cap`` elements were stored.
    """
    order, _ = _closure(gens, cap, keep=False)
    return order


def group_elements(gens: Sequence[ModMatrix4], cap: int = BFS_CAP) -> List[ModMatrix4]:
    """All elements of <gens>, identity first."""
    n = _common_modulus(gens)
    _, blocks = _closure(gens, cap, keep=True)
    return [ModMatrix4(m, n) for block in blocks for m in block]


@lru_cache(maxsize=8)
def _points(n: int) -> np.ndarray:
    return np.indices((n,) * 4).reshape(4, -1).T.astype(np.int64)


def vector_permutation(g: ModMatrix4) -> Permutation:
    """Action of g on (Z/N)^4; the vector v has index sum v_i N^(3-i)."""
    n = g.modulus
    images = (_points(n) @ g.entries.T) % n
    place = np.array([n**3, n**2, n, 1], dtype=np.int64)
    return Permutation((images @ place).tolist())


def subgroup_order_sims(gens: Sequence[ModMatrix4]) -> int:
    """Order of <gens> from a stabilizer chain of the action on vectors."""
    _common_modulus(gens)
    group = PermutationGroup([vector_permutation(g) for g in gens])
    return int(group.order())


def _choose_method(n: int, cap: int, expected_index: Optional[int]) -> str:
    ambient = sp4_order(n)
    bound = ambient // expected_index if expected_index else ambient
    if bound <= min(cap, BFS_PREFERRED):
        return BFS
    if n**4 <= SIMS_MAX_POINTS:
        return SCHREIER_SIMS
    return BFS


def subgroup(
    gens: Sequence[ModMatrix4],
    method: str = "auto",
    cap: int = BFS_CAP,
    expected_index: Optional[int] = None,
) -> SubgroupHandle:
    """Compute the order of <gens>; auto picks BFS or Schreier-Sims.

    ``expected_index`` is only a hint for the method choice.
    """
    if method not in METHODS:
        raise UsageError(f"unknown method {method!r}")
    n = _common_modulus(gens)
    if method == "auto":
        method = _choose_method(n, cap, expected_index)

    if method == BFS:
        try:
            order = subgroup_order_bfs(gens, cap)
        except OrderCapExceeded:
            if n**4 > SIMS_MAX_POINTS:
                raise
            logger.info("bfs mod %d exceeded %d elements; using Schreier-Sims", n, cap)
            method = SCHREIER_SIMS
            order = subgroup_order_sims(gens)
    else:
        order = subgroup_order_sims(gens)
    return SubgroupHandle(generators=tuple(gens), order=order, method=method)


@dataclass(frozen=True)
class ModIndexCell:
    """One table cell with its provenance."""

    case: str
    modulus: int
    index: int
    order: int
    method: str
    runtime_s: float

    def to_dict(self) -> dict:
        return asdict(self)


def reference_column(record: OperatorRecord) -> str:
    return f"{record.d}-{record.k}"


def reference_index(record: OperatorRecord, n: int) -> Optional[int]:
    """Printed table value for a hypergeometric record, if the table has it."""
    if record.kind != HYPERGEOMETRIC:
        return None
    return load_reference_table().get(n, {}).get(reference_column(record))


def mod_index_cell(
    record: OperatorRecord,
    n: int,
    include_extra: bool = True,
    method: str = "auto",
    cap: int = BFS_CAP,
) -> ModIndexCell:
    """Index of the image of the record's generators in Sp4(Z/n)."""
    started = time.perf_counter()
    hint = None if include_extra and record.extra_generators else reference_index(record, n)
    gens = [mod_reduce(g, n) for g in record.generators(include_extra)]
    handle = subgroup(gens, method, cap, expected_index=hint)
    runtime = time.perf_counter() - started
    logger.info("%s mod %d: index %d by %s", record.case_name, n, handle.index, handle.method)
    return ModIndexCell(
        case=record.case_name,
        modulus=n,
        index=handle.index,
        order=handle.order,
        method=handle.method,
        runtime_s=round(runtime, 3),
    )


def mod_index(record: OperatorRecord, n: int, include_extra: bool = True) -> int:
    """sp4_order(n) / |image of the record's generators mod n|."""
    return mod_index_cell(record, n, include_extra).index


def crt_lower_bound(record: OperatorRecord, prime_power_indices: Mapping[int, int]) -> int:
    """Product of indices modulo pairwise coprime moduli.

    The index in Sp4(Z) is at least the index of the image mod N, and for
    coprime moduli the image index mod their product is the product.
    """
    for a, b in combinations(prime_power_indices, 2):
        if math.gcd(a, b) != 1:
            raise UsageError(f"moduli {a} and {b} are not coprime")
    bound = 1
    for index in prime_power_indices.values():
        bound *= index
    logger.debug("%s: lower bound %d from %s", record.case_name, bound, dict(prime_power_indices))
    return bound


def prime_power_moduli(limit: int) -> List[int]:
    """Largest power of each prime that does not exceed ``limit``."""
    moduli = []
    for p in sympy.primerange(2, limit + 1):
        power = p
        while power * p <= limit:
            power *= p
        moduli.append(power)
    return moduli


def auto_lower_bound(
    record: OperatorRecord,
    moduli: Sequence[int] = (),
    include_extra: bool = True,
) -> Tuple[int, Dict[int, int]]:
    """CRT lower bound from the largest given power of each prime.

    Without moduli, the prime powers up to the feasibility cap are used.
    """
    best: Dict[int, int] = {}
    for n in moduli or prime_power_moduli(FEASIBLE_MODULUS):
        factors = sympy.primefactors(n)
        if len(factors) != 1:
            raise UsageError(f"{n} is not a prime power")
        best[factors[0]] = max(best.get(factors[0], 1), n)
    indices = {n: mod_index(record, n, include_extra) for n in sorted(best.values())}
    return crt_lower_bound(record, indices), indices


def _cell_task(task) -> ModIndexCell:
    return mod_index_cell(*task)


def mod_table(
    records: Sequence[OperatorRecord],
    moduli: Sequence[int],
    include_extra: bool = True,
    workers: int = 1,
    method: str = "auto",
    cap: int = BFS_CAP,
) -> List[ModIndexCell]:
    """All cells for the given records and moduli, ordered by (modulus, record)."""
    tasks = [(record, n, include_extra, method, cap) for n in moduli for record in records]
    if workers > 1 and len(tasks) > 1:
        logger.info("computing %d cells with %d workers", len(tasks), workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_cell_task, tasks))
    return [_cell_task(task) for task in tasks]


def table_rows(cells: Sequence[ModIndexCell]) -> List[Dict[str, int]]:
    """Cells pivoted to the printed layout: one row per modulus, one column per case."""
    rows: Dict[int, Dict[str, int]] = {}
    for cell in cells:
        rows.setdefault(cell.modulus, {"N": cell.modulus})[cell.case] = cell.index
    return [rows[n] for n in sorted(rows)]


@lru_cache(maxsize=4)
def load_reference_table(path: Optional[Path] = None) -> Dict[int, Dict[str, int]]:
    """The printed mod-N table: N -> column "d-k" -> index."""
    path = Path(path) if path is not None else REFERENCE_PATH
    with open(path, encoding="utf-8", newline="") as f:
        return {
            int(row["N"]): {column: int(value) for column, value in row.items() if column != "N"}
            for row in csv.DictReader(f)
        }


def reference_misprints(table: Optional[Mapping[int, Mapping[str, int]]] = None) -> List[dict]:
    """Cells of the printed table that break coprime multiplicativity."""
    table = table if table is not None else load_reference_table()
    problems = []
    for n, row in sorted(table.items()):
        factors = [p**e for p, e in sympy.factorint(n).items()]
        if len(factors) < 2 or any(f not in table for f in factors):
            continue
        for column, printed in row.items():
            implied = math.prod(table[f][column] for f in factors)
            if implied != printed:
                problems.append({"N": n, "column": column, "printed": printed, "implied": implied})
    return problems

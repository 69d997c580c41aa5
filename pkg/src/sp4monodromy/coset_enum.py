"""Todd-Coxeter coset enumeration over a finite presentation.

The transition table is a flat int32 numpy array with one column per
generator and one per inverse (column ``c ^ 1`` is the inverse of ``c``),
plus an int32 union-find parent array for coincidences. Coset ids are never
reused, so the budget bounds every coset ever defined.

Single-coset work (definitions, scans, coincidences) goes through memoryviews
of those arrays; lookahead traces one relator across all live cosets at once
with numpy and only falls back to a single-coset scan where it can act.
"""

import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from sympy.combinatorics import Permutation

from .config import BYTES_PER_COSET, STRATEGIES
from .errors import InvariantViolation, MatrixLiteralError
from .fpgroup import GeneratorSymbol, Presentation, Word


logger = logging.getLogger(__name__)

COMPLETED = "completed"
BUDGET_EXCEEDED = "budget_exceeded"

MAX_DEDUCTIONS = 1 << 16
PROGRESS_EVERY = 1 << 20
INITIAL_CAPACITY = 1 << 16
LOOKAHEAD_START = 1 << 12
LOOKAHEAD_CHUNK = 1 << 20

UNDEFINED = -1


class _BudgetExhausted(Exception):
    pass


def estimate_memory_mb(cosets: int) -> float:
    """Table memory for a given number of defined cosets."""
    return cosets * BYTES_PER_COSET / (1 << 20)


class CosetTable:
    """Coset x (generator, inverse) transitions with coincidence tracking."""

    def __init__(self, generators: Sequence[GeneratorSymbol], budget: int):
        if budget < 1:
            raise ValueError("budget must be at least 1")
        self.generators = tuple(generators)
        self.columns: Dict[GeneratorSymbol, int] = {g: 2 * i for i, g in enumerate(self.generators)}
        self.width = 2 * len(self.generators)
        self.budget = budget

        capacity = min(budget, INITIAL_CAPACITY)
        self.table = np.full(capacity * self.width, UNDEFINED, dtype=np.int32)
        self.parent = np.arange(capacity, dtype=np.int32)
        self._views()

        self.defined = 1
        self.live = 1
        self.max_live = 1
        self.definitions = 0
        self.coincidences = 0
        self.lookaheads = 0
        self.completed = False
        self._deductions: Optional[List] = None
        self._dense = None

    def _views(self) -> None:
        self._cells = memoryview(self.table)
        self._up = memoryview(self.parent)

    # word handling

    def word_columns(self, w: Word) -> List[int]:
        """Column sequence of a word (one column per +-1 letter)."""
        try:
            return [self.columns[s] if e > 0 else self.columns[s] ^ 1 for s, e in w.expand()]
        except KeyError as exc:
            raise MatrixLiteralError(f"word {w} uses a generator outside the presentation") from exc

    # storage

    def _grow(self) -> None:
        capacity = len(self.parent)
        new_capacity = min(self.budget, capacity * 2)
        table = np.full(new_capacity * self.width, UNDEFINED, dtype=np.int32)
        table[: len(self.table)] = self.table
        parent = np.arange(new_capacity, dtype=np.int32)
        parent[:capacity] = self.parent
        self.table = table
        self.parent = parent
        self._views()

    def is_live(self, coset: int) -> bool:
        return self._up[coset] == coset

    def rep(self, coset: int) -> int:
        """Union-find representative with path compression."""
        up = self._up
        root = coset
        while up[root] != root:
            root = up[root]
        while up[coset] != root:
            up[coset], coset = root, up[coset]
        return root

    def entry(self, coset: int, x: int) -> int:
        return self._cells[coset * self.width + x]

    def define(self, alpha: int, x: int) -> int:
        if self.defined >= self.budget:
            raise _BudgetExhausted
        if self.defined >= len(self.parent):
            self._grow()
        beta = self.defined
        self.defined += 1
        self.live += 1
        self.definitions += 1
        if self.live > self.max_live:
            self.max_live = self.live
        self._link(alpha, x, beta)
        if self.definitions % PROGRESS_EVERY == 0:
            logger.info(
                "coset table: %d defined, %d live, %d coincidences",
                self.defined,
                self.live,
                self.coincidences,
            )
        return beta

    def _link(self, alpha: int, x: int, beta: int) -> None:
        w, t = self.width, self._cells
        t[alpha * w + x] = beta
        t[beta * w + (x ^ 1)] = alpha
        if self._deductions is not None:
            self._deductions.append((alpha, x))

    # coincidences

    def _merge(self, k: int, l: int, queue: deque) -> None:
        phi = self.rep(k)
        psi = self.rep(l)
        if phi == psi:
            return
        mu, v = (phi, psi) if phi < psi else (psi, phi)
        self._up[v] = mu
        queue.append(v)
        self.live -= 1
        self.coincidences += 1

    def coincidence(self, alpha: int, beta: int) -> None:
        """Identify two cosets and process the consequences to exhaustion."""
        t, w = self._cells, self.width
        queue: deque = deque()
        self._merge(alpha, beta, queue)
        while queue:
            gamma = queue.popleft()
            for x in range(w):
                delta = t[gamma * w + x]
                if delta < 0:
                    continue
                t[delta * w + (x ^ 1)] = UNDEFINED
                mu = self.rep(gamma)
                nu = self.rep(delta)
                mu_x = t[mu * w + x]
                if mu_x >= 0:
                    self._merge(nu, mu_x, queue)
                    continue
                nu_inv = t[nu * w + (x ^ 1)]
                if nu_inv >= 0:
                    self._merge(mu, nu_inv, queue)
                else:
                    self._link(mu, x, nu)

    # scanning

    def scan_and_fill(self, alpha: int, word: Sequence[int]) -> None:
        """Trace word at alpha, defining cosets until it closes."""
        t, w = self._cells, self.width
        f = b = alpha
        i, j = 0, len(word) - 1
        while True:
            while i <= j and t[f * w + word[i]] >= 0:
                f = t[f * w + word[i]]
                i += 1
            if i > j:
                if f != b:
                    self.coincidence(f, b)
                return
            while j >= i and t[b * w + (word[j] ^ 1)] >= 0:
                b = t[b * w + (word[j] ^ 1)]
                j -= 1
            if j < i:
                self.coincidence(f, b)
                return
            if j == i:
                self._link(f, word[i], b)
                return
            self.define(f, word[i])
            t = self._cells

    def scan(self, alpha: int, word: Sequence[int]) -> bool:
        """Trace word at alpha without defining; deduce or coincide when possible.

        Returns whether the table changed.
        """
        t, w = self._cells, self.width
        f = b = alpha
        i, j = 0, len(word) - 1
        while i <= j and t[f * w + word[i]] >= 0:
            f = t[f * w + word[i]]
            i += 1
        if i <= j:
            while j >= i and t[b * w + (word[j] ^ 1)] >= 0:
                b = t[b * w + (word[j] ^ 1)]
                j -= 1
            if j == i:
                self._link(f, word[i], b)
                return True
            if j > i:
                return False
        if f == b:
            return False
        live = self.live
        self.coincidence(f, b)
        return self.live < live

    def _actionable(self, starts: np.ndarray, word: Sequence[int]) -> np.ndarray:
        """Cosets among ``starts`` where ``scan`` of word would change the table.

        Same forward and backward trace as ``scan``, run for all starts at once.
        """
        rows = self.table[: self.defined * self.width].reshape(self.defined, self.width)
        length = len(word)
        f = starts.copy()
        i = np.zeros(len(starts), dtype=np.int16)
        open_ = np.flatnonzero(np.ones(len(starts), dtype=bool))
        for pos, x in enumerate(word):
            nxt = rows[f[open_], x]
            ok = nxt >= 0
            moved = open_[ok]
            f[moved] = nxt[ok]
            i[moved] = pos + 1
            open_ = moved
            if not len(open_):
                break

        traced = i == length
        b = starts.copy()
        j = np.full(len(starts), length - 1, dtype=np.int16)
        open_ = np.flatnonzero(~traced)
        for pos in range(length - 1, -1, -1):
            open_ = open_[i[open_] <= pos]
            if not len(open_):
                break
            nxt = rows[b[open_], word[pos] ^ 1]
            ok = nxt >= 0
            moved = open_[ok]
            b[moved] = nxt[ok]
            j[moved] = pos - 1
            open_ = moved

        closes_wrong = traced & (f != starts)
        meets = ~traced & (j < i) & (f != b)
        deduces = ~traced & (j == i)
        return starts[closes_wrong | meets | deduces]

    def lookahead_pass(self, relators: Sequence[Sequence[int]], start: int = 0) -> int:
        """One scan of every relator at every live coset >= start; returns the actions taken."""
        self.lookaheads += 1
        actions = 0
        for word in relators:
            for low in range(start, self.defined, LOOKAHEAD_CHUNK):
                ids = np.arange(low, min(low + LOOKAHEAD_CHUNK, self.defined), dtype=np.int32)
                starts = ids[self.parent[ids] == ids]
                for beta in self._actionable(starts, word).tolist():
                    if self.is_live(beta) and self.scan(beta, word):
                        actions += 1
        logger.debug(
            "lookahead pass %d: %d actions, %d live cosets", self.lookaheads, actions, self.live
        )
        return actions

    def lookahead(self, relators: Sequence[Sequence[int]]) -> None:
        """Scan every relator at every live coset until nothing changes."""
        while self.lookahead_pass(relators):
            pass

    # inspection

    def live_cosets(self) -> np.ndarray:
        ids = np.arange(self.defined, dtype=np.int32)
        return ids[self.parent[: self.defined] == ids]

    def undefined_count(self) -> int:
        rows = self.table[: self.defined * self.width].reshape(self.defined, self.width)
        return int(np.count_nonzero(rows[self.live_cosets()] < 0))

    def is_complete(self) -> bool:
        return self.undefined_count() == 0

    def traces_closed(self, word: Sequence[int], start: int) -> bool:
        t, w = self.table, self.width
        coset = start
        for x in word:
            coset = int(t[coset * w + x])
            if coset < 0:
                return False
            coset = self.rep(coset)
        return coset == start

    def relators_close(self, relators: Sequence[Sequence[int]]) -> bool:
        """Every relator is a closed loop at every live coset."""
        dense = self._build_dense()
        cosets = np.arange(len(dense))
        for word in relators:
            images = cosets
            for x in word:
                images = dense[images, x]
            if not np.array_equal(images, cosets):
                return False
        return True

    def _build_dense(self) -> np.ndarray:
        live = self.live_cosets()
        position = np.full(self.defined, UNDEFINED, dtype=np.int64)
        position[live] = np.arange(len(live))
        rows = self.table[: self.defined * self.width].reshape(self.defined, self.width)[live]
        if np.any(rows < 0):
            raise InvariantViolation("coset table is not closed")
        roots = self.parent[: self.defined].astype(np.int64)
        while True:
            hop = roots[roots]
            if np.array_equal(hop, roots):
                break
            roots = hop
        return position[roots[rows]]

    def dense(self) -> np.ndarray:
        """Transitions renumbered 0..index-1 (coset 0 is the subgroup)."""
        if not self.completed:
            raise InvariantViolation("coset table is not completed")
        if self._dense is None:
            self._dense = self._build_dense()
        return self._dense

    @property
    def index(self) -> int:
        return self.live


@dataclass
class EnumerationResult:
    """Outcome of one enumeration: an exact index or a budget signal."""

    outcome: str
    strategy: str
    max_live: int
    defined: int
    index: Optional[int] = None
    stats: dict = field(default_factory=dict)
    table: Optional[CosetTable] = field(default=None, repr=False)

    @property
    def completed(self) -> bool:
        return self.outcome == COMPLETED

    def to_dict(self) -> dict:
        payload = {
            "outcome": self.outcome,
            "strategy": self.strategy,
            "index": self.index,
            "max_live": self.max_live,
            "defined": self.defined,
        }
        payload["stats"] = dict(self.stats)
        return payload


def _cyclic_conjugates(words: Sequence[Sequence[int]], width: int) -> List[List[List[int]]]:
    """Cyclic conjugates of the words and their inverses, grouped by first column."""
    by_column: List[set] = [set() for _ in range(width)]
    for word in words:
        inverse = [x ^ 1 for x in reversed(word)]
        for candidate in (word, inverse):
            for shift in range(len(candidate)):
                rotated = tuple(candidate[shift:]) + tuple(candidate[:shift])
                by_column[rotated[0]].add(rotated)
    return [[list(w) for w in sorted(group)] for group in by_column]


def _run_hlt(table: CosetTable, relators, subgroup, lookahead: bool = True) -> None:
    """Relator tracing row by row, with a lookahead pass whenever the table grows by half."""
    for word in subgroup:
        table.scan_and_fill(0, word)
    width = table.width
    next_lookahead = LOOKAHEAD_START
    alpha = 0
    while alpha < table.defined:
        if table.is_live(alpha):
            for word in relators:
                table.scan_and_fill(alpha, word)
                if not table.is_live(alpha):
                    break
            else:
                for x in range(width):
                    if table.entry(alpha, x) < 0:
                        table.define(alpha, x)
        alpha += 1
        if lookahead and table.defined >= next_lookahead:
            table.lookahead_pass(relators, start=alpha)
            next_lookahead = table.defined + max(LOOKAHEAD_START, table.live // 2)


def _process_deductions(table: CosetTable, conjugates, relators) -> None:
    stack = table._deductions
    while stack:
        if len(stack) > MAX_DEDUCTIONS:
            stack.clear()
            table.lookahead(relators)
            continue
        alpha, x = stack.pop()
        if table.is_live(alpha):
            for word in conjugates[x]:
                table.scan(alpha, word)
                if not table.is_live(alpha):
                    break
        beta = table.entry(alpha, x)
        if beta >= 0 and table.is_live(beta):
            for word in conjugates[x ^ 1]:
                table.scan(beta, word)
                if not table.is_live(beta):
                    break


def _run_felsch(table: CosetTable, relators, subgroup) -> None:
    conjugates = _cyclic_conjugates(relators, table.width)
    table._deductions = []
    for word in subgroup:
        table.scan_and_fill(0, word)
    _process_deductions(table, conjugates, relators)
    alpha = 0
    while alpha < table.defined:
        x = 0
        while x < table.width and table.is_live(alpha):
            if table.entry(alpha, x) < 0:
                table.define(alpha, x)
                _process_deductions(table, conjugates, relators)
            x += 1
        alpha += 1
    table._deductions = None


def enumerate_cosets(
    p: Presentation,
    subgroup: Sequence[Word],
    budget: int,
    strategy: str = "hlt",
    lookahead: bool = True,
) -> EnumerationResult:
    """Index of the subgroup generated by ``subgroup`` in the presented group.

    Args:
        p: Presentation whose relators are traced.
        subgroup: Words generating the subgroup.
        budget: Maximum number of cosets ever defined (live or dead).
        strategy: ``"hlt"`` (relator tracing) or ``"felsch"`` (deduction
            processing over cyclic conjugates).
        lookahead: Run periodic lookahead passes during HLT. A final
            lookahead always runs when the budget is reached.

    Returns:
        EnumerationResult; ``budget_exceeded`` is an outcome, not an error.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    table = CosetTable(p.generators, budget)
    relators = [table.word_columns(r) for r in p.relators if r]
    subgroup_columns = [table.word_columns(w) for w in subgroup if w]

    started = time.perf_counter()
    try:
        if strategy == "hlt":
            _run_hlt(table, relators, subgroup_columns, lookahead)
        else:
            _run_felsch(table, relators, subgroup_columns)
    except _BudgetExhausted:
        table._deductions = None
        logger.info(
            "budget of %d cosets reached with %d live; running lookahead",
            budget,
            table.live,
        )
        table.lookahead(relators)

    closed = table.is_complete()
    if closed and not table.relators_close(relators):
        raise InvariantViolation("complete coset table fails a relator")
    if closed and not all(table.traces_closed(w, 0) for w in subgroup_columns):
        raise InvariantViolation("complete coset table fails a subgroup generator")

    runtime = time.perf_counter() - started
    stats = {
        "definitions": table.definitions,
        "coincidences": table.coincidences,
        "lookaheads": table.lookaheads,
        "runtime_s": round(runtime, 3),
    }
    if not closed:
        logger.warning("enumeration stopped: budget %d exceeded", budget)
        return EnumerationResult(
            outcome=BUDGET_EXCEEDED,
            strategy=strategy,
            max_live=table.max_live,
            defined=table.defined,
            stats=stats,
        )

    table.completed = True
    logger.info("enumeration completed: index %d (%s, %.2fs)", table.live, strategy, runtime)
    return EnumerationResult(
        outcome=COMPLETED,
        strategy=strategy,
        max_live=table.max_live,
        defined=table.defined,
        index=table.live,
        stats=stats,
        table=table,
    )


def coset_action(table: CosetTable, w: Word) -> Permutation:
    """Permutation of the cosets 0..index-1 induced by right multiplication with w."""
    dense = table.dense()
    images = np.arange(len(dense))
    for x in table.word_columns(w):
        images = dense[images, x]
    return Permutation([int(i) for i in images])

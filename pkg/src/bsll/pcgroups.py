"""The p-groups G(A) on generators g_0..g_k.

Relations: every g_i has order p, neighbours commute, and for distance
d >= 2 the commutator ``[g_i, g_{i+d}] = g_i g_{i+d} g_i^-1 g_{i+d}^-1`` equals
``prod_{t=1}^{d-1} g_{i+t}^{a[d-1][t]}``, i.e. distance d reads row d-1 of A.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CapExceededError, InputError, NonTerminationError, StructuralError
from .groups import DEFAULT_MAX_ORDER, GroupHom, GroupTable, Subgroup, closure

DEFAULT_REWRITE_CAP = 10 ** 6


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, int(n ** 0.5) + 1))


@dataclass(frozen=True)
class MatrixA:
    """Lower-triangular (k-1)x(k-1) matrix; ``rows[s-1]`` has length s."""

    p: int
    k: int
    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not is_prime(self.p):
            raise InputError(f"p = {self.p} is not prime")
        if self.k < 1:
            raise InputError(f"k = {self.k} must be at least 1")
        rows = tuple(tuple(int(v) for v in r) for r in self.rows)
        if len(rows) != self.k - 1:
            raise InputError(f"expected {self.k - 1} rows, got {len(rows)}")
        for s, r in enumerate(rows, start=1):
            if len(r) != s:
                raise InputError(f"row {s} must have length {s}")
            if any(not 0 <= v < self.p for v in r):
                raise InputError(f"row {s} has entries outside 0..{self.p - 1}")
        object.__setattr__(self, "rows", rows)

    def entry(self, s: int, t: int) -> int:
        """a_{s,t} with 1-based indices, 1 <= t <= s <= k-1."""
        return self.rows[s - 1][t - 1]

    @property
    def flat(self) -> tuple[int, ...]:
        return tuple(v for r in self.rows for v in r)

    @classmethod
    def from_flat(cls, p: int, k: int, values: Sequence[int]) -> "MatrixA":
        values = list(values)
        rows, pos = [], 0
        for s in range(1, k):
            rows.append(tuple(values[pos:pos + s]))
            pos += s
        if pos != len(values):
            raise InputError(f"expected {pos} entries, got {len(values)}")
        return cls(p, k, tuple(rows))

    @classmethod
    def zero(cls, p: int, k: int) -> "MatrixA":
        return cls.from_flat(p, k, [0] * (k * (k - 1) // 2))

    def scaled(self, b: int) -> "MatrixA":
        return MatrixA.from_flat(self.p, self.k, [(b * v) % self.p for v in self.flat])

    def commutator_word(self, i: int, d: int) -> list[tuple[int, int]]:
        """The prescribed value of [g_i, g_{i+d}] as (generator, exponent) pairs."""
        if d < 2:
            return []
        return [(i + t, self.entry(d - 1, t)) for t in range(1, d) if self.entry(d - 1, t)]

    def to_dict(self) -> dict:
        return {"p": self.p, "k": self.k, "rows": [list(r) for r in self.rows]}

    @classmethod
    def from_dict(cls, data) -> "MatrixA":
        try:
            return cls(int(data["p"]), int(data["k"]), tuple(tuple(r) for r in data["rows"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed matrix record: {exc}") from exc

    @classmethod
    def load(cls, path) -> "MatrixA":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read matrix file {path}: {exc}") from exc
        return cls.from_dict(data)


def enumerate_matrices(p: int, k: int, max_count: int = 10 ** 7) -> Iterator[MatrixA]:
    """All lower-triangular matrices, lexicographic in (a11, a21, a22, a31, ...)."""
    free = k * (k - 1) // 2
    if p ** free > max_count:
        raise CapExceededError(f"{p}^{free} matrices exceed the guard {max_count}")
    for values in itertools.product(range(p), repeat=free):
        yield MatrixA.from_flat(p, k, values)


@dataclass(frozen=True)
class NormalWord:
    exponents: tuple[int, ...]

    def rank(self, p: int) -> int:
        r = 0
        for e in self.exponents:
            r = r * p + e
        return r

    @classmethod
    def from_rank(cls, r: int, p: int, k: int) -> "NormalWord":
        ex = []
        for _ in range(k + 1):
            ex.append(r % p)
            r //= p
        return cls(tuple(reversed(ex)))

    def __str__(self):
        parts = [f"g{j}" + (f"^{e}" if e > 1 else "") for j, e in enumerate(self.exponents) if e]
        return "*".join(parts) or "1"


def collect(word: Iterable[tuple[int, int]], A: MatrixA, max_rewrites: int = DEFAULT_REWRITE_CAP) -> NormalWord:
    """Rewrite a word in the generators to normal form.

    Repeatedly takes the leftmost adjacent pair g_b g_a with b > a and
    replaces it by ``w^-1 g_a g_b``, merging equal neighbours mod p.  The
    sorted prefix is kept on ``out`` so the leftmost inversion is always at
    its boundary with the unread input.
    """
    p, k = A.p, A.k
    todo: list[tuple[int, int]] = []
    for g, e in word:
        if not 0 <= g <= k:
            raise InputError(f"generator index {g} outside 0..{k}")
        e %= p
        if e:
            todo.append((g, e))
    todo.reverse()
    out: list[list[int]] = []
    rewrites = 0
    while todo:
        a, ea = todo.pop()
        if not out or out[-1][0] < a:
            out.append([a, ea])
            continue
        if out[-1][0] == a:
            out[-1][1] = (out[-1][1] + ea) % p
            if out[-1][1] == 0:
                out.pop()
            continue
        rewrites += 1
        if rewrites > max_rewrites:
            raise NonTerminationError(f"collection exceeded {max_rewrites} rewrites")
        b, eb = out.pop()
        if eb > 1:
            out.append([b, eb - 1])
        # g_b g_a -> w^-1 g_a g_b, then the leftover g_a^(ea-1)
        if ea > 1:
            todo.append((a, ea - 1))
        todo.append((b, 1))
        todo.append((a, 1))
        # w^-1 = reversed w with negated exponents; pushed so its first letter is on top
        for g, e in A.commutator_word(a, b - a):
            todo.append((g, (-e) % p))
    ex = [0] * (k + 1)
    for g, e in out:
        ex[g] = e
    return NormalWord(tuple(ex))


def relators(A: MatrixA) -> list[tuple[str, list[tuple[int, int]]]]:
    """Every defining relator as a word that must collect to the identity."""
    p, k = A.p, A.k
    out = [(f"g{i}^p", [(i, p)]) for i in range(k + 1)]
    for d in range(1, k + 1):
        for i in range(0, k - d + 1):
            j = i + d
            w = A.commutator_word(i, d)
            rel = [(i, 1), (j, 1), (i, -1), (j, -1)] + [(g, -e) for g, e in reversed(w)]
            out.append((f"[g{i},g{j}]", rel))
    return out


@dataclass(frozen=True, eq=False)
class GAGroup:
    matrix: MatrixA
    table: GroupTable | None
    gens: tuple[int, ...]
    consistent: bool
    failure: str | None = None

    @property
    def p(self) -> int:
        return self.matrix.p

    @property
    def k(self) -> int:
        return self.matrix.k

    def word(self, g: int) -> NormalWord:
        return NormalWord.from_rank(g, self.p, self.k)

    def element(self, exponents: Sequence[int]) -> int:
        return NormalWord(tuple(exponents)).rank(self.p)

    def evaluate(self, word: Iterable[tuple[int, int]]) -> int:
        """Product of a word computed in the table."""
        out = 0
        mul, inv = self.table.mul, self.table.inv
        for g, e in word:
            x = self.gens[g]
            if e < 0:
                x, e = int(inv[x]), -e
            for _ in range(e):
                out = int(mul[out, x])
        return out


def build_group(A: MatrixA, max_order: int = DEFAULT_MAX_ORDER,
                max_rewrites: int = DEFAULT_REWRITE_CAP) -> GAGroup:
    """Build the table on the p^(k+1) normal words and decide consistency.

    Right multiplication by each generator is computed by collection; a
    general product u*v is obtained by applying those columns along the
    normal word of v.  The verdict rests on exhaustive checks of the
    resulting table, so it does not depend on which bracketing was used.
    """
    p, k = A.p, A.k
    n = p ** (k + 1)
    if n > max_order:
        raise CapExceededError(f"|G(A)| = {n} exceeds the cap {max_order}")
    gens = tuple(p ** (k - i) for i in range(k + 1))
    words = [NormalWord.from_rank(r, p, k) for r in range(n)]

    def fail(reason):
        return GAGroup(A, None, gens, False, reason)

    right = np.empty((k + 1, n), dtype=np.int64)
    for j in range(k + 1):
        for u, w in enumerate(words):
            letters = [(i, e) for i, e in enumerate(w.exponents) if e] + [(j, 1)]
            try:
                right[j, u] = collect(letters, A, max_rewrites).rank(p)
            except NonTerminationError as exc:
                return fail(f"collection did not terminate: {exc}")

    mul = np.empty((n, n), dtype=np.int64)
    mul[:, 0] = np.arange(n)
    for v in range(1, n):
        ex = words[v].exponents
        last = max(i for i, e in enumerate(ex) if e)
        prev = list(ex)
        prev[last] -= 1
        mul[:, v] = right[last][mul[:, NormalWord(tuple(prev)).rank(p)]]

    if not (np.sort(mul, axis=1) == np.arange(n)).all():
        return fail("table rows are not permutations")
    zero_pos = np.argmax(mul == 0, axis=1)
    if not (mul[np.arange(n), zero_pos] == 0).all():
        return fail("some element has no right inverse")
    table = GroupTable(mul, zero_pos)
    problems = table.axiom_violations(limit=1)
    if problems:
        return fail(problems[0])
    grp = GAGroup(A, table, gens, True)
    for name, rel in relators(A):
        if grp.evaluate(rel) != 0:
            return fail(f"relator {name} does not hold")
    return grp


@dataclass(frozen=True, eq=False)
class ShiftData:
    group: GAGroup
    G1: Subgroup
    G2: Subgroup
    shift: GroupHom


def shift_data(g: GAGroup) -> ShiftData:
    """G1 = {i_k = 0}, G2 = {i_0 = 0} and the exponent shift between them,
    with every claimed property verified on the table."""
    if not g.consistent:
        raise StructuralError("shift data needs a consistent group")
    p, k, H = g.p, g.k, g.table
    n = H.order
    g1 = [x for x in range(n) if x % p == 0]
    g2 = [x for x in range(n) if x < p ** k]
    image = {x: x // p for x in g1}
    G1 = Subgroup(H, g1, g.gens[:k])
    G2 = Subgroup(H, g2, g.gens[1:])
    for name, S, want in (("G1", G1, g.gens[:k]), ("G2", G2, g.gens[1:])):
        if not S.is_valid():
            raise StructuralError(f"{name} is not closed under products", S.elements)
        if S.index != p or n % S.order:
            raise StructuralError(f"{name} does not have index p", S.order)
        if not closure(H, want).same_elements(S):
            raise StructuralError(f"{name} is not generated by its expected generators")
    src = np.array(g1)
    prod = H.mul[np.ix_(src, src)]
    lhs = (prod // p)                       # shift(uv)
    img = src // p
    rhs = H.mul[np.ix_(img, img)]           # shift(u) shift(v)
    bad = np.argwhere(lhs != rhs)
    if len(bad):
        a, b = bad[0]
        raise StructuralError("shift is not multiplicative", (int(src[a]), int(src[b])))
    shift = GroupHom(G1, G2, image)
    if not shift.is_bijective():
        raise StructuralError("shift is not a bijection G1 -> G2")
    return ShiftData(g, G1, G2, shift)

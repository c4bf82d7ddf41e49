"""Todd-Coxeter coset enumeration (HLT with lookahead).

Used only as an oracle for the order of G(A); it reads the presentation
straight off the matrix entries and shares no code with collection.
"""

from __future__ import annotations

from typing import Sequence

from .errors import OracleInconclusiveError
from .pcgroups import MatrixA


class _TableFull(Exception):
    pass


class CosetEnumeration:
    """Enumerate cosets of the trivial subgroup of ``<gens | relators>``.

    Letters are ``2*i`` for generator i and ``2*i+1`` for its inverse.
    """

    def __init__(self, ngens: int, relators: Sequence[Sequence[int]], max_cosets: int):
        self.ncols = 2 * ngens
        self.relators = [list(r) for r in relators if r]
        self.max_cosets = max_cosets
        self.table: list[list[int | None]] = [[None] * self.ncols]
        self.parent = [0]
        self.alive = 1

    def _rep(self, c: int) -> int:
        root = c
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[c] != root:
            self.parent[c], c = root, self.parent[c]
        return root

    def _is_live(self, c: int) -> bool:
        return self.parent[c] == c

    def _define(self, c: int, x: int) -> None:
        if self.alive >= self.max_cosets:
            raise _TableFull
        d = len(self.table)
        self.table.append([None] * self.ncols)
        self.parent.append(d)
        self.alive += 1
        self.table[c][x] = d
        self.table[d][x ^ 1] = c

    def _merge(self, a: int, b: int, queue: list[int]) -> None:
        a, b = self._rep(a), self._rep(b)
        if a != b:
            lo, hi = min(a, b), max(a, b)
            self.parent[hi] = lo
            self.alive -= 1
            queue.append(hi)

    def _coincidence(self, a: int, b: int) -> None:
        queue: list[int] = []
        self._merge(a, b, queue)
        i = 0
        while i < len(queue):
            g = queue[i]
            i += 1
            for x in range(self.ncols):
                d = self.table[g][x]
                if d is None:
                    continue
                self.table[d][x ^ 1] = None
                mu, nu = self._rep(g), self._rep(d)
                if self.table[mu][x] is not None:
                    self._merge(nu, self.table[mu][x], queue)
                elif self.table[nu][x ^ 1] is not None:
                    self._merge(mu, self.table[nu][x ^ 1], queue)
                else:
                    self.table[mu][x] = nu
                    self.table[nu][x ^ 1] = mu

    def _scan(self, c: int, word: list[int], fill: bool) -> None:
        t = self.table
        f, i = c, 0
        b, j = c, len(word) - 1
        while True:
            while i <= j and t[f][word[i]] is not None:
                f = t[f][word[i]]
                i += 1
            if i > j:
                if f != b:
                    self._coincidence(f, b)
                return
            while j >= i and t[b][word[j] ^ 1] is not None:
                b = t[b][word[j] ^ 1]
                j -= 1
            if j < i:
                self._coincidence(f, b)
                return
            if i == j:
                t[f][word[i]] = b
                t[b][word[i] ^ 1] = f
                return
            if not fill:
                return
            self._define(f, word[i])

    def _lookahead(self) -> None:
        c = 0
        while c < len(self.table):
            for r in self.relators:
                if not self._is_live(c):
                    break
                self._scan(c, r, fill=False)
            c += 1

    def run(self) -> int:
        c = 0
        while c < len(self.table):
            if self._is_live(c):
                try:
                    for r in self.relators:
                        if not self._is_live(c):
                            break
                        self._scan(c, r, fill=True)
                    if self._is_live(c):
                        for x in range(self.ncols):
                            if self.table[c][x] is None:
                                self._define(c, x)
                except _TableFull:
                    before = self.alive
                    self._lookahead()
                    if self.alive >= before and self.alive >= self.max_cosets:
                        raise OracleInconclusiveError(
                            f"coset limit {self.max_cosets} reached with {self.alive} live cosets")
                    continue
            c += 1
        return self.alive


def presentation(A: MatrixA) -> tuple[int, list[list[int]]]:
    """Generators and relators of G(A) in coset-enumeration letters."""
    p, k = A.p, A.k
    gen = lambda i: 2 * i
    inv = lambda i: 2 * i + 1
    rels = [[gen(i)] * p for i in range(k + 1)]
    for i in range(k + 1):
        for j in range(i + 1, k + 1):
            d = j - i
            rhs = []
            if d >= 2:
                rhs = [(i + t, A.rows[d - 2][t - 1]) for t in range(1, d)]
            # g_i g_j g_i^-1 g_j^-1 (rhs)^-1
            word = [gen(i), gen(j), inv(i), inv(j)]
            for g, e in reversed(rhs):
                word += [inv(g)] * e
            rels.append(word)
    return k + 1, rels


def order_oracle(A: MatrixA, limit_factor: int = 2) -> int:
    """Order of the group presented by A's relations, by coset enumeration
    over the trivial subgroup with at most ``limit_factor * p^(k+1)`` live cosets."""
    ngens, rels = presentation(A)
    return CosetEnumeration(ngens, rels, limit_factor * A.p ** (A.k + 1)).run()

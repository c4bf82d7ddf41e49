"""Finite groups stored as explicit multiplication tables.

Element ids run over ``0..order-1`` and the identity is always ``0``.  All
objects are treated as immutable once built; the numpy arrays backing a
:class:`GroupTable` are flagged read-only.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from itertools import permutations
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import CapExceededError, InputError

DEFAULT_MAX_ORDER = 512


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.int64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GroupTable:
    """A concrete finite group given by its full multiplication table."""

    mul: np.ndarray
    inv: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "mul", _frozen(self.mul))
        object.__setattr__(self, "inv", _frozen(self.inv))
        n = self.mul.shape[0]
        if self.mul.shape != (n, n) or self.inv.shape != (n,):
            raise InputError("multiplication table must be square with a matching inverse map")

    @property
    def order(self) -> int:
        return int(self.mul.shape[0])

    @property
    def identity(self) -> int:
        return 0

    @classmethod
    def from_mul(cls, mul, labels=None) -> "GroupTable":
        """Build a table from ``mul`` alone, deriving inverses.

        Raises :class:`InputError` if 0 is not a two-sided identity or some
        element has no inverse.
        """
        mul = np.asarray(mul, dtype=np.int64)
        n = mul.shape[0]
        if not (np.array_equal(mul[0], np.arange(n)) and np.array_equal(mul[:, 0], np.arange(n))):
            raise InputError("element 0 is not a two-sided identity")
        inv = np.full(n, -1, dtype=np.int64)
        rows, cols = np.nonzero(mul == 0)
        for r, c in zip(rows, cols):
            if inv[r] < 0:
                inv[r] = c
        if (inv < 0).any():
            raise InputError("some element has no inverse")
        return cls(mul, inv, None if labels is None else tuple(labels))

    def label(self, g: int) -> str:
        return self.labels[g] if self.labels is not None else str(g)

    def power(self, g: int, m: int) -> int:
        m %= self.element_orders[g]
        out = 0
        for _ in range(m):
            out = int(self.mul[out, g])
        return out

    def conj(self, h: int, g: int) -> int:
        """h g h^-1"""
        return int(self.mul[self.mul[h, g], self.inv[h]])

    @cached_property
    def element_orders(self) -> np.ndarray:
        n = self.order
        orders = np.ones(n, dtype=np.int64)
        cur = np.arange(n)
        m = 1
        pending = cur != 0
        while pending.any():
            m += 1
            cur = self.mul[cur, np.arange(n)]
            hit = pending & (cur == 0)
            orders[hit] = m
            pending &= ~hit
            if m > n:
                raise InputError("table is not a group: some element has no finite order")
        orders.setflags(write=False)
        return orders

    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.mul, self.mul.T))

    def center(self) -> "Subgroup":
        commuting = (self.mul == self.mul.T).all(axis=1)
        elems = tuple(int(g) for g in np.nonzero(commuting)[0])
        return Subgroup(self, elems, elems)

    def axiom_violations(self, limit: int = 10) -> list[str]:
        """Exhaustively check associativity, identity and inverse laws."""
        out: list[str] = []
        n = self.order
        idx = np.arange(n)
        if ((self.mul < 0) | (self.mul >= n)).any():
            return ["multiplication table has out-of-range entries"]
        if not (np.array_equal(self.mul[0], idx) and np.array_equal(self.mul[:, 0], idx)):
            out.append("0 is not a two-sided identity")
        if not ((self.mul[idx, self.inv] == 0).all() and (self.mul[self.inv, idx] == 0).all()):
            out.append("inv does not give two-sided inverses")
        # (ab)c == a(bc), one slab of a at a time to bound memory
        for a in range(n):
            left = self.mul[self.mul[a]]          # [b, c] -> (ab)c
            right = self.mul[a][self.mul]         # [b, c] -> a(bc)
            bad = np.argwhere(left != right)
            if len(bad):
                b, c = bad[0]
                out.append(f"associativity fails at ({a}, {b}, {c})")
                if len(out) >= limit:
                    break
        return out

    def to_dict(self) -> dict:
        return {"order": self.order, "mul": [int(x) for x in self.mul.ravel()]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "GroupTable":
        n = int(data["order"])
        flat = list(data["mul"])
        if len(flat) != n * n:
            raise InputError(f"expected {n * n} table entries, got {len(flat)}")
        return cls.from_mul(np.array(flat, dtype=np.int64).reshape(n, n))


@dataclass(frozen=True, eq=False)
class Subgroup:
    parent: GroupTable
    elements: tuple[int, ...]
    generators: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(sorted(int(x) for x in self.elements)))
        object.__setattr__(self, "generators", tuple(int(x) for x in self.generators))

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def index(self) -> int:
        return self.parent.order // self.order

    @cached_property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.parent.order, dtype=bool)
        m[list(self.elements)] = True
        m.setflags(write=False)
        return m

    def __contains__(self, g) -> bool:
        return bool(self.mask[g])

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return len(self.elements)

    def same_elements(self, other: "Subgroup") -> bool:
        return self.parent is other.parent and self.elements == other.elements

    def is_valid(self) -> bool:
        if 0 not in self:
            return False
        el = np.array(self.elements)
        if not self.mask[self.parent.inv[el]].all():
            return False
        return bool(self.mask[self.parent.mul[np.ix_(el, el)]].all())

    def as_table(self) -> tuple[GroupTable, dict[int, int]]:
        """Relabel the subgroup as a standalone table.

        Returns the table and the embedding ``local id -> parent id``.
        """
        el = list(self.elements)
        local = {g: i for i, g in enumerate(el)}
        mul = [[local[int(self.parent.mul[a, b])] for b in el] for a in el]
        return GroupTable.from_mul(mul), dict(enumerate(el))


GroupLike = Union[GroupTable, Subgroup]


def parent_of(g: GroupLike) -> GroupTable:
    return g if isinstance(g, GroupTable) else g.parent


def elements_of(g: GroupLike) -> tuple[int, ...]:
    return tuple(range(g.order)) if isinstance(g, GroupTable) else g.elements


@dataclass(frozen=True, eq=False)
class GroupHom:
    source: GroupLike
    target: GroupLike
    image: Mapping[int, int]

    def __call__(self, g: int) -> int:
        return self.image[g]

    @cached_property
    def array(self) -> np.ndarray:
        """Image indexed by parent id, -1 outside the domain."""
        a = np.full(parent_of(self.source).order, -1, dtype=np.int64)
        for x, y in self.image.items():
            a[x] = y
        a.setflags(write=False)
        return a

    def violations(self) -> list[str]:
        out = []
        dom = elements_of(self.source)
        if set(self.image) != set(dom):
            return ["image is not defined exactly on the source"]
        tgt = set(elements_of(self.target))
        if not set(self.image.values()) <= tgt:
            out.append("image leaves the target")
        smul, tmul = parent_of(self.source).mul, parent_of(self.target).mul
        for a in dom:
            for b in dom:
                if self.image[int(smul[a, b])] != int(tmul[self.image[a], self.image[b]]):
                    out.append(f"not multiplicative at ({a}, {b})")
                    return out
        return out

    def is_homomorphism(self) -> bool:
        return not self.violations()

    def is_injective(self) -> bool:
        return len(set(self.image.values())) == len(self.image)

    def is_bijective(self) -> bool:
        return self.is_injective() and set(self.image.values()) == set(elements_of(self.target))

    def inverse(self) -> "GroupHom":
        if not self.is_injective():
            raise ValueError("only an injective map can be inverted")
        img_set = tuple(sorted(self.image.values()))
        tgt = self.target
        if isinstance(tgt, GroupTable) and len(img_set) != tgt.order:
            tgt = Subgroup(tgt, img_set, img_set)
        return GroupHom(tgt, self.source, {y: x for x, y in self.image.items()})

    def compose(self, first: "GroupHom") -> "GroupHom":
        """``self ∘ first``"""
        return GroupHom(first.source, self.target, {x: self.image[y] for x, y in first.image.items()})


def closure(parent: GroupTable, gens: Iterable[int]) -> Subgroup:
    """Smallest subgroup of ``parent`` containing ``gens`` (breadth-first)."""
    gens = tuple(int(g) for g in gens)
    seen = np.zeros(parent.order, dtype=bool)
    seen[0] = True
    out = [0]
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for g in gens:
            y = int(parent.mul[x, g])
            if not seen[y]:
                seen[y] = True
                out.append(y)
                queue.append(y)
    return Subgroup(parent, out, gens)


def is_normal(sub: Subgroup) -> bool:
    G = sub.parent
    el = np.array(sub.elements)
    g = np.arange(G.order)[:, None]
    conj = G.mul[G.mul[g, el[None, :]], G.inv[g]]
    return bool(sub.mask[conj].all())


def element_order(parent: GroupTable, g: int) -> int:
    return int(parent.element_orders[g])


def conjugacy_class(parent: GroupTable, g: int) -> frozenset[int]:
    h = np.arange(parent.order)
    return frozenset(int(x) for x in parent.mul[parent.mul[h, g], parent.inv[h]])


def normal_core(sub: Subgroup) -> Subgroup:
    """Largest normal subgroup of the parent contained in ``sub``."""
    G = sub.parent
    h = np.arange(G.order)
    keep = [s for s in sub.elements if sub.mask[G.mul[G.mul[h, s], G.inv[h]]].all()]
    return Subgroup(G, keep, keep)


def intersect(a: Subgroup, b: Subgroup) -> Subgroup:
    el = tuple(sorted(set(a.elements) & set(b.elements)))
    return Subgroup(a.parent, el, el)


def subgroups_all(parent: GroupTable, max_order: int = DEFAULT_MAX_ORDER,
                  within: Subgroup | None = None) -> list[Subgroup]:
    """Every subgroup (of ``within``, if given) exactly once.

    Subgroups are grown one generator at a time from the trivial one and
    deduplicated by element set; sorted by order, then element tuple.
    """
    if parent.order > max_order:
        raise CapExceededError(f"group of order {parent.order} exceeds the cap {max_order}")
    pool = list(within.elements) if within is not None else list(range(parent.order))
    found: dict[tuple[int, ...], Subgroup] = {}
    triv = closure(parent, ())
    found[triv.elements] = triv
    frontier = [triv]
    while frontier:
        nxt = []
        for s in frontier:
            for g in pool:
                if g in s:
                    continue
                t = closure(parent, s.generators + (g,))
                if t.elements not in found:
                    found[t.elements] = t
                    nxt.append(t)
        frontier = nxt
    return sorted(found.values(), key=lambda s: (s.order, s.elements))


# ---------------------------------------------------------------- isomorphisms

@dataclass(frozen=True)
class IsoConstraints:
    """Side conditions for :func:`iso_search`.

    ``subgroups``: pairs ``(S, S')`` demanding ``psi(S) = S'``.
    ``elements``: pairs ``(a, b)`` demanding ``psi(a) = b``.
    ``intertwinings``: pairs ``(f, f')`` demanding ``psi∘f = f'∘psi`` on f's domain.
    """

    subgroups: tuple[tuple[Subgroup, Subgroup], ...] = ()
    elements: tuple[tuple[int, int], ...] = ()
    intertwinings: tuple[tuple[GroupHom, GroupHom], ...] = ()


class _Search:
    def __init__(self, src: GroupTable, dst: GroupTable, cons: IsoConstraints):
        self.src, self.dst = src, dst
        self.smul = src.mul.tolist()
        self.dmul = dst.mul.tolist()
        self.sord = src.element_orders.tolist()
        self.dord = dst.element_orders.tolist()
        self.masks = [(a.mask.tolist(), b.mask.tolist()) for a, b in cons.subgroups]
        self.inter = [(f.array.tolist(), f2.array.tolist()) for f, f2 in cons.intertwinings]

    def assign(self, st, x, y):
        """0 = already consistent, 1 = new, -1 = conflict."""
        img, pre = st["img"], st["pre"]
        if img[x] >= 0:
            return 0 if img[x] == y else -1
        if pre[y] >= 0 or self.sord[x] != self.dord[y]:
            return -1
        for m, m2 in self.masks:
            if m[x] != m2[y]:
                return -1
        img[x] = y
        pre[y] = x
        st["known"].append(x)
        return 1

    def add_gen(self, st, x, y) -> bool:
        r = self.assign(st, x, y)
        if r < 0:
            return False
        st["gens"].append(x)
        st["ptr"].append(0)
        return self.propagate(st)

    def propagate(self, st) -> bool:
        img, known, gens, ptr = st["img"], st["known"], st["gens"], st["ptr"]
        smul, dmul = self.smul, self.dmul
        while True:
            moved = True
            while moved:
                moved = False
                for gi, g in enumerate(gens):
                    yg = img[g]
                    while ptr[gi] < len(known):
                        x = known[ptr[gi]]
                        ptr[gi] += 1
                        if self.assign(st, smul[x][g], dmul[img[x]][yg]) < 0:
                            return False
                        moved = True
            new_gen = None
            while st["iptr"] < len(known) and new_gen is None:
                x = known[st["iptr"]]
                st["iptr"] += 1
                for fs, fd in self.inter:
                    z = fs[x]
                    if z < 0:
                        continue
                    w = fd[img[x]]
                    if w < 0:
                        return False
                    r = self.assign(st, z, w)
                    if r < 0:
                        return False
                    if r == 1:
                        new_gen = z
                        gens.append(z)
                        ptr.append(0)
            if new_gen is None:
                return True


def _copy_state(st):
    return {"img": st["img"][:], "pre": st["pre"][:], "known": st["known"][:],
            "gens": st["gens"][:], "ptr": st["ptr"][:], "iptr": st["iptr"]}


def _propagating_generators(src: GroupTable, seeds: Sequence[int], maps: Sequence[np.ndarray]) -> list[int]:
    """Greedy generating set: repeatedly add the smallest-id element whose
    addition grows the closure (under products and the given maps) the most."""
    mul = src.mul.tolist()
    maps = [m.tolist() for m in maps]
    n = src.order

    def close(gens):
        seen = [False] * n
        seen[0] = True
        elems = [0]
        gl = list(gens)
        i = 0
        while True:
            while i < len(elems):
                x = elems[i]
                i += 1
                for g in gl:
                    y = mul[x][g]
                    if not seen[y]:
                        seen[y] = True
                        elems.append(y)
            extra = [m[x] for m in maps for x in elems if m[x] >= 0 and not seen[m[x]]]
            if not extra:
                return seen, len(elems)
            for z in extra:
                if not seen[z]:
                    gl.append(z)
                    seen[z] = True
                    elems.append(z)
            i = 0

    chosen = list(seeds)
    seen, size = close(chosen)
    while size < n:
        best, best_size = -1, -1
        for x in range(n):
            if seen[x]:
                continue
            _, s = close(chosen + [x])
            if s > best_size:
                best, best_size = x, s
                if s == n:
                    break
        chosen.append(best)
        seen, size = close(chosen)
    return chosen[len(seeds):]


def iso_search(src: GroupTable, dst: GroupTable, constraints: IsoConstraints | None = None,
               limit: int | None = None) -> list[GroupHom]:
    """All isomorphisms ``src -> dst`` meeting ``constraints``.

    Backtracks over images of a greedily chosen generating set in ascending
    element-id order, propagating products and intertwinings after every
    choice.  ``limit`` stops after that many results.
    """
    cons = constraints or IsoConstraints()
    if src.order != dst.order:
        return []
    if sorted(src.element_orders.tolist()) != sorted(dst.element_orders.tolist()):
        return []
    for a, b in cons.subgroups:
        if a.order != b.order:
            return []
    search = _Search(src, dst, cons)
    n = src.order
    st = {"img": [-1] * n, "pre": [-1] * n, "known": [], "gens": [], "ptr": [], "iptr": 0}
    if not search.add_gen(st, 0, 0):
        return []
    for a, b in cons.elements:
        if not search.add_gen(st, int(a), int(b)):
            return []
    gens = _propagating_generators(src, [int(a) for a, _ in cons.elements],
                                   [f.array for f, _ in cons.intertwinings])
    dst_by_order: dict[int, list[int]] = {}
    for y, o in enumerate(search.dord):
        dst_by_order.setdefault(o, []).append(y)

    results: list[GroupHom] = []

    def rec(state, i):
        if limit is not None and len(results) >= limit:
            return
        while i < len(gens) and state["img"][gens[i]] >= 0:
            i += 1
        if i == len(gens):
            if len(state["known"]) == n:
                results.append(GroupHom(src, dst, dict(enumerate(state["img"]))))
            return
        g = gens[i]
        for y in dst_by_order[search.sord[g]]:
            if state["pre"][y] >= 0:
                continue
            child = _copy_state(state)
            if search.add_gen(child, g, y):
                rec(child, i + 1)
                if limit is not None and len(results) >= limit:
                    return

    rec(st, 0)
    return results


def constraint_violations(psi: GroupHom, constraints: IsoConstraints) -> list[str]:
    """Re-verify a homomorphism against a constraint record from scratch."""
    out = psi.violations()
    if not psi.is_bijective():
        out.append("not a bijection")
    for a, b in constraints.subgroups:
        if {psi(x) for x in a.elements} != set(b.elements):
            out.append("subgroup image mismatch")
    for a, b in constraints.elements:
        if psi(a) != b:
            out.append(f"element {a} maps to {psi(a)}, wanted {b}")
    for f, f2 in constraints.intertwinings:
        for x in elements_of(f.source):
            if psi(f(x)) != f2.image.get(psi(x), -1):
                out.append(f"intertwining fails at {x}")
                break
    return out


def brute_force_isomorphisms(src: GroupTable, dst: GroupTable) -> list[dict[int, int]]:
    """All isomorphisms by trying every bijection; only for tiny groups."""
    n = src.order
    if n != dst.order or n > 8:
        raise ValueError("brute force is limited to equal orders up to 8")
    out = []
    for perm in permutations(range(1, n)):
        f = (0,) + perm
        if all(f[src.mul[a, b]] == dst.mul[f[a], f[b]] for a in range(n) for b in range(n)):
            out.append(dict(enumerate(f)))
    return out


# ---------------------------------------------------------------- constructors

def cyclic_group(n: int) -> GroupTable:
    a = np.arange(n)
    return GroupTable.from_mul((a[:, None] + a[None, :]) % n)


def elementary_abelian(p: int, m: int) -> GroupTable:
    """(Z/p)^m with id = sum of coordinate_j * p^(m-1-j)."""
    n = p ** m
    coords = np.array([[(x // p ** (m - 1 - j)) % p for j in range(m)] for x in range(n)])
    weights = p ** np.arange(m - 1, -1, -1)
    s = (coords[:, None, :] + coords[None, :, :]) % p
    return GroupTable.from_mul(s @ weights)

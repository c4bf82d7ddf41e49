"""Independent oracles used by the tests.

None of these go through the table-building or isomorphism-search code
they are used to check.
"""

from __future__ import annotations

import itertools

import numpy as np

from bsll.cosets import CosetEnumeration, presentation


def subgroups_brute(mul: np.ndarray) -> set[frozenset[int]]:
    """Every subset containing the identity and closed under products."""
    n = len(mul)
    out = set()
    for mask in range(1 << (n - 1)):
        s = {0} | {i + 1 for i in range(n - 1) if mask >> i & 1}
        if all(int(mul[a, b]) in s for a in s for b in s):
            out.add(frozenset(s))
    return out


def gaussian_binomial_total(p: int, m: int) -> int:
    """Number of subspaces of F_p^m."""
    total = 0
    for r in range(m + 1):
        num = den = 1
        for i in range(r):
            num *= p ** (m - i) - 1
            den *= p ** (i + 1) - 1
        total += num // den
    return total


def automorphisms_brute(mul: np.ndarray) -> list[tuple[int, ...]]:
    """All bijections fixing 0 that respect the multiplication table."""
    n = len(mul)
    out = []
    for rest in itertools.permutations(range(1, n)):
        f = (0,) + rest
        if all(f[int(mul[a, b])] == int(mul[f[a], f[b]]) for a in range(n) for b in range(n)):
            out.append(f)
    return out


def z4() -> np.ndarray:
    return np.array([[(a + b) % 4 for b in range(4)] for a in range(4)])


def klein() -> np.ndarray:
    return np.array([[a ^ b for b in range(4)] for a in range(4)])


def hand_count_k1() -> tuple[int, int, int]:
    """Loop coverings of degree 2 over both groups of order 4.

    Enumerates (H, G1, G2, phi, u) with G1, G2 of index 2, phi: G1 -> G2 a
    group isomorphism, no nontrivial phi-invariant normal N <= G1, and u of
    order 2 outside G1 and G2.  Classes are taken under the full
    automorphism group of H acting on the data, allowing the loop to be
    reversed; u is matched exactly (every group here is abelian, so the
    conjugacy-tolerant variant coincides).

    Returns (number of groups with a valid covering, coverings, classes).
    """
    found = []
    groups_used = 0
    for mul in (z4(), klein()):
        subs = [s for s in subgroups_brute(mul) if len(s) == 2]
        here = 0
        for G1, G2 in itertools.product(subs, repeat=2):
            a, = G1 - {0}
            b, = G2 - {0}
            phi = {0: 0, a: b}
            # abelian, so every subgroup is normal
            if any({phi[x] for x in N} == N for N in subgroups_brute(mul) if len(N) > 1 and N <= G1):
                continue
            for u in range(1, 4):
                if int(mul[u, u]) != 0 or u in G1 or u in G2:
                    continue
                found.append((id(mul), mul, G1, G2, phi, u))
                here += 1
        groups_used += here > 0
    classes = []
    for item in found:
        for rep in classes:
            if _iso_brute(rep, item):
                break
        else:
            classes.append(item)
    return groups_used, len(found), len(classes)


def _iso_brute(c1, c2) -> bool:
    if c1[0] != c2[0]:
        return False
    _, mul, G1, G2, phi, u = c1
    _, _, H1, H2, chi, v = c2
    chi_inv = {y: x for x, y in chi.items()}
    for f in automorphisms_brute(mul):
        if f[u] != v:
            continue
        direct = ({f[x] for x in G1} == H1 and {f[x] for x in G2} == H2
                  and all(f[phi[x]] == chi[f[x]] for x in G1))
        flipped = ({f[x] for x in G1} == H2 and {f[x] for x in G2} == H1
                   and all(f[phi[x]] == chi_inv[f[x]] for x in G1))
        if direct or flipped:
            return True
    return False


class RegularRep:
    """Words of G(A) evaluated by walking the coset table of the trivial
    subgroup; two words are equal in the group iff they end at the same coset."""

    def __init__(self, A):
        ngens, rels = presentation(A)
        self.ce = CosetEnumeration(ngens, rels, 4 * A.p ** (A.k + 1))
        self.order = self.ce.run()

    def coset(self, word) -> int:
        ce = self.ce
        c = 0
        for g, e in word:
            letter = 2 * g if e > 0 else 2 * g + 1
            for _ in range(abs(e)):
                c = ce._rep(ce.table[ce._rep(c)][letter])
        return c

    def normal(self, exponents) -> int:
        return self.coset([(i, e) for i, e in enumerate(exponents) if e])


def classes_brute(coverings, conjugate: bool) -> int:
    """Class count over coverings sharing one small table, by trying every
    automorphism of H in both loop orientations.  With ``conjugate`` the
    image of u only has to be conjugate to the other u."""
    if not coverings:
        return 0
    H = coverings[0].H
    mul = H.mul
    n = H.order
    autos = automorphisms_brute(mul)
    conj = [{int(mul[mul[z, g], H.inv[z]]) for z in range(n)} for g in range(n)]

    def same(c1, c2):
        g1, g2 = set(c1.G1.elements), set(c1.G2.elements)
        h1, h2 = set(c2.G1.elements), set(c2.G2.elements)
        chi, chi_inv = c2.phi.image, {y: x for x, y in c2.phi.image.items()}
        for f in autos:
            ok_u = f[c1.u] in conj[c2.u] if conjugate else f[c1.u] == c2.u
            if not ok_u:
                continue
            if ({f[x] for x in g1} == h1 and {f[x] for x in g2} == h2
                    and all(f[c1.phi.image[x]] == chi[f[x]] for x in g1)):
                return True
            if ({f[x] for x in g1} == h2 and {f[x] for x in g2} == h1
                    and all(f[c1.phi.image[x]] == chi_inv[f[x]] for x in g1)):
                return True
        return False

    reps = []
    for c in coverings:
        if not any(same(r, c) for r in reps):
            reps.append(c)
    return len(reps)

"""Coverings of the one-vertex loop by a one-vertex loop, in normalized form.

The base is the loop with vertex group Z/p and trivial edge group.  A
covering is recorded as ``(H, G1, G2, phi, u)``: the target vertex group H,
its edge group embedded as G1 (inclusion) and as G2 (through ``phi``), and the
image ``u`` of the base generator.  The path-group elements of a general
morphism are taken trivial in this representation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from .errors import InputError, InternalConsistencyError
from .gog import GraphOfGroups, covolume, is_faithful_loop, loop_gog, loop_graph
from .groups import (GroupHom, GroupTable, IsoConstraints, Subgroup, conjugacy_class,
                     constraint_violations, cyclic_group, iso_search)
from .pcgroups import MatrixA, is_prime


@dataclass(frozen=True, eq=False)
class LoopCovering:
    p: int
    H: GroupTable
    G1: Subgroup
    G2: Subgroup
    phi: GroupHom
    u: int
    matrix: MatrixA | None = None

    @cached_property
    def phi_inv(self) -> GroupHom:
        return self.phi.inverse()

    @property
    def n(self) -> int:
        return self.H.order // self.p

    def flipped(self) -> "LoopCovering":
        """The same covering read with the loop orientation reversed."""
        return LoopCovering(self.p, self.H, self.G2, self.G1, self.phi_inv, self.u, self.matrix)

    def target_gog(self) -> GraphOfGroups:
        return loop_gog(self.H, self.G1, self.phi)

    def to_dict(self, group_ref: str | None = None) -> dict:
        d = {
            "p": self.p,
            "group": {"ref": group_ref} if group_ref else self.H.to_dict(),
            "g1": list(self.G1.elements),
            "g2": list(self.G2.elements),
            "phi": [self.phi.image[x] for x in self.G1.elements],
            "u": self.u,
        }
        if self.matrix is not None:
            d["matrix"] = self.matrix.to_dict()
        return d

    @classmethod
    def from_dict(cls, data, groups: dict | None = None) -> "LoopCovering":
        try:
            g = data["group"]
            if "ref" in g:
                H = (groups or {})[g["ref"]]
            else:
                H = GroupTable.from_dict(g)
            G1 = Subgroup(H, data["g1"], data["g1"])
            G2 = Subgroup(H, data["g2"], data["g2"])
            phi = GroupHom(G1, G2, dict(zip(G1.elements, (int(v) for v in data["phi"]))))
            matrix = MatrixA.from_dict(data["matrix"]) if "matrix" in data else None
            return cls(int(data["p"]), H, G1, G2, phi, int(data["u"]), matrix)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed covering record: {exc!r}") from exc


@dataclass(frozen=True, eq=False)
class IsoWitness:
    psi: GroupHom
    flipped: bool
    conjugator: int | None = None


def make_loop_base(p: int) -> GraphOfGroups:
    if not is_prime(p):
        raise InputError(f"p = {p} is not prime")
    graph = loop_graph()
    V = cyclic_group(p)
    E = cyclic_group(1)
    triv = {0: 0}
    return GraphOfGroups(graph, {"x": V}, {graph.edge_pair("e"): E},
                         {"e": GroupHom(E, V, triv), "ebar": GroupHom(E, V, dict(triv))})


def validate(c: LoopCovering) -> list[str]:
    out = []
    H, p = c.H, c.p
    for name, S in (("G1", c.G1), ("G2", c.G2)):
        if S.parent is not H or not S.is_valid():
            out.append(f"{name} is not a subgroup of H")
        elif S.order * p != H.order:
            out.append(f"[H:{name}] = {H.order / S.order:g}, not p")
    if out:
        return out
    out += [f"phi: {v}" for v in c.phi.violations()]
    if not c.phi.is_bijective():
        out.append("phi is not a bijection G1 -> G2")
    if not 0 <= c.u < H.order:
        return out + ["u is not an element of H"]
    order = int(H.element_orders[c.u])
    if order != p:
        out.append(f"order(u) ≠ p (order {order})")
    if c.u in c.G1:
        out.append("u ∈ G1")
    if c.u in c.G2:
        out.append("u ∈ G2")
    powers = [H.power(c.u, j) for j in range(p)]
    for name, S in (("G1", c.G1), ("G2", c.G2)):
        cosets = {tuple(sorted(int(H.mul[x, s]) for s in S.elements)) for x in powers}
        if len(cosets) != p:
            out.append(f"powers of u are not a transversal of {name}")
    if not out:
        faithful, witness = is_faithful_loop(H, c.G1, c.G2, c.phi)
        if not faithful:
            out.append(f"target is not faithful (phi-invariant normal subgroup {list(witness.elements)})")
    return out


def sheets(c: LoopCovering) -> int:
    """Sheet count, cross-checked three ways as exact rationals."""
    by_vertex = Fraction(c.H.order, c.p)
    by_edge = Fraction(c.G1.order, 1)
    by_volume = covolume(make_loop_base(c.p)) / covolume(c.target_gog())
    if not by_vertex == by_edge == by_volume:
        raise InternalConsistencyError(
            f"sheet counts disagree: vertex {by_vertex}, edge {by_edge}, covolume {by_volume}")
    if by_vertex.denominator != 1:
        raise InternalConsistencyError(f"non-integral sheet count {by_vertex}")
    return int(by_vertex)


def _constraints(c1: LoopCovering, c2: LoopCovering, flip: bool, target_u: int) -> IsoConstraints:
    if flip:
        subs = ((c1.G1, c2.G2), (c1.G2, c2.G1))
        inter = ((c1.phi, c2.phi_inv),)
    else:
        subs = ((c1.G1, c2.G1), (c1.G2, c2.G2))
        inter = ((c1.phi, c2.phi),)
    return IsoConstraints(subgroups=subs, elements=((c1.u, target_u),), intertwinings=inter)


def _comparable(c1: LoopCovering, c2: LoopCovering) -> bool:
    return c1.p == c2.p and c1.H.order == c2.H.order


def iso_sufficient(c1: LoopCovering, c2: LoopCovering) -> IsoWitness | None:
    """A group isomorphism carrying (G1, G2, phi, u) to the other covering's
    data, directly or with the loop reversed.  A witness assembles into an
    isomorphism of coverings with trivial correction terms."""
    if not _comparable(c1, c2):
        return None
    for flip in (False, True):
        found = iso_search(c1.H, c2.H, _constraints(c1, c2, flip, c2.u), limit=1)
        if found:
            return IsoWitness(found[0], flip)
    return None


def iso_necessary(c1: LoopCovering, c2: LoopCovering) -> IsoWitness | None:
    """As :func:`iso_sufficient` but only asking psi(u) to be conjugate to u'.

    ``None`` proves the coverings are not isomorphic.
    """
    if not _comparable(c1, c2):
        return None
    H2 = c2.H
    targets = sorted(conjugacy_class(H2, c2.u))
    for flip in (False, True):
        for t in targets:
            found = iso_search(c1.H, H2, _constraints(c1, c2, flip, t), limit=1)
            if found:
                z = next(z for z in range(H2.order) if H2.conj(z, t) == c2.u)
                return IsoWitness(found[0], flip, z)
    return None


def witness_violations(c1: LoopCovering, c2: LoopCovering, w: IsoWitness) -> list[str]:
    """Replay a witness against its defining conditions from scratch."""
    u_img = w.psi(c1.u)
    out = constraint_violations(w.psi, _constraints(c1, c2, w.flipped, u_img))
    if w.conjugator is None:
        if u_img != c2.u:
            out.append("psi(u) differs from u'")
    elif c2.H.conj(w.conjugator, u_img) != c2.u:
        out.append("conjugator does not carry psi(u) to u'")
    return out

"""Finite graphs of finite groups, edge indices, covolume and faithfulness."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Mapping

from .errors import CapExceededError, InputError, StructuralError
from .groups import (DEFAULT_MAX_ORDER, GroupHom, GroupTable, Subgroup, intersect,
                     is_normal, normal_core, subgroups_all)


@dataclass(frozen=True)
class Graph:
    """Directed edges with a fixed-point-free involution ``bar`` and origin map.

    Loops and multi-edges are allowed; the terminus of e is ``origin[bar[e]]``.
    """

    vertices: tuple
    origin: Mapping
    bar: Mapping

    @property
    def edges(self) -> tuple:
        return tuple(sorted(self.origin, key=str))

    def terminus(self, e):
        return self.origin[self.bar[e]]

    def edges_at(self, x) -> list:
        return [e for e in self.edges if self.origin[e] == x]

    def edge_pair(self, e) -> tuple:
        return tuple(sorted((e, self.bar[e]), key=str))

    def violations(self) -> list[str]:
        out = []
        if set(self.origin) != set(self.bar):
            out.append("origin and bar are defined on different edge sets")
            return out
        for e in self.origin:
            b = self.bar[e]
            if b == e:
                out.append(f"edge {e} is its own reverse")
            elif b not in self.bar or self.bar[b] != e:
                out.append(f"bar is not an involution at {e}")
            if self.origin[e] not in self.vertices:
                out.append(f"edge {e} starts at unknown vertex {self.origin[e]}")
        return out

    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        seen = {self.vertices[0]}
        stack = [self.vertices[0]]
        while stack:
            x = stack.pop()
            for e in self.edges_at(x):
                y = self.terminus(e)
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == len(self.vertices)


def loop_graph() -> Graph:
    """One vertex ``x`` with a single geometric loop ``e`` / ``ebar``."""
    return Graph(("x",), {"e": "x", "ebar": "x"}, {"e": "ebar", "ebar": "e"})


@dataclass(frozen=True)
class EdgeIndexedGraph:
    graph: Graph
    index: Mapping

    def degree(self, x) -> int:
        return sum(self.index[e] for e in self.graph.edges_at(x))


@dataclass(frozen=True, eq=False)
class GraphOfGroups:
    """``edge_groups`` is keyed by :meth:`Graph.edge_pair`; ``alphas[e]`` maps
    the edge group into the vertex group at ``origin[e]``."""

    graph: Graph
    vertex_groups: Mapping
    edge_groups: Mapping
    alphas: Mapping

    def edge_group(self, e) -> GroupTable:
        return self.edge_groups[self.graph.edge_pair(e)]

    def alpha_image(self, e) -> Subgroup:
        el = sorted(set(self.alphas[e].image.values()))
        return Subgroup(self.vertex_groups[self.graph.origin[e]], el, el)

    def to_dict(self) -> dict:
        g = self.graph
        return {
            "vertices": list(g.vertices),
            "edges": [{"id": e, "bar": g.bar[e], "origin": g.origin[e]} for e in g.edges],
            "vertex_groups": {str(x): self.vertex_groups[x].to_dict() for x in g.vertices},
            "edge_groups": {"|".join(map(str, k)): v.to_dict() for k, v in self.edge_groups.items()},
            "alphas": {str(e): [self.alphas[e].image[i] for i in range(self.edge_group(e).order)]
                       for e in g.edges},
        }

    @classmethod
    def from_dict(cls, data) -> "GraphOfGroups":
        try:
            verts = tuple(data["vertices"])
            origin = {d["id"]: d["origin"] for d in data["edges"]}
            bar = {d["id"]: d["bar"] for d in data["edges"]}
            graph = Graph(verts, origin, bar)
            problems = graph.violations()
            if problems:
                raise InputError("; ".join(problems))
            vgroups = {x: GroupTable.from_dict(data["vertex_groups"][str(x)]) for x in verts}
            egroups = {}
            for e in graph.edges:
                key = graph.edge_pair(e)
                if key not in egroups:
                    egroups[key] = GroupTable.from_dict(data["edge_groups"]["|".join(map(str, key))])
            alphas = {}
            for e in graph.edges:
                src = egroups[graph.edge_pair(e)]
                img = [int(v) for v in data["alphas"][str(e)]]
                if len(img) != src.order:
                    raise InputError(f"alpha for {e} has {len(img)} entries, edge group has {src.order}")
                alphas[e] = GroupHom(src, vgroups[origin[e]], dict(enumerate(img)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed graph-of-groups record: {exc!r}") from exc
        return cls(graph, vgroups, egroups, alphas)

    @classmethod
    def load(cls, path) -> "GraphOfGroups":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read {path}: {exc}") from exc
        return cls.from_dict(data)


@dataclass(frozen=True, eq=False)
class EdgeSubgroupFamily:
    edge: Mapping            # edge pair -> Subgroup of the edge group
    vertex: Mapping          # vertex -> Subgroup of the vertex group


def covolume(g: GraphOfGroups) -> Fraction:
    return sum((Fraction(1, g.vertex_groups[x].order) for x in g.graph.vertices), Fraction(0))


def edge_indexed(g: GraphOfGroups) -> EdgeIndexedGraph:
    index = {}
    for e in g.graph.edges:
        vo = g.vertex_groups[g.graph.origin[e]].order
        eo = g.edge_group(e).order
        if vo % eo:
            raise StructuralError(f"|G_o(e)| = {vo} is not divisible by |G_e| = {eo} at edge {e}", e)
        index[e] = vo // eo
    return EdgeIndexedGraph(g.graph, index)


def validate_gog(g: GraphOfGroups) -> list[str]:
    out = list(g.graph.violations())
    for e in g.graph.edges:
        a = g.alphas.get(e)
        if a is None:
            out.append(f"edge {e}: no alpha")
            continue
        want_src = g.edge_group(e)
        want_dst = g.vertex_groups.get(g.graph.origin[e])
        if a.source is not want_src:
            out.append(f"edge {e}: alpha does not start at the edge group")
        if a.target is not want_dst:
            out.append(f"edge {e}: alpha lands in the wrong vertex group")
            continue
        if not a.is_homomorphism():
            out.append(f"edge {e}: alpha is not a homomorphism")
        seen = {}
        for x, y in a.image.items():
            if y in seen:
                out.append(f"edge {e}: alpha is not injective, {seen[y]} and {x} both map to {y}")
                break
            seen[y] = x
    return out


def _preimage(alpha: GroupHom, sub: Subgroup) -> tuple[int, ...]:
    return tuple(sorted(x for x, y in alpha.image.items() if y in sub))


def family_violations(g: GraphOfGroups, fam: EdgeSubgroupFamily) -> list[str]:
    """Re-check a claimed witness against the defining conditions."""
    out = []
    for e in g.graph.edges:
        ne = fam.edge[g.graph.edge_pair(e)]
        img = sorted({g.alphas[e].image[x] for x in ne.elements})
        if tuple(img) != fam.vertex[g.graph.origin[e]].elements:
            out.append(f"alpha_{e}(N_e) differs from N at its origin")
    for x in g.graph.vertices:
        nx = fam.vertex[x]
        if nx.order == 1:
            out.append(f"N_{x} is trivial")
        if not (nx.is_valid() and is_normal(nx)):
            out.append(f"N_{x} is not a normal subgroup")
    return out


def is_faithful(g: GraphOfGroups, max_order: int = DEFAULT_MAX_ORDER
                ) -> tuple[bool, EdgeSubgroupFamily | None]:
    """Brute-force search for an edge subgroup family with nontrivial normal
    vertex images; faithful iff none exists."""
    graph = g.graph
    candidates = {}
    for x in graph.vertices:
        G = g.vertex_groups[x]
        if G.order > max_order:
            raise CapExceededError(f"vertex group at {x} has order {G.order} > {max_order}")
        inside = Subgroup(G, range(G.order), ())
        for e in graph.edges_at(x):
            inside = intersect(inside, g.alpha_image(e))
        candidates[x] = [s for s in subgroups_all(G, max_order, within=inside)
                         if s.order > 1 and is_normal(s)]
    verts = list(graph.vertices)
    for choice in product(*(candidates[x] for x in verts)):
        nx = dict(zip(verts, choice))
        ok = True
        edge_part = {}
        for e in graph.edges:
            a, b = g.alphas[e], g.alphas[graph.bar[e]]
            ne = _preimage(a, nx[graph.origin[e]])
            if tuple(sorted(b.image[i] for i in ne)) != nx[graph.terminus(e)].elements:
                ok = False
                break
            edge_part[graph.edge_pair(e)] = Subgroup(g.edge_group(e), ne, ne)
        if ok:
            return False, EdgeSubgroupFamily(edge_part, nx)
    return True, None


def is_faithful_loop(H: GroupTable, G1: Subgroup, G2: Subgroup, phi: GroupHom
                     ) -> tuple[bool, Subgroup | None]:
    """Faithful iff no nontrivial N <= G1, normal in H, with phi(N) = N.

    Such subgroups are closed under products, so it suffices to compute the
    largest one: start from the normal core of G1 and shrink by
    ``S -> core(S ∩ phi^-1(S) ∩ phi(S))`` until stable.
    """
    ph = phi.image
    S = normal_core(G1)
    while True:
        el = set(S.elements)
        fwd = {ph[x] for x in el}
        keep = [x for x in S.elements if ph[x] in el and x in fwd]
        T = normal_core(Subgroup(H, keep, ()))
        if T.elements == S.elements:
            break
        S = T
    if S.order == 1:
        return True, None
    return False, S


def loop_gog(H: GroupTable, G1: Subgroup, phi: GroupHom) -> GraphOfGroups:
    """Assemble the one-vertex loop with edge group G1, alpha_e = inclusion
    and alpha_ebar = phi."""
    graph = loop_graph()
    E, emb = G1.as_table()
    inc = GroupHom(E, H, emb)
    back = GroupHom(E, H, {i: phi.image[g] for i, g in emb.items()})
    return GraphOfGroups(graph, {"x": H}, {graph.edge_pair("e"): E}, {"e": inc, "ebar": back})

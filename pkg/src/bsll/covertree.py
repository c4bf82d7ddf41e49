"""Finite balls in the universal covering tree of an edge-indexed graph."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping

from .errors import CapExceededError, InputError
from .gog import EdgeIndexedGraph

DEFAULT_MAX_VERTICES = 10 ** 6


@dataclass(frozen=True)
class TreeBall:
    """Vertex 0 is the root.  ``via[v]`` is the base edge crossed from
    ``parent[v]`` to ``v`` (``None`` at the root)."""

    radius: int
    depth: tuple[int, ...]
    base_vertex: tuple
    parent: tuple[int, ...]
    via: tuple
    children: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.depth)

    def degree(self, v: int) -> int:
        return len(self.children[v]) + (v != 0)

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "vertices": [
                {"id": v, "depth": self.depth[v], "base_vertex": self.base_vertex[v],
                 "via": self.via[v], "children": list(self.children[v])}
                for v in range(len(self))
            ],
        }

    def to_text(self) -> str:
        lines = []
        stack = [0]
        while stack:
            v = stack.pop()
            head = f"{self.base_vertex[v]}" if v == 0 else f"-[{self.via[v]}]-> {self.base_vertex[v]}"
            lines.append("  " * self.depth[v] + f"{head} #{v}")
            stack.extend(reversed(self.children[v]))
        return "\n".join(lines)


def universal_ball(g: EdgeIndexedGraph, x0, r: int, max_vertices: int = DEFAULT_MAX_VERTICES) -> TreeBall:
    """Radius-r ball around a lift of ``x0``.

    Above a vertex over x there are i(e) tree edges along each base edge e at
    x; for a non-root vertex entered along e one of the i(ebar) edges above
    ebar is the edge back to its parent.
    """
    if r < 0:
        raise InputError("radius must be non-negative")
    if x0 not in g.graph.vertices:
        raise InputError(f"unknown base vertex {x0}")
    graph = g.graph
    depth, base, parent, via = [0], [x0], [-1], [None]
    children: list[list[int]] = [[]]
    frontier = [0]
    for d in range(1, r + 1):
        nxt = []
        for v in frontier:
            x = base[v]
            back = graph.bar[via[v]] if v else None
            for e in graph.edges_at(x):
                count = g.index[e] - (1 if e == back else 0)
                for _ in range(count):
                    if len(depth) >= max_vertices:
                        raise CapExceededError(f"ball would exceed {max_vertices} vertices")
                    w = len(depth)
                    depth.append(d)
                    base.append(graph.terminus(e))
                    parent.append(v)
                    via.append(e)
                    children.append([])
                    children[v].append(w)
                    nxt.append(w)
        frontier = nxt
    return TreeBall(r, tuple(depth), tuple(base), tuple(parent), tuple(via),
                    tuple(tuple(c) for c in children))


def degree_profile(b: TreeBall) -> dict[int, int]:
    """Histogram of degrees over vertices strictly inside the ball."""
    if b.radius < 1:
        raise InputError("degree profile needs radius at least 1")
    return dict(sorted(Counter(b.degree(v) for v in range(len(b)) if b.depth[v] < b.radius).items()))


def canonical_code(b: TreeBall) -> str:
    """AHU code of the ball as an unlabelled rooted tree."""
    codes: list[str] = [""] * len(b)
    for v in sorted(range(len(b)), key=lambda v: -b.depth[v]):
        codes[v] = "(" + "".join(sorted(codes[c] for c in b.children[v])) + ")"
    return codes[0]


@dataclass(frozen=True)
class EIGMorphism:
    """A graph map between edge-indexed graphs."""

    source: EdgeIndexedGraph
    target: EdgeIndexedGraph
    vertex_map: Mapping
    edge_map: Mapping


def check_eig_covering(f: EIGMorphism) -> bool:
    """Index sums over each fibre match the index downstairs."""
    X, Y = f.source.graph, f.target.graph
    for e in X.edges:
        fe = f.edge_map[e]
        if f.vertex_map[X.origin[e]] != Y.origin[fe] or f.edge_map[X.bar[e]] != Y.bar[fe]:
            return False
    for x in X.vertices:
        for e2 in Y.edges_at(f.vertex_map[x]):
            total = sum(f.source.index[e] for e in X.edges_at(x) if f.edge_map[e] == e2)
            if total != f.target.index[e2]:
                return False
    return True

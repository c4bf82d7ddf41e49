from __future__ import annotations

import json
from fractions import Fraction

import pytest

from bsll.covering import make_loop_base
from bsll.errors import InputError, StructuralError
from bsll.gog import (EdgeSubgroupFamily, Graph, GraphOfGroups, covolume, edge_indexed,
                      family_violations, is_faithful, is_faithful_loop, loop_gog, loop_graph,
                      validate_gog)
from bsll.groups import GroupHom, Subgroup, closure, cyclic_group, elementary_abelian
from bsll.pcgroups import MatrixA, build_group, enumerate_matrices, shift_data


def segment(A, B, E, a, b):
    g = Graph(("x", "y"), {"e": "x", "ebar": "y"}, {"e": "ebar", "ebar": "e"})
    return GraphOfGroups(g, {"x": A, "y": B}, {g.edge_pair("e"): E},
                         {"e": GroupHom(E, A, a), "ebar": GroupHom(E, B, b)})


def z4_loop():
    H = cyclic_group(4)
    G1 = closure(H, [2])
    return H, G1, G1, GroupHom(G1, G1, {0: 0, 2: 2})


def klein_loop():
    H = elementary_abelian(2, 2)
    G1, G2 = closure(H, [2]), closure(H, [1])
    return H, G1, G2, GroupHom(G1, G2, {0: 0, 2: 1})


def test_graph_basics():
    g = loop_graph()
    assert g.violations() == [] and g.is_connected()
    assert g.terminus("e") == "x"
    assert g.edges_at("x") == ["e", "ebar"]
    bad = Graph(("x",), {"e": "x", "f": "x"}, {"e": "e", "f": "f"})
    assert len(bad.violations()) == 2
    two = Graph(("x", "y"), {}, {})
    assert not two.is_connected()


def test_covolume_examples():
    assert covolume(make_loop_base(2)) == Fraction(1, 2)
    assert covolume(make_loop_base(5)) == Fraction(1, 5)
    H = build_group(MatrixA.zero(2, 2)).table
    sd = shift_data(build_group(MatrixA.zero(2, 2)))
    assert covolume(loop_gog(H, sd.G1, sd.shift)) == Fraction(1, 8)
    E = cyclic_group(1)
    seg = segment(cyclic_group(2), cyclic_group(3), E, {0: 0}, {0: 0})
    assert covolume(seg) == Fraction(5, 6)


def test_edge_indices():
    for p in (2, 3):
        assert dict(edge_indexed(make_loop_base(p)).index) == {"e": p, "ebar": p}
    G = elementary_abelian(2, 3)
    same = segment(G, G, G, {x: x for x in range(8)}, {x: x for x in range(8)})
    assert set(edge_indexed(same).index.values()) == {1}
    g = build_group(MatrixA.from_flat(2, 2, [1]))
    sd = shift_data(g)
    eig = edge_indexed(loop_gog(g.table, sd.G1, sd.shift))
    assert dict(eig.index) == {"e": 2, "ebar": 2}
    assert eig.degree("x") == 4


def test_edge_index_not_integral():
    E = cyclic_group(2)
    bad = GraphOfGroups(loop_graph(), {"x": cyclic_group(3)}, {("e", "ebar"): E},
                        {"e": GroupHom(E, cyclic_group(3), {0: 0, 1: 1}),
                         "ebar": GroupHom(E, cyclic_group(3), {0: 0, 1: 1})})
    with pytest.raises(StructuralError):
        edge_indexed(bad)


def test_validate_gog_fixtures():
    assert validate_gog(make_loop_base(3)) == []
    A, B = cyclic_group(2), cyclic_group(4)
    wrong = segment(A, B, A, {0: 0, 1: 1}, {0: 0, 1: 2})
    wrong = GraphOfGroups(wrong.graph, wrong.vertex_groups, wrong.edge_groups,
                          {"e": GroupHom(wrong.edge_groups[("e", "ebar")], B, {0: 0, 1: 2}),
                           "ebar": wrong.alphas["ebar"]})
    problems = validate_gog(wrong)
    assert len(problems) == 1 and "edge e" in problems[0]
    E = cyclic_group(2)
    V = elementary_abelian(2, 2)
    collapsing = GraphOfGroups(loop_graph(), {"x": V}, {("e", "ebar"): E},
                               {"e": GroupHom(E, V, {0: 0, 1: 0}), "ebar": GroupHom(E, V, {0: 0, 1: 1})})
    problems = validate_gog(collapsing)
    assert any("not injective" in p for p in problems)
    assert sum("not injective" in p for p in problems) == 1


def test_faithful_examples():
    ok, fam = is_faithful(make_loop_base(2))
    assert ok and fam is None
    H, G1, G2, phi = z4_loop()
    ok, fam = is_faithful(loop_gog(H, G1, phi))
    assert not ok
    assert fam.vertex["x"].elements == (0, 2)
    assert family_violations(loop_gog(H, G1, phi), fam) == []
    H, G1, G2, phi = klein_loop()
    assert is_faithful(loop_gog(H, G1, phi))[0]


def test_faithful_loop_examples():
    H = cyclic_group(4)
    triv = Subgroup(H, (0,), ())
    assert is_faithful_loop(H, triv, triv, GroupHom(triv, triv, {0: 0}))[0]
    ok, N = is_faithful_loop(*z4_loop())
    assert not ok and N.elements == (0, 2)
    assert is_faithful_loop(*klein_loop())[0]


def test_family_violations_flags_bad_witness():
    H, G1, G2, phi = klein_loop()
    g = loop_gog(H, G1, phi)
    E = g.edge_group("e")
    fam = EdgeSubgroupFamily({("e", "ebar"): Subgroup(E, (0, 1), (1,))},
                             {"x": Subgroup(H, (0, 2), (2,))})
    assert family_violations(g, fam) != []


def _loop_witness_family(H, G1, phi, N):
    g = loop_gog(H, G1, phi)
    E, emb = G1.as_table()
    local = tuple(sorted(i for i, x in emb.items() if x in N))
    return g, EdgeSubgroupFamily({("e", "ebar"): Subgroup(E, local, ())}, {"x": N})


@pytest.mark.parametrize("p,k", [(2, 1), (2, 2), (2, 3), (3, 2)])
def test_loop_specialisation_matches_general(p, k):
    for A in enumerate_matrices(p, k):
        g = build_group(A)
        if not g.consistent:
            continue
        sd = shift_data(g)
        fl, N = is_faithful_loop(g.table, sd.G1, sd.G2, sd.shift)
        gog = loop_gog(g.table, sd.G1, sd.shift)
        fg, fam = is_faithful(gog)
        assert fl == fg
        if not fl:
            assert family_violations(gog, fam) == []
            g2, fam2 = _loop_witness_family(g.table, sd.G1, sd.shift, N)
            assert family_violations(g2, fam2) == []


def test_loop_specialisation_on_unfaithful_instances():
    # shift-like data on (Z/2)^3 where phi fixes a normal subgroup
    H = elementary_abelian(2, 3)
    G1 = closure(H, [1, 2])
    G2 = closure(H, [1, 4])
    phi = GroupHom(G1, G2, {0: 0, 1: 1, 2: 4, 3: 5})
    fl, N = is_faithful_loop(H, G1, G2, phi)
    fg, fam = is_faithful(loop_gog(H, G1, phi))
    assert fl == fg is False
    assert N.elements == (0, 1)
    assert family_violations(loop_gog(H, G1, phi), fam) == []


def test_gog_json_roundtrip(tmp_path):
    H, G1, G2, phi = klein_loop()
    g = loop_gog(H, G1, phi)
    path = tmp_path / "g.json"
    path.write_text(json.dumps(g.to_dict()))
    back = GraphOfGroups.load(path)
    assert validate_gog(back) == []
    assert back.to_dict() == g.to_dict()
    assert is_faithful(back)[0]


def test_gog_malformed(tmp_path):
    with pytest.raises(InputError):
        GraphOfGroups.from_dict({"vertices": ["x"]})
    path = tmp_path / "bad.json"
    path.write_text("[")
    with pytest.raises(InputError):
        GraphOfGroups.load(path)

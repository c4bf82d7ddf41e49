from __future__ import annotations

import pytest

from bsll.cosets import CosetEnumeration, order_oracle, presentation
from bsll.errors import OracleInconclusiveError
from bsll.pcgroups import MatrixA, build_group, enumerate_matrices


def test_oracle_examples():
    assert order_oracle(MatrixA.zero(2, 2)) == 8
    assert order_oracle(MatrixA.from_flat(2, 2, [1])) == 8
    assert order_oracle(MatrixA.zero(3, 1)) == 9


def test_plain_presentations():
    # <a | a^5>, <a, b | a^2, b^2, (ab)^3>  (S3)
    assert CosetEnumeration(1, [[0] * 5], 20).run() == 5
    assert CosetEnumeration(2, [[0, 0], [2, 2], [0, 2] * 3], 30).run() == 6
    # <a, b | a^3, b^2, (ab)^2>  (S3 again), and the quaternion group of order 8
    assert CosetEnumeration(2, [[0] * 3, [2, 2], [0, 2, 0, 2]], 30).run() == 6
    assert CosetEnumeration(2, [[0] * 4, [0, 0, 3, 3], [2, 0, 3, 0]], 40).run() == 8


def test_inconclusive_when_limit_too_small():
    with pytest.raises(OracleInconclusiveError):
        CosetEnumeration(2, [[0] * 4, [2] * 4, [0, 2, 1, 3]], 8).run()


def test_presentation_shape():
    ngens, rels = presentation(MatrixA.from_flat(2, 3, [1, 0, 1]))
    assert ngens == 4
    assert len(rels) == 4 + 6


@pytest.mark.parametrize("p,k", [(2, 1), (2, 2), (2, 3), (3, 2)])
def test_agrees_with_build_group(p, k):
    for A in enumerate_matrices(p, k):
        assert build_group(A).consistent == (order_oracle(A) == p ** (k + 1))


def test_collapsed_orders_known():
    # the k=3 matrix with a11=1 and the rest zero collapses
    assert order_oracle(MatrixA.from_flat(2, 3, [1, 0, 0])) < 16


def _sympy_order(A):
    sympy = pytest.importorskip("sympy.combinatorics.fp_groups")
    from sympy.combinatorics.free_groups import free_group
    F, *g = free_group(" ".join(f"g{i}" for i in range(A.k + 1)))
    ngens, rels = presentation(A)
    words = []
    for r in rels:
        w = F.identity
        for letter in r:
            w = w * (g[letter // 2] if letter % 2 == 0 else g[letter // 2] ** -1)
        words.append(w)
    return sympy.FpGroup(F, words).order()


# two full-order and two collapsing presentations; sympy's own enumeration
# recurses too deeply on some others (e.g. [1, 1, 1])
@pytest.mark.parametrize("flat", [[0, 0, 0], [0, 1, 0], [1, 0, 0], [1, 0, 1]])
def test_matches_sympy(flat):
    A = MatrixA.from_flat(2, 3, flat)
    assert order_oracle(A, limit_factor=4) == _sympy_order(A)

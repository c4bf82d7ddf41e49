from __future__ import annotations

import json

import pytest

from bsll.counting import (ASSUMPTION, CountReport, FamilyConstructionError, bucket_keys,
                           cached_count, check_domain, classify, count_overlattices,
                           coverings_for, family_matrices, lower_bound_family, paper_lower,
                           paper_upper)
from bsll.covering import iso_necessary, iso_sufficient
from bsll.errors import CapExceededError, InputError
from bsll.pcgroups import MatrixA, build_group

from oracles import classes_brute, hand_count_k1

# (p, k) -> (covering_count, classes_necessary, classes_sufficient); frozen after
# cross-checking against unbucketed classification and, where the groups are
# small, against brute force over all automorphisms
FROZEN = {
    (2, 1): (1, 1, 1),
    (2, 2): (2, 2, 2),
    (2, 3): (4, 3, 3),
    (2, 4): (8, 6, 6),
    (3, 1): (4, 2, 2),
    (3, 2): (36, 8, 12),
    (3, 3): (324, 42, 90),
}


@pytest.fixture(scope="module")
def runs():
    return {pk: count_overlattices(*pk) for pk in FROZEN}


def test_bound_formulas():
    assert [paper_upper(2, k) for k in (2, 3, 4)] == [16, 128, 2048]
    assert [paper_lower(2, k) for k in (1, 2, 3, 4, 5)] == [1, 1, 1, 4, 32]
    assert paper_lower(3, 4) == 9


def test_domain_checks():
    with pytest.raises(InputError):
        check_domain(4, 2)
    with pytest.raises(InputError):
        check_domain(2, 0)
    with pytest.raises(CapExceededError):
        check_domain(2, 9)


def test_base_case_matches_hand_enumeration(runs):
    groups_used, raw, classes = hand_count_k1()
    assert (groups_used, raw, classes) == (1, 6, 1)
    rep = runs[(2, 1)][0]
    assert rep.classes_necessary == rep.classes_sufficient == classes


@pytest.mark.parametrize("pk", sorted(FROZEN))
def test_frozen_counts(runs, pk):
    rep = runs[pk][0]
    assert (rep.covering_count, rep.classes_necessary, rep.classes_sufficient) == FROZEN[pk]
    assert rep.invariant_violations() == []
    assert all(rep.bounds_ok.values())


@pytest.mark.parametrize("pk", [(2, 2), (3, 1)])
def test_counts_match_brute_force(runs, pk):
    rep, covs, _ = runs[pk]
    assert len({id(c.H) for c in covs}) == 1
    assert classes_brute(covs, conjugate=False) == rep.classes_sufficient
    assert classes_brute(covs, conjugate=True) == rep.classes_necessary


@pytest.mark.parametrize("pk", [(2, 3), (2, 4), (3, 2)])
def test_bucketing_does_not_change_partitions(runs, pk):
    _, covs, parts = runs[pk]
    assert classify(covs, iso_sufficient) == parts["sufficient"]
    assert classify(covs, iso_necessary) == parts["necessary"]


def test_bucket_keys_are_invariant(runs):
    # coverings in one class share a key
    _, covs, parts = runs[(3, 2)]
    by_group = {}
    for i, c in enumerate(covs):
        by_group.setdefault(id(c.H), []).append(i)
    ks, kn = [None] * len(covs), [None] * len(covs)
    for idx in by_group.values():
        s, n = bucket_keys([covs[i] for i in idx], 2)
        for i, a, b in zip(idx, s, n):
            ks[i], kn[i] = a, b
    for cls in parts["sufficient"]:
        assert len({ks[i] for i in cls}) == 1
    for cls in parts["necessary"]:
        assert len({kn[i] for i in cls}) == 1


def test_classify_basics():
    assert classify(list(range(5)), lambda a, b: True) == [[0, 1, 2, 3, 4]]
    assert classify(list(range(3)), lambda a, b: None) == [[0], [1], [2]]
    parity = lambda a, b: True if a % 2 == b % 2 else None
    assert classify(list(range(5)), parity) == [[0, 2, 4], [1, 3]]
    keys = ["a", "b", "a", "b", "a"]
    assert classify(list(range(5)), lambda a, b: True, keys) == [[0, 2, 4], [1, 3]]


def test_coverings_for_filters():
    covs, faithful, _ = coverings_for(build_group(MatrixA.zero(2, 1)))
    assert faithful and [c.u for c in covs] == [3]
    covs, faithful, _ = coverings_for(build_group(MatrixA.from_flat(2, 2, [1])))
    assert faithful and covs == []


def test_report_fields(runs):
    rep = runs[(2, 3)][0]
    d = rep.to_dict()
    assert d["n"] == 8 and d["matrices_total"] == 8 and d["consistent_count"] == 4
    assert d["paper_upper"] == 128 and d["paper_lower"] == 1
    assert d["assumptions"] == [ASSUMPTION]
    assert len(d["class_representatives"]["necessary"]) == 3
    assert all(r["group"]["ref"] in d["groups"] for r in d["class_representatives"]["sufficient"])
    assert all(k == k.lower() for k in d)
    assert CountReport.from_dict(json.loads(json.dumps(d))).deterministic_dict() == rep.deterministic_dict()


def test_determinism_and_jobs(runs):
    a = runs[(2, 3)][0].deterministic_dict()
    b = count_overlattices(2, 3)[0].deterministic_dict()
    c = count_overlattices(2, 3, jobs=2)[0].deterministic_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True) == json.dumps(c, sort_keys=True)


def test_cache_replay(tmp_path):
    cold, hit = cached_count(2, 2, cache=tmp_path)
    assert not hit
    warm, hit = cached_count(2, 2, cache=tmp_path)
    assert hit
    assert warm.deterministic_dict() == cold.deterministic_dict()
    assert not list(tmp_path.glob("*.tmp"))


def test_cache_env(tmp_path, monkeypatch):
    from bsll.counting import cache_dir
    monkeypatch.setenv("BSLL_CACHE", str(tmp_path))
    assert cache_dir() == tmp_path
    assert cache_dir(str(tmp_path / "x")) == tmp_path / "x"


def test_family_matrices_sizes():
    assert len(family_matrices(2, 3)) == 2
    assert len(family_matrices(2, 4)) == 8
    assert len(family_matrices(3, 4)) == 27
    assert all(not any(A.rows[-1]) for A in family_matrices(3, 4))


def test_family_needs_k3():
    with pytest.raises(InputError):
        lower_bound_family(2, 2)


def test_family_member_failure_is_hard():
    with pytest.raises(FamilyConstructionError) as info:
        lower_bound_family(2, 3)
    assert info.value.report["members"] == 2
    assert info.value.report["failures"]


def test_family_consistent_members():
    # only the zero matrix survives in each case checked here
    for p, k in ((2, 3), (2, 4), (3, 4)):
        rep = lower_bound_family(p, k, strict=False)
        assert rep["valid_members"] == 1
        assert len(rep["failures"]) == rep["members"] - 1
        assert all(f["reason"].startswith("inconsistent") for f in rep["failures"])


def test_family_k3_class_count():
    rep = lower_bound_family(2, 3, strict=False)
    assert rep["classes_necessary"] >= 1 == rep["claimed_lower"]


def test_family_k4_p2_class_count():
    rep = lower_bound_family(2, 4, strict=False)
    assert rep["classes_necessary"] >= 4


@pytest.mark.slow
def test_exhaustive_p3_k4_meets_lower_bound():
    # the explicit family collapses, but the full enumeration still clears p^(k(k-3)/2)
    rep, _, _ = count_overlattices(3, 4)
    assert rep.consistent_count == 27
    assert paper_lower(3, 4) <= rep.classes_necessary <= rep.classes_sufficient <= paper_upper(3, 4)
    assert all(rep.bounds_ok.values())

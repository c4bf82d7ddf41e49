"""Enumeration of loop coverings and the class-count bracket.

Pipeline per (p, k): every matrix A -> consistent G(A) -> shift data ->
faithful targets -> base-generator images u -> equivalence classes under
the two isomorphism predicates.  The class counts under the necessary and
the sufficient predicate bracket the true number of isomorphism classes.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from . import __version__
from .covering import (LoopCovering, iso_necessary, iso_sufficient, sheets, validate)
from .errors import CapExceededError, InputError, InternalConsistencyError, StructuralError
from .gog import is_faithful_loop
from .groups import DEFAULT_MAX_ORDER, conjugacy_class
from .pcgroups import GAGroup, MatrixA, build_group, enumerate_matrices, is_prime, shift_data

ASSUMPTION = ("completeness: every faithful target vertex group with its two index-p edge "
              "embeddings is taken to be isomorphic to some consistent G(A) carrying the "
              "embeddings to the exponent shift; no other groups of order p^(k+1) are enumerated")


def paper_upper(p: int, k: int) -> int:
    return p ** ((k * k + k + 2) // 2)


def paper_lower(p: int, k: int) -> int:
    return p ** (k * (k - 3) // 2) if k >= 3 else 1


def check_domain(p: int, k: int, max_order: int = DEFAULT_MAX_ORDER) -> None:
    if not is_prime(p):
        raise InputError(f"p = {p} is not prime")
    if k < 1:
        raise InputError(f"k = {k} must be at least 1")
    if p ** (k + 1) > max_order:
        raise CapExceededError(f"p^(k+1) = {p ** (k + 1)} exceeds the cap {max_order}")


def coverings_for(g: GAGroup) -> tuple[list[LoopCovering], bool, object]:
    """All valid coverings with target G(A) and the shift as edge data.

    Returns the coverings, the faithfulness verdict and, when unfaithful,
    the invariant subgroup found.
    """
    sd = shift_data(g)
    H = g.table
    faithful, witness = is_faithful_loop(H, sd.G1, sd.G2, sd.shift)
    if not faithful:
        return [], False, witness
    out = []
    for u in range(H.order):
        if H.element_orders[u] != g.p or u in sd.G1 or u in sd.G2:
            continue
        c = LoopCovering(g.p, H, sd.G1, sd.G2, sd.shift, u, g.matrix)
        problems = validate(c)
        if problems:
            raise StructuralError(f"candidate u={u} for {g.matrix.rows} failed validation: {problems}", u)
        sheets(c)
        out.append(c)
    return out, True, None


# ------------------------------------------------------------ bucketing keys

def _bases(H, G1, phi_arr, k: int, p: int) -> list[tuple[bytes, np.ndarray]]:
    """Every x whose shift orbit x, phi(x), ..., phi^k(x) is a normal-form
    basis of H with the first k spanning G1; returns (Cayley data, coords)."""
    n = H.order
    mul = H.mul
    out = []
    g1mask = G1.mask
    for x in range(n):
        chain = [x]
        ok = True
        for _ in range(k):
            y = int(phi_arr[chain[-1]])
            if y < 0:
                ok = False
                break
            chain.append(y)
        if not ok:
            continue
        E = np.zeros(1, dtype=np.int64)
        for g in chain:
            powers = [0]
            for _ in range(p - 1):
                powers.append(int(mul[powers[-1], g]))
            E = mul[E[:, None], np.array(powers)[None, :]].ravel()
        if len(np.unique(E)) != n:
            continue
        if not g1mask[E[::p]].all():       # exponent of the last basis element zero
            continue
        coords = np.empty(n, dtype=np.int64)
        coords[E] = np.arange(n)
        cayley = coords[mul[E[:, None], np.array(chain)[None, :]]]
        out.append((cayley.astype(np.int32).tobytes(), coords))
    return out


def bucket_keys(coverings: Sequence[LoopCovering], k: int) -> tuple[list[str], list[str]]:
    """Isomorphism-invariant keys (sufficient, necessary) for coverings that
    share one target structure.

    For each orientation of the loop, every admissible basis gives a Cayley
    table in basis coordinates; the key is the smallest such table together
    with the smallest coordinate of u (or of u's conjugacy class) over the
    bases attaining it.  Isomorphic coverings have equal keys; the converse
    is left to the predicates.
    """
    if not coverings:
        return [], []
    c0 = coverings[0]
    H = c0.H
    found = (_bases(H, c0.G1, c0.phi.array, k, c0.p)
             + _bases(H, c0.G2, c0.phi_inv.array, k, c0.p))
    if not found:
        return ["none"] * len(coverings), ["none"] * len(coverings)
    best = min(cb for cb, _ in found)
    tag = hashlib.sha256(best).hexdigest()[:16]
    coords = [co for cb, co in found if cb == best]
    suff, nec = [], []
    for c in coverings:
        conj = sorted(conjugacy_class(H, c.u))
        suff.append(f"{tag}:{min(int(co[c.u]) for co in coords)}")
        nec.append(f"{tag}:{min(int(co[conj].min()) for co in coords)}")
    return suff, nec


# ------------------------------------------------------------ classification

def classify(items: Sequence[LoopCovering], predicate: Callable, keys: Sequence[str] | None = None
             ) -> list[list[int]]:
    """Equivalence classes under ``predicate`` by union-find.

    Each item is compared with the representatives of the existing classes
    in its key bucket, stopping at the first match; items with different
    keys are never compared.  Classes are listed by smallest member.
    """
    ds = DisjointSet(range(len(items)))
    reps: dict[str, list[int]] = {}
    for i, c in enumerate(items):
        key = keys[i] if keys is not None else ""
        bucket = reps.setdefault(key, [])
        for r in bucket:
            if predicate(items[r], c) is not None:
                ds.merge(r, i)
                break
        else:
            bucket.append(i)
    return sorted((sorted(s) for s in ds.subsets()), key=lambda s: s[0])


# ------------------------------------------------------------ per-matrix scan

def _scan_matrix(args) -> dict:
    flat, p, k, max_order = args
    A = MatrixA.from_flat(p, k, flat)
    g = build_group(A, max_order=max_order)
    rec = {"matrix": list(flat), "consistent": g.consistent, "failure": g.failure,
           "faithful": None, "u": [], "keys_sufficient": [], "keys_necessary": []}
    if not g.consistent:
        return rec
    covs, faithful, _ = coverings_for(g)
    rec["faithful"] = faithful
    rec["u"] = [c.u for c in covs]
    rec["keys_sufficient"], rec["keys_necessary"] = bucket_keys(covs, k)
    return rec


def _map(fn, jobs: list, n_jobs: int) -> list:
    if n_jobs <= 1 or len(jobs) < 2:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * n_jobs))))


@dataclass
class CountReport:
    p: int
    k: int
    n: int
    matrices_total: int
    consistent_count: int
    faithful_count: int
    covering_count: int
    classes_sufficient: int
    classes_necessary: int
    paper_lower: int
    paper_upper: int
    bounds_ok: dict
    class_representatives: dict
    groups: dict
    assumptions: list
    tool_version: str
    input_hash: str
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def deterministic_dict(self) -> dict:
        d = self.to_dict()
        d.pop("timings")
        return d

    @classmethod
    def from_dict(cls, d) -> "CountReport":
        return cls(**d)

    def invariant_violations(self) -> list[str]:
        out = []
        if self.classes_necessary > self.classes_sufficient:
            out.append("classes_necessary > classes_sufficient")
        if self.covering_count < self.classes_sufficient:
            out.append("covering_count < classes_sufficient")
        if self.consistent_count > self.matrices_total:
            out.append("consistent_count > matrices_total")
        if self.covering_count > self.faithful_count * self.p ** (self.k + 1):
            out.append("covering_count exceeds faithful_count * p^(k+1)")
        return out


def input_hash(p: int, k: int, max_order: int) -> str:
    blob = json.dumps({"p": p, "k": k, "max_order": max_order, "version": __version__}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _group_ref(A: MatrixA) -> str:
    return "A" + "".join(map(str, A.flat)) if A.flat else "A"


def count_overlattices(p: int, k: int, jobs: int = 1, max_order: int = DEFAULT_MAX_ORDER,
                       bucket: bool = True) -> tuple[CountReport, list[LoopCovering], dict]:
    """Run the whole pipeline.

    Returns the report, the list of valid coverings in enumeration order and
    the class partitions ``{"sufficient": [...], "necessary": [...]}`` as
    lists of indices into that list.
    """
    check_domain(p, k, max_order)
    t0 = time.perf_counter()
    mats = list(enumerate_matrices(p, k))
    recs = _map(_scan_matrix, [(A.flat, p, k, max_order) for A in mats], jobs)
    t1 = time.perf_counter()

    coverings: list[LoopCovering] = []
    ks: list[str] = []
    kn: list[str] = []
    for A, rec in zip(mats, recs):
        if not rec["u"]:
            continue
        g = build_group(A, max_order=max_order)
        covs, _, _ = coverings_for(g)
        if [c.u for c in covs] != rec["u"]:
            raise InternalConsistencyError(f"worker and replay disagree on {A.rows}")
        coverings += covs
        ks += rec["keys_sufficient"]
        kn += rec["keys_necessary"]
    parts = {
        "sufficient": classify(coverings, iso_sufficient, ks if bucket else None),
        "necessary": classify(coverings, iso_necessary, kn if bucket else None),
    }
    t2 = time.perf_counter()

    cs, cn = len(parts["sufficient"]), len(parts["necessary"])
    lo, hi = paper_lower(p, k), paper_upper(p, k)
    refs: dict[str, dict] = {}

    def rep(i):
        c = coverings[i]
        ref = _group_ref(c.matrix)
        refs.setdefault(ref, c.H.to_dict())
        return c.to_dict(group_ref=ref)

    reps = {name: [rep(cls[0]) for cls in parts[name]] for name in ("sufficient", "necessary")}
    report = CountReport(
        p=p, k=k, n=p ** k,
        matrices_total=len(mats),
        consistent_count=sum(r["consistent"] for r in recs),
        faithful_count=sum(bool(r["faithful"]) for r in recs),
        covering_count=len(coverings),
        classes_sufficient=cs,
        classes_necessary=cn,
        paper_lower=lo,
        paper_upper=hi,
        bounds_ok={"lower": cn >= lo if k >= 3 else True, "upper": cs <= hi,
                   "bracket": cn <= cs <= len(coverings)},
        class_representatives=reps,
        groups=dict(sorted(refs.items())),
        assumptions=[ASSUMPTION],
        tool_version=__version__,
        input_hash=input_hash(p, k, max_order),
        timings={"enumerate_s": round(t1 - t0, 4), "classify_s": round(t2 - t1, 4),
                 "total_s": round(t2 - t0, 4)},
    )
    problems = report.invariant_violations()
    if problems:
        raise InternalConsistencyError("; ".join(problems))
    return report, coverings, parts


# ------------------------------------------------------------ cache

def cache_dir(explicit: str | None = None) -> Path | None:
    d = explicit or os.environ.get("BSLL_CACHE")
    return Path(d) if d else None


def cached_count(p: int, k: int, jobs: int = 1, max_order: int = DEFAULT_MAX_ORDER,
                 cache: str | Path | None = None) -> tuple[CountReport, bool]:
    """Count with an on-disk cache keyed by the input hash.

    Returns the report and whether it came from the cache.
    """
    check_domain(p, k, max_order)
    d = Path(cache) if cache else None
    path = d / f"count-{input_hash(p, k, max_order)}.json" if d else None
    if path is not None and path.exists():
        return CountReport.from_dict(json.loads(path.read_text())), True
    report, _, _ = count_overlattices(p, k, jobs=jobs, max_order=max_order)
    if path is not None:
        d.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".count-", suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            json.dump(report.to_dict(), fh)
        os.replace(tmp, path)
    return report, False


# ------------------------------------------------------------ explicit family

class FamilyConstructionError(StructuralError):
    """A member of the explicit lower-bound family is not a valid covering."""

    def __init__(self, message: str, report: dict):
        super().__init__(message, report["failures"])
        self.report = report


def family_matrices(p: int, k: int) -> list[MatrixA]:
    """Matrices whose last row vanishes, all other entries free."""
    if k < 3:
        return []
    free = (k - 2) * (k - 1) // 2
    return [MatrixA.from_flat(p, k, list(v) + [0] * (k - 1))
            for v in itertools.product(range(p), repeat=free)]


def lower_bound_family(p: int, k: int, max_order: int = DEFAULT_MAX_ORDER, strict: bool = True) -> dict:
    """Build the explicit family with u = g_0 g_k and count its classes under
    the necessary predicate.

    With ``strict`` a member that is not a valid faithful covering raises
    :class:`FamilyConstructionError` (the report is attached); otherwise the
    failures are listed and ``ok`` is false.
    """
    if k < 3:
        raise InputError("the family is defined for k >= 3")
    check_domain(p, k, max_order)
    members = family_matrices(p, k)
    failures, valid = [], []
    for A in members:
        g = build_group(A, max_order=max_order)
        if not g.consistent:
            failures.append({"matrix": A.to_dict(), "reason": f"inconsistent: {g.failure}"})
            continue
        sd = shift_data(g)
        u = g.element([1] + [0] * (k - 1) + [1])
        c = LoopCovering(p, g.table, sd.G1, sd.G2, sd.shift, u, A)
        problems = validate(c)
        if problems:
            failures.append({"matrix": A.to_dict(), "reason": "; ".join(problems)})
            continue
        sheets(c)
        valid.append(c)
    classes = classify(valid, iso_necessary) if valid else []
    claimed = p ** ((k - 2) * (k - 1) // 2) // p
    report = {
        "p": p, "k": k, "n": p ** k,
        "members": len(members),
        "valid_members": len(valid),
        "classes_necessary": len(classes),
        "claimed_lower": claimed,
        "bound_ok": len(classes) >= claimed,
        "ok": not failures,
        "failures": failures,
        "class_representatives": [valid[c[0]].to_dict() for c in classes],
    }
    if strict and failures:
        raise FamilyConstructionError(
            f"{len(failures)} of {len(members)} family members are not valid coverings", report)
    return report

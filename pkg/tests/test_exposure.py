from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from depgauge.errors import EmptyEffective
from depgauge.exposure import (
    GUARANTEED,
    NONE,
    POTENTIAL,
    Analyzer,
    analyze_tree,
    classify,
    classify_concrete,
    effective_constraints,
    read_findings,
    stream_analyze,
)
from depgauge.ingest import MemorySource, Snapshot
from depgauge.resolver import ecosystem_resolve, read_trees, resolve_tree
from depgauge.versions import (
    contains,
    parse_constraints,
    parse_version,
    to_interval_set,
    union,
)
from depgauge.vulndb import bundled_path, load_vuln_db, vuln_db_from_list

import ecosystem_oracle as oracle
from oracles import classify_by_enumeration, make_universe, membership_mask, members_of, random_constraints


def S(text):
    return to_interval_set(parse_constraints(text))


V43804 = union(S(">=2.0.0,<2.0.6"), S("<1.26.17"))
PROBES = [parse_version(x) for x in ("1.26.16", "1.26.17", "2.0.0", "2.0.1", "2.0.6")]


def enum_class(spec: str) -> str:
    s = members_of(lambda v: parse_constraints(spec).accepts(v), PROBES)
    v = members_of(lambda x: contains(V43804, x), PROBES)
    return classify_by_enumeration(s, v)


@pytest.mark.parametrize("spec,kind", [
    ("==2.0.1", GUARANTEED),
    (">=1.26.0", POTENTIAL),
    (">=2.0.6", NONE),
])
def test_cve_2023_43804_examples(spec, kind):
    assert classify(S(spec), V43804) == kind
    assert enum_class(spec) == kind


def test_classify_concrete_uses_published_releases():
    releases = [parse_version(x) for x in ("1.26.15", "1.26.16", "2.0.7")]
    # symbolically potential, but no published release of the range is safe
    assert classify(S("<1.26.17"), S("<1.26.16.post1")) == POTENTIAL
    assert classify_concrete(S("<1.26.17"), S("<1.26.16.post1"), releases) == GUARANTEED
    assert classify_concrete(S(">=3"), V43804, releases) == NONE


# properties -----------------------------------------------------------------

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_partition_law(seed):
    rng = random.Random(seed)
    literals, universe = make_universe(rng)
    s_cs, v_cs = random_constraints(rng, literals), random_constraints(rng, literals)
    s, v = to_interval_set(s_cs), to_interval_set(v_cs)
    if not s:
        return
    kind = classify(s, v)
    assert kind in (GUARANTEED, POTENTIAL, NONE)
    assert kind == classify_by_enumeration(membership_mask(s_cs, universe), membership_mask(v_cs, universe))


RANK = {NONE: 0, POTENTIAL: 1, GUARANTEED: 2}


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_monotone_in_v(seed):
    rng = random.Random(seed)
    literals, _ = make_universe(rng)
    s = to_interval_set(random_constraints(rng, literals))
    v = to_interval_set(random_constraints(rng, literals))
    bigger = v | to_interval_set(random_constraints(rng, literals))
    if s:
        assert RANK[classify(s, bigger)] >= RANK[classify(s, v)]


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_effective_consistency(seed):
    rng = random.Random(seed)
    literals, _ = make_universe(rng)
    v = to_interval_set(random_constraints(rng, literals))
    sets = [to_interval_set(random_constraints(rng, literals)) for _ in range(rng.randint(1, 4))]
    eff = sets[0]
    for s in sets[1:]:
        eff = eff & s
    if eff and all(s and classify(s, v) == GUARANTEED for s in sets):
        assert classify(eff, v) == GUARANTEED


# effective constraints ------------------------------------------------------

def tree_record(edges: dict[str, list[tuple[str, str]]], top="p") -> dict:
    """Build a serialized tree from {parent: [(child, specifier)]}."""

    def build(name, spec, seen):
        kids = [build(c, s, seen + (c,)) for c, s in edges.get(name, [])]
        return {"name": name, "version": "1", "specifier": spec, "status": "resolved", "deps": kids}

    return {"package": top, "tree": build(top, "", (top,))}


def test_effective_worked_example():
    rec = tree_record({"p": [("a", ""), ("b", "")], "a": [("d", ">=1.5")], "b": [("d", ">=1.7")]})
    assert effective_constraints(rec, "d") == S(">=1.7")
    assert str(effective_constraints(rec, "d")) == "[1.7, +inf)"


def test_effective_single_occurrence():
    rec = tree_record({"p": [("d", ">=1.0,!=1.2,<2.0")]})
    assert effective_constraints(rec, "D") == S(">=1.0,!=1.2,<2.0")


def test_effective_empty():
    rec = tree_record({"p": [("a", ""), ("d", "<1.0")], "a": [("d", ">2.0")]})
    with pytest.raises(EmptyEffective):
        effective_constraints(rec, "d")


def test_effective_absent():
    with pytest.raises(LookupError):
        effective_constraints(tree_record({"p": [("a", "")]}), "zzz")


# analyze_tree -----------------------------------------------------------------

DB = load_vuln_db(bundled_path())


def test_pin_2_0_1_gives_three_guaranteed():
    rec = tree_record({"p": [("urllib3", "==2.0.1")]})
    found = analyze_tree(rec, DB)
    assert sorted(f.cve_id for f in found) == ["CVE-2023-43804", "CVE-2023-45803", "CVE-2024-37891"]
    assert {f.kind for f in found} == {GUARANTEED}
    # the enumeration oracle agrees on all five records
    cves = oracle.load_cves(bundled_path())
    universe = oracle.universe_for(["2.0.1"], cves, ["==2.0.1"])
    kinds = {c["cve"]: oracle.classify(oracle.SpecifierSet("==2.0.1"), c["ranges"], universe) for c in cves}
    assert sorted(k for k, v in kinds.items() if v == GUARANTEED) == sorted(f.cve_id for f in found)
    assert sorted(k for k, v in kinds.items() if v == NONE) == ["CVE-2020-7212", "CVE-2021-28363"]


def test_no_vulnerable_names():
    assert analyze_tree(tree_record({"p": [("a", ">=1")], "a": [("b", "")]}), DB) == []


def test_direct_versus_effective_placement():
    edges = {
        "p": [("x", ""), ("urllib3", ">=1.26.0")],
        "x": [("y", "")], "y": [("z", "")], "z": [("urllib3", "<1.26.4")],
    }
    rec = tree_record(edges)
    direct = analyze_tree(rec, DB, "direct")
    assert {f.depth for f in direct if f.cve_id == "CVE-2021-28363"} == {1, 4}
    assert all(f.kind == POTENTIAL for f in direct if f.cve_id == "CVE-2021-28363")
    eff = analyze_tree(rec, DB, "effective")
    by_cve = {f.cve_id: f for f in eff}
    assert len(by_cve) == len(eff)
    f = by_cve["CVE-2021-28363"]
    assert f.depth == 1 and f.path == ("p", "urllib3") and f.kind == GUARANTEED
    assert f.s_rendered == "[1.26.0, 1.26.4.dev0)"


def test_markers_and_unresolvable_are_skipped():
    rec = tree_record({"p": [("urllib3", "==2.0.1")]})
    rec["tree"]["deps"].append({"name": "urllib3", "status": "circular"})
    rec["tree"]["deps"].append({"name": "urllib3", "version": None, "specifier": "==2.0.2",
                                "status": "unresolvable", "reason": "not-found", "deps": []})
    analysis = Analyzer(DB).analyze_tree(rec)
    assert len(analysis.findings) == 3 and analysis.visited == 1


def test_unsatisfiable_edge_becomes_warning():
    analysis = Analyzer(DB).analyze_tree(tree_record({"p": [("urllib3", "<1.0,>2.0")]}))
    assert not analysis.findings and len(analysis.warnings) == 1


def test_dfs_visits_every_resolved_node(ecosystem_path, tmp_path):
    out = tmp_path / "t.ndjson"
    with Snapshot(ecosystem_path) as snap:
        ecosystem_resolve(snap.names(), snap, out)
    analyzer = Analyzer(DB)
    for rec in read_trees(out):
        skipped = sum(1 for n in _walk(rec["tree"])
                      if n is not rec["tree"] and n.get("status") in ("circular", "unresolvable"))
        assert analyzer.analyze_tree(rec).visited == rec["stats"]["node_count"] - 1 - skipped


def _walk(node):
    yield node
    for c in node.get("deps") or ():
        yield from _walk(c)


# streaming ----------------------------------------------------------------------

@pytest.fixture
def dataset(ecosystem_path, tmp_path):
    out = tmp_path / "trees.ndjson"
    with Snapshot(ecosystem_path) as snap:
        ecosystem_resolve(snap.names(), snap, out)
    return out


@pytest.mark.parametrize("mode", ["direct", "effective"])
def test_streaming_equivalence(dataset, tmp_path, mode):
    out = tmp_path / "f.ndjson"
    counters = stream_analyze(dataset, DB, out, mode, echo_summary=False)
    header, findings, summary = read_findings(out)
    expected = [f for rec in read_trees(dataset) for f in analyze_tree(rec, DB, mode)]
    assert findings == expected
    assert header["mode"] == mode and summary == counters.to_dict()
    assert counters.findings_guaranteed == sum(f.kind == GUARANTEED for f in expected)


def test_parallel_stream_matches_serial(dataset, tmp_path):
    a, b = tmp_path / "a.ndjson", tmp_path / "b.ndjson"
    stream_analyze(dataset, DB, a, echo_summary=False)
    stream_analyze(dataset, DB, b, workers=2, db_path=bundled_path(), echo_summary=False)
    assert a.read_bytes() == b.read_bytes()


def test_empty_dataset(tmp_path):
    ds = tmp_path / "empty.ndjson"
    ds.write_text('{"schema":"depgauge.trees/1"}\n')
    counters = stream_analyze(ds, DB, tmp_path / "f.ndjson", echo_summary=False)
    assert all(v == 0 for v in counters.to_dict().values())


def test_corrupt_records_are_counted(dataset, tmp_path):
    lines = dataset.read_text().splitlines(keepends=True)
    lines.insert(3, '{"package": "torn", "tre\n')
    bad = tmp_path / "bad.ndjson"
    bad.write_text("".join(lines))
    counters = stream_analyze(bad, DB, tmp_path / "f.ndjson", echo_summary=False)
    assert counters.corrupt == 1 and counters.trees == len(lines) - 2


def test_fixture_counts_match_oracle(dataset, tmp_path, ecosystem_path):
    counters = stream_analyze(dataset, DB, tmp_path / "f.ndjson", echo_summary=False)
    packages = oracle.load_snapshot(ecosystem_path)
    cves = oracle.load_cves(bundled_path())
    trees = [oracle.resolve(packages, n) for n in packages]
    specs = [str(e[1]) for t in trees for e in t.edges if str(e[1])]
    universe = oracle.universe_for([r["version"] for r in packages["urllib3"]["releases"]], cves, specs)
    found = [f for t in trees for f in oracle.findings(t, cves, universe)]
    assert counters.findings_guaranteed == sum(f[3] == GUARANTEED for f in found)
    assert counters.findings_potential == sum(f[3] == POTENTIAL for f in found)
    assert counters.packages_guaranteed == len({f[0] for f in found if f[3] == GUARANTEED})
    assert counters.packages_potential == len({f[0] for f in found if f[3] == POTENTIAL})


def test_findings_file_fields(dataset, tmp_path):
    out = tmp_path / "f.ndjson"
    stream_analyze(dataset, DB, out, echo_summary=False)
    first = json.loads(out.read_text().splitlines()[1])
    assert set(first) == {"top_level", "dependency", "cve", "kind", "mode", "depth", "path", "S", "V"}


def test_mode_is_validated():
    with pytest.raises(ValueError):
        Analyzer(DB, "sideways")


def test_resolved_memory_tree_roundtrip():
    src = MemorySource([{"name": "p", "releases": [{"version": "1", "requires": ["urllib3==2.0.1"]}]},
                        {"name": "urllib3", "releases": [{"version": "2.0.1"}]}])
    rec = resolve_tree("p", src).to_record()
    assert len(analyze_tree(rec, DB)) == 3
    assert analyze_tree(rec, vuln_db_from_list([])) == []

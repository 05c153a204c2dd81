"""The eight acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed together in
the terminal summary (see conftest.py).
"""

from __future__ import annotations

import csv
import json
import random
import subprocess
import sys
import time
from collections import Counter
from pathlib import Path

from packaging.specifiers import SpecifierSet

from depgauge.cli import main as cli_main
from depgauge.exposure import (
    GUARANTEED,
    POTENTIAL,
    Analyzer,
    Counters,
    classify,
    effective_constraints,
    stream_analyze,
)
from depgauge.ingest import Snapshot
from depgauge.resolver import Shard, ecosystem_resolve, read_trees
from depgauge.versions import (
    compare_versions,
    contains,
    intersect,
    is_empty,
    is_subset,
    parse_constraints,
    parse_version,
    to_interval_set,
    union,
)
from depgauge.vulndb import bundled_path, load_vuln_db

import ecosystem_oracle as oracle
import streamgen
from oracles import classify_by_enumeration, make_universe, membership_mask, members_of, random_constraints

DATA = Path(__file__).parent / "data"
ECOSYSTEM = DATA / "ecosystem.ndjson"
DB_PATH = bundled_path()

RESULTS: dict[int, str] = {}


def record(n: int, title: str, ok: bool, detail: str) -> None:
    RESULTS[n] = f"criterion {n} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    print(RESULTS[n])


# 1 ---------------------------------------------------------------------------------

def test_criterion_1_algebra_matches_enumeration():
    rng = random.Random(1)
    start = time.perf_counter()
    pairs = mismatches = 0
    universes = 0
    while pairs < 10_000:
        literals, universe = make_universe(rng)
        universes += 1
        assert len(universe) <= 200
        pool = [random_constraints(rng, literals) for _ in range(300)]
        masks = [membership_mask(c, universe) for c in pool]
        sets = [to_interval_set(c) for c in pool]
        for _ in range(2_000):
            i, j = rng.randrange(len(pool)), rng.randrange(len(pool))
            a, b = sets[i], sets[j]
            c = intersect(a, b)
            got = members_of(lambda v: contains(c, v), universe)
            want = masks[i] & masks[j]
            ok = (
                got == want
                and is_empty(c) == (want == 0)
                and is_subset(a, b) == ((masks[i] & masks[j]) == masks[i])
                and is_empty(a) == (masks[i] == 0)
            )
            mismatches += not ok
            pairs += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 60
    record(1, "version algebra vs enumeration", ok,
           f"{pairs} pairs over {universes} universes, {mismatches} mismatches, {elapsed:.1f}s")
    assert ok


# 2 ---------------------------------------------------------------------------------

def test_criterion_2_pep440_corpus():
    corpus = json.loads((DATA / "pep440_corpus.json").read_text())
    versions, pairs = corpus["versions"], corpus["pairs"]
    bad = []
    for e in versions:
        try:
            v = parse_version(e["text"])
        except ValueError:
            if e["valid"]:
                bad.append(e["text"])
            continue
        if not e["valid"] or str(v) != e["normalized"] or list(v.release) != e["release"]:
            bad.append(e["text"])
    for p in pairs:
        got = compare_versions(parse_version(p["a"]), parse_version(p["b"]))
        if got != p["cmp"]:
            bad.append(f"{p['a']} vs {p['b']}")
    one = compare_versions(parse_version("1.0"), parse_version("1.0.0")) == 0 and \
        parse_version("1.0") == parse_version("1.0.0") and hash(parse_version("1.0")) == hash(parse_version("1.0.0"))
    ok = not bad and one and len(versions) >= 300 and len(pairs) >= 200
    record(2, "PEP 440 conformance corpus", ok,
           f"{len(versions)} versions, {len(pairs)} pairs, {len(bad)} mismatches, 1.0 == 1.0.0: {one}")
    assert ok, bad[:10]


# 3 ---------------------------------------------------------------------------------

def test_criterion_3_cve_2023_43804_classification():
    v = union(to_interval_set(parse_constraints(">=2.0.0,<2.0.6")), to_interval_set(parse_constraints("<1.26.17")))
    probes = [parse_version(x) for x in ("1.26.16", "1.26.17", "2.0.0", "2.0.1", "2.0.6")]
    ranges = [">=2.0.0,<2.0.6", "<1.26.17"]
    universe = oracle.universe_for([str(p) for p in probes], [{"ranges": ranges}],
                                   ["==2.0.1", ">=1.26.0", ">=2.0.6"])
    rows = []
    for spec, want in (("==2.0.1", "guaranteed"), (">=1.26.0", "potential"), (">=2.0.6", "none")):
        got = classify(to_interval_set(parse_constraints(spec)), v)
        small = classify_by_enumeration(
            members_of(lambda x: parse_constraints(spec).accepts(x), probes),
            members_of(lambda x: contains(v, x), probes))
        ref = oracle.classify(SpecifierSet(spec), ranges, universe)
        rows.append((spec, got, small, ref, want))
    ok = all(got == small == ref == want for _, got, small, ref, want in rows)
    record(3, "CVE-2023-43804 exposure classes", ok,
           ", ".join(f"{s} -> {g}" for s, g, *_ in rows))
    assert ok, rows


# 4 ---------------------------------------------------------------------------------

def test_criterion_4_effective_constraint():
    rec = {"package": "p", "tree": {"name": "p", "version": "1", "specifier": "", "status": "resolved", "deps": [
        {"name": "a", "version": "1", "specifier": "", "status": "resolved", "deps": [
            {"name": "d", "version": "2.0", "specifier": ">=1.5", "status": "resolved", "deps": []}]},
        {"name": "b", "version": "1", "specifier": "", "status": "resolved", "deps": [
            {"name": "d", "version": "2.0", "specifier": ">=1.7", "status": "resolved", "deps": []}]},
    ]}}
    eff = effective_constraints(rec, "d")
    want = to_interval_set(parse_constraints(">=1.7"))
    (iv,) = eff
    ok = (eff == want and iv.lo.key == parse_version("1.7").public_key and iv.lo_closed
          and iv.hi.key[0] == float("inf"))
    record(4, "effective constraint >=1.5 and >=1.7", ok, f"got {eff}")
    assert ok


# 5 ---------------------------------------------------------------------------------

def _resolve_fixture(out: Path) -> None:
    with Snapshot(ECOSYSTEM) as snap:
        ecosystem_resolve(snap.names(), snap, out)


def _oracle_fixture():
    packages = oracle.load_snapshot(ECOSYSTEM)
    cves = oracle.load_cves(DB_PATH)
    trees = {n: oracle.resolve(packages, n) for n in packages}
    specs = [str(e[1]) for t in trees.values() for e in t.edges if str(e[1])]
    universe = oracle.universe_for([r["version"] for r in packages["urllib3"]["releases"]], cves, specs)
    found = [f for t in trees.values() for f in oracle.findings(t, cves, universe)]
    return packages, trees, found


def test_criterion_5_fixture_end_to_end(tmp_path):
    start = time.perf_counter()
    runs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        out.mkdir()
        _resolve_fixture(out / "trees.ndjson")
        counters = stream_analyze(out / "trees.ndjson", load_vuln_db(DB_PATH), out / "findings.ndjson",
                                  echo_summary=False)
        runs.append(((out / "trees.ndjson").read_bytes(), (out / "findings.ndjson").read_bytes(), counters))
    elapsed = time.perf_counter() - start
    identical = runs[0][:2] == runs[1][:2]

    packages, trees, found = _oracle_fixture()
    records = {r["package"]: r for r in read_trees(tmp_path / "run0" / "trees.ndjson")}
    tree_diffs = []
    for name, ref in trees.items():
        r = records.get(name)
        got = r and (r["stats"]["node_count"], r["stats"]["max_depth"],
                     [(tuple(c["path"]), c["depth"]) for c in r["cycles"]])
        if got != (ref.nodes, ref.max_depth, ref.cycles):
            tree_diffs.append(name)
    counters = runs[0][2]
    want_g = sum(f[3] == GUARANTEED for f in found)
    want_p = sum(f[3] == POTENTIAL for f in found)
    counts_ok = (counters.findings_guaranteed, counters.findings_potential,
                 counters.packages_guaranteed) == (want_g, want_p, len({f[0] for f in found if f[3] == GUARANTEED}))
    cycles = sum(len(t.cycles) for t in trees.values())
    unresolvable = sum(sum(t.unresolvable.values()) for t in trees.values())
    ok = identical and not tree_diffs and counts_ok and elapsed < 60 and len(packages) >= 30
    record(5, "fixture ecosystem end to end", ok,
           f"{len(packages)} packages, {cycles} cycle markers, {unresolvable} unresolvable nodes, "
           f"{counters.findings_guaranteed}/{want_g} guaranteed, {counters.findings_potential}/{want_p} potential, "
           f"tree mismatches {len(tree_diffs)}, byte-identical {identical}, {elapsed:.1f}s")
    assert ok, tree_diffs


# 6 ---------------------------------------------------------------------------------

MEASURE = """
import json, resource, sys, time
from depgauge.exposure import stream_analyze
from depgauge.vulndb import load_vuln_db
t = time.perf_counter()
c = stream_analyze(sys.argv[1], load_vuln_db(sys.argv[2]), sys.argv[3], echo_summary=False)
print(json.dumps({"counters": c.to_dict(), "rss_kb": resource.getrusage(resource.RUSAGE_SELF).ru_maxrss,
                  "seconds": time.perf_counter() - t}))
"""

BOUND_SLACK_KB = 16 * 1024


def _measure(dataset: Path, out: Path) -> dict:
    proc = subprocess.run([sys.executable, "-c", MEASURE, str(dataset), str(DB_PATH), str(out)],
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def _expected_counters(used: Counter) -> dict:
    db = load_vuln_db(DB_PATH)
    analyzer = Analyzer(db)
    cves = oracle.load_cves(DB_PATH)
    total = Counters()
    oracle_ok = True
    for k, template in enumerate(streamgen.templates()):
        one = Counters()
        analysis = analyzer.analyze_tree(streamgen.instantiate(template, "t"))
        one.add(analysis)
        # independent check of the template's findings by enumeration
        edges = [n for n, d in oracle_iter(template["tree"]) if d and n["name"] == "urllib3"
                 and n.get("status") == "resolved"]
        universe = oracle.universe_for(["2.0.1"], cves, [e["specifier"] for e in edges if e["specifier"]])
        kinds = Counter(oracle.classify(SpecifierSet(e["specifier"]), c["ranges"], universe)
                        for e in edges for c in cves)
        oracle_ok &= (kinds[GUARANTEED], kinds[POTENTIAL]) == (one.findings_guaranteed, one.findings_potential)
        for key, value in one.to_dict().items():
            setattr(total, key, getattr(total, key) + value * used[k])
    return {"counters": total.to_dict(), "oracle_ok": oracle_ok}


def oracle_iter(node, depth=0):
    yield node, depth
    for c in node.get("deps") or ():
        yield from oracle_iter(c, depth + 1)


def test_criterion_6_streaming_bound(tmp_path):
    start = time.perf_counter()
    small, big = tmp_path / "small.ndjson", tmp_path / "big.ndjson"
    streamgen.generate(small, 500)
    used = streamgen.generate(big, 100_000)
    size_gb = big.stat().st_size / 1e9
    base = _measure(small, tmp_path / "f_small.ndjson")
    run = _measure(big, tmp_path / "f_big.ndjson")
    (tmp_path / "f_big.ndjson").unlink()
    big.unlink()
    expected = _expected_counters(used)
    bound = base["rss_kb"] + BOUND_SLACK_KB
    elapsed = time.perf_counter() - start
    counters_ok = run["counters"] == expected["counters"]
    ok = run["rss_kb"] < bound and counters_ok and expected["oracle_ok"] and elapsed < 1800 and size_gb > 0.9
    record(6, "streaming analysis with bounded memory", ok,
           f"{run['counters']['trees']} records, {size_gb:.2f} GB, peak {run['rss_kb'] / 1024:.1f} MB "
           f"vs bound {bound / 1024:.1f} MB (500-record run {base['rss_kb'] / 1024:.1f} MB + 16 MB), "
           f"counters equal {counters_ok}, template oracle {expected['oracle_ok']}, {elapsed:.0f}s")
    assert ok, (run, expected)


# 7 ---------------------------------------------------------------------------------

def test_criterion_7_table_shape(tmp_path, capsys):
    out = tmp_path / "out"
    codes = [
        cli_main(["resolve", "--snapshot", str(ECOSYSTEM), "--out", str(out)], environ={}),
        cli_main(["analyze", "--dataset", str(out / "trees.ndjson"), "--out", str(out)], environ={}),
        cli_main(["report", "--dataset", str(out / "trees.ndjson"), "--out", str(out)], environ={}),
    ]
    rows = list(csv.reader((out / "cve_summary.csv").open()))
    header, body = rows[0], rows[1:]

    _, _, found = _oracle_fixture()
    severity = {"CVE-2020-7212": "High", "CVE-2021-28363": "Medium", "CVE-2023-43804": "High",
                "CVE-2023-45803": "Medium", "CVE-2024-37891": "Medium"}
    want = []
    for cve in sorted(severity):
        mine = [f for f in found if f[2] == cve]
        required = {f[0] for f in mine if f[3] == GUARANTEED}
        potential = {f[0] for f in mine if f[3] == POTENTIAL} - required
        avg = sum(f[4] for f in mine) / len(mine) if mine else 0.0
        want.append([cve, f"{avg:.2f}", str(len(potential)), str(len(required)), severity[cve]])
    ok = codes == [0, 0, 0] and header == ["CVE", "Avg Depth", "Potential Pkgs", "Required Pkgs", "Severity"] \
        and body == want
    record(7, "per-CVE table shape and counts", ok,
           "; ".join(f"{r[0]} {r[4]} req={r[3]} pot={r[2]} depth={r[1]}" for r in body))
    assert ok, (body, want)


# 8 ---------------------------------------------------------------------------------

CRASH = """
import os, signal, sys
from depgauge.ingest import Snapshot
from depgauge.resolver import Shard, ecosystem_resolve
snap_path, out, kill_at, torn, shard = sys.argv[1], sys.argv[2], int(sys.argv[3]), sys.argv[4] == "1", sys.argv[5]

def on_record(name, n):
    if n == kill_at:
        if torn:
            with open(out, "a") as fh:
                fh.write('{"package":"half-writ')
        os.kill(os.getpid(), signal.SIGKILL)

with Snapshot(snap_path) as snap:
    ecosystem_resolve(snap.names(), snap, out, shard=Shard.parse(shard), on_record=on_record)
"""


def _lines(path: Path) -> list[str]:
    return path.read_text().splitlines()[1:]


def test_criterion_8_crash_resume(tmp_path):
    scenarios = [("0/1", 13, False), ("0/1", 7, True), ("1/2", 5, True)]
    outcomes = []
    for shard, kill_at, torn in scenarios:
        ref = tmp_path / f"ref-{shard.replace('/', 'of')}.ndjson"
        with Snapshot(ECOSYSTEM) as snap:
            ecosystem_resolve(snap.names(), snap, ref, shard=Shard.parse(shard))
        out = tmp_path / f"crash-{shard.replace('/', 'of')}-{kill_at}.ndjson"
        proc = subprocess.run([sys.executable, "-c", CRASH, str(ECOSYSTEM), str(out), str(kill_at),
                               "1" if torn else "0", shard], capture_output=True)
        killed = proc.returncode == -9
        partial = len(_lines(out))
        with Snapshot(ECOSYSTEM) as snap:
            ecosystem_resolve(snap.names(), snap, out, shard=Shard.parse(shard))
        got, want = _lines(out), _lines(ref)
        packages = [json.loads(line)["package"] for line in got]
        outcomes.append({
            "killed": killed, "partial": partial, "n": len(got),
            "no_dupes": len(packages) == len(set(packages)),
            "equal": set(got) == set(want) and len(got) == len(want),
        })
    ok = all(o["killed"] and o["no_dupes"] and o["equal"] for o in outcomes)
    record(8, "crash and resume", ok, "; ".join(
        f"shard {s} killed after {k}{' with torn line' if t else ''}: {o['n']} trees, "
        f"no duplicates {o['no_dupes']}, set-equal {o['equal']}"
        for (s, k, t), o in zip(scenarios, outcomes)))
    assert ok, outcomes

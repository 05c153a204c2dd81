#!/usr/bin/env python3
"""Regenerate tests/data/pep440_corpus.json from the `packaging` reference.

Run once; the output is committed so the test suite does not need the
reference implementation installed.
"""

from __future__ import annotations

import itertools
import json
import random
from pathlib import Path

from packaging.version import InvalidVersion, Version

OUT = Path(__file__).resolve().parent.parent / "tests" / "data" / "pep440_corpus.json"

HANDWRITTEN = [
    "1.0", "1.0.0", "1.0.0.0", "1", "0", "00", "01.02", "v1.0", "V2", " 1.2.3 ", "1.0\n",
    "1!1.0", "2!0.1", "1.0a1", "1.0alpha1", "1.0ALPHA1", "1.0.a.1", "1.0-a-1", "1.0_a_1",
    "1.0b2", "1.0beta2", "1.0c1", "1.0pre1", "1.0preview1", "1.0rc1", "1.0RC1", "1.0a",
    "1.0.post1", "1.0post1", "1.0-post1", "1.0-1", "1.0.rev1", "1.0r1", "1.0.post",
    "1.0.dev1", "1.0dev1", "1.0-dev1", "1.0.dev", "1.0a1.dev1", "1.0rc1.post2.dev3",
    "1.0.post1.dev1", "1.0+local", "1.0+ubuntu.1", "1.0+Ubuntu-1", "1.0+abc_7.8",
    "1.0+1", "1.0+01", "1.0+1.a", "1.0+a.1", "1.26.17", "2.0.6", "2.0.0", "2.0.1",
    "1.26.0", "1.7", "1.5", "2024.01.15", "0.0.1", "79.0", "0.6",
    # invalid
    "", "   ", "foo", "1.0-", "1.0.", ".1", "1..0", "1.0+", "1.0+-", "1.0a1a2", "a1",
    "1.0-beta-x", "1.0~rc1", "1.0 rc1", "1.0.post1.post2", "1.0+local+local", "1!",
    "!1.0", "1.0dev1a", "latest", "1.0.x", "1.0_", "v", "vv1.0", "1.0.0-SNAPSHOT",
]

PRE = ["", "a0", "a1", "b1", "rc1", "rc2", ".dev0", ".dev3", "a1.dev2", "rc1.post1"]
POST = ["", ".post0", ".post1", ".post2.dev1"]
LOCAL = ["", "+loc", "+1", "+1.abc"]


def _generated(rng: random.Random) -> list[str]:
    out = []
    for _ in range(400):
        nseg = rng.choice([1, 2, 2, 3, 3, 4])
        release = ".".join(str(rng.choice([0, 0, 1, 2, 3, 10])) for _ in range(nseg))
        epoch = rng.choice(["", "", "", "", "1!"])
        text = epoch + release + rng.choice(PRE)
        if "post" not in text:
            text += rng.choice(POST)
        if rng.random() < 0.15:
            text += rng.choice(LOCAL)
        out.append(text)
    return out


def _describe(text: str) -> dict:
    try:
        v = Version(text)
    except InvalidVersion:
        return {"text": text, "valid": False}
    return {
        "text": text,
        "valid": True,
        "normalized": str(v),
        "epoch": v.epoch,
        "release": list(v.release),
        "pre": list(v.pre) if v.pre else None,
        "post": v.post,
        "dev": v.dev,
        "local": v.local,
        "is_prerelease": v.is_prerelease,
        "is_postrelease": v.is_postrelease,
    }


def main() -> None:
    rng = random.Random(440)
    strings = list(dict.fromkeys(HANDWRITTEN + _generated(rng)))
    versions = [_describe(s) for s in strings]
    valid = [d["text"] for d in versions if d["valid"]]

    pairs = [("1.0", "1.0.0"), ("1.26.17", "2.0.6"), ("1.0.dev1", "1.0a1"),
             ("1.0a1", "1.0rc1"), ("1.0rc1", "1.0"), ("1.0", "1.0.post1"),
             ("1.0.post1", "1.1"), ("1.0+abc", "1.0"), ("1.0+1", "1.0+abc"),
             ("1!0.1", "2.0"), ("1.0a1.dev1", "1.0a1"), ("1.0.post1.dev1", "1.0.post1")]
    for a, b in itertools.islice(zip(rng.sample(valid, len(valid)), rng.sample(valid, len(valid))), 400):
        pairs.append((a, b))
    ordered = []
    for a, b in pairs:
        va, vb = Version(a), Version(b)
        ordered.append({"a": a, "b": b, "cmp": (va > vb) - (va < vb)})

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"versions": versions, "pairs": ordered}, indent=1) + "\n")
    print(f"{len(versions)} versions ({len(valid)} valid), {len(ordered)} pairs -> {OUT}")


if __name__ == "__main__":
    main()

"""Write the committed fixture snapshot used by the end-to-end tests.

The ecosystem is small and hand-built: about thirty packages around a
urllib3 analog with the real urllib3 release numbers near its advisories.
It contains a five-package cycle, a missing dependency, an error record,
a marker-excluded edge, a requires_python dead end, a malformed requirement
line, a yanked release, a diamond and a chain whose vulnerable pin sits at
depth five.

Run from the repository root::

    python3 scripts/make_fixture_ecosystem.py
"""

from __future__ import annotations

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from depgauge.ingest import snapshot_write  # noqa: E402

URLLIB3 = [
    "1.24.3", "1.25.1", "1.25.2", "1.25.7", "1.25.8", "1.25.11", "1.26.0", "1.26.3",
    "1.26.4", "1.26.16", "1.26.17", "1.26.18", "1.26.19", "2.0.0", "2.0.1", "2.0.5",
    "2.0.6", "2.0.7", "2.2.1", "2.2.2", "2.2.3",
]


def rel(version, *requires, yanked=False, requires_python=None):
    out = {"version": version, "yanked": yanked, "requires": list(requires)}
    if requires_python is not None:
        out["requires_python"] = requires_python
    return out


def pkg(name, *releases, error=None):
    out = {"name": name, "releases": list(releases)}
    if error is not None:
        out["error"] = error
    return out


def ecosystem() -> list[dict]:
    return [
        pkg("urllib3", *[rel(v) for v in URLLIB3[:-1]], rel(URLLIB3[-1], yanked=True)),
        pkg("PySocks", rel("1.7.1")),
        pkg("fetchlib",
            rel("2.30.0", "urllib3 (>=1.21.1,<3)", "charset-normalizer>=2,<4",
                'PySocks!=1.5.7,>=1.5.6; extra == "socks"'),
            rel("2.31.0", "urllib3<3,>=1.21.1", "charset-normalizer<4,>=2",
                'PySocks!=1.5.7,>=1.5.6; extra == "socks"')),
        pkg("charset-normalizer", rel("3.3.0"), rel("3.3.2", requires_python=">=3.7")),
        pkg("pinned-client", rel("0.9", "urllib3==2.0.1")),
        pkg("legacy_http", rel("1.0", "urllib3>=1.25.2,<=1.25.7")),
        pkg("modern-http", rel("3.0", "urllib3>=2.2.2")),
        pkg("webkit", rel("5.0", "fetchlib>=2.0", "pinned-client", "Modern.HTTP~=3.0")),
        pkg("cli-tool", rel("1.2", "legacy-http", "fetchlib[socks]>=2.30")),
        # chain: the vulnerable pin sits at depth five under app-a
        pkg("app-a", rel("1.0", "mid-b>=1")),
        pkg("mid-b", rel("1.0", "mid-c")),
        pkg("mid-c", rel("1.0", "mid-d")),
        pkg("mid-d", rel("1.0", "leaf-http")),
        pkg("leaf-http", rel("1.0", "urllib3==1.26.3")),
        # five-package cycle
        pkg("cyc-a", rel("1.0", "cyc-b")),
        pkg("cyc-b", rel("1.0", "cyc-c")),
        pkg("cyc-c", rel("1.0", "cyc-d")),
        pkg("cyc-d", rel("1.0", "cyc-e")),
        pkg("cyc-e", rel("1.0", "cyc-a", "urllib3<2")),
        # unresolvable names
        pkg("needs-ghost", rel("0.1", "ghost-pkg>=1", "urllib3>=2.0.0,<2.0.6")),
        pkg("broken", error="network"),
        pkg("uses-broken", rel("1.0", "broken", "plain-lib")),
        # environment handling
        pkg("winonly-user",
            rel("1.0", 'pywin-helper>=300; sys_platform == "win32"',
                'urllib3<2; python_version < "3.8"', "urllib3>=1.26.0")),
        pkg("pywin-helper", rel("306")),
        pkg("oldtool", rel("0.5", "py2only")),
        pkg("py2only", rel("1.0", requires_python="<3"), rel("1.1", requires_python="<3")),
        # diamond
        pkg("diamond-top", rel("1.0", "left", "right")),
        pkg("left", rel("1.0", "shared-base>=1.0")),
        pkg("right", rel("1.0", "shared-base<2")),
        pkg("shared-base", rel("1.0"), rel("1.5"), rel("2.0")),
        # direct versus effective constraints on one dependency
        pkg("eff-top", rel("1.0", "urllib3>=1.26.0", "eff-mid")),
        pkg("eff-mid", rel("1.0", "urllib3<1.26.4")),
        # a requirement line that does not parse
        pkg("malformed-meta", rel("1.0", "urllib3 >>= 2", "plain-lib")),
        pkg("plain-lib", rel("0.1"), rel("0.2")),
    ]


def main() -> None:
    out = ROOT / "tests" / "data" / "ecosystem.ndjson"
    out.parent.mkdir(parents=True, exist_ok=True)
    if out.exists():
        out.unlink()
    n = snapshot_write(out, ecosystem(), source="fixture", created_at="2024-01-01T00:00:00+00:00")
    print(f"wrote {n} records to {out}")


if __name__ == "__main__":
    main()

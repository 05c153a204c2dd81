"""Command-line entry point: ``depgauge fetch|resolve|analyze|report``.

Every option can also be supplied through an environment variable named
``DEPGAUGE_<OPTION>`` (for example ``DEPGAUGE_VULN_DB``); explicit flags win.

Exit codes: 0 success, 1 usage error, 2 input error, 3 partial failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .errors import (
    DepgaugeError,
    IndexFormatError,
    MissingInput,
    NetworkError,
    SchemaError,
    SchemaMismatch,
)
from .exposure import MODES, Analyzer, stream_analyze
from .ingest import DEFAULT_ENVIRONMENT, IndexClient, PackageMetadata, Snapshot, SnapshotWriter
from .resolver import Limits, ResolveOptions, Shard, ecosystem_resolve, read_trees
from .report import write_report
from .vulndb import bundled_path, load_vuln_db

log = logging.getLogger("depgauge")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_PARTIAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    stage: str
    index_url: Optional[str] = None
    snapshot: Optional[str] = None
    dataset: Optional[str] = None
    findings: Optional[str] = None
    vuln_db: Optional[str] = None
    env: dict = field(default_factory=dict)
    limits: dict = field(default_factory=dict)
    workers: int = 1
    shard: str = "0/1"
    mode: str = "direct"
    lenient: bool = False
    with_extras: list = field(default_factory=list)
    exclude_prereleases: bool = False
    out: str = "."
    packages: Optional[list] = None
    version: str = __version__
    started_at: str = ""
    finished_at: str = ""
    exit_code: Optional[int] = None

    def write(self, out_dir: Path) -> Path:
        path = out_dir / f"{self.stage}.config.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path


def _now() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


def _env_pairs(values: Sequence[str]) -> dict[str, str]:
    env = dict(DEFAULT_ENVIRONMENT)
    for item in values or ():
        if "=" not in item:
            raise UsageError(f"--env expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        env[k.strip()] = v.strip()
    return env


def _split(text: Optional[str]) -> list[str]:
    if not text:
        return []
    return [x.strip() for x in text.replace(",", " ").split() if x.strip()]


def _read_package_list(value: Optional[str]) -> Optional[list[str]]:
    """``--packages`` accepts a comma list or ``@file`` with one name per line."""
    if not value:
        return None
    if value.startswith("@"):
        path = Path(value[1:])
        if not path.exists():
            raise MissingInput(str(path))
        return [ln.strip() for ln in path.read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    return _split(value)


# commands ---------------------------------------------------------------------------

def cmd_fetch(args, cfg: RunConfig) -> int:
    if not args.index_url:
        raise UsageError("fetch needs --index-url")
    out = Path(args.out)
    snapshot = Path(args.snapshot) if args.snapshot else out / "snapshot.ndjson"
    cfg.snapshot = str(snapshot)
    client = IndexClient(args.index_url, retries=args.retries, backoff=args.backoff,
                         timeout=args.http_timeout, rate=args.rate)
    names = _read_package_list(args.packages) or client.fetch_package_list()
    failures = 0
    with SnapshotWriter(snapshot, source=args.index_url) as writer:
        todo = [n for n in names if n not in writer.seen]
        print(f"fetch: {len(names)} packages listed, {len(names) - len(todo)} already in snapshot",
              file=sys.stderr)
        for i, (name, result) in enumerate(client.fetch_many(todo, workers=args.workers), 1):
            if isinstance(result, PackageMetadata):
                writer.write(result)
            else:
                failures += 1
                reason = "not-found" if result.__class__.__name__ == "NotFound" else "network"
                log.warning("fetch %s failed: %s", name, result)
                writer.write({"name": name, "error": reason, "releases": []})
            if i % args.progress_every == 0:
                print(f"fetch: {i}/{len(todo)} done, {failures} failed", file=sys.stderr)
    print(f"fetch: wrote {snapshot} ({failures} failures)", file=sys.stderr)
    return EXIT_OK


def _resolve_options(args) -> ResolveOptions:
    return ResolveOptions(
        environment=_env_pairs(args.env),
        limits=Limits(max_depth=args.max_depth, timeout=args.timeout, max_nodes=args.max_nodes),
        with_extras=frozenset(_split(args.with_extras)),
        lenient=args.lenient,
        exclude_prereleases=args.exclude_prereleases,
    )


def cmd_resolve(args, cfg: RunConfig) -> int:
    if not args.snapshot:
        raise UsageError("resolve needs --snapshot")
    if not Path(args.snapshot).exists():
        raise MissingInput(args.snapshot)
    shard = Shard.parse(args.shard)
    out = Path(args.out)
    with Snapshot(args.snapshot) as snap:
        names = _read_package_list(args.packages) or snap.names()
        suffix = "" if shard.count == 1 else f".{shard.index}of{shard.count}"
        dataset = Path(args.dataset) if args.dataset else out / f"trees{suffix}.ndjson"
        cfg.dataset = str(dataset)
        counters = ecosystem_resolve(names, snap, dataset, _resolve_options(args), shard,
                                     workers=args.workers)
    print(f"resolve: {json.dumps(counters, sort_keys=True)}", file=sys.stderr)
    complete = counters["statuses"].get("complete", 0)
    return EXIT_OK if complete == counters["resolved"] else EXIT_PARTIAL


def _vuln_db_path(args) -> str:
    return args.vuln_db or str(bundled_path())


def cmd_analyze(args, cfg: RunConfig) -> int:
    if not args.dataset:
        raise UsageError("analyze needs --dataset")
    if not Path(args.dataset).exists():
        raise MissingInput(args.dataset)
    db_path = _vuln_db_path(args)
    cfg.vuln_db = db_path
    db = load_vuln_db(db_path)
    out = Path(args.out)
    findings = Path(args.findings) if args.findings else out / "findings.ndjson"
    cfg.findings = str(findings)
    releases = None
    if args.exclude_prereleases:
        if not args.snapshot:
            raise UsageError("--exclude-prereleases in analyze needs --snapshot for release lists")
        with Snapshot(args.snapshot) as snap:
            releases = {p: snap.get(p).versions for p in db.packages() if p in snap}
    analyzer = Analyzer(db, args.mode, releases, args.exclude_prereleases)
    counters = stream_analyze(args.dataset, db, findings, args.mode, workers=args.workers,
                              db_path=db_path if releases is None else None, analyzer=analyzer)
    return EXIT_PARTIAL if counters.corrupt else EXIT_OK


def cmd_report(args, cfg: RunConfig) -> int:
    out = Path(args.out)
    findings = Path(args.findings) if args.findings else out / "findings.ndjson"
    if not findings.exists():
        raise MissingInput(str(findings))
    cfg.findings = str(findings)
    db_path = _vuln_db_path(args)
    cfg.vuln_db = db_path
    db = load_vuln_db(db_path)
    trees = None
    if args.dataset:
        if not Path(args.dataset).exists():
            raise MissingInput(args.dataset)
        dataset = args.dataset
        trees = lambda: read_trees(dataset)  # noqa: E731
    releases = None
    density = _split(args.density) or db.packages()
    if args.snapshot:
        with Snapshot(args.snapshot) as snap:
            releases = {p: snap.get(p).versions for p in density if p in snap}
    written = write_report(out, db, findings, trees, top_n=args.top,
                           density_packages=density, releases=releases)
    sys.stdout.write((out / "report.txt").read_text())
    print(f"report: wrote {len(written)} files to {out}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"fetch": cmd_fetch, "resolve": cmd_resolve, "analyze": cmd_analyze, "report": cmd_report}


# parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--snapshot", help="snapshot file (newline-delimited package metadata)")
    common.add_argument("--dataset", help="tree dataset written by resolve")
    common.add_argument("--findings", help="findings file written by analyze")
    common.add_argument("--vuln-db", help="vulnerability file (default: bundled urllib3 records)")
    common.add_argument("--packages", help="comma separated names, or @file with one per line")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = _Parser(prog="depgauge", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"depgauge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fetch", parents=[common], help="crawl an index into a snapshot")
    p.add_argument("--index-url", help="index base URL (serves simple/ and pypi/<name>/json)")
    p.add_argument("--retries", type=int, default=3)
    p.add_argument("--backoff", type=float, default=1.0, help="first retry delay in seconds")
    p.add_argument("--http-timeout", type=float, default=30.0)
    p.add_argument("--rate", type=float, default=None, help="max requests per second")
    p.add_argument("--progress-every", type=int, default=100)

    p = sub.add_parser("resolve", parents=[common], help="resolve dependency trees")
    p.add_argument("--shard", default="0/1", help="i/n, 0-based contiguous shard")
    p.add_argument("--timeout", type=float, default=300.0, help="seconds per package")
    p.add_argument("--max-depth", type=int, default=30)
    p.add_argument("--max-nodes", type=int, default=1_000_000)
    p.add_argument("--lenient", action="store_true", help="treat malformed specifiers as any version")
    p.add_argument("--with-extras", default="", help="comma separated extras to traverse")
    p.add_argument("--exclude-prereleases", action="store_true")
    p.add_argument("--env", action="append", default=[], metavar="KEY=VALUE",
                   help="marker environment override (default: CPython 3.10.12 on Linux x86_64)")

    p = sub.add_parser("analyze", parents=[common], help="classify exposures")
    p.add_argument("--mode", choices=MODES, default="direct")
    p.add_argument("--exclude-prereleases", action="store_true",
                   help="decide over published non-pre-releases (needs --snapshot)")

    p = sub.add_parser("report", parents=[common], help="write tables and histograms")
    p.add_argument("--top", type=int, default=10, help="length of the occurrence ranking")
    p.add_argument("--density", default="", help="packages for the version-density export")
    return parser


def _truthy(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "yes", "on")


def _apply_env_defaults(parser: argparse.ArgumentParser, environ) -> None:
    """Turn DEPGAUGE_<DEST> variables into parser defaults."""
    parsers = [parser]
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            parsers.extend(action.choices.values())
    for p in parsers:
        for action in p._actions:
            if not action.option_strings or action.dest in ("help", "version"):
                continue
            value = environ.get("DEPGAUGE_" + action.dest.upper())
            if value is None:
                continue
            if isinstance(action, argparse._StoreTrueAction):
                action.default = _truthy(value)
            elif isinstance(action, argparse._AppendAction):
                action.default = [v for v in value.split(";") if v]
            elif action.type is not None:
                action.default = action.type(value)
            else:
                action.default = value


def main(argv: Optional[Sequence[str]] = None, environ=None) -> int:
    parser = build_parser()
    try:
        _apply_env_defaults(parser, os.environ if environ is None else environ)
    except ValueError as exc:
        print(f"depgauge: bad environment override: {exc}", file=sys.stderr)
        return EXIT_USAGE
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = RunConfig(
        stage=args.command,
        index_url=getattr(args, "index_url", None),
        snapshot=args.snapshot,
        dataset=args.dataset,
        findings=args.findings,
        vuln_db=args.vuln_db,
        env=_env_pairs(getattr(args, "env", None)) if args.command == "resolve" else {},
        limits={k: getattr(args, k) for k in ("max_depth", "timeout", "max_nodes") if hasattr(args, k)},
        workers=args.workers,
        shard=getattr(args, "shard", "0/1"),
        mode=getattr(args, "mode", "direct"),
        lenient=getattr(args, "lenient", False),
        with_extras=_split(getattr(args, "with_extras", "")),
        exclude_prereleases=getattr(args, "exclude_prereleases", False),
        out=str(out),
        packages=_split(args.packages) if args.packages and not args.packages.startswith("@") else None,
        started_at=_now(),
    )
    try:
        code = COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"depgauge {args.command}: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except (MissingInput, SchemaMismatch, SchemaError, IndexFormatError, NetworkError) as exc:
        print(f"depgauge {args.command}: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        code = EXIT_INPUT
    except ValueError as exc:
        print(f"depgauge {args.command}: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except DepgaugeError as exc:
        print(f"depgauge {args.command}: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        code = EXIT_INPUT
    cfg.finished_at = _now()
    cfg.exit_code = code
    cfg.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())

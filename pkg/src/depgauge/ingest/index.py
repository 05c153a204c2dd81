"""Client for a simple-repository index and its JSON metadata endpoints.

Endpoints, relative to the configured base URL::

    simple/                     HTML anchor list of every project
    pypi/<name>/json            project document: releases and their files
    pypi/<name>/<version>/json  per-release document: requires_dist, requires_python

404 and 410 answers (and project documents flagged as tombstones) mean the
package does not exist.  Transport errors, 429 and 5xx answers are retried
with exponential backoff.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from html.parser import HTMLParser
from typing import Callable, Iterable, Iterator, Optional
from urllib.parse import quote

from ..errors import IndexFormatError, NetworkError, NotFound, ParseError
from ..versions import parse_version
from .names import PackageName, normalize_name
from .snapshot import PackageMetadata, Release

log = logging.getLogger(__name__)


class _AnchorParser(HTMLParser):
    def __init__(self) -> None:
        super().__init__()
        self.names: list[str] = []
        self.tags = 0
        self._in_a = False
        self._text: list[str] = []

    def handle_starttag(self, tag, attrs):
        self.tags += 1
        if tag == "a":
            self._in_a = True
            self._text = []

    def handle_endtag(self, tag):
        if tag == "a" and self._in_a:
            self._in_a = False
            name = "".join(self._text).strip()
            if name:
                self.names.append(name)

    def handle_data(self, data):
        if self._in_a:
            self._text.append(data)


def parse_simple_index(page: str) -> list[str]:
    """Normalized, deduplicated project names from a simple-index page (HTML or JSON)."""
    stripped = page.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(page)
            raw = [p["name"] for p in doc["projects"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise IndexFormatError(f"malformed JSON index: {exc}") from None
    else:
        parser = _AnchorParser()
        parser.feed(page)
        parser.close()
        if parser.tags == 0 and stripped:
            raise IndexFormatError("page contains no HTML markup")
        raw = parser.names
    return list(dict.fromkeys(normalize_name(n) for n in raw))


class RateLimiter:
    """Spaces calls so that at most *rate* start per second across threads."""

    def __init__(self, rate: Optional[float]) -> None:
        self.interval = 1.0 / rate if rate else 0.0
        self._next = 0.0
        self._lock = threading.Lock()

    def wait(self) -> None:
        if not self.interval:
            return
        with self._lock:
            now = time.monotonic()
            start = max(now, self._next)
            self._next = start + self.interval
        if start > now:
            time.sleep(start - now)


@dataclass
class IndexClient:
    base_url: str
    retries: int = 3
    backoff: float = 1.0
    timeout: float = 30.0
    rate: Optional[float] = None
    sleep: Callable[[float], None] = time.sleep

    def __post_init__(self) -> None:
        self.base_url = self.base_url.rstrip("/")
        self._limiter = RateLimiter(self.rate)

    # transport ------------------------------------------------------------

    def _get(self, path: str) -> bytes:
        url = f"{self.base_url}/{path}"
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                delay = self.backoff * 2 ** (attempt - 1)
                log.info("retrying %s in %.1fs (%s)", url, delay, last)
                self.sleep(delay)
            self._limiter.wait()
            try:
                req = urllib.request.Request(url, headers={"User-Agent": "depgauge"})
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    return resp.read()
            except urllib.error.HTTPError as exc:
                if exc.code in (404, 410):
                    raise NotFound(url) from None
                if exc.code != 429 and exc.code < 500:
                    raise NetworkError(f"{url}: HTTP {exc.code}") from None
                last = exc
            except (urllib.error.URLError, OSError) as exc:
                last = exc
        raise NetworkError(f"{url}: {last}")

    def _json(self, path: str) -> dict:
        body = self._get(path)
        try:
            return json.loads(body)
        except ValueError as exc:
            raise IndexFormatError(f"{path}: invalid JSON: {exc}") from None

    # operations -----------------------------------------------------------

    def fetch_package_list(self) -> list[str]:
        page = self._get("simple/").decode("utf-8", errors="replace")
        names = parse_simple_index(page)
        log.info("index lists %d packages", len(names))
        return names

    def fetch_metadata(self, name: str) -> PackageMetadata:
        key = normalize_name(name)
        doc = self._json(f"pypi/{quote(key)}/json")
        info = doc.get("info") or {}
        if info.get("tombstone"):
            raise NotFound(name)
        releases = []
        invalid = []
        for text, files in (doc.get("releases") or {}).items():
            try:
                version = parse_version(text)
            except ParseError:
                invalid.append(text)
                continue
            yanked = bool(files) and all(f.get("yanked", False) for f in files)
            rinfo = (self._json(f"pypi/{quote(key)}/{quote(text)}/json").get("info") or {})
            releases.append(Release(
                version,
                yanked,
                tuple(rinfo.get("requires_dist") or ()),
                rinfo.get("requires_python") or None,
            ))
        releases.sort(key=lambda r: r.version)
        display = PackageName.of(info.get("name") or name)
        return PackageMetadata(display, tuple(releases), None, tuple(invalid))

    def fetch_many(self, names: Iterable[str], workers: int = 4) -> Iterator[tuple[str, PackageMetadata | Exception]]:
        """Fetch several packages in parallel; results come back in input order."""

        def one(n: str):
            try:
                return n, self.fetch_metadata(n)
            except (NotFound, NetworkError, IndexFormatError) as exc:
                return n, exc

        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            yield from pool.map(one, names)


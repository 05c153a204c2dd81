from __future__ import annotations

import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

TESTS = Path(__file__).resolve().parent
DATA = TESTS / "data"
ROOT = TESTS.parent

if str(TESTS) not in sys.path:
    sys.path.insert(0, str(TESTS))


class FixtureIndex:
    """Routes for a throwaway index server: path -> (status, body)."""

    def __init__(self) -> None:
        self.routes: dict[str, tuple[int, bytes]] = {}
        self.failures: dict[str, list[int]] = {}
        self.hits: dict[str, int] = {}
        self.url = ""

    def page(self, path: str, body, status: int = 200) -> None:
        if not isinstance(body, (bytes, str)):
            body = json.dumps(body)
        self.routes[path] = (status, body.encode() if isinstance(body, str) else body)

    def fail_first(self, path: str, *codes: int) -> None:
        self.failures[path] = list(codes)

    def package(self, name: str, releases: dict[str, list[str]], yanked=(), tombstone=False,
                requires_python=None) -> None:
        """Serve the JSON endpoints for one package."""
        info = {"name": name}
        if tombstone:
            info["tombstone"] = True
        self.page(f"/pypi/{name}/json", {
            "info": info,
            "releases": {v: [{"yanked": v in yanked}] for v in releases},
        })
        for v, reqs in releases.items():
            self.page(f"/pypi/{name}/{v}/json",
                      {"info": {"requires_dist": reqs, "requires_python": requires_python}})

    def simple(self, names) -> None:
        anchors = "".join(f'<a href="/simple/{n}/">{n}</a>\n' for n in names)
        self.page("/simple/", f"<!DOCTYPE html><html><body>{anchors}</body></html>")


def _handler(index: FixtureIndex):
    class Handler(BaseHTTPRequestHandler):
        def do_GET(self):  # noqa: N802
            index.hits[self.path] = index.hits.get(self.path, 0) + 1
            pending = index.failures.get(self.path)
            if pending:
                self.send_response(pending.pop(0))
                self.end_headers()
                return
            status, body = index.routes.get(self.path, (404, b"not found"))
            self.send_response(status)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    return Handler


@pytest.fixture
def index_server():
    index = FixtureIndex()
    server = ThreadingHTTPServer(("127.0.0.1", 0), _handler(index))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    index.url = f"http://127.0.0.1:{server.server_port}"
    yield index
    server.shutdown()
    server.server_close()


@pytest.fixture
def ecosystem_path() -> Path:
    return DATA / "ecosystem.ndjson"


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])

"""HTTP endpoint serving the query subset over a durable store.

Routes:
  GET/POST /sparql   query via `?query=` or form body; SPARQL results JSON
  POST     /publish  Turtle body appended to the store, flushed before 200
  GET      /health   `{"tripleCount": n}`

Each endpoint is one process-internal object owning one store file, so
tests can spin up several endpoints in-process and a CLI process can run
exactly one. Requests are handled on a thread per connection; the store
serializes writers internally while readers work on snapshots.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from .results import encode_results
from .sparql import QueryParseError, evaluate, parse_query
from .store import StoreError, StoreHandle

log = logging.getLogger(__name__)

RESULTS_CONTENT_TYPE = "application/sparql-results+json"


@dataclass(frozen=True)
class EndpointConfig:
    bind_address: str = "127.0.0.1:0"
    data_file: str = "store.ttl"
    read_only: bool = False
    max_query_rows: int = 10000
    delay_ms: int = 0  # artificial per-request latency, for concurrency diagnostics

    def __post_init__(self) -> None:
        if self.max_query_rows < 1:
            raise ValueError("max_query_rows must be at least 1")
        if self.delay_ms < 0:
            raise ValueError("delay_ms must not be negative")
        host, _, port = self.bind_address.rpartition(":")
        if not host or not port.isdigit():
            raise ValueError("bind_address must look like host:port")


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    endpoint: "KnowHowEndpoint"  # set on the subclass built per endpoint

    # --- plumbing ---

    def log_message(self, fmt, *args):
        log.debug("%s %s", self.address_string(), fmt % args)

    def _send(self, status: int, content_type: str, body: str, extra: dict[str, str] | None = None) -> None:
        data = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        for name, value in (extra or {}).items():
            self.send_header(name, value)
        self.end_headers()
        self.wfile.write(data)

    def _send_json(self, status: int, payload: dict, extra: dict[str, str] | None = None) -> None:
        self._send(status, "application/json", json.dumps(payload), extra)

    def _method_not_allowed(self, allowed: str) -> None:
        self._send(405, "text/plain; charset=utf-8", "method not allowed\n", {"Allow": allowed})

    def _read_body(self) -> str:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length).decode("utf-8")

    # --- routes ---

    def do_OPTIONS(self):
        self._send(
            204,
            "text/plain",
            "",
            {
                "Access-Control-Allow-Methods": "GET, POST, OPTIONS",
                "Access-Control-Allow-Headers": "Content-Type",
            },
        )

    def do_GET(self):
        self.endpoint._delay()
        url = urlsplit(self.path)
        if url.path == "/sparql":
            params = parse_qs(url.query)
            queries = params.get("query")
            if not queries:
                self._send(400, "text/plain; charset=utf-8", "missing query parameter\n")
                return
            self._run_query(queries[0])
        elif url.path == "/health":
            self._send_json(200, {"tripleCount": len(self.endpoint.store)})
        elif url.path == "/publish":
            self._method_not_allowed("POST, OPTIONS")
        else:
            self._send(404, "text/plain; charset=utf-8", "not found\n")

    def do_POST(self):
        self.endpoint._delay()
        url = urlsplit(self.path)
        if url.path == "/sparql":
            params = parse_qs(self._read_body())
            queries = params.get("query")
            if not queries:
                self._send(400, "text/plain; charset=utf-8", "missing query field in form body\n")
                return
            self._run_query(queries[0])
        elif url.path == "/publish":
            self._handle_publish()
        elif url.path == "/health":
            self._method_not_allowed("GET, OPTIONS")
        else:
            self._send(404, "text/plain; charset=utf-8", "not found\n")

    def _run_query(self, text: str) -> None:
        try:
            query = parse_query(text)
        except QueryParseError as exc:
            self._send(400, "text/plain; charset=utf-8", f"query syntax error: {exc}\n")
            return
        try:
            bindings = evaluate(query, self.endpoint.store.snapshot())
        except Exception:
            log.exception("query evaluation failed")
            self._send(500, "text/plain; charset=utf-8", "internal error\n")
            return
        extra = {}
        if len(bindings.rows) > self.endpoint.config.max_query_rows:
            bindings.rows = bindings.rows[: self.endpoint.config.max_query_rows]
            extra["X-Truncated"] = "true"
        self._send(200, RESULTS_CONTENT_TYPE, encode_results(bindings), extra)

    def _handle_publish(self) -> None:
        if self.endpoint.config.read_only:
            self._send(403, "text/plain; charset=utf-8", "endpoint is read-only\n")
            return
        body = self._read_body()
        try:
            inserted = self.endpoint.store.publish(body)
        except StoreError:
            self._send(403, "text/plain; charset=utf-8", "endpoint is read-only\n")
        except ValueError as exc:
            self._send(400, "text/plain; charset=utf-8", f"turtle parse error: {exc}\n")
        except OSError as exc:
            log.exception("flush failed")
            self._send(500, "text/plain; charset=utf-8", f"persistence failure: {exc}\n")
        else:
            self._send_json(200, {"inserted": inserted})


class KnowHowEndpoint:
    """One HTTP endpoint bound to one store file.

    `start()` binds and serves on a background thread (port 0 picks a
    free port); `run()` serves on the calling thread until stop() or
    shutdown. Safe to start several per process.
    """

    def __init__(self, config: EndpointConfig, store: StoreHandle | None = None):
        self.config = config
        self.store = store or StoreHandle(config.data_file, read_only=config.read_only)
        handler = type("_BoundHandler", (_Handler,), {"endpoint": self})
        host, _, port = config.bind_address.rpartition(":")
        self._server = ThreadingHTTPServer((host, int(port)), handler)
        self._server.daemon_threads = True
        self._thread: threading.Thread | None = None

    def _delay(self) -> None:
        if self.config.delay_ms:
            time.sleep(self.config.delay_ms / 1000.0)

    @property
    def bound_address(self) -> tuple[str, int]:
        host, port = self._server.server_address[:2]
        return host, port

    @property
    def base_url(self) -> str:
        host, port = self.bound_address
        return f"http://{host}:{port}"

    def start(self) -> "KnowHowEndpoint":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def run(self) -> None:
        self._server.serve_forever()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread:
            self._thread.join(timeout=5)
            self._thread = None

    def __enter__(self) -> "KnowHowEndpoint":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

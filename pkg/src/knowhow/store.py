"""Durable triple store backing an endpoint.

One Turtle file on disk is the whole state. Writes go through a lock,
update the in-memory graph, and flush by serializing to a temp file in
the same directory, fsyncing, and renaming over the old file, so a
crash at any point leaves either the previous or the new state, never a
torn file.
"""

from __future__ import annotations

import os
import tempfile
import threading

from .rdf import Graph, Triple, parse_turtle, serialize_turtle


class StoreError(Exception):
    pass


class StoreHandle:
    """Thread-safe handle on a Turtle-file-backed graph.

    Readers get immutable Graph snapshots and never block behind the
    flush. `read_only` turns insert/publish into errors, for endpoints
    that only serve queries.
    """

    def __init__(self, path: str, read_only: bool = False):
        self.path = path
        self.read_only = read_only
        self._lock = threading.Lock()
        self._dirty = False
        if os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
            try:
                self._graph = parse_turtle(text)
            except ValueError as exc:
                raise StoreError(f"cannot load {path}: {exc}") from exc
        else:
            self._graph = Graph()

    def snapshot(self) -> Graph:
        with self._lock:
            return self._graph

    def __len__(self) -> int:
        return len(self.snapshot())

    def insert(self, triples: list[Triple], prefixes: dict[str, str] | None = None) -> int:
        """Add triples in memory; returns how many were new. Callers own
        the decision of when to flush."""
        if self.read_only:
            raise StoreError("store is read-only")
        with self._lock:
            before = len(self._graph)
            g = self._graph.add(*triples)
            if prefixes:
                g = g.with_prefixes(prefixes)
            inserted = len(g) - before
            if inserted or (prefixes and g.prefixes != self._graph.prefixes):
                self._graph = g
                self._dirty = True
            return inserted

    def flush(self) -> None:
        """Persist atomically: temp file + fsync + rename."""
        with self._lock:
            if not self._dirty and os.path.exists(self.path):
                return
            data = serialize_turtle(self._graph)
            directory = os.path.dirname(os.path.abspath(self.path))
            fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".ttl.tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as fh:
                    fh.write(data)
                    fh.flush()
                    os.fsync(fh.fileno())
                os.replace(tmp_path, self.path)
            except BaseException:
                if os.path.exists(tmp_path):
                    os.unlink(tmp_path)
                raise
            self._dirty = False

    def publish(self, turtle: str) -> int:
        """Parse, insert, flush. Returns the number of newly added
        triples; the data is on disk before this returns."""
        g = parse_turtle(turtle)
        inserted = self.insert(list(g), prefixes=g.prefixes)
        self.flush()
        return inserted

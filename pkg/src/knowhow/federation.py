"""Query an arbitrary set of know-how endpoints as one knowledge base.

Two integration modes:

  union  the query runs verbatim on every endpoint; row sets are
         unioned and deduplicated. Cheap, but a pattern can only match
         within a single store.
  join   every triple pattern runs on every endpoint as a one-pattern
         query; the matching triples are pulled back, merged, and the
         full query is evaluated locally. A process split across
         stores joins up as if it lived in one graph.

Endpoints are plain HTTP servers speaking the /sparql + /publish
protocol. Requests within one call run concurrently with a bounded
pool; merging is deterministic (canonical row order), so results do not
depend on endpoint order or response timing.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import requests

from .rdf import Graph, Iri, Literal, Term, Triple, term_key
from .results import ResultsFormatError, decode_results
from .sparql import (
    RDFS_LABEL,
    BindingSet,
    Query,
    TriplePattern,
    Variable,
    evaluate,
    keyword_query,
    serialize_query,
)
from . import vocab

MAX_PARALLEL_REQUESTS = 8


class FederationError(Exception):
    """A federated call could not produce a result under its policy."""


@dataclass(frozen=True)
class EndpointDescriptor:
    name: str
    base_url: str
    timeout_ms: int = 5000
    failure_policy: str = "skip"

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("endpoint needs a name")
        if not self.base_url.startswith(("http://", "https://")):
            raise ValueError(f"endpoint {self.name}: base_url must be http(s)")
        if self.timeout_ms <= 0:
            raise ValueError(f"endpoint {self.name}: timeout must be positive")
        if self.failure_policy not in ("skip", "fail"):
            raise ValueError(f"endpoint {self.name}: failure policy must be 'skip' or 'fail'")

    @property
    def timeout_s(self) -> float:
        return self.timeout_ms / 1000.0


@dataclass
class FederatedResult:
    bindings: BindingSet
    responded: list[str]
    failed: list[tuple[str, str]]


def load_federation(path: str) -> list[EndpointDescriptor]:
    """Read a federation config: a JSON array of
    `{"name":…, "baseUrl":…, "timeout_ms":…, "failurePolicy":…}`."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list) or not data:
        raise ValueError("federation config must be a non-empty JSON array")
    endpoints = []
    for entry in data:
        if not isinstance(entry, dict):
            raise ValueError("federation config entries must be objects")
        unknown = set(entry) - {"name", "baseUrl", "timeout_ms", "failurePolicy"}
        if unknown:
            raise ValueError(f"unknown federation config key(s): {', '.join(sorted(unknown))}")
        endpoints.append(
            EndpointDescriptor(
                name=entry.get("name", ""),
                base_url=entry.get("baseUrl", ""),
                timeout_ms=entry.get("timeout_ms", 5000),
                failure_policy=entry.get("failurePolicy", "skip"),
            )
        )
    _check_unique_names(endpoints)
    return endpoints


def find_endpoint(endpoints: list[EndpointDescriptor], name: str) -> EndpointDescriptor:
    for ep in endpoints:
        if ep.name == name:
            return ep
    raise FederationError(f"no endpoint named {name!r} in the federation")


def _check_unique_names(endpoints: list[EndpointDescriptor]) -> None:
    if not endpoints:
        raise ValueError("federation needs at least one endpoint")
    names = [ep.name for ep in endpoints]
    if len(set(names)) != len(names):
        raise ValueError("endpoint names must be unique within a federation")


# ---------------------------------------------------------------------------
# HTTP plumbing
# ---------------------------------------------------------------------------


def _fetch_bindings(session: requests.Session, ep: EndpointDescriptor, query_text: str) -> BindingSet:
    resp = session.post(
        ep.base_url + "/sparql",
        data={"query": query_text},
        timeout=ep.timeout_s,
    )
    if resp.status_code != 200:
        raise FederationError(f"HTTP {resp.status_code}: {resp.text.strip()}")
    return decode_results(resp.text)


def publish_turtle(base_url: str, turtle: str, timeout_ms: int = 5000) -> int:
    """POST Turtle to an endpoint's /publish; returns the count of newly
    inserted triples."""
    try:
        resp = requests.post(
            base_url + "/publish",
            data=turtle.encode("utf-8"),
            headers={"Content-Type": "text/turtle"},
            timeout=timeout_ms / 1000.0,
        )
    except requests.RequestException as exc:
        raise FederationError(f"publish to {base_url} failed: {exc}") from exc
    if resp.status_code != 200:
        raise FederationError(f"publish to {base_url} failed: HTTP {resp.status_code}: {resp.text.strip()}")
    return resp.json()["inserted"]


@dataclass
class _Gathered:
    # endpoint name -> list of per-job payloads, for fully successful endpoints
    ok: dict[str, list]
    failed: list[tuple[str, str]]


def _gather(endpoints: list[EndpointDescriptor], jobs: list, worker) -> _Gathered:
    """Run `worker(session, endpoint, job)` for every endpoint x job pair
    concurrently. An endpoint that fails any job contributes nothing; a
    fail-policy endpoint aborts the whole call."""
    _check_unique_names(endpoints)
    results: dict[str, list] = {ep.name: [None] * len(jobs) for ep in endpoints}
    errors: dict[str, str] = {}
    with requests.Session() as session:
        with ThreadPoolExecutor(max_workers=MAX_PARALLEL_REQUESTS) as pool:
            futures = {
                pool.submit(worker, session, ep, job): (ep, i)
                for ep in endpoints
                for i, job in enumerate(jobs)
            }
            for future, (ep, i) in futures.items():
                try:
                    results[ep.name][i] = future.result()
                except Exception as exc:
                    errors.setdefault(ep.name, str(exc))

    for ep in endpoints:
        if ep.name in errors and ep.failure_policy == "fail":
            raise FederationError(f"endpoint {ep.name} failed: {errors[ep.name]}")
    if len(errors) == len(endpoints):
        detail = "; ".join(f"{name}: {reason}" for name, reason in sorted(errors.items()))
        raise FederationError(f"all endpoints failed: {detail}")

    ok = {ep.name: results[ep.name] for ep in endpoints if ep.name not in errors}
    failed = sorted(errors.items())
    return _Gathered(ok=ok, failed=failed)


# ---------------------------------------------------------------------------
# Federated query
# ---------------------------------------------------------------------------


def _merge_rows(vars_out: list[str], row_groups: list[list[dict[str, Term]]]) -> BindingSet:
    seen = set()
    rows = []
    for group in row_groups:
        for row in group:
            key = tuple(term_key(row[v]) if v in row else "" for v in vars_out)
            if key not in seen:
                seen.add(key)
                rows.append(row)
    rows.sort(key=lambda row: tuple(term_key(row[v]) if v in row else "" for v in vars_out))
    return BindingSet(vars_out, rows)


def _pattern_query(pattern: TriplePattern) -> Query:
    names = pattern.variables()
    return Query(select_vars=names or None, patterns=[pattern], distinct=True)


def _reconstruct(pattern: TriplePattern, row: dict[str, Term]) -> Triple:
    def resolve(part):
        if isinstance(part, Variable):
            return row[part.name]
        return part

    return Triple(resolve(pattern.subject), resolve(pattern.predicate), resolve(pattern.object))


def federated_query(endpoints: list[EndpointDescriptor], q: Query, mode: str = "join") -> FederatedResult:
    """Run `q` across the federation.

    Union mode unions per-endpoint result rows; join mode fetches
    per-pattern matches from everywhere and evaluates the query locally
    over the merged triples, so multi-pattern joins can span endpoints.
    """
    if mode not in ("union", "join"):
        raise ValueError("mode must be 'union' or 'join'")
    vars_out = q.projection()

    if mode == "union":
        text = serialize_query(q)

        def worker(session, ep, _job):
            return _fetch_bindings(session, ep, text).rows

        gathered = _gather(endpoints, [None], worker)
        bindings = _merge_rows(vars_out, [rows[0] for rows in gathered.ok.values()])
    else:

        def worker(session, ep, pattern):
            rows = _fetch_bindings(session, ep, serialize_query(_pattern_query(pattern))).rows
            return {_reconstruct(pattern, row) for row in rows}

        gathered = _gather(endpoints, list(q.patterns), worker)
        matched: set[Triple] = set()
        for triple_sets in gathered.ok.values():
            for triples in triple_sets:
                matched.update(triples)
        bindings = evaluate(q, Graph(triples=matched))

    return FederatedResult(
        bindings=bindings,
        responded=sorted(gathered.ok),
        failed=gathered.failed,
    )


def federated_search(endpoints: list[EndpointDescriptor], keywords: list[str]) -> FederatedResult:
    """Keyword search across the federation: one entity per row, keeping
    a single label even when several endpoints know the entity."""
    result = federated_query(endpoints, keyword_query(keywords), mode="union")
    seen = set()
    rows = []
    for row in result.bindings.rows:
        key = term_key(row["entity"])
        if key not in seen:
            seen.add(key)
            rows.append(row)
    result.bindings = BindingSet(result.bindings.vars, rows)
    return result


# ---------------------------------------------------------------------------
# Compound questions
# ---------------------------------------------------------------------------


@dataclass
class ExploreResult:
    entity: Iri
    steps: list[Iri] = field(default_factory=list)
    part_of: list[Iri] = field(default_factory=list)
    requires: list[Iri] = field(default_factory=list)
    required_by: list[Iri] = field(default_factory=list)
    methods: list[Iri] = field(default_factory=list)
    method_of: list[Iri] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    annotations: list[Iri] = field(default_factory=list)
    responded: list[str] = field(default_factory=list)
    failed: list[tuple[str, str]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "entity": self.entity.value,
            "steps": [t.value for t in self.steps],
            "partOf": [t.value for t in self.part_of],
            "requires": [t.value for t in self.requires],
            "requiredBy": [t.value for t in self.required_by],
            "methods": [t.value for t in self.methods],
            "methodOf": [t.value for t in self.method_of],
            "labels": list(self.labels),
            "annotations": [t.value for t in self.annotations],
            "responded": list(self.responded),
            "failed": [{"name": n, "reason": r} for n, r in self.failed],
        }


class _Accumulator:
    """Tracks which endpoints answered every sub-query of a compound call."""

    def __init__(self, endpoints: list[EndpointDescriptor]):
        self.candidates = {ep.name for ep in endpoints}
        self.failed: dict[str, str] = {}

    def absorb(self, result: FederatedResult) -> BindingSet:
        self.candidates &= set(result.responded)
        for name, reason in result.failed:
            self.failed.setdefault(name, reason)
        return result.bindings

    def responded(self) -> list[str]:
        return sorted(self.candidates - set(self.failed))


def _one_pattern(endpoints, acc: _Accumulator, subject, predicate, obj) -> list[Term]:
    q = Query(select_vars=["x"], patterns=[TriplePattern(subject, predicate, obj)], distinct=True)
    bindings = acc.absorb(federated_query(endpoints, q, mode="union"))
    return [row["x"] for row in bindings.rows]


def explore(endpoints: list[EndpointDescriptor], entity: Iri) -> ExploreResult:
    """The entity's immediate neighborhood under the know-how vocabulary,
    merged across every endpoint."""
    if not isinstance(entity, Iri):
        raise ValueError("explore needs an IRI")
    acc = _Accumulator(endpoints)
    x = Variable("x")

    def iris(terms: list[Term]) -> list[Iri]:
        return sorted((t for t in terms if isinstance(t, Iri)), key=term_key)

    steps = iris(_one_pattern(endpoints, acc, entity, vocab.HAS_STEP, x))
    part_of = iris(_one_pattern(endpoints, acc, x, vocab.HAS_STEP, entity))
    requires = iris(_one_pattern(endpoints, acc, entity, vocab.REQUIRES, x))
    required_by = iris(_one_pattern(endpoints, acc, x, vocab.REQUIRES, entity))
    methods = iris(_one_pattern(endpoints, acc, entity, vocab.HAS_METHOD, x))
    method_of = iris(_one_pattern(endpoints, acc, x, vocab.HAS_METHOD, entity))
    labels = sorted(
        {t.lexical for t in _one_pattern(endpoints, acc, entity, RDFS_LABEL, x) if isinstance(t, Literal)}
    )

    annotations = []
    for ann in iris(_one_pattern(endpoints, acc, x, vocab.OA_HAS_BODY, entity)):
        for target in iris(_one_pattern(endpoints, acc, ann, vocab.OA_HAS_TARGET, x)):
            sources = iris(_one_pattern(endpoints, acc, target, vocab.OA_HAS_SOURCE, x))
            annotations.extend(sources or [target])
    annotations = sorted(set(annotations), key=term_key)

    return ExploreResult(
        entity=entity,
        steps=steps,
        part_of=part_of,
        requires=requires,
        required_by=required_by,
        methods=methods,
        method_of=method_of,
        labels=labels,
        annotations=annotations,
        responded=acc.responded(),
        failed=sorted(acc.failed.items()),
    )


def incomplete_steps(endpoints: list[EndpointDescriptor], task: Iri, execution: Iri) -> list[Iri]:
    """Steps of `task` with no success assertion in `execution` anywhere
    in the federation: two federated queries and a set difference."""
    if not isinstance(task, Iri) or not isinstance(execution, Iri):
        raise ValueError("incomplete_steps needs IRIs")
    acc = _Accumulator(endpoints)
    x = Variable("x")
    steps = {t for t in _one_pattern(endpoints, acc, task, vocab.HAS_STEP, x) if isinstance(t, Iri)}
    done = {t for t in _one_pattern(endpoints, acc, x, vocab.SUCCEEDED_IN, execution) if isinstance(t, Iri)}
    return sorted(steps - done, key=term_key)

"""Execution state over the federation: goals, outcomes, derived
completion, readiness, and ready-notifications.

An execution is just an IRI with `proex:has_goal` triples; outcomes are
`proex:succeeded_in` / `proex:failed_in` assertions published like any
other triple. Everything else here is computed, never stored: derived
completion (a method succeeded, or every step did) is a query-time
judgment, so the graphs stay descriptive.

The derivation core (`derive_view`) is a pure function on a Graph; the
federation wrappers materialize the relevant triples first, then call
it. Watching is poll-based: each poll recomputes the view and emits one
ReadyEvent per task that newly became ready.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .federation import (
    EndpointDescriptor,
    FederationError,
    federated_query,
    find_endpoint,
    publish_turtle,
)
from .rdf import EX_NS, Graph, Iri, Triple, serialize_turtle, term_key
from .sparql import Query, TriplePattern, Variable
from . import vocab

log = logging.getLogger(__name__)


class RequiresCycleError(Exception):
    """Readiness is undefined when tasks require each other."""

    def __init__(self, cycle: list[Iri]):
        loop = " -> ".join(t.value for t in cycle + cycle[:1])
        super().__init__(f"requires cycle: {loop}")
        self.cycle = cycle


class UnknownExecutionError(Exception):
    pass


@dataclass
class ExecutionView:
    execution: Iri
    goals: set[Iri]
    succeeded_asserted: set[Iri]
    failed_asserted: set[Iri]
    succeeded_derived: set[Iri]
    ready: set[Iri]
    blocked: dict[Iri, set[Iri]]
    relevant: set[Iri]
    requirements: dict[Iri, set[Iri]]
    warnings: list[str] = field(default_factory=list)
    responded: list[str] = field(default_factory=list)
    failed_endpoints: list[tuple[str, str]] = field(default_factory=list)

    def check_invariants(self) -> None:
        assert self.succeeded_asserted <= self.succeeded_derived, "asserted success missing from derived set"
        assert not (self.ready & self.succeeded_derived), "ready task already succeeded"
        assert not (self.ready & self.failed_asserted), "ready task already failed"
        for t in self.ready:
            assert self.requirements.get(t, set()) <= self.succeeded_derived, f"ready task {t.value} has unmet requirements"
        expected_blocked = self.relevant - self.ready - self.succeeded_derived - self.failed_asserted
        assert set(self.blocked) == expected_blocked, "blocked keys are not exactly the undecided tasks"

    def status_of(self, task: Iri) -> str:
        if task in self.succeeded_asserted:
            return "done"
        if task in self.succeeded_derived:
            return "done (derived)"
        if task in self.failed_asserted:
            return "failed"
        if task in self.ready:
            return "ready"
        if task in self.blocked:
            return "blocked"
        return "unknown"

    def to_json(self) -> dict:
        def iris(values) -> list[str]:
            return [t.value for t in sorted(values, key=term_key)]

        return {
            "execution": self.execution.value,
            "goals": iris(self.goals),
            "succeededAsserted": iris(self.succeeded_asserted),
            "failedAsserted": iris(self.failed_asserted),
            "succeededDerived": iris(self.succeeded_derived),
            "ready": iris(self.ready),
            "blocked": {t.value: iris(unmet) for t, unmet in sorted(self.blocked.items(), key=lambda kv: term_key(kv[0]))},
            "warnings": list(self.warnings),
            "responded": list(self.responded),
            "failedEndpoints": [{"name": n, "reason": r} for n, r in self.failed_endpoints],
        }


@dataclass(frozen=True)
class ReadyEvent:
    execution: Iri
    task: Iri
    because: tuple[Iri, ...]
    at: str


def ready_event_json(event: ReadyEvent) -> str:
    return json.dumps(
        {
            "execution": event.execution.value,
            "task": event.task.value,
            "because": [t.value for t in event.because],
            "at": event.at,
        }
    )


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# ---------------------------------------------------------------------------
# Pure derivation core
# ---------------------------------------------------------------------------


def _edge_map(g: Graph, predicate: Iri) -> dict[Iri, set[Iri]]:
    edges: dict[Iri, set[Iri]] = {}
    for t in g.match(predicate=predicate):
        if isinstance(t.subject, Iri) and isinstance(t.object, Iri):
            edges.setdefault(t.subject, set()).add(t.object)
    return edges


def _closure(roots: set[Iri], edge_maps: list[dict[Iri, set[Iri]]]) -> set[Iri]:
    seen = set(roots)
    frontier = list(roots)
    while frontier:
        node = frontier.pop()
        for edges in edge_maps:
            for succ in edges.get(node, ()):
                if succ not in seen:
                    seen.add(succ)
                    frontier.append(succ)
    return seen


def derive_view(g: Graph, execution: Iri, scope: Iri | None = None, derive: bool = True) -> ExecutionView:
    """Compute the execution view from one graph (the federation
    wrappers hand this the merged relevant triples).

    Derivation rules, iterated to the least fixpoint: an asserted
    success is succeeded; a task with some succeeded method is succeeded
    (methods are alternatives); a task whose every step succeeded is
    succeeded (steps are parts). Pass derive=False to stick to asserted
    outcomes only.
    """
    warnings: list[str] = []
    steps = _edge_map(g, vocab.HAS_STEP)
    methods = _edge_map(g, vocab.HAS_METHOD)
    requires = _edge_map(g, vocab.REQUIRES)

    goals = {t.object for t in g.match(subject=execution, predicate=vocab.HAS_GOAL) if isinstance(t.object, Iri)}
    roots = {scope} if scope is not None else set(goals)
    relevant = _closure(roots, [steps, methods, requires])

    succeeded_asserted = {
        t.subject for t in g.match(predicate=vocab.SUCCEEDED_IN, object=execution) if isinstance(t.subject, Iri)
    }
    legacy = {
        t.subject for t in g.match(predicate=vocab.SUCCEED_IN_LEGACY, object=execution) if isinstance(t.subject, Iri)
    }
    if legacy:
        warnings.append(
            "success asserted with the legacy succeed_in spelling for: "
            + ", ".join(t.value for t in sorted(legacy, key=term_key))
        )
        succeeded_asserted |= legacy
    failed_asserted = {
        t.subject for t in g.match(predicate=vocab.FAILED_IN, object=execution) if isinstance(t.subject, Iri)
    }
    for t in sorted(succeeded_asserted & failed_asserted, key=term_key):
        warnings.append(f"contradictory outcomes asserted for {t.value}; success takes precedence")

    relevant_requires = {
        s: {o for o in objs if o in relevant} for s, objs in requires.items() if s in relevant
    }
    cycles = vocab.find_cycles(relevant_requires)
    if cycles:
        raise RequiresCycleError(cycles[0])

    succeeded_derived = set(succeeded_asserted)
    if derive:
        changed = True
        while changed:
            changed = False
            for t in relevant:
                if t in succeeded_derived:
                    continue
                ms = methods.get(t)
                ss = steps.get(t)
                if ms and any(m in succeeded_derived for m in ms):
                    succeeded_derived.add(t)
                    changed = True
                elif ss and all(s in succeeded_derived for s in ss):
                    succeeded_derived.add(t)
                    changed = True

    ready = {
        t
        for t in relevant
        if t not in succeeded_derived
        and t not in failed_asserted
        and requires.get(t, set()) <= succeeded_derived
    }
    blocked = {
        t: requires.get(t, set()) - succeeded_derived
        for t in relevant
        if t not in ready and t not in succeeded_derived and t not in failed_asserted
    }

    view = ExecutionView(
        execution=execution,
        goals=goals,
        succeeded_asserted=succeeded_asserted,
        failed_asserted=failed_asserted,
        succeeded_derived=succeeded_derived,
        ready=ready,
        blocked=blocked,
        relevant=relevant,
        requirements={t: set(objs) for t, objs in requires.items() if t in relevant},
        warnings=warnings,
    )
    view.check_invariants()
    return view


# ---------------------------------------------------------------------------
# Federation wrappers
# ---------------------------------------------------------------------------


def _two_var_query(predicate: Iri) -> Query:
    return Query(
        select_vars=["s", "o"],
        patterns=[TriplePattern(Variable("s"), predicate, Variable("o"))],
        distinct=True,
    )


def _subjects_query(predicate: Iri, obj: Iri) -> Query:
    return Query(select_vars=["s"], patterns=[TriplePattern(Variable("s"), predicate, obj)], distinct=True)


def materialize(endpoints: list[EndpointDescriptor], execution: Iri) -> tuple[Graph, list[str], list[tuple[str, str]]]:
    """Pull every triple an execution view can depend on: the
    execution's goals, all decomposition and requirement edges, and the
    outcome assertions for this execution."""
    triples: set[Triple] = set()
    responded: set[str] | None = None
    failed: dict[str, str] = {}

    def run(q: Query, rebuild) -> None:
        nonlocal responded
        result = federated_query(endpoints, q, mode="union")
        responded = set(result.responded) if responded is None else responded & set(result.responded)
        for name, reason in result.failed:
            failed.setdefault(name, reason)
        for row in result.bindings.rows:
            triple = rebuild(row)
            if triple is not None:
                triples.add(triple)

    goal_q = Query(select_vars=["o"], patterns=[TriplePattern(execution, vocab.HAS_GOAL, Variable("o"))], distinct=True)
    run(goal_q, lambda row: Triple(execution, vocab.HAS_GOAL, row["o"]) if isinstance(row["o"], Iri) else None)

    for pred in (vocab.HAS_STEP, vocab.HAS_METHOD, vocab.REQUIRES):
        run(
            _two_var_query(pred),
            lambda row, pred=pred: Triple(row["s"], pred, row["o"])
            if isinstance(row["s"], Iri) and isinstance(row["o"], Iri)
            else None,
        )
    for pred in (vocab.SUCCEEDED_IN, vocab.SUCCEED_IN_LEGACY, vocab.FAILED_IN):
        run(
            _subjects_query(pred, execution),
            lambda row, pred=pred: Triple(row["s"], pred, execution) if isinstance(row["s"], Iri) else None,
        )

    return Graph(triples), sorted((responded or set()) - set(failed)), sorted(failed.items())


def compute_view(
    endpoints: list[EndpointDescriptor],
    execution: Iri,
    scope: Iri | None = None,
    derive: bool = True,
) -> ExecutionView:
    """Materialize the execution's relevant triples from the federation
    and derive the view. Pure in the federation's triple content."""
    g, responded, failed = materialize(endpoints, execution)
    view = derive_view(g, execution, scope=scope, derive=derive)
    view.responded = responded
    view.failed_endpoints = failed
    return view


def start_execution(
    endpoints: list[EndpointDescriptor],
    publish_target: str,
    goal: Iri,
    base_namespace: str = EX_NS,
) -> Iri:
    """Mint a fresh execution IRI and publish its goal triple."""
    if not isinstance(goal, Iri):
        raise ValueError("goal must be an IRI")
    target = find_endpoint(endpoints, publish_target)
    execution = Iri(base_namespace + "execution_" + uuid.uuid4().hex)
    turtle = serialize_turtle(Graph([Triple(execution, vocab.HAS_GOAL, goal)]))
    publish_turtle(target.base_url, turtle, timeout_ms=target.timeout_ms)
    return execution


def execution_exists(endpoints: list[EndpointDescriptor], execution: Iri) -> bool:
    q = Query(select_vars=["o"], patterns=[TriplePattern(execution, vocab.HAS_GOAL, Variable("o"))], limit=1)
    return bool(federated_query(endpoints, q, mode="union").bindings.rows)


def assert_outcome(
    endpoints: list[EndpointDescriptor],
    publish_target: str,
    execution: Iri,
    task: Iri,
    outcome: str,
    force: bool = False,
) -> int:
    """Publish a success or failure assertion; returns the insert count
    (0 when the assertion already existed)."""
    if outcome not in ("succeeded", "failed"):
        raise ValueError("outcome must be 'succeeded' or 'failed'")
    if not isinstance(execution, Iri) or not isinstance(task, Iri):
        raise ValueError("execution and task must be IRIs")
    target = find_endpoint(endpoints, publish_target)
    if not force and not execution_exists(endpoints, execution):
        raise UnknownExecutionError(
            f"no has_goal triple found for {execution.value} anywhere in the federation (use force to publish anyway)"
        )
    predicate = vocab.SUCCEEDED_IN if outcome == "succeeded" else vocab.FAILED_IN
    turtle = serialize_turtle(Graph([Triple(task, predicate, execution)]))
    return publish_turtle(target.base_url, turtle, timeout_ms=target.timeout_ms)


def suggest_alternatives(endpoints: list[EndpointDescriptor], task: Iri) -> list[Iri]:
    """Methods of a task, surfaced after a failure so the operator can
    try a different approach."""
    q = Query(select_vars=["o"], patterns=[TriplePattern(task, vocab.HAS_METHOD, Variable("o"))], distinct=True)
    rows = federated_query(endpoints, q, mode="union").bindings.rows
    return sorted({row["o"] for row in rows if isinstance(row["o"], Iri)}, key=term_key)


# ---------------------------------------------------------------------------
# Watching
# ---------------------------------------------------------------------------


class Watcher:
    """One poll step at a time; `watch` drives this on a timer.

    The baseline is an empty view, so the first poll reports tasks that
    are already ready. Each (execution, task) readiness transition is
    reported at most once per watcher, even if a flaky endpoint makes a
    task appear to leave and re-enter readiness.
    """

    def __init__(
        self,
        endpoints: list[EndpointDescriptor],
        execution: Iri,
        scope: Iri | None = None,
        derive: bool = True,
    ):
        self.endpoints = endpoints
        self.execution = execution
        self.scope = scope
        self.derive = derive
        self._prev_ready: set[Iri] = set()
        self._prev_derived: set[Iri] = set()
        self._emitted: set[Iri] = set()

    def poll(self) -> list[ReadyEvent]:
        view = compute_view(self.endpoints, self.execution, scope=self.scope, derive=self.derive)
        newly_derived = view.succeeded_derived - self._prev_derived
        events = []
        for task in sorted(view.ready - self._prev_ready, key=term_key):
            if task in self._emitted:
                continue
            because = sorted(view.requirements.get(task, set()) & newly_derived, key=term_key)
            events.append(ReadyEvent(self.execution, task, tuple(because), _now_iso()))
            self._emitted.add(task)
        self._prev_ready = set(view.ready)
        self._prev_derived = set(view.succeeded_derived)
        return events

    def poll_logged(self) -> list[ReadyEvent]:
        try:
            return self.poll()
        except FederationError as exc:
            log.warning("poll failed, will retry: %s", exc)
            return []


def watch(
    endpoints: list[EndpointDescriptor],
    execution: Iri,
    poll_interval: float,
    sink,
    max_polls: int | None = None,
    stop: threading.Event | None = None,
    scope: Iri | None = None,
    derive: bool = True,
) -> None:
    """Poll the execution and feed ReadyEvents to `sink(event)` until
    stopped (or for max_polls polls). Transient federation failures are
    logged and the next poll tries again."""
    if poll_interval < 1:
        raise ValueError("poll interval must be at least 1 second")
    watcher = Watcher(endpoints, execution, scope=scope, derive=derive)
    polls = 0
    while True:
        for event in watcher.poll_logged():
            sink(event)
        polls += 1
        if max_polls is not None and polls >= max_polls:
            return
        if stop is not None:
            if stop.wait(poll_interval):
                return
        else:
            time.sleep(poll_interval)

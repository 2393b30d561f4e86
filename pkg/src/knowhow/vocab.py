"""The know-how vocabulary: process and execution relations.

Process relations: `prohow:has_step` (the object is done as part of the
subject), `prohow:requires` (the object should be done before the
subject), `prohow:has_method` (the object is an alternative way to do the
subject). Execution relations: `proex:has_goal`, `proex:succeeded_in`,
`proex:failed_in`.

The vocabulary deliberately says nothing about whether an entity is an
object, a condition or a process, and none of these helpers ever assert a
class. Graph helpers are pure: they return new graphs.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field

from .rdf import (
    PROEX_NS,
    PROHOW_NS,
    RDFS_NS,
    Graph,
    Iri,
    Literal,
    Term,
    Triple,
    term_key,
)

HAS_STEP = Iri(PROHOW_NS + "has_step")
REQUIRES = Iri(PROHOW_NS + "requires")
HAS_METHOD = Iri(PROHOW_NS + "has_method")
HAS_GOAL = Iri(PROEX_NS + "has_goal")
SUCCEEDED_IN = Iri(PROEX_NS + "succeeded_in")
FAILED_IN = Iri(PROEX_NS + "failed_in")
RDFS_LABEL = Iri(RDFS_NS + "label")

# Legacy spelling of the success relation, found in the wild. Accepted
# wherever success assertions are read; everything here writes the
# canonical SUCCEEDED_IN.
SUCCEED_IN_LEGACY = Iri(PROEX_NS + "succeed_in")

# Open Annotation predicates used to link a process to the resources that
# describe it. No rdf:type assertions are made for annotation nodes; the
# body/target/selector structure carries the meaning.
OA_NS = "http://www.w3.org/ns/oa#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"
OA_HAS_BODY = Iri(OA_NS + "hasBody")
OA_HAS_TARGET = Iri(OA_NS + "hasTarget")
OA_HAS_SOURCE = Iri(OA_NS + "hasSource")
OA_HAS_SELECTOR = Iri(OA_NS + "hasSelector")
OA_START = Iri(OA_NS + "start")
OA_END = Iri(OA_NS + "end")
XSD_NON_NEG_INT = Iri(XSD_NS + "nonNegativeInteger")


def _require_iri(value, what: str) -> Iri:
    if not isinstance(value, Iri):
        raise ValueError(f"{what} must be an IRI, got {value!r}")
    return value


def add_step(g: Graph, task: Iri, step: Iri) -> Graph:
    """Record that `step` can be done as part of `task`."""
    return g.add(Triple(_require_iri(task, "task"), HAS_STEP, _require_iri(step, "step")))


def add_requirement(g: Graph, task: Iri, requirement: Iri) -> Graph:
    """Record that `requirement` should be done/available before `task`."""
    return g.add(Triple(_require_iri(task, "task"), REQUIRES, _require_iri(requirement, "requirement")))


def add_method(g: Graph, task: Iri, method: Iri) -> Graph:
    """Record that `method` is an alternative way of accomplishing `task`."""
    return g.add(Triple(_require_iri(task, "task"), HAS_METHOD, _require_iri(method, "method")))


def set_label(g: Graph, entity: Iri, label: str) -> Graph:
    return g.add(Triple(_require_iri(entity, "entity"), RDFS_LABEL, Literal(label)))


def _sorted_iris(terms) -> list[Iri]:
    return sorted((t for t in terms if isinstance(t, Iri)), key=term_key)


def steps_of(g: Graph, task: Iri) -> list[Iri]:
    return _sorted_iris(t.object for t in g.match(subject=task, predicate=HAS_STEP))


def requirements_of(g: Graph, task: Iri) -> list[Iri]:
    return _sorted_iris(t.object for t in g.match(subject=task, predicate=REQUIRES))


def methods_of(g: Graph, task: Iri) -> list[Iri]:
    return _sorted_iris(t.object for t in g.match(subject=task, predicate=HAS_METHOD))


def parents_of(g: Graph, entity: Iri) -> list[Iri]:
    """Tasks this entity is a step of (inverse has_step)."""
    return _sorted_iris(t.subject for t in g.match(predicate=HAS_STEP, object=entity))


def annotate(
    g: Graph,
    process_iri: Iri,
    resource_iri: Iri,
    fragment: tuple[int, int] | None = None,
    annotation_iri: Iri | None = None,
) -> Graph:
    """Link a process to a resource that describes it.

    Mints a fresh `urn:uuid:` annotation node unless `annotation_iri`
    pins one (extraction does, to stay deterministic). With `fragment`
    (start, end) the target becomes a text-position selection of the
    resource.
    """
    _require_iri(process_iri, "process")
    _require_iri(resource_iri, "resource")
    if annotation_iri is None:
        annotation_iri = Iri(f"urn:uuid:{uuid.uuid4()}")
    else:
        _require_iri(annotation_iri, "annotation")

    triples = [Triple(annotation_iri, OA_HAS_BODY, process_iri)]
    if fragment is None:
        triples.append(Triple(annotation_iri, OA_HAS_TARGET, resource_iri))
    else:
        start, end = fragment
        target = Iri(annotation_iri.value + "_target")
        selector = Iri(annotation_iri.value + "_selector")
        triples += [
            Triple(annotation_iri, OA_HAS_TARGET, target),
            Triple(target, OA_HAS_SOURCE, resource_iri),
            Triple(target, OA_HAS_SELECTOR, selector),
            Triple(selector, OA_START, Literal(str(start), datatype=XSD_NON_NEG_INT)),
            Triple(selector, OA_END, Literal(str(end), datatype=XSD_NON_NEG_INT)),
        ]
    return g.add(*triples).with_prefixes({"oa": OA_NS})


# ---------------------------------------------------------------------------
# Structural validation
# ---------------------------------------------------------------------------


@dataclass
class ProcessGraphReport:
    """What a structural scan of a know-how graph found. Cycles are
    warnings, not errors: stores accept imperfect community data."""

    decomposition_cycles: list[list[Iri]] = field(default_factory=list)
    requires_cycles: list[list[Iri]] = field(default_factory=list)
    orphan_objects: list[Iri] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def find_cycles(edges: dict[Iri, set[Iri]]) -> list[list[Iri]]:
    """Cycles in a directed graph, one per non-trivial strongly connected
    component (plus self-loops), each as a canonically sorted node list.

    Iterative Tarjan, so deep chains do not hit the recursion limit.
    """
    index: dict[Iri, int] = {}
    lowlink: dict[Iri, int] = {}
    on_stack: set[Iri] = set()
    stack: list[Iri] = []
    counter = [0]
    sccs: list[list[Iri]] = []

    nodes = set(edges)
    for targets in edges.values():
        nodes |= targets

    for root in nodes:
        if root in index:
            continue
        work: list[tuple[Iri, list[Iri], int]] = [(root, sorted(edges.get(root, ()), key=term_key), 0)]
        index[root] = lowlink[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, succs, i = work.pop()
            advanced = False
            while i < len(succs):
                succ = succs[i]
                i += 1
                if succ not in index:
                    work.append((node, succs, i))
                    index[succ] = lowlink[succ] = counter[0]
                    counter[0] += 1
                    stack.append(succ)
                    on_stack.add(succ)
                    work.append((succ, sorted(edges.get(succ, ()), key=term_key), 0))
                    advanced = True
                    break
                if succ in on_stack:
                    lowlink[node] = min(lowlink[node], index[succ])
            if advanced:
                continue
            if lowlink[node] == index[node]:
                component: list[Iri] = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                if len(component) > 1 or node in edges.get(node, ()):
                    sccs.append(sorted(component, key=term_key))
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
    sccs.sort(key=lambda c: [term_key(n) for n in c])
    return sccs


def _edge_map(g: Graph, predicates) -> dict[Iri, set[Iri]]:
    edges: dict[Iri, set[Iri]] = {}
    for t in g:
        if t.predicate in predicates and isinstance(t.subject, Iri) and isinstance(t.object, Iri):
            edges.setdefault(t.subject, set()).add(t.object)
    return edges


def validate(g: Graph) -> ProcessGraphReport:
    """Structural scan: decomposition cycles (has_step/has_method),
    requires cycles, and IRIs referenced but never described. Never
    raises on content."""
    report = ProcessGraphReport()
    report.decomposition_cycles = find_cycles(_edge_map(g, {HAS_STEP, HAS_METHOD}))
    report.requires_cycles = find_cycles(_edge_map(g, {REQUIRES}))

    subjects = {t.subject for t in g}
    objects = {t.object for t in g if isinstance(t.object, Iri)}
    report.orphan_objects = _sorted_iris(objects - subjects)

    for cycle in report.decomposition_cycles:
        report.warnings.append(
            "decomposition cycle: " + " -> ".join(n.value for n in cycle)
        )
    for cycle in report.requires_cycles:
        report.warnings.append(
            "requires cycle: " + " -> ".join(n.value for n in cycle)
        )
    if any(t.predicate == SUCCEED_IN_LEGACY for t in g):
        report.warnings.append(
            f"graph uses legacy spelling <{SUCCEED_IN_LEGACY.value}>; the canonical relation is <{SUCCEEDED_IN.value}>"
        )
    return report

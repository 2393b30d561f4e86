"""Shared fixtures: the conference example graph, in-process endpoints,
and random generators for graphs and queries."""

from __future__ import annotations

import random

import pytest

from knowhow.rdf import BlankNode, Graph, Iri, Literal, Triple, parse_turtle
from knowhow.server import EndpointConfig, KnowHowEndpoint
from knowhow.sparql import ContainsFilter, Query, TriplePattern, Variable

EX = "http://example.ex/"
PROHOW = "http://vocab.inf.ed.ac.uk/prohow#"
PROEX = "http://vocab.inf.ed.ac.uk/proex/0.1#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
XSD = "http://www.w3.org/2001/XMLSchema#"

CONFERENCE_TTL = """\
@prefix : <http://example.ex/> .
@prefix prohow: <http://vocab.inf.ed.ac.uk/prohow#> .
@prefix proex: <http://vocab.inf.ed.ac.uk/proex/0.1#> .

:organise_conference prohow:has_step :choose_conference_venue .
:organise_catering prohow:requires :preliminary_budget .
:choose_conference_venue prohow:has_method :choose_venue_method .
:execution1 proex:has_goal :organise_conference .
:organise_catering proex:succeeded_in :execution1 .
"""


@pytest.fixture
def conference_graph() -> Graph:
    return parse_turtle(CONFERENCE_TTL)


@pytest.fixture
def endpoint_factory(tmp_path):
    """Start in-process endpoints on free ports; they are stopped after
    the test."""
    started: list[KnowHowEndpoint] = []
    counter = [0]

    def make(turtle: str = "", **config_kwargs) -> KnowHowEndpoint:
        counter[0] += 1
        data_file = tmp_path / f"store{counter[0]}.ttl"
        if turtle:
            data_file.write_text(turtle, encoding="utf-8")
        config = EndpointConfig(data_file=str(data_file), **config_kwargs)
        ep = KnowHowEndpoint(config).start()
        started.append(ep)
        return ep

    yield make
    for ep in started:
        ep.stop()


# ---------------------------------------------------------------------------
# Random data
# ---------------------------------------------------------------------------


def make_term_pools(rng: random.Random):
    iris = [Iri(f"{EX}node{i}") for i in range(15)]
    predicates = [Iri(f"{EX}p{i}") for i in range(6)]
    literals = [
        Literal("alpha"),
        Literal("Beta Gamma"),
        Literal("delta", language="en"),
        Literal("Über"),
        Literal("42", datatype=Iri(XSD + "integer")),
        Literal("multi word label here"),
        Literal(""),
        Literal('tricky "quote" and \\ slash\nline'),
    ]
    bnodes = [BlankNode(f"b{i}") for i in range(3)]
    return iris, predicates, literals, bnodes


def random_graph(rng: random.Random, max_triples: int = 200) -> Graph:
    iris, predicates, literals, bnodes = make_term_pools(rng)
    subjects = iris + bnodes
    objects = iris + literals + bnodes
    n = rng.randint(1, max_triples)
    triples = {
        Triple(rng.choice(subjects), rng.choice(predicates), rng.choice(objects))
        for _ in range(n)
    }
    return Graph(triples)


def random_query(rng: random.Random, g: Graph) -> Query:
    """1-3 patterns that share variables, biased toward terms present in
    the graph so joins actually produce rows."""
    iris, predicates, literals, bnodes = make_term_pools(rng)
    triples = g.sorted_triples()
    var_names = ["a", "b", "c", "d"]
    n_patterns = rng.randint(1, 3)
    patterns: list[TriplePattern] = []
    used_vars: list[str] = []

    for _ in range(n_patterns):
        if triples and rng.random() < 0.8:
            seed = rng.choice(triples)
            s, p, o = seed.subject, seed.predicate, seed.object
        else:
            s, p, o = rng.choice(iris + bnodes), rng.choice(predicates), rng.choice(iris + literals)

        def maybe_var(term, position_can_vary=True):
            if position_can_vary and rng.random() < 0.6:
                if used_vars and rng.random() < 0.6:
                    name = rng.choice(used_vars)
                else:
                    name = rng.choice(var_names)
                if name not in used_vars:
                    used_vars.append(name)
                return Variable(name)
            return term

        subject = maybe_var(s)
        obj = maybe_var(o)
        predicate = p if rng.random() < 0.7 else maybe_var(p)
        if not isinstance(predicate, (Variable,)) and rng.random() < 0.05:
            predicate = rng.choice(predicates)
        patterns.append(TriplePattern(subject, predicate, obj))

    filters = []
    if used_vars and rng.random() < 0.4:
        needle = rng.choice(["a", "e", "node", "Beta", "ü", "zz", '"', "1"])
        filters.append(ContainsFilter(rng.choice(used_vars), needle))

    select_vars = None
    if used_vars and rng.random() < 0.5:
        k = rng.randint(1, len(set(used_vars)))
        select_vars = rng.sample(sorted(set(used_vars)), k)

    limit = rng.choice([None, None, None, 1, 3, 10])
    offset = rng.choice([0, 0, 0, 1, 2])
    if not used_vars:
        select_vars = None
    return Query(
        select_vars=select_vars,
        patterns=patterns,
        filters=filters,
        distinct=rng.random() < 0.4,
        limit=limit,
        offset=offset,
    )


# ---------------------------------------------------------------------------
# Random process graphs (decomposition edges only ever point from lower
# to higher node index, so the structure is a DAG by construction)
# ---------------------------------------------------------------------------

PROHOW_NS = PROHOW
PROEX_NS = PROEX


def random_process_case(rng: random.Random, max_nodes: int = 50):
    """A random acyclic process graph plus outcome assertions.
    Returns (graph, execution_iri, goal_iris)."""
    from knowhow import vocab

    n = rng.randint(1, max_nodes)
    nodes = [Iri(f"{EX}n{i}") for i in range(n)]
    execution = Iri(f"{EX}exec_{rng.randrange(10**6)}")
    goals = {nodes[0]}
    if n > 1 and rng.random() < 0.2:
        goals.add(rng.choice(nodes[1:]))

    triples = [Triple(execution, vocab.HAS_GOAL, goal) for goal in sorted(goals, key=str)]
    for i in range(n - 1):
        for j in range(i + 1, n):
            r = rng.random()
            if r < 0.10:
                triples.append(Triple(nodes[i], vocab.HAS_STEP, nodes[j]))
            elif r < 0.16:
                triples.append(Triple(nodes[i], vocab.HAS_METHOD, nodes[j]))
            elif r < 0.22:
                triples.append(Triple(nodes[i], vocab.REQUIRES, nodes[j]))

    for node in nodes:
        r = rng.random()
        if r < 0.25:
            triples.append(Triple(node, vocab.SUCCEEDED_IN, execution))
        elif r < 0.30:
            triples.append(Triple(node, vocab.SUCCEED_IN_LEGACY, execution))
        elif r < 0.38:
            triples.append(Triple(node, vocab.FAILED_IN, execution))
        if rng.random() < 0.03:
            triples.append(Triple(node, vocab.SUCCEEDED_IN, Iri(f"{EX}other_exec")))

    # disconnected noise, including a requires cycle that must stay inert
    triples.append(Triple(Iri(f"{EX}junk1"), vocab.REQUIRES, Iri(f"{EX}junk2")))
    triples.append(Triple(Iri(f"{EX}junk2"), vocab.REQUIRES, Iri(f"{EX}junk1")))
    return Graph(triples), execution, goals


def oracle_execution_sets(g: Graph, execution, goals):
    """Independent reading of the derivation rules: recursive evaluation
    over the DAG instead of an iterated fixpoint."""
    from knowhow import vocab

    steps: dict = {}
    methods: dict = {}
    requires: dict = {}
    succeeded = set()
    failed = set()
    for t in g:
        if t.predicate == vocab.HAS_STEP:
            steps.setdefault(t.subject, set()).add(t.object)
        elif t.predicate == vocab.HAS_METHOD:
            methods.setdefault(t.subject, set()).add(t.object)
        elif t.predicate == vocab.REQUIRES:
            requires.setdefault(t.subject, set()).add(t.object)
        elif t.predicate in (vocab.SUCCEEDED_IN, vocab.SUCCEED_IN_LEGACY) and t.object == execution:
            succeeded.add(t.subject)
        elif t.predicate == vocab.FAILED_IN and t.object == execution:
            failed.add(t.subject)

    relevant = set(goals)
    frontier = list(goals)
    while frontier:
        node = frontier.pop()
        for edges in (steps, methods, requires):
            for succ in edges.get(node, ()):
                if succ not in relevant:
                    relevant.add(succ)
                    frontier.append(succ)

    memo: dict = {}

    def derived(t) -> bool:
        if t in memo:
            return memo[t]
        if t in succeeded:
            memo[t] = True
            return True
        memo[t] = False  # safe: decomposition edges only increase
        ms, ss = methods.get(t, set()), steps.get(t, set())
        value = bool(ms and any(derived(m) for m in ms)) or bool(ss and all(derived(s) for s in ss))
        memo[t] = value
        return value

    derived_set = {t for t in relevant | succeeded if derived(t)}
    ready = {
        t
        for t in relevant
        if t not in derived_set and t not in failed and requires.get(t, set()) <= derived_set
    }
    blocked = {
        t: requires.get(t, set()) - derived_set
        for t in relevant
        if t not in ready and t not in derived_set and t not in failed
    }
    return {
        "relevant": relevant,
        "succeeded_asserted": succeeded,
        "failed_asserted": failed,
        "succeeded_derived": derived_set,
        "ready": ready,
        "blocked": blocked,
    }


# ---------------------------------------------------------------------------
# Brute-force query oracle (independent nested-loop implementation)
# ---------------------------------------------------------------------------


def _oracle_unify(pattern: TriplePattern, triple: Triple, binding: dict):
    result = dict(binding)
    for part, value in (
        (pattern.subject, triple.subject),
        (pattern.predicate, triple.predicate),
        (pattern.object, triple.object),
    ):
        if isinstance(part, Variable):
            if part.name in result:
                if result[part.name] != value:
                    return None
            else:
                result[part.name] = value
        elif part != value:
            return None
    return result


def _oracle_lexical(term) -> str:
    if isinstance(term, Iri):
        return term.value
    if isinstance(term, BlankNode):
        return term.label
    return term.lexical


def _oracle_sort_key(term) -> str:
    if isinstance(term, Iri):
        return f"<{term.value}>"
    if isinstance(term, BlankNode):
        return f"_:{term.label}"
    key = f'"{term.lexical}"'
    if term.language:
        key += f"@{term.language}"
    if term.datatype:
        key += f"^^<{term.datatype.value}>"
    return key


def oracle_evaluate(q: Query, g: Graph) -> list[dict]:
    """Nested loops over the full triple list, no indexes, no sharing
    with the engine's code path."""
    rows = [{}]
    for pattern in q.patterns:
        next_rows = []
        for row in rows:
            for triple in g:
                unified = _oracle_unify(pattern, triple, row)
                if unified is not None:
                    next_rows.append(unified)
        rows = next_rows

    for f in q.filters:
        rows = [r for r in rows if f.needle.lower() in _oracle_lexical(r[f.var]).lower()]

    projection = q.projection()
    rows = [{v: r[v] for v in projection} for r in rows]

    if q.distinct:
        seen, unique = set(), []
        for r in rows:
            key = tuple(_oracle_sort_key(r[v]) for v in projection)
            if key not in seen:
                seen.add(key)
                unique.append(r)
        rows = unique

    rows.sort(key=lambda r: tuple(_oracle_sort_key(r[v]) for v in projection))
    if q.offset:
        rows = rows[q.offset:]
    if q.limit is not None:
        rows = rows[: q.limit]
    return rows

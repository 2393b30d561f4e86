"""SPARQL-subset queries over a single graph.

Grammar:

    PREFIX p: <iri> ...
    SELECT [DISTINCT] (?v ... | *)
    WHERE { pattern ('.' pattern)* ('.')? filter* }
    [LIMIT n] [OFFSET n]

with `filter` being the single supported form
`FILTER(CONTAINS(LCASE(STR(?v)), "needle"))`. Evaluation is the natural
join of the basic graph pattern, then filters, projection, DISTINCT and
LIMIT/OFFSET, with rows sorted by canonical term strings so results are
deterministic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .rdf import (
    DEFAULT_PREFIXES,
    RDF_NS,
    RDFS_NS,
    BlankNode,
    Graph,
    Iri,
    Literal,
    Term,
    lexical_str,
    term_key,
)

RDFS_LABEL = Iri(RDFS_NS + "label")


class QueryParseError(ValueError):
    pass


@dataclass(frozen=True)
class Variable:
    name: str


PatternTerm = Term | Variable


@dataclass(frozen=True)
class TriplePattern:
    subject: PatternTerm
    predicate: PatternTerm
    object: PatternTerm

    def __post_init__(self) -> None:
        if not isinstance(self.predicate, (Variable, Iri)):
            raise ValueError("concrete predicate must be an IRI")
        if isinstance(self.subject, Literal):
            raise ValueError("concrete subject cannot be a literal")

    def variables(self) -> list[str]:
        out: list[str] = []
        for pos in (self.subject, self.predicate, self.object):
            if isinstance(pos, Variable) and pos.name not in out:
                out.append(pos.name)
        return out


@dataclass(frozen=True)
class ContainsFilter:
    var: str
    needle: str


@dataclass
class Query:
    select_vars: list[str] | None  # None means SELECT *
    patterns: list[TriplePattern]
    filters: list[ContainsFilter] = field(default_factory=list)
    distinct: bool = False
    limit: int | None = None
    offset: int = 0

    def __post_init__(self) -> None:
        bound = set(self.pattern_vars())
        if self.select_vars is not None:
            for v in self.select_vars:
                if v not in bound:
                    raise ValueError(f"selected variable ?{v} appears in no pattern")
        for f in self.filters:
            if f.var not in bound:
                raise ValueError(f"filter variable ?{f.var} appears in no pattern")
        if self.limit is not None and self.limit < 0:
            raise ValueError("LIMIT must be non-negative")
        if self.offset is None:
            self.offset = 0
        if self.offset < 0:
            raise ValueError("OFFSET must be non-negative")

    def pattern_vars(self) -> list[str]:
        """Variable names in first-appearance order across patterns."""
        out: list[str] = []
        for p in self.patterns:
            for v in p.variables():
                if v not in out:
                    out.append(v)
        return out

    def projection(self) -> list[str]:
        return self.pattern_vars() if self.select_vars is None else list(self.select_vars)


@dataclass
class BindingSet:
    vars: list[str]
    rows: list[dict[str, Term]]


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+|\#[^\n]*)
    | (?P<iriref><[^<>"{}|^`\\\s]*>)
    | (?P<string>"(?:[^"\\\n]|\\.)*")
    | (?P<var>\?[A-Za-z_][A-Za-z0-9_]*)
    | (?P<langtag>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
    | (?P<hathat>\^\^)
    | (?P<blank>_:[A-Za-z0-9_]+)
    | (?P<pname>[A-Za-z0-9_-]*:[A-Za-z0-9_]*)
    | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<number>[0-9]+)
    | (?P<punct>[{}().,*])
    """,
    re.VERBOSE,
)

_STRING_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def _unescape(quoted: str) -> str:
    body = quoted[1:-1]
    out: list[str] = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\" and i + 1 < len(body):
            esc = body[i + 1]
            if esc in _STRING_ESCAPES:
                out.append(_STRING_ESCAPES[esc])
                i += 2
                continue
            raise QueryParseError(f"unknown escape sequence \\{esc}")
        out.append(c)
        i += 1
    return "".join(out)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens: list[tuple[str, str]] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise QueryParseError(f"unexpected character {text[pos]!r} at offset {pos}")
        pos = m.end()
        kind = m.lastgroup
        if kind == "ws":
            continue
        tokens.append((kind, m.group(0)))
    tokens.append(("eof", ""))
    return tokens


class _QueryParser:
    _KEYWORDS = {"select", "distinct", "where", "prefix", "filter", "contains", "lcase", "str", "limit", "offset"}

    def __init__(self, tokens: list[tuple[str, str]]):
        self.tokens = tokens
        self.pos = 0
        self.prefixes = dict(DEFAULT_PREFIXES)

    def peek(self) -> tuple[str, str]:
        return self.tokens[self.pos]

    def take(self) -> tuple[str, str]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_punct(self, value: str) -> None:
        kind, text = self.take()
        if kind != "punct" or text != value:
            raise QueryParseError(f"expected {value!r}, found {text!r}")

    def expect_keyword(self, word: str) -> None:
        kind, text = self.take()
        if kind != "word" or text.lower() != word:
            raise QueryParseError(f"expected {word.upper()}, found {text!r}")

    def at_keyword(self, word: str) -> bool:
        kind, text = self.peek()
        return kind == "word" and text.lower() == word

    def parse(self) -> Query:
        while self.at_keyword("prefix"):
            self.take()
            kind, text = self.take()
            if kind != "pname" or not text.endswith(":"):
                raise QueryParseError(f"malformed PREFIX declaration near {text!r}")
            prefix = text[:-1]
            kind, iri = self.take()
            if kind != "iriref":
                raise QueryParseError("PREFIX declaration needs an <iri>")
            self.prefixes[prefix] = iri[1:-1]

        self.expect_keyword("select")
        distinct = False
        if self.at_keyword("distinct"):
            self.take()
            distinct = True

        select_vars: list[str] | None
        if self.peek() == ("punct", "*"):
            self.take()
            select_vars = None
        else:
            select_vars = []
            while self.peek()[0] == "var":
                select_vars.append(self.take()[1][1:])
            if not select_vars:
                raise QueryParseError("SELECT needs at least one variable or *")

        self.expect_keyword("where")
        self.expect_punct("{")
        patterns: list[TriplePattern] = []
        filters: list[ContainsFilter] = []
        while self.peek() != ("punct", "}"):
            if self.at_keyword("filter"):
                filters.append(self.parse_filter())
            else:
                patterns.append(self.parse_pattern())
            if self.peek() == ("punct", "."):
                self.take()
        self.expect_punct("}")

        limit = offset = None
        while self.peek()[0] == "word":
            if self.at_keyword("limit"):
                self.take()
                limit = self.parse_number()
            elif self.at_keyword("offset"):
                self.take()
                offset = self.parse_number()
            else:
                raise QueryParseError(f"unexpected trailing token {self.peek()[1]!r}")
        if self.peek()[0] != "eof":
            raise QueryParseError(f"unexpected trailing token {self.peek()[1]!r}")

        try:
            return Query(
                select_vars=select_vars,
                patterns=patterns,
                filters=filters,
                distinct=distinct,
                limit=limit,
                offset=offset,
            )
        except ValueError as exc:
            raise QueryParseError(str(exc)) from exc

    def parse_number(self) -> int:
        kind, text = self.take()
        if kind != "number":
            raise QueryParseError(f"expected a non-negative integer, found {text!r}")
        return int(text)

    def parse_pattern(self) -> TriplePattern:
        s = self.parse_term(allow_literal=False)
        p = self.parse_term(allow_literal=False, predicate=True)
        o = self.parse_term(allow_literal=True)
        try:
            return TriplePattern(s, p, o)
        except ValueError as exc:
            raise QueryParseError(str(exc)) from exc

    def parse_term(self, allow_literal: bool, predicate: bool = False) -> PatternTerm:
        kind, text = self.take()
        if kind == "var":
            return Variable(text[1:])
        if kind == "iriref":
            return Iri(text[1:-1])
        if kind == "pname":
            prefix, local = text.split(":", 1)
            if prefix not in self.prefixes:
                raise QueryParseError(f"unknown prefix: {prefix!r}")
            return Iri(self.prefixes[prefix] + local)
        if kind == "word" and text == "a" and predicate:
            return Iri(RDF_NS + "type")
        if kind == "blank":
            if predicate:
                raise QueryParseError("blank node not allowed as predicate")
            return BlankNode(text[2:])
        if kind == "string":
            if not allow_literal:
                raise QueryParseError("literal not allowed in this position")
            lexical = _unescape(text)
            nk, nt = self.peek()
            if nk == "langtag":
                self.take()
                return Literal(lexical, language=nt[1:])
            if nk == "hathat":
                self.take()
                dk, dt = self.take()
                if dk == "iriref":
                    return Literal(lexical, datatype=Iri(dt[1:-1]))
                if dk == "pname":
                    prefix, local = dt.split(":", 1)
                    if prefix not in self.prefixes:
                        raise QueryParseError(f"unknown prefix: {prefix!r}")
                    return Literal(lexical, datatype=Iri(self.prefixes[prefix] + local))
                raise QueryParseError("expected datatype IRI after '^^'")
            return Literal(lexical)
        raise QueryParseError(f"unexpected token {text!r} in triple pattern")

    def parse_filter(self) -> ContainsFilter:
        self.expect_keyword("filter")
        self.expect_punct("(")
        self.expect_keyword("contains")
        self.expect_punct("(")
        self.expect_keyword("lcase")
        self.expect_punct("(")
        self.expect_keyword("str")
        self.expect_punct("(")
        kind, text = self.take()
        if kind != "var":
            raise QueryParseError("STR() expects a variable")
        var = text[1:]
        self.expect_punct(")")
        self.expect_punct(")")
        self.expect_punct(",")
        kind, needle = self.take()
        if kind != "string":
            raise QueryParseError("CONTAINS() expects a string literal")
        self.expect_punct(")")
        self.expect_punct(")")
        return ContainsFilter(var, _unescape(needle))


def parse_query(text: str) -> Query:
    """Parse query text in the supported subset into a Query.

    Prefixed names expand against explicit PREFIX declarations layered
    over the default registry.
    """
    return _QueryParser(_tokenize(text)).parse()


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _match_pattern(pattern: TriplePattern, triple, binding: dict[str, Term]) -> dict[str, Term] | None:
    out = binding
    for pos, value in (
        (pattern.subject, triple.subject),
        (pattern.predicate, triple.predicate),
        (pattern.object, triple.object),
    ):
        if isinstance(pos, Variable):
            bound = out.get(pos.name)
            if bound is None:
                if out is binding:
                    out = dict(binding)
                out[pos.name] = value
            elif bound != value:
                return None
        elif pos != value:
            return None
    return out if out is not binding else dict(binding)


def evaluate(q: Query, g: Graph) -> BindingSet:
    """Evaluate a query over one graph.

    A zero-pattern query yields a single empty row, matching the SPARQL
    semantics of the empty group pattern.
    """
    bindings: list[dict[str, Term]] = [{}]
    for pattern in q.patterns:
        extended: list[dict[str, Term]] = []
        for binding in bindings:
            for triple in g:
                b2 = _match_pattern(pattern, triple, binding)
                if b2 is not None:
                    extended.append(b2)
        bindings = extended
        if not bindings:
            break

    for f in q.filters:
        needle = f.needle.lower()
        bindings = [b for b in bindings if needle in lexical_str(b[f.var]).lower()]

    vars_out = q.projection()
    rows = [{v: b[v] for v in vars_out} for b in bindings]

    if q.distinct:
        seen = set()
        unique = []
        for row in rows:
            key = tuple(term_key(row[v]) for v in vars_out)
            if key not in seen:
                seen.add(key)
                unique.append(row)
        rows = unique

    rows.sort(key=lambda row: tuple(term_key(row[v]) for v in vars_out))

    if q.offset:
        rows = rows[q.offset:]
    if q.limit is not None:
        rows = rows[:q.limit]
    return BindingSet(vars_out, rows)


# ---------------------------------------------------------------------------
# Keyword search
# ---------------------------------------------------------------------------


def keyword_query(keywords: list[str]) -> Query:
    """The label-search query a keyword list compiles to: one label
    pattern plus a CONTAINS filter per keyword."""
    cleaned = [k.strip() for k in keywords if k and k.strip()]
    if not cleaned:
        raise ValueError("keyword search needs at least one non-empty keyword")
    return Query(
        select_vars=["entity", "label"],
        patterns=[TriplePattern(Variable("entity"), RDFS_LABEL, Variable("label"))],
        filters=[ContainsFilter("label", k) for k in cleaned],
    )


def keyword_search(g: Graph, keywords: list[str]) -> BindingSet:
    """Entities whose rdfs:label contains every keyword, case-insensitively."""
    return evaluate(keyword_query(keywords), g)


# ---------------------------------------------------------------------------
# Serialization (for shipping queries to remote endpoints)
# ---------------------------------------------------------------------------


def _escape_string(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")


def _query_term(term) -> str:
    if isinstance(term, Variable):
        return f"?{term.name}"
    if isinstance(term, Iri):
        return f"<{term.value}>"
    if isinstance(term, BlankNode):
        return f"_:{term.label}"
    lit = f'"{_escape_string(term.lexical)}"'
    if term.language:
        return f"{lit}@{term.language}"
    if term.datatype:
        return f"{lit}^^<{term.datatype.value}>"
    return lit


def serialize_query(q: Query) -> str:
    """Render a Query back to text the subset grammar (and any standard
    endpoint) accepts. All IRIs come out absolute, so no PREFIX header
    is needed and the text is self-contained."""
    head = "SELECT DISTINCT" if q.distinct else "SELECT"
    if q.select_vars is None:
        head += " *"
    else:
        head += "".join(f" ?{v}" for v in q.select_vars)
    body = [
        f"  {_query_term(p.subject)} {_query_term(p.predicate)} {_query_term(p.object)} ."
        for p in q.patterns
    ]
    body += [
        f'  FILTER(CONTAINS(LCASE(STR(?{f.var})), "{_escape_string(f.needle)}"))'
        for f in q.filters
    ]
    lines = [head, "WHERE {"] + body + ["}"]
    if q.limit is not None:
        lines.append(f"LIMIT {q.limit}")
    if q.offset:
        lines.append(f"OFFSET {q.offset}")
    return "\n".join(lines)

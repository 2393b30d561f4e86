"""RDF data model and a small Turtle dialect.

Terms, triples and graphs are immutable values: every "mutating" graph
operation returns a new Graph. That makes graphs safe to share between
threads; the persistent store serialises writers on its own lock.

The Turtle support is deliberately a dialect, not the full grammar:
`@prefix` directives, prefixed names, `<absolute-iris>`, string literals
with optional `@lang` / `^^datatype`, the `a` keyword, `;` and `,`
abbreviations, `_:label` blank nodes and `#` comments. No collections,
no `[...]` property lists, no bare numeric/boolean literals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from urllib.parse import urljoin

# Well-known namespaces. The empty prefix is the scratch namespace used
# for locally minted identifiers.
EX_NS = "http://example.ex/"
RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS_NS = "http://www.w3.org/2000/01/rdf-schema#"
PROHOW_NS = "http://vocab.inf.ed.ac.uk/prohow#"
PROEX_NS = "http://vocab.inf.ed.ac.uk/proex/0.1#"

DEFAULT_PREFIXES: dict[str, str] = {
    "": EX_NS,
    "rdf": RDF_NS,
    "rdfs": RDFS_NS,
    "prohow": PROHOW_NS,
    "proex": PROEX_NS,
}

_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*:")
_BLANK_LABEL_RE = re.compile(r"^[A-Za-z0-9_]+$")
_LANGTAG_RE = re.compile(r"^[A-Za-z]+(-[A-Za-z0-9]+)*$")
# Local part a prefixed name may carry, both when parsing and when the
# serializer decides whether an IRI can be compacted.
_LOCAL_RE = re.compile(r"^[A-Za-z0-9_]+$")
_IRI_FORBIDDEN = set('<>"{}|^`\\')


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Iri:
    """An absolute IRI."""

    value: str

    def __post_init__(self) -> None:
        if not _SCHEME_RE.match(self.value):
            raise ValueError(f"IRI is not absolute: {self.value!r}")
        for c in self.value:
            if c.isspace() or c in _IRI_FORBIDDEN:
                raise ValueError(f"IRI contains forbidden character {c!r}: {self.value!r}")


@dataclass(frozen=True)
class Literal:
    """A literal with at most one of a language tag or a datatype IRI.

    Datatypes are stored, never interpreted; all comparisons are lexical.
    """

    lexical: str
    language: str | None = None
    datatype: Iri | None = None

    def __post_init__(self) -> None:
        if self.language is not None and self.datatype is not None:
            raise ValueError("literal cannot carry both a language tag and a datatype")
        if self.language is not None and not _LANGTAG_RE.match(self.language):
            raise ValueError(f"malformed language tag: {self.language!r}")


@dataclass(frozen=True)
class BlankNode:
    label: str

    def __post_init__(self) -> None:
        if not _BLANK_LABEL_RE.match(self.label):
            raise ValueError(f"malformed blank node label: {self.label!r}")


Term = Iri | Literal | BlankNode


@dataclass(frozen=True)
class Triple:
    subject: Term
    predicate: Term
    object: Term

    def __post_init__(self) -> None:
        if not isinstance(self.predicate, Iri):
            raise ValueError("triple predicate must be an IRI")
        if isinstance(self.subject, Literal):
            raise ValueError("triple subject cannot be a literal")


def lexical_str(term: Term) -> str:
    """The plain string form of a term: IRI text, literal lexical form or
    blank node label. This is what keyword filters match against."""
    if isinstance(term, Iri):
        return term.value
    if isinstance(term, Literal):
        return term.lexical
    return term.label


def term_key(term: Term) -> str:
    """Canonical string for a term; byte-wise comparison of these keys is
    the sort order used everywhere output must be deterministic."""
    if isinstance(term, Iri):
        return f"<{term.value}>"
    if isinstance(term, BlankNode):
        return f"_:{term.label}"
    key = f'"{term.lexical}"'
    if term.language is not None:
        key += f"@{term.language}"
    if term.datatype is not None:
        key += f"^^<{term.datatype.value}>"
    return key


def triple_key(t: Triple) -> tuple[str, str, str]:
    return (term_key(t.subject), term_key(t.predicate), term_key(t.object))


# ---------------------------------------------------------------------------
# Graph
# ---------------------------------------------------------------------------


class Graph:
    """A duplicate-free set of triples plus a prefix map.

    Equality is triple-set equality; the prefix map is presentation
    metadata only. Instances are immutable: `add` and `union` return new
    graphs.
    """

    __slots__ = ("_triples", "_prefixes")

    def __init__(self, triples=(), prefixes: dict[str, str] | None = None):
        self._triples: frozenset[Triple] = frozenset(triples)
        merged = dict(DEFAULT_PREFIXES)
        if prefixes:
            merged.update(prefixes)
        self._prefixes: dict[str, str] = merged

    @property
    def prefixes(self) -> dict[str, str]:
        return dict(self._prefixes)

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self):
        return iter(self._triples)

    def __contains__(self, t: Triple) -> bool:
        return t in self._triples

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._triples == other._triples

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"Graph({len(self._triples)} triples)"

    def add(self, *triples: Triple) -> "Graph":
        return Graph(self._triples.union(triples), self._prefixes)

    def union(self, other: "Graph") -> "Graph":
        merged = dict(self._prefixes)
        merged.update(other._prefixes)
        return Graph(self._triples | other._triples, merged)

    def with_prefixes(self, prefixes: dict[str, str]) -> "Graph":
        merged = dict(self._prefixes)
        merged.update(prefixes)
        return Graph(self._triples, merged)

    def match(self, subject=None, predicate=None, object=None):
        """Iterate triples matching the given concrete positions; None is
        a wildcard."""
        for t in self._triples:
            if subject is not None and t.subject != subject:
                continue
            if predicate is not None and t.predicate != predicate:
                continue
            if object is not None and t.object != object:
                continue
            yield t

    def sorted_triples(self) -> list[Triple]:
        return sorted(self._triples, key=triple_key)


def expand(prefixed_name: str, prefixes: dict[str, str]) -> Iri:
    """Expand `prefix:local` against a prefix map."""
    if ":" not in prefixed_name:
        raise ValueError(f"not a prefixed name: {prefixed_name!r}")
    prefix, local = prefixed_name.split(":", 1)
    if prefix not in prefixes:
        raise ValueError(f"unknown prefix: {prefix!r}")
    return Iri(prefixes[prefix] + local)


# ---------------------------------------------------------------------------
# Turtle lexer
# ---------------------------------------------------------------------------


class TurtleParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


@dataclass
class _Token:
    kind: str
    value: str
    line: int
    col: int


_ESCAPES = {
    "t": "\t",
    "b": "\b",
    "n": "\n",
    "r": "\r",
    "f": "\f",
    '"': '"',
    "'": "'",
    "\\": "\\",
}

_PNAME_PREFIX_RE = re.compile(r"[A-Za-z0-9_-]*")


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.i = 0
        self.line = 1
        self.col = 1

    def error(self, msg: str) -> TurtleParseError:
        return TurtleParseError(msg, self.line, self.col)

    def _advance(self, n: int = 1) -> None:
        for _ in range(n):
            if self.i < len(self.text):
                if self.text[self.i] == "\n":
                    self.line += 1
                    self.col = 1
                else:
                    self.col += 1
                self.i += 1

    def _peek(self, offset: int = 0) -> str:
        j = self.i + offset
        return self.text[j] if j < len(self.text) else ""

    def tokens(self) -> list[_Token]:
        out: list[_Token] = []
        while True:
            tok = self._next()
            out.append(tok)
            if tok.kind == "eof":
                return out

    def _next(self) -> _Token:
        # Skip whitespace and comments.
        while self.i < len(self.text):
            c = self.text[self.i]
            if c.isspace():
                self._advance()
            elif c == "#":
                while self.i < len(self.text) and self.text[self.i] != "\n":
                    self._advance()
            else:
                break
        line, col = self.line, self.col
        if self.i >= len(self.text):
            return _Token("eof", "", line, col)
        c = self.text[self.i]

        if c == "<":
            return self._iriref(line, col)
        if c == '"':
            return self._string(line, col)
        if c == "@":
            return self._at_word(line, col)
        if c == "^":
            if self._peek(1) == "^":
                self._advance(2)
                return _Token("hathat", "^^", line, col)
            raise self.error("unexpected '^' (did you mean '^^'?)")
        if c in ".;,":
            self._advance()
            return _Token({".": "dot", ";": "semi", ",": "comma"}[c], c, line, col)
        if c == "_" and self._peek(1) == ":":
            self._advance(2)
            label = self._take_while(lambda ch: ch.isalnum() or ch == "_")
            if not label:
                raise self.error("missing blank node label after '_:'")
            return _Token("blank", label, line, col)

        # Prefixed name or the bare keyword `a`. A pname is
        # `prefix ':' local` where either side may be empty.
        m = _PNAME_PREFIX_RE.match(self.text, self.i)
        word = m.group(0) if m else ""
        after = self.i + len(word)
        if after < len(self.text) and self.text[after] == ":":
            self._advance(len(word) + 1)
            local = self._take_while(lambda ch: ch.isalnum() or ch == "_")
            return _Token("pname", f"{word}:{local}", line, col)
        if word == "a":
            self._advance(1)
            return _Token("a", "a", line, col)
        raise self.error(f"unexpected character {c!r}")

    def _take_while(self, pred) -> str:
        start = self.i
        while self.i < len(self.text) and pred(self.text[self.i]):
            self._advance()
        return self.text[start:self.i]

    def _iriref(self, line: int, col: int) -> _Token:
        self._advance()  # '<'
        chars: list[str] = []
        while True:
            if self.i >= len(self.text):
                raise TurtleParseError("unterminated IRI", line, col)
            c = self.text[self.i]
            if c == ">":
                self._advance()
                return _Token("iriref", "".join(chars), line, col)
            if c.isspace():
                raise self.error("whitespace inside IRI")
            chars.append(c)
            self._advance()

    def _string(self, line: int, col: int) -> _Token:
        self._advance()  # opening quote
        chars: list[str] = []
        while True:
            if self.i >= len(self.text):
                raise TurtleParseError("unterminated string literal", line, col)
            c = self.text[self.i]
            if c == '"':
                self._advance()
                return _Token("string", "".join(chars), line, col)
            if c == "\\":
                self._advance()
                esc = self._peek()
                if esc in _ESCAPES:
                    chars.append(_ESCAPES[esc])
                    self._advance()
                elif esc in ("u", "U"):
                    width = 4 if esc == "u" else 8
                    self._advance()
                    hexdigits = self.text[self.i:self.i + width]
                    if len(hexdigits) < width or not all(h in "0123456789abcdefABCDEF" for h in hexdigits):
                        raise self.error(f"malformed \\{esc} escape")
                    chars.append(chr(int(hexdigits, 16)))
                    self._advance(width)
                else:
                    raise self.error(f"unknown escape sequence \\{esc}")
            elif c == "\n":
                raise self.error("newline inside string literal")
            else:
                chars.append(c)
                self._advance()

    def _at_word(self, line: int, col: int) -> _Token:
        self._advance()  # '@'
        word = self._take_while(lambda ch: ch.isalnum() or ch == "-")
        if word == "prefix":
            return _Token("prefix_directive", word, line, col)
        if _LANGTAG_RE.match(word):
            return _Token("langtag", word, line, col)
        raise TurtleParseError(f"malformed @-directive or language tag: @{word}", line, col)


# ---------------------------------------------------------------------------
# Turtle parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token], base_iri: str | None):
        self.tokens = tokens
        self.pos = 0
        self.base_iri = base_iri
        self.prefixes = dict(DEFAULT_PREFIXES)
        self.declared: dict[str, str] = {}
        self.triples: list[Triple] = []

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self, kind: str | None = None) -> _Token:
        tok = self.tokens[self.pos]
        if kind is not None and tok.kind != kind:
            raise TurtleParseError(f"expected {kind}, found {tok.kind} {tok.value!r}", tok.line, tok.col)
        self.pos += 1
        return tok

    def parse(self) -> Graph:
        while self.peek().kind != "eof":
            if self.peek().kind == "prefix_directive":
                self.prefix_decl()
            else:
                self.triple_block()
        return Graph(self.triples, self.declared)

    def prefix_decl(self) -> None:
        self.take("prefix_directive")
        name_tok = self.take("pname")
        prefix, local = name_tok.value.split(":", 1)
        if local:
            raise TurtleParseError("malformed prefix declaration", name_tok.line, name_tok.col)
        iri_tok = self.take("iriref")
        ns = self.resolve_iri(iri_tok)
        self.prefixes[prefix] = ns
        self.declared[prefix] = ns
        self.take("dot")

    def triple_block(self) -> None:
        subject = self.term(position="subject")
        while True:
            predicate = self.predicate()
            while True:
                obj = self.term(position="object")
                self.triples.append(Triple(subject, predicate, obj))
                if self.peek().kind == "comma":
                    self.take()
                    continue
                break
            if self.peek().kind == "semi":
                self.take()
                if self.peek().kind == "dot":  # tolerate trailing ';'
                    break
                continue
            break
        self.take("dot")

    def predicate(self) -> Iri:
        tok = self.peek()
        if tok.kind == "a":
            self.take()
            return Iri(RDF_NS + "type")
        term = self.term(position="predicate")
        if not isinstance(term, Iri):
            raise TurtleParseError("predicate must be an IRI", tok.line, tok.col)
        return term

    def term(self, position: str) -> Term:
        tok = self.peek()
        if tok.kind == "iriref":
            self.take()
            return Iri(self.resolve_iri(tok))
        if tok.kind == "pname":
            self.take()
            return self.expand_pname(tok)
        if tok.kind == "blank":
            if position == "predicate":
                raise TurtleParseError("blank node cannot be a predicate", tok.line, tok.col)
            self.take()
            return BlankNode(tok.value)
        if tok.kind == "string":
            if position != "object":
                raise TurtleParseError(f"literal not allowed as {position}", tok.line, tok.col)
            self.take()
            return self.literal_rest(tok.value)
        raise TurtleParseError(f"expected {position}, found {tok.kind} {tok.value!r}", tok.line, tok.col)

    def literal_rest(self, lexical: str) -> Literal:
        tok = self.peek()
        if tok.kind == "langtag":
            self.take()
            return Literal(lexical, language=tok.value)
        if tok.kind == "hathat":
            self.take()
            dt_tok = self.peek()
            if dt_tok.kind == "iriref":
                self.take()
                return Literal(lexical, datatype=Iri(self.resolve_iri(dt_tok)))
            if dt_tok.kind == "pname":
                self.take()
                dt = self.expand_pname(dt_tok)
                return Literal(lexical, datatype=dt)
            raise TurtleParseError("expected datatype IRI after '^^'", dt_tok.line, dt_tok.col)
        return Literal(lexical)

    def expand_pname(self, tok: _Token) -> Iri:
        prefix, local = tok.value.split(":", 1)
        if prefix not in self.prefixes:
            raise TurtleParseError(f"undeclared prefix: {prefix!r}", tok.line, tok.col)
        return Iri(self.prefixes[prefix] + local)

    def resolve_iri(self, tok: _Token) -> str:
        ref = tok.value
        if _SCHEME_RE.match(ref):
            return ref
        if self.base_iri is None:
            raise TurtleParseError(f"relative IRI {ref!r} with no base IRI", tok.line, tok.col)
        return urljoin(self.base_iri, ref)


def parse_turtle(text: str, base_iri: str | None = None) -> Graph:
    """Parse a document in the Turtle dialect into a Graph.

    Prefixed names resolve against declared `@prefix` directives on top of
    the default registry. Relative IRIs resolve against `base_iri`, or
    raise when none is given.
    """
    tokens = _Lexer(text).tokens()
    return _Parser(tokens, base_iri).parse()


# ---------------------------------------------------------------------------
# Turtle serializer
# ---------------------------------------------------------------------------


def _escape_literal(lexical: str) -> str:
    out: list[str] = []
    for c in lexical:
        if c == "\\":
            out.append("\\\\")
        elif c == '"':
            out.append('\\"')
        elif c == "\n":
            out.append("\\n")
        elif c == "\r":
            out.append("\\r")
        elif c == "\t":
            out.append("\\t")
        elif ord(c) < 0x20:
            out.append(f"\\u{ord(c):04X}")
        else:
            out.append(c)
    return "".join(out)


def _compact(iri: Iri, prefixes: dict[str, str]) -> str:
    """Render an IRI as a prefixed name when a declared namespace allows
    it, preferring the longest namespace match."""
    best: tuple[int, str, str] | None = None
    for prefix, ns in prefixes.items():
        if iri.value.startswith(ns):
            local = iri.value[len(ns):]
            if _LOCAL_RE.match(local):
                cand = (len(ns), prefix, local)
                if best is None or cand[0] > best[0] or (cand[0] == best[0] and prefix < best[1]):
                    best = cand
    if best is None:
        return f"<{iri.value}>"
    return f"{best[1]}:{best[2]}"


def _format_term(term: Term, prefixes: dict[str, str]) -> str:
    if isinstance(term, Iri):
        return _compact(term, prefixes)
    if isinstance(term, BlankNode):
        return f"_:{term.label}"
    text = f'"{_escape_literal(term.lexical)}"'
    if term.language is not None:
        text += f"@{term.language}"
    if term.datatype is not None:
        text += f"^^{_compact(term.datatype, prefixes)}"
    return text


def serialize_turtle(g: Graph) -> str:
    """Deterministic Turtle: prefixes sorted by name, triples sorted by
    canonical key and grouped by subject. Byte-identical for equal graphs."""
    prefixes = g.prefixes
    lines = [f"@prefix {p}: <{ns}> ." for p, ns in sorted(prefixes.items())]
    ordered = g.sorted_triples()
    if ordered:
        lines.append("")

    i = 0
    blocks: list[str] = []
    while i < len(ordered):
        subject = ordered[i].subject
        group_lines: list[str] = []
        while i < len(ordered) and ordered[i].subject == subject:
            predicate = ordered[i].predicate
            objects: list[str] = []
            while i < len(ordered) and ordered[i].subject == subject and ordered[i].predicate == predicate:
                objects.append(_format_term(ordered[i].object, prefixes))
                i += 1
            pred_text = "a" if predicate.value == RDF_NS + "type" else _format_term(predicate, prefixes)
            group_lines.append(f"{pred_text} {' , '.join(objects)}")
        subj_text = _format_term(subject, prefixes)
        body = f"{subj_text} " + " ;\n    ".join(group_lines) + " ."
        blocks.append(body)
    lines.append("\n\n".join(blocks))
    return "\n".join(lines).rstrip("\n") + "\n"

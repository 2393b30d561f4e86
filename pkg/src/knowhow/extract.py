"""Turn semi-structured how-to articles into know-how graphs.

The canonical article format is a small JSON schema (title, requirements,
method sections, nested steps). A constrained HTML dialect (`<h1>`
title, optional `<h2>Things You'll Need</h2>` + `<ul>`, `<h2>` method
headings each followed by an `<ol>`, nested `<ol>` as substeps) parses
into the same intermediate form, so the RDF mapping never sees markup.

Mapping: the article's main task gets `prohow:requires` edges to its
requirements and either direct `prohow:has_step` edges (single section)
or one `prohow:has_method` node per section. Step order is encoded as a
`prohow:requires` chain between consecutive siblings (optional, on by
default). All identifiers are minted deterministically from the source
id and the position path, so re-extraction is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from html.parser import HTMLParser

from .rdf import EX_NS, Graph, Iri
from . import vocab

MAX_STEP_DEPTH = 3

REQUIREMENTS_HEADING = "things you'll need"


class ArticleError(ValueError):
    pass


@dataclass
class Step:
    text: str
    substeps: list["Step"] = field(default_factory=list)


@dataclass
class MethodSection:
    name: str | None
    steps: list[Step]


@dataclass
class ArticleDoc:
    source_id: str
    title: str
    source_url: str | None = None
    requirements: list[str] = field(default_factory=list)
    sections: list[MethodSection] = field(default_factory=list)

    def validate(self) -> "ArticleDoc":
        if not self.title.strip():
            raise ArticleError("article has no title")
        if not self.source_id.strip():
            raise ArticleError("article has no source id")
        if not self.sections or any(not s.steps for s in self.sections):
            raise ArticleError("article has an empty step list")
        for r in self.requirements:
            if not r.strip():
                raise ArticleError("empty requirement text")

        def check(steps: list[Step], depth: int) -> None:
            if steps and depth > MAX_STEP_DEPTH:
                raise ArticleError(f"steps nested deeper than {MAX_STEP_DEPTH} levels")
            for s in steps:
                if not s.text.strip():
                    raise ArticleError("empty step text")
                check(s.substeps, depth + 1)

        for sec in self.sections:
            check(sec.steps, 1)
        return self


# ---------------------------------------------------------------------------
# HTML dialect
# ---------------------------------------------------------------------------


class _ListNode:
    __slots__ = ("kind", "items")

    def __init__(self, kind: str):
        self.kind = kind  # "ol" | "ul"
        self.items: list[_ItemNode] = []


class _ItemNode:
    __slots__ = ("text_parts", "sublists")

    def __init__(self):
        self.text_parts: list[str] = []
        self.sublists: list[_ListNode] = []


def _normalize(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


class _ArticleHTMLParser(HTMLParser):
    """Collects the title, headings and list structure; every other tag
    is treated as inline markup and stripped."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.titles: list[str] = []
        self.events: list[tuple[str, object]] = []  # ("heading", str) | ("list", _ListNode)
        self.canonical_url: str | None = None
        self._heading_parts: list[str] | None = None
        self._heading_kind: str | None = None
        self._list_stack: list[_ListNode] = []
        self._item_stack: list[_ItemNode] = []

    def handle_starttag(self, tag, attrs):
        if tag == "link":
            attrs = dict(attrs)
            if attrs.get("rel") == "canonical" and attrs.get("href"):
                self.canonical_url = attrs["href"]
        elif tag in ("h1", "h2"):
            if self._list_stack or self._heading_parts is not None:
                raise ArticleError(f"<{tag}> in an unexpected position")
            self._heading_parts = []
            self._heading_kind = tag
        elif tag in ("ol", "ul"):
            node = _ListNode(tag)
            if self._item_stack:
                self._item_stack[-1].sublists.append(node)
            elif self._list_stack:
                raise ArticleError("list nested directly inside a list")
            else:
                self.events.append(("list", node))
            self._list_stack.append(node)
        elif tag == "li":
            if not self._list_stack:
                raise ArticleError("<li> outside a list")
            item = _ItemNode()
            self._list_stack[-1].items.append(item)
            self._item_stack.append(item)

    def handle_endtag(self, tag):
        if tag in ("h1", "h2"):
            if self._heading_parts is None or self._heading_kind != tag:
                raise ArticleError(f"unmatched </{tag}>")
            text = _normalize("".join(self._heading_parts))
            if tag == "h1":
                self.titles.append(text)
            else:
                self.events.append(("heading", text))
            self._heading_parts = None
            self._heading_kind = None
        elif tag in ("ol", "ul"):
            if not self._list_stack or self._list_stack[-1].kind != tag:
                raise ArticleError(f"unmatched </{tag}>")
            self._list_stack.pop()
        elif tag == "li":
            if not self._item_stack:
                raise ArticleError("unmatched </li>")
            self._item_stack.pop()

    def handle_data(self, data):
        if self._heading_parts is not None:
            self._heading_parts.append(data)
        elif self._item_stack:
            self._item_stack[-1].text_parts.append(data)

    def close(self):
        super().close()
        if self._list_stack or self._item_stack or self._heading_parts is not None:
            raise ArticleError("unclosed element at end of document")


def _item_to_step(item: _ItemNode) -> Step:
    substeps = [ _item_to_step(sub) for lst in item.sublists for sub in lst.items ]
    return Step(text=_normalize("".join(item.text_parts)), substeps=substeps)


def parse_article_html(html: str, source_id: str = "article", source_url: str | None = None) -> ArticleDoc:
    """Parse the constrained HTML dialect.

    The dialect carries no source identifier, so the caller provides one
    (the CLI uses the file stem). A `<link rel="canonical">`, when
    present, supplies the source URL; an explicit `source_url` wins.
    """
    parser = _ArticleHTMLParser()
    parser.feed(html)
    parser.close()

    if not parser.titles:
        raise ArticleError("article has no <h1> title")
    if len(parser.titles) > 1:
        raise ArticleError("article has more than one <h1> title")
    title = parser.titles[0]

    requirements: list[str] = []
    sections: list[MethodSection] = []
    pending_heading: str | None = None
    pending_is_requirements = False
    bare_lists: list[_ListNode] = []

    for kind, payload in parser.events:
        if kind == "heading":
            if pending_heading is not None or pending_is_requirements:
                raise ArticleError("method heading with an empty step list")
            heading = str(payload)
            if heading.lower().replace("’", "'") == REQUIREMENTS_HEADING:
                pending_is_requirements = True
            else:
                pending_heading = heading
        else:
            node = payload  # _ListNode
            if pending_is_requirements:
                if node.kind != "ul":
                    raise ArticleError("requirements must be a <ul> list")
                for item in node.items:
                    if item.sublists:
                        raise ArticleError("requirements list must be flat")
                    requirements.append(_normalize("".join(item.text_parts)))
                pending_is_requirements = False
            elif pending_heading is not None:
                if node.kind != "ol":
                    raise ArticleError("method steps must be an <ol> list")
                sections.append(MethodSection(pending_heading, [_item_to_step(it) for it in node.items]))
                pending_heading = None
            else:
                bare_lists.append(node)

    if pending_heading is not None or pending_is_requirements:
        raise ArticleError("heading with no list after it")

    if sections and bare_lists:
        raise ArticleError("step list outside a method section")
    if not sections:
        if not bare_lists:
            raise ArticleError("article has an empty step list")
        if len(bare_lists) > 1:
            raise ArticleError("multiple step lists without method headings")
        if bare_lists[0].kind != "ol":
            raise ArticleError("steps must be an <ol> list")
        sections = [MethodSection(None, [_item_to_step(it) for it in bare_lists[0].items])]

    doc = ArticleDoc(
        source_id=source_id,
        title=title,
        source_url=source_url or parser.canonical_url,
        requirements=requirements,
        sections=sections,
    )
    return doc.validate()


# ---------------------------------------------------------------------------
# JSON format
# ---------------------------------------------------------------------------


def _check_keys(obj: dict, allowed: set[str], required: set[str], what: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ArticleError(f"unknown key(s) in {what}: {', '.join(sorted(unknown))}")
    missing = required - set(obj)
    if missing:
        raise ArticleError(f"missing key(s) in {what}: {', '.join(sorted(missing))}")


def _step_from_json(obj) -> Step:
    if not isinstance(obj, dict):
        raise ArticleError("step must be an object")
    _check_keys(obj, {"text", "substeps"}, {"text"}, "step")
    if not isinstance(obj["text"], str):
        raise ArticleError("step text must be a string")
    substeps = obj.get("substeps", [])
    if not isinstance(substeps, list):
        raise ArticleError("substeps must be a list")
    return Step(obj["text"], [_step_from_json(s) for s in substeps])


def parse_article_json(text: str) -> ArticleDoc:
    """Parse the canonical JSON article format (camelCase keys matching
    the ArticleDoc fields)."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArticleError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ArticleError("article document must be a JSON object")
    _check_keys(
        data,
        {"sourceId", "sourceUrl", "title", "requirements", "sections"},
        {"sourceId", "title", "sections"},
        "article",
    )
    if not isinstance(data["sourceId"], str) or not isinstance(data["title"], str):
        raise ArticleError("sourceId and title must be strings")
    source_url = data.get("sourceUrl")
    if source_url is not None and not isinstance(source_url, str):
        raise ArticleError("sourceUrl must be a string")
    requirements = data.get("requirements", [])
    if not isinstance(requirements, list) or not all(isinstance(r, str) for r in requirements):
        raise ArticleError("requirements must be a list of strings")
    raw_sections = data["sections"]
    if not isinstance(raw_sections, list):
        raise ArticleError("sections must be a list")

    sections = []
    for raw in raw_sections:
        if not isinstance(raw, dict):
            raise ArticleError("section must be an object")
        _check_keys(raw, {"name", "steps"}, {"steps"}, "section")
        name = raw.get("name")
        if name is not None and not isinstance(name, str):
            raise ArticleError("section name must be a string or null")
        if not isinstance(raw["steps"], list):
            raise ArticleError("section steps must be a list")
        sections.append(MethodSection(name, [_step_from_json(s) for s in raw["steps"]]))

    doc = ArticleDoc(
        source_id=data["sourceId"],
        title=data["title"],
        source_url=source_url,
        requirements=requirements,
        sections=sections,
    )
    return doc.validate()


# ---------------------------------------------------------------------------
# IRI minting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MintingPolicy:
    base_namespace: str = EX_NS
    include_source_hash: bool = False

    def __post_init__(self) -> None:
        if not self.base_namespace.endswith(("/", "#")):
            raise ValueError("base namespace must end in '/' or '#'")


_KINDS = ("task", "method", "step", "requirement")


def slug(label: str) -> str:
    """Lowercase, collapse every non-alphanumeric run to one underscore,
    trim underscores, cap at 64 characters. ASCII-only on purpose: minted
    local names must stay portable across stores."""
    s = re.sub(r"[^a-z0-9]+", "_", label.lower()).strip("_")
    return s[:64]


def mint_iri(policy: MintingPolicy, source_id: str, kind: str, path: list[int], label: str) -> Iri:
    """Deterministic identifier for an article entity, injective over
    (source id, kind, path)."""
    if kind not in _KINDS:
        raise ValueError(f"unknown entity kind: {kind!r}")
    if not label:
        raise ValueError("cannot mint an IRI from an empty label")
    source_part = source_id
    if policy.include_source_hash:
        source_part = hashlib.sha1(source_id.encode("utf-8")).hexdigest()[:8]
    parts = [slug(label), kind, source_part] + [str(p) for p in path]
    return Iri(policy.base_namespace + "_".join(parts))


# ---------------------------------------------------------------------------
# Article -> graph
# ---------------------------------------------------------------------------


def article_to_graph(doc: ArticleDoc, policy: MintingPolicy | None = None, sequential_requires: bool = True) -> Graph:
    """Map a validated article onto the know-how vocabulary.

    With `sequential_requires` (default), consecutive sibling steps are
    chained with `prohow:requires`, step order being otherwise
    unrepresentable. Every minted task/method/step/requirement carries
    exactly one rdfs:label.
    """
    doc.validate()
    policy = policy or MintingPolicy()
    g = Graph()
    if policy.base_namespace not in g.prefixes.values():
        g = g.with_prefixes({"kb": policy.base_namespace})

    task = mint_iri(policy, doc.source_id, "task", [], doc.title)
    g = vocab.set_label(g, task, doc.title)

    for i, req_text in enumerate(doc.requirements):
        req = mint_iri(policy, doc.source_id, "requirement", [i], req_text)
        g = vocab.add_requirement(g, task, req)
        g = vocab.set_label(g, req, req_text)

    def attach(g: Graph, parent: Iri, steps: list[Step], prefix: list[int]) -> Graph:
        prev: Iri | None = None
        for i, step in enumerate(steps):
            step_iri = mint_iri(policy, doc.source_id, "step", prefix + [i], step.text)
            g = vocab.add_step(g, parent, step_iri)
            g = vocab.set_label(g, step_iri, step.text)
            if sequential_requires and prev is not None:
                g = vocab.add_requirement(g, step_iri, prev)
            g = attach(g, step_iri, step.substeps, prefix + [i])
            prev = step_iri
        return g

    if len(doc.sections) == 1:
        g = attach(g, task, doc.sections[0].steps, [0])
    else:
        for j, section in enumerate(doc.sections):
            name = section.name or f"Method {j + 1}"
            method = mint_iri(policy, doc.source_id, "method", [j], name)
            g = vocab.add_method(g, task, method)
            g = vocab.set_label(g, method, name)
            g = attach(g, method, section.steps, [j])

    if doc.source_url:
        annotation = Iri(policy.base_namespace + f"{slug(doc.title)}_annotation_{doc.source_id}")
        g = vocab.annotate(g, task, Iri(doc.source_url), annotation_iri=annotation)
    return g

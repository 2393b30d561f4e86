"""SPARQL 1.1 Query Results JSON Format encode/decode.

Only the SELECT form is needed: `{"head": {"vars": [...]}, "results":
{"bindings": [...]}}` with cell objects of type uri, literal, or bnode.
Decoding is strict so a malformed remote endpoint fails loudly instead
of injecting junk terms into a federated join.
"""

from __future__ import annotations

import json

from .rdf import BlankNode, Iri, Literal, Term
from .sparql import BindingSet


class ResultsFormatError(ValueError):
    pass


def term_to_json(term: Term) -> dict:
    if isinstance(term, Iri):
        return {"type": "uri", "value": term.value}
    if isinstance(term, BlankNode):
        return {"type": "bnode", "value": term.label}
    if isinstance(term, Literal):
        cell: dict = {"type": "literal", "value": term.lexical}
        if term.language:
            cell["xml:lang"] = term.language
        elif term.datatype:
            cell["datatype"] = term.datatype.value
        return cell
    raise ResultsFormatError(f"not an RDF term: {term!r}")


def term_from_json(cell: dict) -> Term:
    if not isinstance(cell, dict):
        raise ResultsFormatError("binding cell must be an object")
    kind = cell.get("type")
    value = cell.get("value")
    if not isinstance(value, str):
        raise ResultsFormatError("binding cell has no string value")
    if kind == "uri":
        return Iri(value)
    if kind == "bnode":
        return BlankNode(value)
    if kind == "literal":
        lang = cell.get("xml:lang")
        datatype = cell.get("datatype")
        if lang is not None and datatype is not None:
            raise ResultsFormatError("literal cell with both language and datatype")
        return Literal(value, language=lang, datatype=Iri(datatype) if datatype else None)
    raise ResultsFormatError(f"unknown binding cell type: {kind!r}")


def encode_results(bindings: BindingSet) -> str:
    doc = {
        "head": {"vars": list(bindings.vars)},
        "results": {
            "bindings": [
                {name: term_to_json(term) for name, term in sorted(row.items())}
                for row in bindings.rows
            ]
        },
    }
    return json.dumps(doc, indent=2, sort_keys=False)


def decode_results(text: str) -> BindingSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ResultsFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ResultsFormatError("results document must be a JSON object")
    head = doc.get("head")
    results = doc.get("results")
    if not isinstance(head, dict) or not isinstance(head.get("vars"), list):
        raise ResultsFormatError("missing head.vars")
    if not isinstance(results, dict) or not isinstance(results.get("bindings"), list):
        raise ResultsFormatError("missing results.bindings")
    vars_ = head["vars"]
    if not all(isinstance(v, str) for v in vars_):
        raise ResultsFormatError("head.vars must be strings")
    rows = []
    for raw in results["bindings"]:
        if not isinstance(raw, dict):
            raise ResultsFormatError("binding row must be an object")
        unknown = set(raw) - set(vars_)
        if unknown:
            raise ResultsFormatError(f"binding for undeclared variable(s): {', '.join(sorted(unknown))}")
        rows.append({name: term_from_json(cell) for name, cell in raw.items()})
    return BindingSet(vars=list(vars_), rows=rows)

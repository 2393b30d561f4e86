import { describe, expect, it } from "vitest";

import {
  compareKeyTuples,
  decodeResults,
  localName,
  ResultsFormatError,
  rowKeyTuple,
  termKey,
} from "../src/terms.js";

function doc(bindings: unknown[], vars = ["x"]): string {
  return JSON.stringify({ head: { vars }, results: { bindings } });
}

describe("decodeResults", () => {
  it("decodes IRI, blank node, and literal cells", () => {
    const results = decodeResults(
      doc(
        [
          { x: { type: "uri", value: "http://a.ex/t" } },
          { x: { type: "bnode", value: "b0" } },
          { x: { type: "literal", value: "plain" } },
          { x: { type: "literal", value: "bonjour", "xml:lang": "fr" } },
          { x: { type: "literal", value: "3", datatype: "http://www.w3.org/2001/XMLSchema#integer" } },
        ],
      ),
    );
    expect(results.vars).toEqual(["x"]);
    expect(results.rows).toHaveLength(5);
    expect(results.rows[0].x).toEqual({ kind: "iri", value: "http://a.ex/t" });
    expect(results.rows[1].x).toEqual({ kind: "bnode", value: "b0" });
    expect(results.rows[2].x).toEqual({ kind: "literal", value: "plain" });
    expect(results.rows[3].x).toEqual({ kind: "literal", value: "bonjour", language: "fr" });
    expect(results.rows[4].x).toEqual({
      kind: "literal",
      value: "3",
      datatype: "http://www.w3.org/2001/XMLSchema#integer",
    });
  });

  it("accepts rows with unbound variables", () => {
    const results = decodeResults(doc([{}], ["x", "y"]));
    expect(results.rows).toEqual([{}]);
  });

  it("rejects invalid JSON", () => {
    expect(() => decodeResults("{nope")).toThrow(ResultsFormatError);
  });

  it("rejects a missing head.vars", () => {
    expect(() => decodeResults(JSON.stringify({ results: { bindings: [] } }))).toThrow(/head\.vars/);
  });

  it("rejects a missing results.bindings", () => {
    expect(() => decodeResults(JSON.stringify({ head: { vars: [] } }))).toThrow(/results\.bindings/);
  });

  it("rejects bindings for undeclared variables", () => {
    expect(() => decodeResults(doc([{ y: { type: "uri", value: "http://a.ex/" } }]))).toThrow(
      /undeclared/,
    );
  });

  it("rejects a literal with both language and datatype", () => {
    expect(() =>
      decodeResults(doc([{ x: { type: "literal", value: "v", "xml:lang": "en", datatype: "http://d" } }])),
    ).toThrow(/both language and datatype/);
  });

  it("rejects unknown cell types and non-string values", () => {
    expect(() => decodeResults(doc([{ x: { type: "triple", value: "v" } }]))).toThrow(/unknown/);
    expect(() => decodeResults(doc([{ x: { type: "uri", value: 7 } }]))).toThrow(/string value/);
  });
});

describe("termKey", () => {
  it("wraps IRIs in angle brackets", () => {
    expect(termKey({ kind: "iri", value: "http://a.ex/t" })).toBe("<http://a.ex/t>");
  });

  it("prefixes blank nodes", () => {
    expect(termKey({ kind: "bnode", value: "b0" })).toBe("_:b0");
  });

  it("renders literals with language or datatype suffixes", () => {
    expect(termKey({ kind: "literal", value: "v" })).toBe('"v"');
    expect(termKey({ kind: "literal", value: "v", language: "en" })).toBe('"v"@en');
    expect(termKey({ kind: "literal", value: "3", datatype: "http://d" })).toBe('"3"^^<http://d>');
  });
});

describe("row key tuples", () => {
  it("uses empty strings for unbound variables", () => {
    expect(rowKeyTuple(["a", "b"], { b: { kind: "iri", value: "http://x" } })).toEqual(["", "<http://x>"]);
  });

  it("compares tuples element-wise, shorter first on ties", () => {
    expect(compareKeyTuples(["a"], ["b"])).toBeLessThan(0);
    expect(compareKeyTuples(["b"], ["a"])).toBeGreaterThan(0);
    expect(compareKeyTuples(["a"], ["a", "b"])).toBeLessThan(0);
    expect(compareKeyTuples(["a", "b"], ["a", "b"])).toBe(0);
  });
});

describe("localName", () => {
  it("takes the fragment after # or the last path segment", () => {
    expect(localName("http://vocab.inf.ed.ac.uk/prohow#has_step")).toBe("has_step");
    expect(localName("http://example.ex/organise_conference")).toBe("organise_conference");
  });

  it("falls back to the whole IRI when there is no tail", () => {
    expect(localName("http://example.ex/")).toBe("http://example.ex/");
    expect(localName("urn-like-no-separator")).toBe("urn-like-no-separator");
  });
});

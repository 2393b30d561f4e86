/**
 * Query and Turtle text builders for the endpoint wire protocol.
 *
 * Every query is written with absolute IRIs in angle brackets, so the
 * text is self-contained and needs no PREFIX header. The builders cover
 * exactly what the client asks endpoints: single-pattern lookups and
 * the label keyword search.
 */

import type { Term } from "./terms.js";

export const RDFS_LABEL = "http://www.w3.org/2000/01/rdf-schema#label";

const PROHOW = "http://vocab.inf.ed.ac.uk/prohow#";
const PROEX = "http://vocab.inf.ed.ac.uk/proex/0.1#";
const OA = "http://www.w3.org/ns/oa#";

export const HAS_STEP = PROHOW + "has_step";
export const REQUIRES = PROHOW + "requires";
export const HAS_METHOD = PROHOW + "has_method";
export const HAS_GOAL = PROEX + "has_goal";
export const SUCCEEDED_IN = PROEX + "succeeded_in";
export const SUCCEED_IN_LEGACY = PROEX + "succeed_in";
export const FAILED_IN = PROEX + "failed_in";
export const OA_HAS_BODY = OA + "hasBody";
export const OA_HAS_TARGET = OA + "hasTarget";
export const OA_HAS_SOURCE = OA + "hasSource";

export const DEFAULT_BASE_NAMESPACE = "http://example.ex/";

/** Escape a string for a double-quoted SPARQL or Turtle literal. */
export function escapeString(s: string): string {
  return s
    .replaceAll("\\", "\\\\")
    .replaceAll('"', '\\"')
    .replaceAll("\n", "\\n")
    .replaceAll("\r", "\\r")
    .replaceAll("\t", "\\t");
}

/** A pattern position: a variable name like "?x" or an absolute IRI. */
export type PatternTerm = string;

function patternTerm(term: PatternTerm): string {
  if (term.startsWith("?")) {
    return term;
  }
  return `<${term}>`;
}

/** `SELECT DISTINCT <vars> WHERE { s p o . }` over one triple pattern. */
export function onePatternQuery(
  vars: string[],
  subject: PatternTerm,
  predicate: PatternTerm,
  object: PatternTerm,
): string {
  const head = "SELECT DISTINCT" + vars.map((v) => ` ?${v}`).join("");
  return [
    head,
    "WHERE {",
    `  ${patternTerm(subject)} ${patternTerm(predicate)} ${patternTerm(object)} .`,
    "}",
  ].join("\n");
}

/** The label search: one label pattern plus a CONTAINS filter per keyword. */
export function keywordQuery(keywords: string[]): string {
  const cleaned = keywords.map((k) => k.trim()).filter((k) => k.length > 0);
  if (cleaned.length === 0) {
    throw new Error("keyword search needs at least one non-empty keyword");
  }
  const lines = [
    "SELECT ?entity ?label",
    "WHERE {",
    `  ?entity <${RDFS_LABEL}> ?label .`,
  ];
  for (const keyword of cleaned) {
    lines.push(`  FILTER(CONTAINS(LCASE(STR(?label)), "${escapeString(keyword)}"))`);
  }
  lines.push("}");
  return lines.join("\n");
}

/** A Turtle document of IRI-only triples, one statement per line. */
export function turtleOfIriTriples(triples: Array<[string, string, string]>): string {
  return triples.map(([s, p, o]) => `<${s}> <${p}> <${o}> .`).join("\n") + "\n";
}

/** Lexical content of a term, as FILTER/STR would see it. */
export function lexical(term: Term): string {
  return term.value;
}

/**
 * RDF terms as they cross the wire in SPARQL results JSON, plus the
 * decoder for `application/sparql-results+json` documents.
 */

export interface IriTerm {
  kind: "iri";
  value: string;
}

export interface LiteralTerm {
  kind: "literal";
  value: string;
  language?: string;
  datatype?: string;
}

export interface BlankTerm {
  kind: "bnode";
  value: string;
}

export type Term = IriTerm | LiteralTerm | BlankTerm;

export function iri(value: string): IriTerm {
  return { kind: "iri", value };
}

export type BindingRow = Record<string, Term>;

export interface SelectResults {
  vars: string[];
  rows: BindingRow[];
}

export class ResultsFormatError extends Error {}

function decodeCell(cell: unknown): Term {
  if (typeof cell !== "object" || cell === null || Array.isArray(cell)) {
    throw new ResultsFormatError("binding cell must be an object");
  }
  const raw = cell as Record<string, unknown>;
  const value = raw["value"];
  if (typeof value !== "string") {
    throw new ResultsFormatError("binding cell has no string value");
  }
  switch (raw["type"]) {
    case "uri":
      return { kind: "iri", value };
    case "bnode":
      return { kind: "bnode", value };
    case "literal": {
      const language = raw["xml:lang"];
      const datatype = raw["datatype"];
      if (language !== undefined && datatype !== undefined) {
        throw new ResultsFormatError("literal cell with both language and datatype");
      }
      const term: LiteralTerm = { kind: "literal", value };
      if (typeof language === "string") term.language = language;
      if (typeof datatype === "string") term.datatype = datatype;
      return term;
    }
    default:
      throw new ResultsFormatError(`unknown binding cell type: ${String(raw["type"])}`);
  }
}

/** Decode a SPARQL 1.1 results JSON document into vars and rows. */
export function decodeResults(text: string): SelectResults {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (exc) {
    throw new ResultsFormatError(`invalid JSON: ${String(exc)}`);
  }
  if (typeof doc !== "object" || doc === null) {
    throw new ResultsFormatError("results document must be a JSON object");
  }
  const head = (doc as Record<string, unknown>)["head"];
  const results = (doc as Record<string, unknown>)["results"];
  const vars = head && typeof head === "object" ? (head as Record<string, unknown>)["vars"] : undefined;
  if (!Array.isArray(vars) || !vars.every((v) => typeof v === "string")) {
    throw new ResultsFormatError("missing head.vars");
  }
  const bindings =
    results && typeof results === "object" ? (results as Record<string, unknown>)["bindings"] : undefined;
  if (!Array.isArray(bindings)) {
    throw new ResultsFormatError("missing results.bindings");
  }
  const declared = new Set(vars as string[]);
  const rows: BindingRow[] = [];
  for (const rawRow of bindings) {
    if (typeof rawRow !== "object" || rawRow === null || Array.isArray(rawRow)) {
      throw new ResultsFormatError("binding row must be an object");
    }
    const row: BindingRow = {};
    for (const [name, cell] of Object.entries(rawRow as Record<string, unknown>)) {
      if (!declared.has(name)) {
        throw new ResultsFormatError(`binding for undeclared variable: ${name}`);
      }
      row[name] = decodeCell(cell);
    }
    rows.push(row);
  }
  return { vars: vars as string[], rows };
}

/** Canonical one-line form of a term; comparing these strings is the
 * sort order wherever rendered output must be deterministic. */
export function termKey(term: Term): string {
  switch (term.kind) {
    case "iri":
      return `<${term.value}>`;
    case "bnode":
      return `_:${term.value}`;
    case "literal": {
      let key = `"${term.value}"`;
      if (term.language !== undefined) key += `@${term.language}`;
      if (term.datatype !== undefined) key += `^^<${term.datatype}>`;
      return key;
    }
  }
}

/** Per-variable keys of a row, for tuple-wise comparison and dedup. */
export function rowKeyTuple(vars: string[], row: BindingRow): string[] {
  return vars.map((name) => (name in row ? termKey(row[name]) : ""));
}

export function compareKeyTuples(a: string[], b: string[]): number {
  const n = Math.min(a.length, b.length);
  for (let i = 0; i < n; i++) {
    if (a[i] < b[i]) return -1;
    if (a[i] > b[i]) return 1;
  }
  return a.length - b.length;
}

/** The fragment after the last '#' or '/', as a compact display name. */
export function localName(iriValue: string): string {
  const cut = Math.max(iriValue.lastIndexOf("#"), iriValue.lastIndexOf("/"));
  const tail = cut >= 0 ? iriValue.slice(cut + 1) : iriValue;
  return tail || iriValue;
}

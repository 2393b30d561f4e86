/**
 * Entity neighborhood under the know-how vocabulary, merged across
 * every endpoint: steps, parents, requirements in both directions,
 * methods in both directions, labels, and the resources annotations
 * point at. The federated view equals what a single merged store would
 * answer.
 */

import type { FetchLike } from "./client.js";
import { fanOutSelect, ResponseLedger, type EndpointInfo } from "./federation.js";
import {
  HAS_METHOD,
  HAS_STEP,
  OA_HAS_BODY,
  OA_HAS_SOURCE,
  OA_HAS_TARGET,
  RDFS_LABEL,
  REQUIRES,
  onePatternQuery,
  type PatternTerm,
} from "./sparql.js";
import type { Term } from "./terms.js";

export interface Neighborhood {
  entity: string;
  steps: string[];
  partOf: string[];
  requires: string[];
  requiredBy: string[];
  methods: string[];
  methodOf: string[];
  labels: string[];
  annotations: string[];
  responded: string[];
  failed: Array<{ name: string; reason: string }>;
}

export async function exploreEntity(
  endpoints: EndpointInfo[],
  entity: string,
  fetchFn?: FetchLike,
): Promise<Neighborhood> {
  const ledger = new ResponseLedger(endpoints);

  async function onePattern(subject: PatternTerm, predicate: string, object: PatternTerm): Promise<Term[]> {
    const outcome = await fanOutSelect(endpoints, onePatternQuery(["x"], subject, predicate, object), fetchFn);
    ledger.record(outcome);
    return outcome.rows.map((row) => row["x"]).filter((t): t is Term => t !== undefined);
  }

  function iris(terms: Term[]): string[] {
    return [...new Set(terms.filter((t) => t.kind === "iri").map((t) => t.value))].sort();
  }

  const steps = iris(await onePattern(entity, HAS_STEP, "?x"));
  const partOf = iris(await onePattern("?x", HAS_STEP, entity));
  const requires = iris(await onePattern(entity, REQUIRES, "?x"));
  const requiredBy = iris(await onePattern("?x", REQUIRES, entity));
  const methods = iris(await onePattern(entity, HAS_METHOD, "?x"));
  const methodOf = iris(await onePattern("?x", HAS_METHOD, entity));
  const labels = [
    ...new Set(
      (await onePattern(entity, RDFS_LABEL, "?x")).filter((t) => t.kind === "literal").map((t) => t.value),
    ),
  ].sort();

  const annotations: string[] = [];
  for (const annotation of iris(await onePattern("?x", OA_HAS_BODY, entity))) {
    for (const target of iris(await onePattern(annotation, OA_HAS_TARGET, "?x"))) {
      const sources = iris(await onePattern(target, OA_HAS_SOURCE, "?x"));
      annotations.push(...(sources.length > 0 ? sources : [target]));
    }
  }

  return {
    entity,
    steps,
    partOf,
    requires,
    requiredBy,
    methods,
    methodOf,
    labels,
    annotations: [...new Set(annotations)].sort(),
    responded: ledger.responded(),
    failed: ledger.failed(),
  };
}

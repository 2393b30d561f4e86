/**
 * Federated keyword search: entities whose label contains every
 * keyword, case-insensitively, anywhere in the federation. One hit per
 * entity, keeping a single label even when several endpoints know it.
 */

import { fanOutSelect, type EndpointInfo } from "./federation.js";
import type { FetchLike } from "./client.js";
import { keywordQuery } from "./sparql.js";

export interface SearchHit {
  iri: string;
  label: string;
}

export interface SearchOutcome {
  hits: SearchHit[];
  responded: string[];
  failed: Array<{ name: string; reason: string }>;
}

export async function searchEntities(
  endpoints: EndpointInfo[],
  keywords: string[],
  fetchFn?: FetchLike,
): Promise<SearchOutcome> {
  const outcome = await fanOutSelect(endpoints, keywordQuery(keywords), fetchFn);
  const hits: SearchHit[] = [];
  const seen = new Set<string>();
  for (const row of outcome.rows) {
    const entity = row["entity"];
    const label = row["label"];
    if (entity === undefined || entity.kind !== "iri" || seen.has(entity.value)) {
      continue;
    }
    seen.add(entity.value);
    hits.push({ iri: entity.value, label: label !== undefined ? label.value : entity.value });
  }
  return { hits, responded: outcome.responded, failed: outcome.failed };
}

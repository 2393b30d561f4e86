/**
 * HTTP client for one endpoint: SELECT queries over GET /sparql and
 * Turtle publication over POST /publish. All reads and writes go
 * through these two routes; nothing else is assumed about the server.
 */

import { decodeResults, type SelectResults } from "./terms.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class EndpointError extends Error {
  constructor(
    message: string,
    readonly status?: number,
  ) {
    super(message);
  }
}

export interface ClientOptions {
  timeoutMs?: number;
  fetchFn?: FetchLike;
}

const DEFAULT_TIMEOUT_MS = 5000;

function requestInit(timeoutMs: number, init: RequestInit): RequestInit {
  return { ...init, signal: AbortSignal.timeout(timeoutMs) };
}

async function send(fetchFn: FetchLike, url: string, init: RequestInit): Promise<Response> {
  let response: Response;
  try {
    response = await fetchFn(url, init);
  } catch (exc) {
    throw new EndpointError(`request to ${url} failed: ${String(exc)}`);
  }
  if (!response.ok) {
    const body = await response.text().catch(() => "");
    throw new EndpointError(
      `${url} answered ${response.status}: ${body.trim() || response.statusText}`,
      response.status,
    );
  }
  return response;
}

/** Run a SELECT query against one endpoint and decode the results. */
export async function runSelect(
  baseUrl: string,
  query: string,
  options: ClientOptions = {},
): Promise<SelectResults> {
  const { timeoutMs = DEFAULT_TIMEOUT_MS, fetchFn = fetch } = options;
  const url = `${baseUrl}/sparql?query=${encodeURIComponent(query)}`;
  const response = await send(
    fetchFn,
    url,
    requestInit(timeoutMs, {
      method: "GET",
      headers: { Accept: "application/sparql-results+json" },
    }),
  );
  return decodeResults(await response.text());
}

/** Publish a Turtle document to one endpoint; returns the insert count. */
export async function publishTurtle(
  baseUrl: string,
  turtle: string,
  options: ClientOptions = {},
): Promise<number> {
  const { timeoutMs = DEFAULT_TIMEOUT_MS, fetchFn = fetch } = options;
  const response = await send(
    fetchFn,
    `${baseUrl}/publish`,
    requestInit(timeoutMs, {
      method: "POST",
      headers: { "Content-Type": "text/turtle" },
      body: turtle,
    }),
  );
  const doc: unknown = await response.json().catch(() => undefined);
  const inserted =
    typeof doc === "object" && doc !== null ? (doc as Record<string, unknown>)["inserted"] : undefined;
  if (typeof inserted !== "number") {
    throw new EndpointError(`${baseUrl}/publish answered without an insert count`);
  }
  return inserted;
}

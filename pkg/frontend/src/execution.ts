/**
 * Execution tracking over the federation, computed entirely on the
 * client from endpoint answers: the client pulls the decomposition and
 * requirement edges plus this execution's outcome assertions, then
 * derives completion and readiness locally. Nothing here is stored in
 * the browser as authority — every rendered status can be recomputed
 * from the endpoints at any time.
 *
 * Derivation rules, iterated to the least fixpoint: an asserted
 * success is succeeded; a task with some succeeded method is succeeded
 * (methods are alternatives); a task whose every step succeeded is
 * succeeded (steps are parts). A task is ready when it is undecided
 * and all its requirements are succeeded.
 */

import type { FetchLike } from "./client.js";
import { publishTurtle } from "./client.js";
import {
  fanOutSelect,
  findEndpoint,
  ResponseLedger,
  type EndpointInfo,
} from "./federation.js";
import {
  DEFAULT_BASE_NAMESPACE,
  FAILED_IN,
  HAS_GOAL,
  HAS_METHOD,
  HAS_STEP,
  REQUIRES,
  SUCCEEDED_IN,
  SUCCEED_IN_LEGACY,
  onePatternQuery,
  turtleOfIriTriples,
} from "./sparql.js";
import type { BindingRow } from "./terms.js";

export class RequiresCycleError extends Error {
  constructor(readonly cycle: string[]) {
    super("requires cycle: " + [...cycle, cycle[0]].join(" -> "));
  }
}

export class UnknownExecutionError extends Error {}

export type EdgeMap = Map<string, Set<string>>;

/** The triples an execution view depends on, as pulled from the federation. */
export interface ExecutionData {
  goals: Set<string>;
  steps: EdgeMap;
  methods: EdgeMap;
  requires: EdgeMap;
  succeeded: Set<string>;
  succeededLegacy: Set<string>;
  failed: Set<string>;
  responded: string[];
  failedEndpoints: Array<{ name: string; reason: string }>;
}

export type TaskStatus = "done" | "done (derived)" | "failed" | "ready" | "blocked" | "unknown";

export interface ExecutionSnapshot {
  execution: string;
  goals: string[];
  succeededAsserted: Set<string>;
  failedAsserted: Set<string>;
  succeededDerived: Set<string>;
  ready: Set<string>;
  blocked: Map<string, string[]>;
  relevant: Set<string>;
  requirements: Map<string, Set<string>>;
  /** Decomposition edges, for rendering the goal tree. */
  steps: EdgeMap;
  methods: EdgeMap;
  warnings: string[];
  responded: string[];
  failedEndpoints: Array<{ name: string; reason: string }>;
}

export function statusOf(snapshot: ExecutionSnapshot, task: string): TaskStatus {
  if (snapshot.succeededAsserted.has(task)) return "done";
  if (snapshot.succeededDerived.has(task)) return "done (derived)";
  if (snapshot.failedAsserted.has(task)) return "failed";
  if (snapshot.ready.has(task)) return "ready";
  if (snapshot.blocked.has(task)) return "blocked";
  return "unknown";
}

/** JSON form matching the command-line status output, for cross-checks. */
export function snapshotToJson(snapshot: ExecutionSnapshot): Record<string, unknown> {
  const sorted = (values: Iterable<string>) => [...values].sort();
  const blocked: Record<string, string[]> = {};
  for (const task of [...snapshot.blocked.keys()].sort()) {
    blocked[task] = snapshot.blocked.get(task) ?? [];
  }
  return {
    execution: snapshot.execution,
    goals: snapshot.goals,
    succeededAsserted: sorted(snapshot.succeededAsserted),
    failedAsserted: sorted(snapshot.failedAsserted),
    succeededDerived: sorted(snapshot.succeededDerived),
    ready: sorted(snapshot.ready),
    blocked,
    warnings: [...snapshot.warnings],
    responded: [...snapshot.responded],
    failedEndpoints: snapshot.failedEndpoints.map(({ name, reason }) => ({ name, reason })),
  };
}

function closure(roots: Iterable<string>, edgeMaps: EdgeMap[]): Set<string> {
  const seen = new Set(roots);
  const frontier = [...seen];
  while (frontier.length > 0) {
    const node = frontier.pop() as string;
    for (const edges of edgeMaps) {
      for (const next of edges.get(node) ?? []) {
        if (!seen.has(next)) {
          seen.add(next);
          frontier.push(next);
        }
      }
    }
  }
  return seen;
}

/** Cycles in a directed graph: one canonically sorted node list per
 * non-trivial strongly connected component or self-loop, sorted. */
export function findCycles(edges: EdgeMap): string[][] {
  const nodes = new Set(edges.keys());
  for (const targets of edges.values()) {
    for (const t of targets) nodes.add(t);
  }
  const index = new Map<string, number>();
  const lowlink = new Map<string, number>();
  const onStack = new Set<string>();
  const stack: string[] = [];
  let counter = 0;
  const cycles: string[][] = [];

  for (const root of nodes) {
    if (index.has(root)) continue;
    const work: Array<{ node: string; succs: string[]; i: number }> = [
      { node: root, succs: [...(edges.get(root) ?? [])].sort(), i: 0 },
    ];
    index.set(root, counter);
    lowlink.set(root, counter);
    counter++;
    stack.push(root);
    onStack.add(root);
    while (work.length > 0) {
      const frame = work[work.length - 1];
      if (frame.i < frame.succs.length) {
        const succ = frame.succs[frame.i];
        frame.i++;
        if (!index.has(succ)) {
          index.set(succ, counter);
          lowlink.set(succ, counter);
          counter++;
          stack.push(succ);
          onStack.add(succ);
          work.push({ node: succ, succs: [...(edges.get(succ) ?? [])].sort(), i: 0 });
        } else if (onStack.has(succ)) {
          lowlink.set(frame.node, Math.min(lowlink.get(frame.node) as number, index.get(succ) as number));
        }
        continue;
      }
      work.pop();
      if (lowlink.get(frame.node) === index.get(frame.node)) {
        const component: string[] = [];
        for (;;) {
          const member = stack.pop() as string;
          onStack.delete(member);
          component.push(member);
          if (member === frame.node) break;
        }
        if (component.length > 1 || (edges.get(frame.node) ?? new Set()).has(frame.node)) {
          cycles.push(component.sort());
        }
      }
      const parent = work[work.length - 1];
      if (parent !== undefined) {
        lowlink.set(parent.node, Math.min(lowlink.get(parent.node) as number, lowlink.get(frame.node) as number));
      }
    }
  }
  cycles.sort((a, b) => compareStringArrays(a, b));
  return cycles;
}

function compareStringArrays(a: string[], b: string[]): number {
  const n = Math.min(a.length, b.length);
  for (let i = 0; i < n; i++) {
    if (a[i] < b[i]) return -1;
    if (a[i] > b[i]) return 1;
  }
  return a.length - b.length;
}

export interface DeriveOptions {
  scope?: string;
  derive?: boolean;
}

/** Compute the execution snapshot from already-fetched data. Pure. */
export function deriveSnapshot(
  data: ExecutionData,
  execution: string,
  options: DeriveOptions = {},
): ExecutionSnapshot {
  const { scope, derive = true } = options;
  const warnings: string[] = [];
  const roots = scope !== undefined ? new Set([scope]) : new Set(data.goals);
  const relevant = closure(roots, [data.steps, data.methods, data.requires]);

  const succeededAsserted = new Set(data.succeeded);
  if (data.succeededLegacy.size > 0) {
    warnings.push(
      "success asserted with the legacy succeed_in spelling for: " +
        [...data.succeededLegacy].sort().join(", "),
    );
    for (const task of data.succeededLegacy) succeededAsserted.add(task);
  }
  const failedAsserted = new Set(data.failed);
  for (const task of [...succeededAsserted].filter((t) => failedAsserted.has(t)).sort()) {
    warnings.push(`contradictory outcomes asserted for ${task}; success takes precedence`);
  }

  const relevantRequires: EdgeMap = new Map();
  for (const [subject, objects] of data.requires) {
    if (!relevant.has(subject)) continue;
    relevantRequires.set(subject, new Set([...objects].filter((o) => relevant.has(o))));
  }
  const cycles = findCycles(relevantRequires);
  if (cycles.length > 0) {
    throw new RequiresCycleError(cycles[0]);
  }

  const succeededDerived = new Set(succeededAsserted);
  if (derive) {
    let changed = true;
    while (changed) {
      changed = false;
      for (const task of relevant) {
        if (succeededDerived.has(task)) continue;
        const methods = data.methods.get(task);
        const steps = data.steps.get(task);
        if (methods !== undefined && methods.size > 0 && [...methods].some((m) => succeededDerived.has(m))) {
          succeededDerived.add(task);
          changed = true;
        } else if (steps !== undefined && steps.size > 0 && [...steps].every((s) => succeededDerived.has(s))) {
          succeededDerived.add(task);
          changed = true;
        }
      }
    }
  }

  const ready = new Set<string>();
  const blocked = new Map<string, string[]>();
  for (const task of relevant) {
    if (succeededDerived.has(task) || failedAsserted.has(task)) continue;
    const unmet = [...(data.requires.get(task) ?? [])].filter((r) => !succeededDerived.has(r)).sort();
    if (unmet.length === 0) {
      ready.add(task);
    } else {
      blocked.set(task, unmet);
    }
  }

  const requirements: Map<string, Set<string>> = new Map();
  for (const [subject, objects] of data.requires) {
    if (relevant.has(subject)) requirements.set(subject, new Set(objects));
  }

  return {
    execution,
    goals: [...data.goals].sort(),
    succeededAsserted,
    failedAsserted,
    succeededDerived,
    ready,
    blocked,
    relevant,
    requirements,
    steps: data.steps,
    methods: data.methods,
    warnings,
    responded: [...data.responded],
    failedEndpoints: data.failedEndpoints.map((f) => ({ ...f })),
  };
}

/** Structural sanity checks; used by tests after every derivation. */
export function checkSnapshotInvariants(snapshot: ExecutionSnapshot): void {
  for (const task of snapshot.succeededAsserted) {
    if (!snapshot.succeededDerived.has(task)) throw new Error("asserted success missing from derived set");
  }
  for (const task of snapshot.ready) {
    if (snapshot.succeededDerived.has(task)) throw new Error("ready task already succeeded");
    if (snapshot.failedAsserted.has(task)) throw new Error("ready task already failed");
    for (const req of snapshot.requirements.get(task) ?? []) {
      if (!snapshot.succeededDerived.has(req)) throw new Error(`ready task ${task} has unmet requirements`);
    }
  }
  const expectedBlocked = [...snapshot.relevant].filter(
    (t) =>
      !snapshot.ready.has(t) && !snapshot.succeededDerived.has(t) && !snapshot.failedAsserted.has(t),
  );
  const blockedKeys = new Set(snapshot.blocked.keys());
  if (
    blockedKeys.size !== expectedBlocked.length ||
    !expectedBlocked.every((t) => blockedKeys.has(t))
  ) {
    throw new Error("blocked keys are not exactly the undecided tasks");
  }
}

// ---------------------------------------------------------------------------
// Fetching
// ---------------------------------------------------------------------------

/**
 * Pull every triple the snapshot can depend on: the execution's goals,
 * all decomposition and requirement edges, and the outcome assertions
 * for this execution.
 */
export async function fetchExecutionData(
  endpoints: EndpointInfo[],
  execution: string,
  fetchFn?: FetchLike,
): Promise<ExecutionData> {
  const ledger = new ResponseLedger(endpoints);

  async function pull(query: string): Promise<BindingRow[]> {
    const outcome = await fanOutSelect(endpoints, query, fetchFn);
    ledger.record(outcome);
    return outcome.rows;
  }

  const goals = new Set<string>();
  for (const row of await pull(onePatternQuery(["o"], execution, HAS_GOAL, "?o"))) {
    const o = row["o"];
    if (o !== undefined && o.kind === "iri") goals.add(o.value);
  }

  async function edgeMap(predicate: string): Promise<EdgeMap> {
    const edges: EdgeMap = new Map();
    for (const row of await pull(onePatternQuery(["s", "o"], "?s", predicate, "?o"))) {
      const s = row["s"];
      const o = row["o"];
      if (s === undefined || o === undefined || s.kind !== "iri" || o.kind !== "iri") continue;
      let targets = edges.get(s.value);
      if (targets === undefined) {
        targets = new Set();
        edges.set(s.value, targets);
      }
      targets.add(o.value);
    }
    return edges;
  }

  async function subjects(predicate: string): Promise<Set<string>> {
    const out = new Set<string>();
    for (const row of await pull(onePatternQuery(["s"], "?s", predicate, execution))) {
      const s = row["s"];
      if (s !== undefined && s.kind === "iri") out.add(s.value);
    }
    return out;
  }

  const steps = await edgeMap(HAS_STEP);
  const methods = await edgeMap(HAS_METHOD);
  const requires = await edgeMap(REQUIRES);
  const succeeded = await subjects(SUCCEEDED_IN);
  const succeededLegacy = await subjects(SUCCEED_IN_LEGACY);
  const failed = await subjects(FAILED_IN);

  return {
    goals,
    steps,
    methods,
    requires,
    succeeded,
    succeededLegacy,
    failed,
    responded: ledger.responded(),
    failedEndpoints: ledger.failed(),
  };
}

/** Fetch from the federation and derive, in one step. */
export async function computeSnapshot(
  endpoints: EndpointInfo[],
  execution: string,
  options: DeriveOptions = {},
  fetchFn?: FetchLike,
): Promise<ExecutionSnapshot> {
  const data = await fetchExecutionData(endpoints, execution, fetchFn);
  return deriveSnapshot(data, execution, options);
}

// ---------------------------------------------------------------------------
// Writes
// ---------------------------------------------------------------------------

function randomHex32(): string {
  if (typeof crypto !== "undefined" && typeof crypto.randomUUID === "function") {
    return crypto.randomUUID().replaceAll("-", "");
  }
  let out = "";
  for (let i = 0; i < 32; i++) {
    out += Math.floor(Math.random() * 16).toString(16);
  }
  return out;
}

/** Mint a fresh execution IRI and publish its goal triple. */
export async function startExecution(
  endpoints: EndpointInfo[],
  publishTarget: string,
  goal: string,
  baseNamespace: string = DEFAULT_BASE_NAMESPACE,
  fetchFn?: FetchLike,
): Promise<string> {
  const target = findEndpoint(endpoints, publishTarget);
  const execution = `${baseNamespace}execution_${randomHex32()}`;
  const options = fetchFn ? { timeoutMs: target.timeoutMs, fetchFn } : { timeoutMs: target.timeoutMs };
  await publishTurtle(target.baseUrl, turtleOfIriTriples([[execution, HAS_GOAL, goal]]), options);
  return execution;
}

export async function executionExists(
  endpoints: EndpointInfo[],
  execution: string,
  fetchFn?: FetchLike,
): Promise<boolean> {
  const outcome = await fanOutSelect(endpoints, onePatternQuery(["o"], execution, HAS_GOAL, "?o"), fetchFn);
  return outcome.rows.length > 0;
}

/**
 * Publish a success or failure assertion; returns the insert count
 * (0 when the assertion already existed, which is not an error).
 */
export async function assertOutcome(
  endpoints: EndpointInfo[],
  publishTarget: string,
  execution: string,
  task: string,
  outcome: "succeeded" | "failed",
  fetchFn?: FetchLike,
): Promise<number> {
  const target = findEndpoint(endpoints, publishTarget);
  if (!(await executionExists(endpoints, execution, fetchFn))) {
    throw new UnknownExecutionError(
      `no has_goal triple found for ${execution} anywhere in the federation`,
    );
  }
  const predicate = outcome === "succeeded" ? SUCCEEDED_IN : FAILED_IN;
  const options = fetchFn ? { timeoutMs: target.timeoutMs, fetchFn } : { timeoutMs: target.timeoutMs };
  return publishTurtle(target.baseUrl, turtleOfIriTriples([[task, predicate, execution]]), options);
}

// ---------------------------------------------------------------------------
// Polling
// ---------------------------------------------------------------------------

export interface ReadyNotice {
  execution: string;
  task: string;
  /** The requirements whose completion unlocked the task this poll. */
  because: string[];
}

export interface PollOutcome {
  ok: boolean;
  snapshot?: ExecutionSnapshot;
  newlyReady: ReadyNotice[];
  error?: string;
}

/**
 * One poll step at a time. The baseline is empty, so the first poll
 * reports tasks that are already ready; each (execution, task)
 * readiness transition is reported at most once per poller, even if a
 * flaky endpoint makes a task seem to leave and re-enter readiness.
 */
export class ExecutionPoller {
  private prevReady = new Set<string>();
  private prevDerived = new Set<string>();
  private emitted = new Set<string>();

  constructor(
    readonly endpoints: EndpointInfo[],
    readonly execution: string,
    readonly options: DeriveOptions = {},
    private readonly fetchFn?: FetchLike,
  ) {}

  async poll(): Promise<PollOutcome> {
    let snapshot: ExecutionSnapshot;
    try {
      snapshot = await computeSnapshot(this.endpoints, this.execution, this.options, this.fetchFn);
    } catch (exc) {
      return { ok: false, newlyReady: [], error: exc instanceof Error ? exc.message : String(exc) };
    }
    const newlyDerived = new Set([...snapshot.succeededDerived].filter((t) => !this.prevDerived.has(t)));
    const newlyReady: ReadyNotice[] = [];
    for (const task of [...snapshot.ready].filter((t) => !this.prevReady.has(t)).sort()) {
      if (this.emitted.has(task)) continue;
      const because = [...(snapshot.requirements.get(task) ?? [])]
        .filter((r) => newlyDerived.has(r))
        .sort();
      newlyReady.push({ execution: this.execution, task, because });
      this.emitted.add(task);
    }
    this.prevReady = new Set(snapshot.ready);
    this.prevDerived = new Set(snapshot.succeededDerived);
    return { ok: true, snapshot, newlyReady };
  }
}

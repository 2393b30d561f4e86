import { describe, expect, it } from "vitest";

import {
  assertOutcome,
  checkSnapshotInvariants,
  computeSnapshot,
  deriveSnapshot,
  ExecutionPoller,
  executionExists,
  fetchExecutionData,
  findCycles,
  RequiresCycleError,
  snapshotToJson,
  startExecution,
  statusOf,
  UnknownExecutionError,
  type EdgeMap,
  type ExecutionData,
} from "../src/execution.js";
import { FAILED_IN, HAS_GOAL, SUCCEEDED_IN } from "../src/sparql.js";
import { CONFERENCE, conferenceFederation, ex, iri, MiniFederation } from "./helpers.js";

const EXEC = ex("execution_test");

function edges(pairs: Array<[string, string]>): EdgeMap {
  const map: EdgeMap = new Map();
  for (const [from, to] of pairs) {
    let targets = map.get(from);
    if (targets === undefined) {
      targets = new Set();
      map.set(from, targets);
    }
    targets.add(to);
  }
  return map;
}

interface DataShape {
  goals?: string[];
  steps?: Array<[string, string]>;
  methods?: Array<[string, string]>;
  requires?: Array<[string, string]>;
  succeeded?: string[];
  legacy?: string[];
  failed?: string[];
}

function makeData(shape: DataShape): ExecutionData {
  return {
    goals: new Set(shape.goals ?? [ex("goal")]),
    steps: edges(shape.steps ?? []),
    methods: edges(shape.methods ?? []),
    requires: edges(shape.requires ?? []),
    succeeded: new Set(shape.succeeded ?? []),
    succeededLegacy: new Set(shape.legacy ?? []),
    failed: new Set(shape.failed ?? []),
    responded: ["test"],
    failedEndpoints: [],
  };
}

const [goal, A, B, C] = [ex("goal"), ex("a"), ex("b"), ex("c")];

describe("deriveSnapshot", () => {
  it("marks steps without unmet requirements ready, gates the rest", () => {
    const snapshot = deriveSnapshot(
      makeData({
        steps: [
          [goal, A],
          [goal, B],
          [goal, C],
        ],
        requires: [
          [A, B],
          [A, C],
        ],
      }),
      EXEC,
    );
    checkSnapshotInvariants(snapshot);
    expect(snapshot.ready).toEqual(new Set([goal, B, C]));
    expect(snapshot.blocked).toEqual(new Map([[A, [B, C]]]));
    expect(statusOf(snapshot, A)).toBe("blocked");
    expect(statusOf(snapshot, B)).toBe("ready");
  });

  it("unlocks a task once all its requirements are succeeded", () => {
    const snapshot = deriveSnapshot(
      makeData({
        steps: [
          [goal, A],
          [goal, B],
          [goal, C],
        ],
        requires: [
          [A, B],
          [A, C],
        ],
        succeeded: [B, C],
      }),
      EXEC,
    );
    checkSnapshotInvariants(snapshot);
    expect(snapshot.ready).toEqual(new Set([goal, A]));
    expect(snapshot.blocked.size).toBe(0);
    expect(statusOf(snapshot, B)).toBe("done");
  });

  it("derives a parent done when every step is done (AND rule)", () => {
    const snapshot = deriveSnapshot(
      makeData({
        steps: [
          [goal, A],
          [goal, B],
        ],
        succeeded: [A, B],
      }),
      EXEC,
    );
    expect(snapshot.succeededDerived.has(goal)).toBe(true);
    expect(statusOf(snapshot, goal)).toBe("done (derived)");
  });

  it("derives a parent done when any method is done (OR rule)", () => {
    const snapshot = deriveSnapshot(
      makeData({
        methods: [
          [goal, A],
          [goal, B],
        ],
        succeeded: [A],
      }),
      EXEC,
    );
    expect(statusOf(snapshot, goal)).toBe("done (derived)");
    expect(statusOf(snapshot, B)).toBe("ready");
  });

  it("cascades derivation up several levels", () => {
    const snapshot = deriveSnapshot(
      makeData({
        steps: [
          [goal, A],
          [A, B],
        ],
        methods: [[B, C]],
        succeeded: [C],
      }),
      EXEC,
    );
    expect(snapshot.succeededDerived).toEqual(new Set([C, B, A, goal]));
  });

  it("a task with no steps and no methods is never derived, only asserted", () => {
    const snapshot = deriveSnapshot(makeData({ steps: [[goal, A]] }), EXEC);
    expect(snapshot.succeededDerived.size).toBe(0);
    expect(snapshot.ready).toEqual(new Set([goal, A]));
  });

  it("sticks to asserted outcomes with derive disabled", () => {
    const snapshot = deriveSnapshot(
      makeData({
        steps: [
          [goal, A],
          [goal, B],
        ],
        succeeded: [A, B],
      }),
      EXEC,
      { derive: false },
    );
    expect(snapshot.succeededDerived).toEqual(new Set([A, B]));
    expect(statusOf(snapshot, goal)).toBe("ready");
  });

  it("satisfies requirements through derived successes", () => {
    const snapshot = deriveSnapshot(
      makeData({
        steps: [
          [goal, A],
          [goal, B],
          [B, C],
        ],
        requires: [[A, B]],
        succeeded: [C],
      }),
      EXEC,
    );
    expect(statusOf(snapshot, B)).toBe("done (derived)");
    expect(statusOf(snapshot, A)).toBe("ready");
  });

  it("keeps failed tasks out of both ready and blocked", () => {
    const snapshot = deriveSnapshot(
      makeData({
        steps: [
          [goal, A],
          [goal, B],
        ],
        failed: [A],
      }),
      EXEC,
    );
    checkSnapshotInvariants(snapshot);
    expect(statusOf(snapshot, A)).toBe("failed");
    expect(snapshot.ready.has(A)).toBe(false);
    expect(snapshot.blocked.has(A)).toBe(false);
  });

  it("lets success take precedence over a contradictory failure, with a warning", () => {
    const snapshot = deriveSnapshot(
      makeData({ steps: [[goal, A]], succeeded: [A], failed: [A] }),
      EXEC,
    );
    expect(statusOf(snapshot, A)).toBe("done");
    expect(snapshot.warnings.some((w) => w.includes("contradictory") && w.includes(A))).toBe(true);
  });

  it("accepts the legacy success spelling and warns about it", () => {
    const snapshot = deriveSnapshot(makeData({ steps: [[goal, A]], legacy: [A] }), EXEC);
    expect(statusOf(snapshot, A)).toBe("done");
    expect(snapshot.warnings.some((w) => w.includes("legacy succeed_in") && w.includes(A))).toBe(true);
  });

  it("raises on a requires cycle among relevant tasks", () => {
    const shape: DataShape = {
      steps: [
        [goal, A],
        [goal, B],
      ],
      requires: [
        [A, B],
        [B, A],
      ],
    };
    expect(() => deriveSnapshot(makeData(shape), EXEC)).toThrow(RequiresCycleError);
    expect(() => deriveSnapshot(makeData(shape), EXEC)).toThrow(
      `requires cycle: ${A} -> ${B} -> ${A}`,
    );
  });

  it("raises on a self-requirement", () => {
    expect(() =>
      deriveSnapshot(makeData({ steps: [[goal, A]], requires: [[A, A]] }), EXEC),
    ).toThrow(RequiresCycleError);
  });

  it("ignores requires cycles outside the relevant closure", () => {
    const junk1 = ex("junk1");
    const junk2 = ex("junk2");
    const snapshot = deriveSnapshot(
      makeData({
        steps: [[goal, A]],
        requires: [
          [junk1, junk2],
          [junk2, junk1],
        ],
      }),
      EXEC,
    );
    expect(snapshot.relevant.has(junk1)).toBe(false);
    expect(statusOf(snapshot, junk1)).toBe("unknown");
  });

  it("terminates on decomposition cycles", () => {
    const snapshot = deriveSnapshot(
      makeData({
        steps: [
          [goal, A],
          [A, goal],
        ],
      }),
      EXEC,
    );
    checkSnapshotInvariants(snapshot);
    expect(snapshot.ready).toEqual(new Set([goal, A]));
  });

  it("limits the view to a scope task when asked", () => {
    const snapshot = deriveSnapshot(
      makeData({
        steps: [
          [goal, A],
          [A, B],
          [goal, C],
        ],
      }),
      EXEC,
      { scope: A },
    );
    expect(snapshot.relevant).toEqual(new Set([A, B]));
    expect(statusOf(snapshot, C)).toBe("unknown");
  });

  it("serializes to the command-line status JSON shape", () => {
    const snapshot = deriveSnapshot(
      makeData({
        steps: [
          [goal, A],
          [goal, B],
        ],
        requires: [[A, B]],
        succeeded: [],
      }),
      EXEC,
    );
    const doc = snapshotToJson(snapshot);
    expect(doc).toEqual({
      execution: EXEC,
      goals: [goal],
      succeededAsserted: [],
      failedAsserted: [],
      succeededDerived: [],
      ready: [B, goal].sort(),
      blocked: { [A]: [B] },
      warnings: [],
      responded: ["test"],
      failedEndpoints: [],
    });
  });
});

describe("findCycles", () => {
  it("reports each strongly connected component once, canonically sorted", () => {
    const cycles = findCycles(
      edges([
        [B, A],
        [A, B],
        [C, C],
        [goal, A],
      ]),
    );
    expect(cycles).toEqual([[A, B], [C]]);
  });

  it("finds nothing in a DAG", () => {
    expect(
      findCycles(
        edges([
          [goal, A],
          [A, B],
          [goal, B],
        ]),
      ),
    ).toEqual([]);
  });
});

describe("randomized invariants", () => {
  function lcg(seed: number): () => number {
    let state = seed >>> 0;
    return () => {
      state = (state * 1664525 + 1013904223) >>> 0;
      return state / 0x100000000;
    };
  }

  it("holds the structural invariants and success monotonicity on random DAGs", () => {
    for (let caseNo = 0; caseNo < 60; caseNo++) {
      const rand = lcg(1000 + caseNo);
      const nodes = Array.from({ length: 2 + Math.floor(rand() * 18) }, (_, i) => ex(`n${i}`));
      const steps: Array<[string, string]> = [];
      const methods: Array<[string, string]> = [];
      const requires: Array<[string, string]> = [];
      for (let i = 0; i < nodes.length; i++) {
        for (let j = i + 1; j < nodes.length; j++) {
          const roll = rand();
          if (roll < 0.1) steps.push([nodes[i], nodes[j]]);
          else if (roll < 0.16) methods.push([nodes[i], nodes[j]]);
          else if (roll < 0.22) requires.push([nodes[i], nodes[j]]);
        }
      }
      const succeeded = nodes.filter(() => rand() < 0.25);
      const failed = nodes.filter(() => rand() < 0.08);
      const shape: DataShape = { goals: [nodes[0]], steps, methods, requires, succeeded, failed };
      const snapshot = deriveSnapshot(makeData(shape), EXEC);
      checkSnapshotInvariants(snapshot);

      const remaining = [...snapshot.relevant].filter((t) => !snapshot.succeededDerived.has(t));
      if (remaining.length === 0) continue;
      const extra = remaining[Math.floor(rand() * remaining.length)];
      const grown = deriveSnapshot(makeData({ ...shape, succeeded: [...succeeded, extra] }), EXEC);
      checkSnapshotInvariants(grown);
      for (const t of snapshot.succeededDerived) {
        expect(grown.succeededDerived.has(t)).toBe(true);
      }
      for (const t of snapshot.ready) {
        const stillFine = grown.ready.has(t) || grown.succeededDerived.has(t);
        expect(stillFine).toBe(true);
      }
    }
  });
});

describe("fetchExecutionData and computeSnapshot", () => {
  function outcomesEndpoint(fed: MiniFederation): MiniFederation["endpoints"][number] {
    const ep = fed.endpoints.find((e) => e.info.name === "outcomes");
    if (ep === undefined) throw new Error("no outcomes endpoint");
    return ep;
  }

  it("pulls goals, edges, and this execution's outcomes from the federation", async () => {
    const fed = conferenceFederation();
    outcomesEndpoint(fed).triples.push(
      [iri(EXEC), iri(HAS_GOAL), iri(CONFERENCE.goal)],
      [iri(CONFERENCE.taskB), iri(SUCCEEDED_IN), iri(EXEC)],
      [iri(CONFERENCE.taskC), iri(FAILED_IN), iri(ex("some_other_execution"))],
    );
    const data = await fetchExecutionData(fed.infos(), EXEC, fed.fetchFn);
    expect(data.goals).toEqual(new Set([CONFERENCE.goal]));
    expect(data.steps.get(CONFERENCE.goal)).toEqual(
      new Set([CONFERENCE.taskA, CONFERENCE.taskB, CONFERENCE.taskC]),
    );
    expect(data.requires.get(CONFERENCE.taskA)).toEqual(new Set([CONFERENCE.taskB, CONFERENCE.taskC]));
    expect(data.succeeded).toEqual(new Set([CONFERENCE.taskB]));
    expect(data.failed).toEqual(new Set());
    expect(data.responded).toEqual(["constraints", "outcomes", "structure"]);
  });

  it("computes the same snapshot from a split federation as from one merged endpoint", async () => {
    const fed = conferenceFederation();
    outcomesEndpoint(fed).triples.push(
      [iri(EXEC), iri(HAS_GOAL), iri(CONFERENCE.goal)],
      [iri(CONFERENCE.taskB), iri(SUCCEEDED_IN), iri(EXEC)],
    );
    const split = await computeSnapshot(fed.infos(), EXEC, {}, fed.fetchFn);

    const merged = new MiniFederation();
    merged.add("all", fed.endpoints.flatMap((ep) => ep.triples));
    const single = await computeSnapshot(merged.infos(), EXEC, {}, merged.fetchFn);

    expect(snapshotToJson({ ...split, responded: [] })).toEqual(
      snapshotToJson({ ...single, responded: [] }),
    );
  });
});

describe("startExecution and assertOutcome", () => {
  it("mints a fresh execution IRI and publishes its goal to the named target", async () => {
    const fed = conferenceFederation();
    const execution = await startExecution(
      fed.infos(),
      "outcomes",
      CONFERENCE.goal,
      "http://example.ex/",
      fed.fetchFn,
    );
    expect(execution).toMatch(/^http:\/\/example\.ex\/execution_[0-9a-f]{32}$/);
    const outcomes = fed.endpoints.find((e) => e.info.name === "outcomes");
    expect(outcomes?.has([iri(execution), iri(HAS_GOAL), iri(CONFERENCE.goal)])).toBe(true);
    const structure = fed.endpoints.find((e) => e.info.name === "structure");
    expect(structure?.has([iri(execution), iri(HAS_GOAL), iri(CONFERENCE.goal)])).toBe(false);

    const second = await startExecution(fed.infos(), "outcomes", CONFERENCE.goal, "http://example.ex/", fed.fetchFn);
    expect(second).not.toBe(execution);
  });

  it("sees the execution from any endpoint afterwards", async () => {
    const fed = conferenceFederation();
    expect(await executionExists(fed.infos(), EXEC, fed.fetchFn)).toBe(false);
    const execution = await startExecution(fed.infos(), "structure", CONFERENCE.goal, "http://example.ex/", fed.fetchFn);
    expect(await executionExists(fed.infos(), execution, fed.fetchFn)).toBe(true);
  });

  it("publishes success and failure assertions, idempotently", async () => {
    const fed = conferenceFederation();
    const execution = await startExecution(fed.infos(), "outcomes", CONFERENCE.goal, "http://example.ex/", fed.fetchFn);
    expect(
      await assertOutcome(fed.infos(), "outcomes", execution, CONFERENCE.taskB, "succeeded", fed.fetchFn),
    ).toBe(1);
    expect(
      await assertOutcome(fed.infos(), "outcomes", execution, CONFERENCE.taskB, "succeeded", fed.fetchFn),
    ).toBe(0);
    expect(
      await assertOutcome(fed.infos(), "outcomes", execution, CONFERENCE.taskC, "failed", fed.fetchFn),
    ).toBe(1);
    const outcomes = fed.endpoints.find((e) => e.info.name === "outcomes");
    expect(outcomes?.has([iri(CONFERENCE.taskB), iri(SUCCEEDED_IN), iri(execution)])).toBe(true);
    expect(outcomes?.has([iri(CONFERENCE.taskC), iri(FAILED_IN), iri(execution)])).toBe(true);
  });

  it("refuses outcomes for executions nobody started", async () => {
    const fed = conferenceFederation();
    await expect(
      assertOutcome(fed.infos(), "outcomes", ex("execution_ghost"), CONFERENCE.taskB, "succeeded", fed.fetchFn),
    ).rejects.toThrow(UnknownExecutionError);
  });
});

describe("ExecutionPoller", () => {
  async function startedConference(): Promise<{ fed: MiniFederation; execution: string }> {
    const fed = conferenceFederation();
    const execution = await startExecution(fed.infos(), "outcomes", CONFERENCE.goal, "http://example.ex/", fed.fetchFn);
    return { fed, execution };
  }

  it("reports already-ready tasks on the first poll, then newly-ready ones with their reasons", async () => {
    const { fed, execution } = await startedConference();
    const poller = new ExecutionPoller(fed.infos(), execution, {}, fed.fetchFn);

    const first = await poller.poll();
    expect(first.ok).toBe(true);
    expect(first.newlyReady.map((n) => n.task).sort()).toEqual(
      [CONFERENCE.goal, CONFERENCE.taskB, CONFERENCE.taskC].sort(),
    );
    expect(first.newlyReady.every((n) => n.because.length === 0)).toBe(true);
    expect(statusOf(first.snapshot!, CONFERENCE.taskA)).toBe("blocked");

    await assertOutcome(fed.infos(), "outcomes", execution, CONFERENCE.taskB, "succeeded", fed.fetchFn);
    await assertOutcome(fed.infos(), "outcomes", execution, CONFERENCE.taskC, "succeeded", fed.fetchFn);

    const second = await poller.poll();
    expect(second.newlyReady).toHaveLength(1);
    expect(second.newlyReady[0].task).toBe(CONFERENCE.taskA);
    expect(second.newlyReady[0].because).toEqual([CONFERENCE.taskB, CONFERENCE.taskC]);
    expect(statusOf(second.snapshot!, CONFERENCE.taskA)).toBe("ready");

    const third = await poller.poll();
    expect(third.newlyReady).toEqual([]);
  });

  it("reports each readiness transition at most once, even when an endpoint flaps", async () => {
    const fed = conferenceFederation();
    // The goal lives on a steady endpoint; only the outcome assertions flap.
    const execution = await startExecution(fed.infos(), "structure", CONFERENCE.goal, "http://example.ex/", fed.fetchFn);
    const outcomes = fed.endpoints.find((e) => e.info.name === "outcomes")!;
    const poller = new ExecutionPoller(fed.infos(), execution, {}, fed.fetchFn);

    await assertOutcome(fed.infos(), "outcomes", execution, CONFERENCE.taskB, "succeeded", fed.fetchFn);
    await assertOutcome(fed.infos(), "outcomes", execution, CONFERENCE.taskC, "succeeded", fed.fetchFn);
    const first = await poller.poll();
    expect(first.newlyReady.map((n) => n.task)).toContain(CONFERENCE.taskA);

    outcomes.mode = "down";
    const during = await poller.poll();
    expect(during.ok).toBe(true);
    // With the assertions unreachable, B and C look undone (and ready)
    // again; the flap must not re-announce A later, though.
    expect(statusOf(during.snapshot!, CONFERENCE.taskA)).toBe("blocked");
    expect(during.newlyReady.map((n) => n.task).sort()).toEqual([CONFERENCE.taskB, CONFERENCE.taskC]);
    expect(during.snapshot!.failedEndpoints.map((f) => f.name)).toEqual(["outcomes"]);

    outcomes.mode = "ok";
    const after = await poller.poll();
    expect(after.newlyReady).toEqual([]);
    expect(statusOf(after.snapshot!, CONFERENCE.taskA)).toBe("ready");
  });

  it("flags a failed poll instead of raising, and recovers", async () => {
    const { fed, execution } = await startedConference();
    const poller = new ExecutionPoller(fed.infos(), execution, {}, fed.fetchFn);
    for (const ep of fed.endpoints) ep.mode = "down";
    const failed = await poller.poll();
    expect(failed.ok).toBe(false);
    expect(failed.error).toContain("every endpoint failed");
    expect(failed.snapshot).toBeUndefined();

    for (const ep of fed.endpoints) ep.mode = "ok";
    const recovered = await poller.poll();
    expect(recovered.ok).toBe(true);
    expect(recovered.newlyReady.length).toBeGreaterThan(0);
  });
});

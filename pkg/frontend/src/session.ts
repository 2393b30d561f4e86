/**
 * Per-window client state. The session never holds authoritative data:
 * it remembers which endpoints to ask, what the user is looking at, and
 * how often to re-poll — everything rendered is recomputed from the
 * endpoints themselves.
 */

import type { EndpointInfo } from "./federation.js";

export const DEFAULT_POLL_INTERVAL_SECONDS = 5;

export class UiSession {
  selectedEntity?: string;
  activeExecution?: string;
  private pollIntervalValue: number;

  constructor(
    readonly endpoints: EndpointInfo[],
    pollInterval: number = DEFAULT_POLL_INTERVAL_SECONDS,
  ) {
    if (endpoints.length === 0) {
      throw new Error("a session needs at least one endpoint");
    }
    this.pollIntervalValue = UiSession.checkPollInterval(pollInterval);
  }

  get pollInterval(): number {
    return this.pollIntervalValue;
  }

  set pollInterval(seconds: number) {
    this.pollIntervalValue = UiSession.checkPollInterval(seconds);
  }

  private static checkPollInterval(seconds: number): number {
    if (!Number.isFinite(seconds) || seconds < 1) {
      throw new Error("poll interval must be at least 1 second");
    }
    return seconds;
  }
}

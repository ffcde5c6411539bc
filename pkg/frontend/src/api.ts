// Thin typed client over the session service.

import type {
  ActionOut,
  InsightsPayload,
  SessionDetail,
  SessionSummary,
  StatsOut,
  TimelineOut,
  TracePointOut,
} from "./types.js";
import type { SelectionState } from "./state.js";

export interface FetchLike {
  (url: string, init?: RequestInit): Promise<Response>;
}

export class ApiClient {
  /** Raw response bodies by URL, most recent fetch cycle; lets tests verify
   * that displayed values exist verbatim in the wire bytes. */
  lastBodies: Map<string, string> = new Map();

  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = fetch.bind(globalThis),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const url = this.baseUrl + path;
    const resp = await this.fetchImpl(url);
    const text = await resp.text();
    if (!resp.ok) {
      throw new Error(`${resp.status} ${path}: ${text}`);
    }
    this.lastBodies.set(path, text);
    return JSON.parse(text) as T;
  }

  selectionQuery(state: SelectionState): string {
    const params = new URLSearchParams();
    if (state.activeUsers !== null) params.set("users", state.activeUsers.join(","));
    if (state.activeActions !== null) params.set("actions", state.activeActions.join(","));
    if (state.timeRange.from) params.set("from", state.timeRange.from);
    if (state.timeRange.to) params.set("to", state.timeRange.to);
    return params.toString();
  }

  sessions(): Promise<SessionSummary[]> {
    return this.getJson("/api/sessions");
  }

  session(sid: string): Promise<SessionDetail> {
    return this.getJson(`/api/sessions/${sid}`);
  }

  actions(sid: string, state: SelectionState): Promise<ActionOut[]> {
    const q = this.selectionQuery(state);
    return this.getJson(`/api/sessions/${sid}/actions${q ? "?" + q : ""}`);
  }

  timeline(sid: string, state: SelectionState): Promise<TimelineOut> {
    const params = new URLSearchParams(this.selectionQuery(state));
    params.set("bin", state.binSize);
    return this.getJson(`/api/sessions/${sid}/timeline?${params.toString()}`);
  }

  trace(sid: string, state: SelectionState): Promise<TracePointOut[]> {
    const params = new URLSearchParams(this.selectionQuery(state));
    params.set("grid", String(state.traceGrid));
    return this.getJson(`/api/sessions/${sid}/trace?${params.toString()}`);
  }

  stats(sid: string, state: SelectionState): Promise<StatsOut> {
    const q = this.selectionQuery(state);
    return this.getJson(`/api/sessions/${sid}/stats${q ? "?" + q : ""}`);
  }

  insights(sid: string): Promise<InsightsPayload> {
    return this.getJson(`/api/sessions/${sid}/insights`);
  }

  async requestInsights(sid: string, aoi: string, mode: string): Promise<{ jobId: string }> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/sessions/${sid}/insights`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ aoi, mode }),
    });
    if (resp.status === 409) throw new Error("an insight job is already running");
    if (!resp.ok) throw new Error(`insight job rejected: ${resp.status}`);
    return (await resp.json()) as { jobId: string };
  }

  assetBytes(url: string): Promise<ArrayBuffer> {
    return this.fetchImpl(this.baseUrl + url).then((r) => {
      if (!r.ok) throw new Error(`asset ${url}: ${r.status}`);
      return r.arrayBuffer();
    });
  }
}

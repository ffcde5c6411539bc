// Orchestrates the single refetch cycle behind every state change and exposes
// the linked-view debug hook used by integration tests.

import { ApiClient } from "./api.js";
import { needsRefetch, SelectionStore, type SelectionState } from "./state.js";
import {
  buildData,
  buildInsights,
  buildSpatial,
  buildTemporal,
  type DataVM,
  type InsightPanelVM,
  type Numeric,
  type SpatialVM,
  type TemporalVM,
} from "./viewmodels.js";
import type { ActionOut, InsightsPayload, SessionDetail, StatsOut, TimelineOut, TracePointOut } from "./types.js";

export interface ViewData {
  detail: SessionDetail;
  actions: ActionOut[];
  timeline: TimelineOut;
  trace: TracePointOut[];
  stats: StatsOut;
  insights: InsightsPayload;
}

export interface Views {
  temporal: TemporalVM;
  spatial: SpatialVM;
  data: DataVM;
  insights: InsightPanelVM;
}

export interface DebugSnapshot {
  cycle: number;
  temporalIds: string[];
  spatialIds: string[];
  dataIds: string[];
  insightSelectionIds: string[];
  fetchesThisCycle: number;
  numerics: Numeric[];
}

export type RenderFn = (views: Views, data: ViewData, state: SelectionState) => void;

export class AppController {
  readonly store = new SelectionStore();
  private data: ViewData | null = null;
  private views: Views | null = null;
  private cycle = 0;
  private fetchesThisCycle = 0;
  private numerics: Numeric[] = [];
  private renderFns: RenderFn[] = [];
  private refreshing: Promise<void> | null = null;

  constructor(readonly api: ApiClient) {
    this.store.subscribe((state, changed) => {
      if (state.sessionId === null) return;
      if (needsRefetch(changed)) {
        void this.refresh();
      } else if (this.data) {
        this.rebuild(state);
      }
    });
  }

  onRender(fn: RenderFn): void {
    this.renderFns.push(fn);
  }

  current(): { views: Views | null; data: ViewData | null } {
    return { views: this.views, data: this.data };
  }

  /** One full fetch cycle; stale cycles lose to the latest selection. */
  async refresh(): Promise<void> {
    const state = this.store.get();
    const sid = state.sessionId;
    if (!sid) return;
    const myCycle = ++this.cycle;
    let fetches = 0;
    const count = <T>(p: Promise<T>): Promise<T> => {
      fetches++;
      return p;
    };
    const task = (async () => {
      const [detail, actions, timeline, trace, stats, insights] = await Promise.all([
        count(this.api.session(sid)),
        count(this.api.actions(sid, state)),
        count(this.api.timeline(sid, state)),
        count(this.api.trace(sid, state)),
        count(this.api.stats(sid, state)),
        count(this.api.insights(sid)),
      ]);
      if (myCycle !== this.cycle) return; // superseded by a newer selection
      this.data = { detail, actions, timeline, trace, stats, insights };
      this.fetchesThisCycle = fetches;
      this.rebuild(this.store.get());
    })();
    this.refreshing = task;
    await task;
  }

  /** Wait for any in-flight cycle (test support). */
  async settle(): Promise<void> {
    while (this.refreshing) {
      const current = this.refreshing;
      await current;
      if (this.refreshing === current) this.refreshing = null;
    }
  }

  private rebuild(state: SelectionState): void {
    if (!this.data) return;
    const { detail, actions, timeline, trace, stats, insights } = this.data;
    this.numerics = [];
    const sink = (n: Numeric) => this.numerics.push(n);
    const temporal = buildTemporal(
      actions, timeline, insights.markers, state,
      detail.recordingStart, detail.recordingEnd, sink,
    );
    const spatial = buildSpatial(actions, trace, detail.users, detail.actionNames, sink);
    const data = buildData(actions, stats, sink);
    const insightPanel = buildInsights(insights, data.recordIds, state);
    this.views = { temporal, spatial, data, insights: insightPanel };
    for (const fn of this.renderFns) fn(this.views, this.data, state);
  }

  /** Linked-view consistency hook: the id set underlying each viewer. */
  debugSnapshot(): DebugSnapshot {
    if (!this.views) {
      return {
        cycle: this.cycle,
        temporalIds: [],
        spatialIds: [],
        dataIds: [],
        insightSelectionIds: [],
        fetchesThisCycle: 0,
        numerics: [],
      };
    }
    const uniqueSorted = (ids: string[]) => [...new Set(ids)].sort();
    return {
      cycle: this.cycle,
      temporalIds: uniqueSorted(this.views.temporal.recordIds),
      spatialIds: uniqueSorted(this.views.spatial.recordIds),
      dataIds: uniqueSorted(this.views.data.recordIds),
      insightSelectionIds: uniqueSorted(this.views.insights.recordIds),
      fetchesThisCycle: this.fetchesThisCycle,
      numerics: [...this.numerics],
    };
  }

  /** Kick off insight generation and poll until the job settles. */
  async generateInsights(aoi: string, mode: string, pollMs = 150, maxPolls = 400): Promise<void> {
    const sid = this.store.get().sessionId;
    if (!sid) throw new Error("no session selected");
    await this.api.requestInsights(sid, aoi, mode);
    for (let i = 0; i < maxPolls; i++) {
      const payload = await this.api.insights(sid);
      if (payload.status === "ready") break;
      if (payload.job && payload.job.status === "failed") {
        throw new Error(payload.job.error ?? "insight job failed");
      }
      await new Promise((resolve) => setTimeout(resolve, pollMs));
    }
    await this.refresh();
  }
}

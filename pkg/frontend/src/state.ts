// Single source of truth for the linked viewers.  Every viewer renders from
// this state; one update triggers exactly one refetch cycle downstream.

export interface TimeRange {
  from: string | null; // YYMMDD:HHMMSS:mmm, null = session start
  to: string | null;
}

export interface SelectionState {
  sessionId: string | null;
  timeRange: TimeRange;
  activeUsers: string[] | null; // null = all users
  activeActions: string[] | null; // null = all actions
  binSize: string; // TimeDelta string
  traceGrid: number;
  highlightedInsightId: string | null;
  highlightedMarkerIds: string[];
}

export function initialState(): SelectionState {
  return {
    sessionId: null,
    timeRange: { from: null, to: null },
    activeUsers: null,
    activeActions: null,
    binSize: "000000:000001:000",
    traceGrid: 0.05,
    highlightedInsightId: null,
    highlightedMarkerIds: [],
  };
}

export type Listener = (state: SelectionState, changed: (keyof SelectionState)[]) => void;

export class SelectionStore {
  private state: SelectionState = initialState();
  private listeners: Listener[] = [];

  get(): SelectionState {
    return this.state;
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  /** Apply a partial update; notifies each listener exactly once. */
  update(patch: Partial<SelectionState>): void {
    const changed = (Object.keys(patch) as (keyof SelectionState)[]).filter(
      (k) => JSON.stringify(this.state[k]) !== JSON.stringify(patch[k]),
    );
    if (changed.length === 0) return;
    this.state = { ...this.state, ...patch };
    for (const fn of [...this.listeners]) fn(this.state, changed);
  }

  toggleUser(user: string, allUsers: string[]): void {
    this.update({ activeUsers: toggleIn(this.state.activeUsers, user, allUsers) });
  }

  toggleAction(action: string, allActions: string[]): void {
    this.update({ activeActions: toggleIn(this.state.activeActions, action, allActions) });
  }
}

function toggleIn(current: string[] | null, value: string, all: string[]): string[] | null {
  const active = current === null ? [...all] : [...current];
  const idx = active.indexOf(value);
  if (idx >= 0) active.splice(idx, 1);
  else active.push(value);
  // Keep canonical order; collapse back to null (= unrestricted) when full.
  const ordered = all.filter((v) => active.includes(v));
  return ordered.length === all.length ? null : ordered;
}

/** Does this state change require refetching server products? */
export function needsRefetch(changed: (keyof SelectionState)[]): boolean {
  const dataKeys: (keyof SelectionState)[] = [
    "sessionId",
    "timeRange",
    "activeUsers",
    "activeActions",
    "binSize",
    "traceGrid",
  ];
  return changed.some((k) => dataKeys.includes(k));
}

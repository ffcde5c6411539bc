import { describe, expect, it } from "vitest";

import { initialState, needsRefetch, SelectionStore } from "../src/state.js";

describe("SelectionStore", () => {
  it("notifies each listener exactly once per update", () => {
    const store = new SelectionStore();
    let calls = 0;
    store.subscribe(() => calls++);
    store.update({ sessionId: "s1", binSize: "000000:000002:000" });
    expect(calls).toBe(1);
  });

  it("ignores no-op updates", () => {
    const store = new SelectionStore();
    let calls = 0;
    store.subscribe(() => calls++);
    store.update({ binSize: initialState().binSize });
    expect(calls).toBe(0);
  });

  it("reports which keys changed", () => {
    const store = new SelectionStore();
    let seen: string[] = [];
    store.subscribe((_, changed) => (seen = [...changed]));
    store.update({ timeRange: { from: "240801:090000:000", to: null } });
    expect(seen).toEqual(["timeRange"]);
  });

  it("toggle collapses back to null when every value is active", () => {
    const store = new SelectionStore();
    const all = ["User1", "User2"];
    store.toggleUser("User2", all);
    expect(store.get().activeUsers).toEqual(["User1"]);
    store.toggleUser("User2", all);
    expect(store.get().activeUsers).toBeNull();
  });

  it("toggle keeps canonical ordering", () => {
    const store = new SelectionStore();
    const all = ["User1", "User2", "User3"];
    store.toggleUser("User1", all); // off
    store.toggleUser("User1", all); // on again
    store.toggleUser("User2", all); // off
    expect(store.get().activeUsers).toEqual(["User1", "User3"]);
  });

  it("classifies data-affecting changes for refetch", () => {
    expect(needsRefetch(["timeRange"])).toBe(true);
    expect(needsRefetch(["binSize", "highlightedInsightId"])).toBe(true);
    expect(needsRefetch(["highlightedInsightId", "highlightedMarkerIds"])).toBe(false);
  });
});

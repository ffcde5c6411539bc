// The recorded interaction script shared by the integration and presentation
// tests: each step is applied to the controller exactly as the panels would.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { AppController } from "../src/controller.js";
import { brushToRange } from "../src/viewmodels.js";

export type InteractionStep =
  | { kind: "brush"; fracFrom: number; fracTo: number }
  | { kind: "toggleUser"; user: string }
  | { kind: "toggleAction"; action: string }
  | { kind: "binSize"; value: string }
  | { kind: "markerClick"; index: number }
  | { kind: "reset" };

export function loadScript(): InteractionStep[] {
  const here = dirname(fileURLToPath(import.meta.url));
  return JSON.parse(
    readFileSync(join(here, "fixtures", "interactions.json"), "utf-8"),
  ) as InteractionStep[];
}

/** Apply one step through the same state mutations the panels perform. */
export async function applyStep(
  controller: AppController,
  step: InteractionStep,
): Promise<void> {
  const { views, data } = controller.current();
  if (!views || !data) throw new Error("controller has no data yet");
  switch (step.kind) {
    case "brush": {
      const range = brushToRange(views.temporal, step.fracFrom, step.fracTo);
      controller.store.update({ timeRange: range });
      break;
    }
    case "toggleUser":
      controller.store.toggleUser(step.user, data.detail.users);
      break;
    case "toggleAction":
      controller.store.toggleAction(step.action, data.detail.actionNames);
      break;
    case "binSize":
      controller.store.update({ binSize: step.value });
      break;
    case "reset":
      controller.store.update({ timeRange: { from: null, to: null } });
      break;
    case "markerClick": {
      const marker = views.temporal.markers[step.index];
      if (!marker) throw new Error(`no marker at index ${step.index}`);
      controller.store.update({
        highlightedInsightId: marker.insightIds[0] ?? null,
        highlightedMarkerIds: [marker.actionId],
      });
      break;
    }
  }
  await controller.settle();
}

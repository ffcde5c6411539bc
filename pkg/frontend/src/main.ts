// Bootstrap: wire the controller, panels, and the spatial renderer.

import { ApiClient } from "./api.js";
import { AppController } from "./controller.js";
import { renderDataManager, renderInsights, renderTemporal } from "./panels.js";
import { SpatialView } from "./spatial.js";
import { brushToRange } from "./viewmodels.js";

declare global {
  interface Window {
    __xractDebug: () => unknown;
    __xract: AppController;
  }
}

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const api = new ApiClient("");
  const controller = new AppController(api);
  window.__xractDebug = () => controller.debugSnapshot();
  window.__xract = controller;

  const sessionSelect = byId<HTMLSelectElement>("session-select");
  const statusLine = byId<HTMLElement>("status-line");
  const spatial = new SpatialView(
    byId<HTMLCanvasElement>("spatial-canvas"),
    api,
    byId<HTMLElement>("lod-badge"),
  );

  controller.onRender((views, data, state) => {
    statusLine.textContent = `${data.detail.appName} (${data.detail.virtuality}) — ` +
      `${views.data.rows.length} actions in selection`;
    renderTemporal(byId("temporal-panel"), views.temporal, state, {
      onBrush: (a, b) => {
        const range = brushToRange(views.temporal, a, b);
        controller.store.update({ timeRange: range });
      },
      onMarkerClick: (marker) => {
        controller.store.update({
          highlightedInsightId: marker.insightIds[0] ?? null,
          highlightedMarkerIds: [marker.actionId],
        });
      },
      onBinSize: (value) => controller.store.update({ binSize: value }),
      onResetRange: () => controller.store.update({ timeRange: { from: null, to: null } }),
    });
    renderInsights(byId("insight-panel"), views.insights, {
      onSelect: (id, markerIds) =>
        controller.store.update({ highlightedInsightId: id, highlightedMarkerIds: markerIds }),
      onSubmit: (aoi, mode) => {
        statusLine.textContent = "generating insights...";
        controller.generateInsights(aoi, mode).catch((e) => {
          statusLine.textContent = String(e);
        });
      },
    });
    renderDataManager(byId("manager-panel"), data.detail, state, views.data, {
      onToggleUser: (u) => controller.store.toggleUser(u, data.detail.users),
      onToggleAction: (a) => controller.store.toggleAction(a, data.detail.actionNames),
    });
    void spatial.update(views.spatial);
  });

  const sessions = await api.sessions();
  sessionSelect.replaceChildren(
    ...sessions.map((s) => {
      const opt = document.createElement("option");
      opt.value = s.id;
      opt.textContent = `${s.id} — ${s.appName}`;
      return opt;
    }),
  );
  sessionSelect.addEventListener("change", () => {
    controller.store.update({
      sessionId: sessionSelect.value,
      timeRange: { from: null, to: null },
      activeUsers: null,
      activeActions: null,
      highlightedInsightId: null,
      highlightedMarkerIds: [],
    });
  });
  if (sessions.length > 0) {
    controller.store.update({ sessionId: sessions[0].id });
  } else {
    statusLine.textContent = "no processed sessions found under the served root";
  }
}

void boot();

// DOM renderers for the temporal, insight, and data-manager panels.
// All logic lives in the view models; these functions only map VMs to nodes.

import { blueShade } from "./colormap.js";
import type { SelectionState } from "./state.js";
import type { SessionDetail } from "./types.js";
import type {
  DataVM,
  InsightPanelVM,
  TemporalMarkerVM,
  TemporalVM,
} from "./viewmodels.js";
import { clockLabel } from "./viewmodels.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export interface TemporalHandlers {
  onBrush(fracFrom: number, fracTo: number): void;
  onMarkerClick(marker: TemporalMarkerVM): void;
  onBinSize(value: string): void;
  onResetRange(): void;
}

const SVG_NS = "http://www.w3.org/2000/svg";

export function renderTemporal(
  root: HTMLElement,
  vm: TemporalVM,
  state: SelectionState,
  handlers: TemporalHandlers,
): void {
  root.replaceChildren();
  const head = el("div", "panel-head");
  head.append(el("span", "panel-title", "Temporal"));
  const binSelect = el("select", "bin-select");
  for (const [label, value] of [
    ["0.5 s bins", "000000:000000:500"],
    ["1 s bins", "000000:000001:000"],
    ["2 s bins", "000000:000002:000"],
    ["5 s bins", "000000:000005:000"],
  ] as const) {
    const opt = el("option", undefined, label) as HTMLOptionElement;
    opt.value = value;
    opt.selected = state.binSize === value;
    binSelect.append(opt);
  }
  binSelect.addEventListener("change", () => handlers.onBinSize(binSelect.value));
  const reset = el("button", "chip", "full range");
  reset.addEventListener("click", () => handlers.onResetRange());
  const rangeLabel = el(
    "span",
    "range-label",
    `${clockLabel(vm.rangeStart)} .. ${clockLabel(vm.rangeEnd)}`,
  );
  head.append(binSelect, reset, rangeLabel);
  root.append(head);

  if (vm.rows.length === 0) {
    root.append(el("div", "empty-state", "No actions in the current selection."));
    return;
  }

  const labelW = 170;
  const rowH = 22;
  const markerH = 18;
  const width = Math.max(420, root.clientWidth - 16);
  const height = markerH + vm.rows.length * rowH + 8;
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.classList.add("timeline-svg");

  const plotW = width - labelW - 8;
  const x = (frac: number) => labelW + frac * plotW;

  for (const m of vm.markers) {
    const tri = document.createElementNS(SVG_NS, "path");
    const cx = x(m.x);
    tri.setAttribute("d", `M ${cx - 5} 2 L ${cx + 5} 2 L ${cx} 14 Z`);
    tri.setAttribute("class", m.highlighted ? "aoi-marker highlighted" : "aoi-marker");
    tri.addEventListener("click", (ev) => {
      ev.stopPropagation();
      handlers.onMarkerClick(m);
    });
    svg.append(tri);
  }

  vm.rows.forEach((row, i) => {
    const y = markerH + i * rowH;
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", "4");
    label.setAttribute("y", String(y + rowH - 7));
    label.setAttribute("class", "row-label");
    label.textContent = `${row.user} / ${row.action}`;
    svg.append(label);
    const lane = document.createElementNS(SVG_NS, "rect");
    lane.setAttribute("x", String(labelW));
    lane.setAttribute("y", String(y + 2));
    lane.setAttribute("width", String(plotW));
    lane.setAttribute("height", String(rowH - 6));
    lane.setAttribute("class", "lane");
    svg.append(lane);
    for (const bar of row.bars) {
      const rect = document.createElementNS(SVG_NS, "rect");
      rect.setAttribute("x", String(x(bar.x0)));
      rect.setAttribute("y", String(y + 3));
      rect.setAttribute("width", String(Math.max(2, x(bar.x1) - x(bar.x0))));
      rect.setAttribute("height", String(rowH - 8));
      rect.setAttribute("fill", blueShade(0.25 + 0.75 * bar.shade));
      rect.setAttribute("class", "bar");
      const tip = document.createElementNS(SVG_NS, "title");
      tip.textContent = bar.tooltip;
      rect.append(tip);
      svg.append(rect);
    }
  });

  // Brush selection on the plot area.
  let dragStart: number | null = null;
  const toFrac = (ev: MouseEvent) => {
    const rect = svg.getBoundingClientRect();
    return Math.min(1, Math.max(0, (ev.clientX - rect.left - labelW) / plotW));
  };
  svg.addEventListener("mousedown", (ev) => {
    dragStart = toFrac(ev);
  });
  svg.addEventListener("mouseup", (ev) => {
    if (dragStart === null) return;
    const end = toFrac(ev);
    if (Math.abs(end - dragStart) > 0.005) handlers.onBrush(dragStart, end);
    dragStart = null;
  });
  root.append(svg);
}

export interface InsightHandlers {
  onSelect(insightId: string, markerActionIds: string[]): void;
  onSubmit(aoi: string, mode: string): void;
}

export function renderInsights(
  root: HTMLElement,
  vm: InsightPanelVM,
  handlers: InsightHandlers,
): void {
  root.replaceChildren();
  const head = el("div", "panel-head");
  head.append(el("span", "panel-title", "Insights"));
  root.append(head);

  const form = el("div", "aoi-form");
  const input = el("input") as HTMLInputElement;
  input.placeholder = "Analysis-of-interest (optional)";
  input.value = vm.aoi;
  const mode = el("select") as HTMLSelectElement;
  for (const m of ["multi", "single"]) {
    const opt = el("option", undefined, `${m}-agent`) as HTMLOptionElement;
    opt.value = m;
    opt.selected = vm.mode === m;
    mode.append(opt);
  }
  const go = el("button", "chip", "generate");
  go.addEventListener("click", () => handlers.onSubmit(input.value, mode.value));
  form.append(input, mode, go);
  root.append(form);

  if (vm.status === "running") {
    root.append(el("div", "empty-state", "Insight job running..."));
    return;
  }
  if (vm.insights.length === 0) {
    root.append(
      el("div", "empty-state", "No insights yet. Enter an analysis-of-interest and generate."),
    );
    return;
  }
  const list = el("div", "insight-list");
  for (const ins of vm.insights) {
    const box = el("div", ins.selected ? "insight selected" : "insight");
    const title = el("div", "insight-title", ins.title);
    title.append(el("span", "aspect-tag", ins.aspect));
    const body = el("div", "insight-body", ins.body);
    const stamps = el(
      "div",
      "insight-markers",
      ins.markerStamps.map((s) => clockLabel(s)).join("  "),
    );
    box.append(title, body, stamps);
    box.addEventListener("click", () => handlers.onSelect(ins.id, ins.markerActionIds));
    list.append(box);
  }
  root.append(list);
}

export interface ManagerHandlers {
  onToggleUser(user: string): void;
  onToggleAction(action: string): void;
}

export function renderDataManager(
  root: HTMLElement,
  detail: SessionDetail,
  state: SelectionState,
  vm: DataVM,
  handlers: ManagerHandlers,
): void {
  root.replaceChildren();
  const head = el("div", "panel-head");
  head.append(el("span", "panel-title", "Data manager"));
  root.append(head);

  const chips = el("div", "chip-row");
  for (const user of detail.users) {
    const active = state.activeUsers === null || state.activeUsers.includes(user);
    const chip = el("button", active ? "chip active" : "chip", user);
    chip.addEventListener("click", () => handlers.onToggleUser(user));
    chips.append(chip);
  }
  for (const action of detail.actionNames) {
    const active = state.activeActions === null || state.activeActions.includes(action);
    const chip = el("button", active ? "chip active" : "chip", action);
    chip.addEventListener("click", () => handlers.onToggleAction(action));
    chips.append(chip);
  }
  root.append(chips);

  const statsBlock = el("div", "stats-block");
  statsBlock.append(el("div", "subhead", "Referent interactions"));
  const statTable = el("table", "stats-table");
  statTable.innerHTML = "<thead><tr><th>user</th><th>referent</th><th>count</th><th>total s</th></tr></thead>";
  const sbody = el("tbody");
  for (const row of vm.referentStats) {
    const tr = el("tr");
    for (const cell of [row.user, row.referent, row.count, row.totalSeconds]) {
      tr.append(el("td", undefined, cell));
    }
    sbody.append(tr);
  }
  statTable.append(sbody);
  statsBlock.append(statTable);
  root.append(statsBlock);

  root.append(el("div", "subhead", `Raw actions (${state.activeUsers ? "filtered" : "all users"})`));
  const table = el("table", "data-table");
  table.innerHTML =
    "<thead><tr><th>id</th><th>user</th><th>action</th><th>start</th><th>dur s</th>" +
    "<th>intent</th><th>referent</th><th>transcript</th></tr></thead>";
  const tbody = el("tbody");
  for (const row of vm.rows) {
    const tr = el("tr");
    tr.dataset.recordId = row.id;
    const intent = row.intentEstimated ? `${row.intent} *` : row.intent;
    for (const cell of [
      row.id,
      row.user,
      row.name,
      row.startTime,
      row.durationSeconds,
      intent,
      row.referentName,
      row.transcript ?? "",
    ]) {
      tr.append(el("td", undefined, cell));
    }
    tbody.append(tr);
  }
  table.append(tbody);
  root.append(table);
}

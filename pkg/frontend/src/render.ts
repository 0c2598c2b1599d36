/** DOM rendering: a pure projection of the console view state. */

import type { ConsoleViewState, StudentCard } from "./state.js";
import type { CategoryJson } from "./types.js";

export interface RenderTargets {
  connection: HTMLElement;
  card: HTMLElement;
  categories: HTMLElement;
  badges: HTMLElement;
  alignmentGraph: HTMLElement;
  kpiGraph: HTMLElement;
  homeStatus: HTMLElement;
}

const OUTCOME_LABELS: Record<string, string> = {
  valid: "saved",
  unknown_category: "saved with defect: unknown category",
  rating_out_of_domain: "saved with defect: rating out of range",
  timestamp_inverted: "saved with defect: timestamps inverted",
  duplicate: "already saved",
  queued: "queued (offline)",
};

export function render(state: ConsoleViewState, targets: RenderTargets): void {
  targets.connection.textContent = state.connection;
  targets.connection.className = `pill pill-${state.connection}`;
  renderCard(state, targets.card);
  renderBadges(state, targets.badges);
  renderHome(state, targets);
}

function renderCard(state: ConsoleViewState, el: HTMLElement): void {
  if (!state.nearestUdid) {
    el.innerHTML = `<p class="muted">No student device in range.</p>`;
    return;
  }
  if (!state.card) {
    el.innerHTML = `<p class="muted">Looking up ${escapeHtml(state.nearestUdid)}…</p>`;
    return;
  }
  const { student, recentRecords, agreement } = state.card;
  const rows = recentRecords
    .map(
      (r) =>
        `<tr><td>${escapeHtml(r.category_code)}</td><td>${r.rating}</td>` +
        `<td>${escapeHtml(r.teacher_id)}</td><td>${escapeHtml(r.comment ?? "")}</td></tr>`,
    )
    .join("");
  const chips = agreement
    .map(
      ([code, score]) =>
        `<span class="chip">${escapeHtml(code)}: ${(score * 100).toFixed(0)}% agreement</span>`,
    )
    .join(" ");
  el.innerHTML = `
    <h2>${escapeHtml(student.name)}</h2>
    <p>Year ${student.year_level} · ${escapeHtml(student.student_id)}</p>
    <div class="chips">${chips || '<span class="muted">No multi-teacher history yet.</span>'}</div>
    <table class="records">
      <thead><tr><th>Behavior</th><th>Rating</th><th>Teacher</th><th>Note</th></tr></thead>
      <tbody>${rows || '<tr><td colspan="4" class="muted">No records yet.</td></tr>'}</tbody>
    </table>`;
}

export function renderCategoryButtons(
  categories: CategoryJson[],
  selected: string | null,
  el: HTMLElement,
  enabled: boolean,
): void {
  el.innerHTML = categories
    .map((c) => {
      const active = c.code === selected ? " active" : "";
      const valence = c.valence === "positive" ? "pos" : "neg";
      return (
        `<button class="cat ${valence}${active}" data-code="${escapeHtml(c.code)}"` +
        `${enabled ? "" : " disabled"}>${escapeHtml(c.label)}</button>`
      );
    })
    .join("");
  el.insertAdjacentHTML(
    "beforeend",
    `<button class="confirm" data-confirm="1" ${selected && enabled ? "" : "disabled"}>Confirm</button>`,
  );
}

function renderBadges(state: ConsoleViewState, el: HTMLElement): void {
  el.innerHTML = state.badges
    .map((b) => {
      const label = OUTCOME_LABELS[b.outcome] ?? b.outcome;
      const kind = b.outcome === "valid" ? "ok" : b.outcome === "queued" ? "wait" : "warn";
      return `<span class="badge badge-${kind}">${escapeHtml(b.categoryCode)}: ${label}</span>`;
    })
    .join(" ");
  if (state.pendingWrites.length > 0) {
    el.insertAdjacentHTML(
      "beforeend",
      `<span class="badge badge-wait">${state.pendingWrites.length} pending</span>`,
    );
  }
}

function renderHome(state: ConsoleViewState, targets: RenderTargets): void {
  targets.homeStatus.textContent = state.home.stale
    ? "showing last-good reports (refresh failing)"
    : state.home.loaded
      ? ""
      : "loading reports…";
  drawSeries(
    targets.alignmentGraph,
    state.home.alignment.map((p) => ({ x: p.week_start, y: p.alignment })),
    "alignment",
  );
  drawSeries(
    targets.kpiGraph,
    state.home.kpi.map((p) => ({ x: p.week_start, y: p.kpi })),
    "kpi",
  );
}

function drawSeries(el: HTMLElement, points: Array<{ x: string; y: number }>, label: string): void {
  const width = 360;
  const height = 120;
  if (points.length === 0) {
    el.innerHTML = `<p class="muted">No ${label} data yet.</p>`;
    return;
  }
  const step = points.length > 1 ? width / (points.length - 1) : 0;
  const coords = points.map((p, i) => {
    const x = points.length > 1 ? i * step : width / 2;
    const y = height - 10 - p.y * (height - 20);
    return `${x.toFixed(1)},${y.toFixed(1)}`;
  });
  const dots = coords
    .map((c, i) => {
      const [x, y] = c.split(",");
      return `<circle cx="${x}" cy="${y}" r="3"><title>${points[i]!.x}: ${points[i]!.y.toFixed(3)}</title></circle>`;
    })
    .join("");
  el.innerHTML = `
    <svg viewBox="0 0 ${width} ${height}" preserveAspectRatio="none">
      <line x1="0" y1="${height - 10}" x2="${width}" y2="${height - 10}" class="axis" />
      <polyline points="${coords.join(" ")}" fill="none" class="series" />
      ${dots}
    </svg>
    <p class="muted">${escapeHtml(points[0]!.x)} → ${escapeHtml(points[points.length - 1]!.x)}</p>`;
}

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

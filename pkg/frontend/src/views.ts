// DOM rendering. Pure functions from state to element trees; main.ts swaps
// them into the page after every state change.

import { fmtAmount, fmtBound, pct } from "./format";
import type { SessionState } from "./state";
import type { PredictionEntry, RecommendedItem, RequirementRow } from "./types";

function el(tag: string, className = "", text = ""): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function allowanceBar(row: RequirementRow): HTMLElement {
  const wrap = el("div", "bar-row");
  const label = el("div", "bar-label");
  label.append(
    el("span", "bar-name", row.nutrient),
    el("span", "bar-consumed",
       `${fmtAmount(row.consumed, row.unit)} of ${fmtBound(row.mi, row.unit)}`),
  );
  if (row.adjusted) label.append(el("span", "chip chip-adjusted", "adjusted"));
  const track = el("div", "bar-track");
  const fill = el("div", "bar-fill");
  if (row.mi !== null) {
    const used = pct(row.consumed, row.mi);
    fill.style.width = `${used}%`;
    if (row.remaining_hi !== null && row.remaining_hi <= 0) {
      fill.classList.add("bar-over");
    } else if (used >= 80) {
      fill.classList.add("bar-warn");
    }
  } else {
    fill.style.width = row.consumed > 0 ? "100%" : "0";
    fill.classList.add("bar-uncapped");
  }
  track.append(fill);
  wrap.append(label, track);
  return wrap;
}

export function renderAllowances(state: SessionState): HTMLElement {
  const card = el("section", "card");
  card.append(el("h2", "", "Daily allowances"));
  const mandatory = state.requirements.filter((r) => r.mandatory);
  if (!mandatory.length) {
    card.append(el("p", "muted", "No mandatory nutrients on file."));
    return card;
  }
  for (const row of mandatory) card.append(allowanceBar(row));
  if (state.optimized) {
    card.append(el("p", "muted", "Allowances reflect today's prediction cycle."));
  }
  return card;
}

function gauge(analyte: string, entry: PredictionEntry): HTMLElement {
  const wrap = el("div", `gauge ${entry.in_range ? "" : "gauge-out"}`);
  wrap.append(el("div", "gauge-name", analyte));
  wrap.append(el("div", "gauge-value",
                 `${entry.value.toFixed(2)} ${entry.unit}`));
  wrap.append(el("div", "gauge-band",
                 `safe ${entry.min}–${entry.max}`));
  wrap.append(el("div", entry.in_range ? "chip chip-ok" : "chip chip-alert",
                 entry.in_range ? "in range" : "out of range"));
  return wrap;
}

export function renderPredictions(state: SessionState): HTMLElement {
  const card = el("section", "card");
  card.append(el("h2", "", "Next-day forecast"));
  if (!state.predictions) {
    card.append(el("p", "muted",
                   "No prediction cycle has run for this patient yet."));
    return card;
  }
  const rowEl = el("div", "gauges");
  for (const [analyte, entry] of Object.entries(state.predictions.values)) {
    rowEl.append(gauge(analyte, entry));
  }
  card.append(rowEl);
  card.append(el("p", "muted", `for ${state.predictions.target_date}`));
  return card;
}

function recommendationCard(
  item: RecommendedItem,
  onAccept: (item: RecommendedItem) => void,
): HTMLElement {
  const card = el("article", "rec-card");
  const head = el("div", "rec-head");
  head.append(el("strong", "", item.name),
              el("span", "muted", `${item.serving_size} g serving`));
  card.append(head);
  card.append(el("div", "muted",
                 `similarity ${item.similarity.toFixed(3)} · satisfaction ` +
                 item.satisfaction.toFixed(3)));
  const table = el("table", "fit-table");
  const header = el("tr");
  for (const h of ["nutrient", "amount", "remaining", "fits"]) {
    header.append(el("th", "", h));
  }
  table.append(header);
  for (const row of item.fit) {
    const tr = el("tr", row.ok ? "" : "fit-bad");
    tr.append(el("td", "", row.nutrient));
    tr.append(el("td", "", row.amount.toFixed(1)));
    tr.append(el("td", "", row.remaining_hi === null
      ? "no cap" : row.remaining_hi.toFixed(1)));
    tr.append(el("td", "", row.ok ? "yes" : "no"));
    table.append(tr);
  }
  card.append(table);
  const button = el("button", "accept", "Log this item") as HTMLButtonElement;
  button.addEventListener("click", () => onAccept(item));
  card.append(button);
  return card;
}

export function renderRecommendations(
  state: SessionState,
  onAccept: (item: RecommendedItem) => void,
): HTMLElement {
  const card = el("section", "card");
  card.append(el("h2", "", `Suggestions for meal ${state.mealIndex}`));
  if (state.noFeasibleItem) {
    card.append(el("p", "alert",
                   "No safe items remain today: every candidate would break a "
                   + "mandatory limit."));
    return card;
  }
  if (!state.recommendations.length) {
    card.append(el("p", "muted", "Nothing to suggest right now."));
    return card;
  }
  const listEl = el("div", "rec-list");
  for (const item of state.recommendations) {
    listEl.append(recommendationCard(item, onAccept));
  }
  card.append(listEl);
  return card;
}

export function renderTimeline(state: SessionState): HTMLElement {
  const card = el("section", "card");
  card.append(el("h2", "", "Today's meals"));
  if (!state.timeline.length) {
    card.append(el("p", "muted", "Nothing logged this session."));
    return card;
  }
  const ol = el("ol", "timeline");
  for (const event of state.timeline) {
    ol.append(el("li", "", `meal ${event.meal_index}: ${event.label}`));
  }
  card.append(ol);
  return card;
}

export function renderToast(state: SessionState): HTMLElement | null {
  if (!state.toast) return null;
  return el("div", "toast", state.toast);
}

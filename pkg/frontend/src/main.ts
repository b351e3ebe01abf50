import "./styles.css";
import { createApi } from "./api";
import {
  acceptRecommendation,
  initialState,
  logMeal,
  refresh,
  type SessionState,
} from "./state";
import {
  renderAllowances,
  renderPredictions,
  renderRecommendations,
  renderTimeline,
  renderToast,
} from "./views";
import type { MealBody } from "./types";

const POLL_MS = 15000;

const api = createApi("");
const params = new URLSearchParams(window.location.search);
const patientId = params.get("patient") ?? "p1";
const date = params.get("date") ?? new Date().toISOString().slice(0, 10);

let state: SessionState = initialState(patientId, date);

function setState(next: SessionState) {
  state = next;
  render();
}

async function onAccept(item: Parameters<typeof acceptRecommendation>[2]) {
  setState(await acceptRecommendation(api, state, item));
}

async function onLogMealSubmit(event: Event) {
  event.preventDefault();
  const form = event.currentTarget as HTMLFormElement;
  const data = new FormData(form);
  const itemId = String(data.get("item_id") ?? "").trim();
  const grams = Number(data.get("grams") ?? 0);
  const water = Number(data.get("water") ?? 0);
  const meal = Number(data.get("meal") ?? state.mealIndex);
  const body: MealBody = { date: state.date, meal_index: meal };
  let label = "";
  if (itemId) {
    body.item_id = itemId;
    body.grams = grams;
    label = `${itemId} (${grams} g)`;
  }
  if (water > 0) {
    body.water_liters = water;
    label = label ? `${label} + ${water} L water` : `${water} L water`;
  }
  if (!label) return;
  try {
    setState(await logMeal(api, state, body, label));
    form.reset();
  } catch (err) {
    setState({ ...state, toast: err instanceof Error ? err.message : String(err) });
  }
}

function mealForm(): HTMLElement {
  const form = document.createElement("form");
  form.className = "card meal-form";
  form.innerHTML = `
    <h2>Log a meal</h2>
    <label>meal # <input name="meal" type="number" min="1" value="1"></label>
    <label>item id <input name="item_id" placeholder="catalog item id"></label>
    <label>grams <input name="grams" type="number" min="0" step="1" value="100"></label>
    <label>water (L) <input name="water" type="number" min="0" step="0.1" value="0"></label>
    <button type="submit">Log it</button>
  `;
  form.addEventListener("submit", onLogMealSubmit);
  return form;
}

function render() {
  const root = document.getElementById("app");
  if (!root) return;
  root.replaceChildren();
  const header = document.createElement("header");
  header.innerHTML = `<h1>nutricast</h1>
    <div class="muted">patient ${state.patientId} · ${state.date}</div>`;
  root.append(header);
  const toast = renderToast(state);
  if (toast) root.append(toast);
  const grid = document.createElement("div");
  grid.className = "grid";
  grid.append(
    renderAllowances(state),
    renderPredictions(state),
    renderRecommendations(state, onAccept),
    renderTimeline(state),
    mealForm(),
  );
  root.append(grid);
}

async function boot() {
  render();
  try {
    setState(await refresh(api, state));
  } catch (err) {
    setState({ ...state, toast: `cannot reach the API: ${String(err)}` });
  }
  window.setInterval(async () => {
    try {
      setState(await refresh(api, state));
    } catch {
      // keep the last good view; the next poll retries
    }
  }, POLL_MS);
}

boot();

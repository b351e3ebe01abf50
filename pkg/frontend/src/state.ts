// Session store for one patient's day. Reload rebuilds everything from the
// API, so nothing here outlives the tab: the server owns all numbers and the
// store only caches its latest responses plus a timeline of what this session
// sent.

import { RequestFailed, type Api } from "./api";
import type {
  MealBody,
  PredictionsPayload,
  RecommendedItem,
  RequirementRow,
} from "./types";

export interface TimelineEvent {
  meal_index: number;
  label: string;
  totalsAfter: Record<string, number>;
}

export interface SessionState {
  patientId: string;
  date: string;
  mealIndex: number;
  requirements: RequirementRow[];
  optimized: boolean;
  predictions: PredictionsPayload | null;
  recommendations: RecommendedItem[];
  noFeasibleItem: boolean;
  timeline: TimelineEvent[];
  toast: string | null;
}

export function initialState(patientId: string, date: string): SessionState {
  return {
    patientId,
    date,
    mealIndex: 1,
    requirements: [],
    optimized: false,
    predictions: null,
    recommendations: [],
    noFeasibleItem: false,
    timeline: [],
    toast: null,
  };
}

export async function refresh(api: Api, state: SessionState): Promise<SessionState> {
  const requirements = await api.requirements(state.patientId, state.date);
  const predictions = await api.predictions(state.patientId).catch(() => null);
  let recommendations: RecommendedItem[] = [];
  let noFeasibleItem = false;
  try {
    const rec = await api.recommendations(state.patientId, state.mealIndex, 5, state.date);
    recommendations = rec.items;
  } catch (err) {
    if (err instanceof RequestFailed && err.code === "NoFeasibleItem") {
      noFeasibleItem = true;
    } else {
      throw err;
    }
  }
  return {
    ...state,
    requirements: requirements.nutrients,
    optimized: requirements.optimized,
    predictions: predictions?.predictions ?? null,
    recommendations,
    noFeasibleItem,
    toast: null,
  };
}

export async function logMeal(
  api: Api,
  state: SessionState,
  body: MealBody,
  label: string,
): Promise<SessionState> {
  const res = await api.logMeal(state.patientId, body);
  const next = await refresh(api, {
    ...state,
    mealIndex: Math.max(state.mealIndex, body.meal_index + 1),
  });
  return {
    ...next,
    timeline: [
      ...state.timeline,
      { meal_index: body.meal_index, label, totalsAfter: res.totals },
    ],
  };
}

/** Subtract one item's charted amounts from the remaining bars.
 *
 * Display-only mirror of what the server is about to confirm; every amount
 * comes from the recommendation's fit table, which the server computed.
 */
export function applyOptimisticAccept(
  state: SessionState,
  item: RecommendedItem,
): SessionState {
  const byNutrient = new Map(item.fit.map((row) => [row.nutrient, row.amount]));
  const requirements = state.requirements.map((row) => {
    const amount = byNutrient.get(row.nutrient);
    if (amount === undefined) return row;
    return {
      ...row,
      consumed: row.consumed + amount,
      remaining_lo: Math.max(0, row.remaining_lo - amount),
      remaining_hi: row.remaining_hi === null ? null : row.remaining_hi - amount,
    };
  });
  return { ...state, requirements };
}

export async function acceptRecommendation(
  api: Api,
  state: SessionState,
  item: RecommendedItem,
): Promise<SessionState> {
  const before = state;
  const optimistic = applyOptimisticAccept(state, item);
  try {
    const res = await api.logMeal(state.patientId, {
      date: state.date,
      meal_index: state.mealIndex,
      item_id: item.item_id,
      grams: item.serving_size,
    });
    const next = await refresh(api, {
      ...optimistic,
      mealIndex: state.mealIndex + 1,
    });
    return {
      ...next,
      timeline: [
        ...before.timeline,
        {
          meal_index: state.mealIndex,
          label: `${item.name} (${item.serving_size} g)`,
          totalsAfter: res.totals,
        },
      ],
    };
  } catch (err) {
    const message = err instanceof Error ? err.message : String(err);
    return { ...before, toast: `could not log the item: ${message}` };
  }
}

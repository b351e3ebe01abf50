// Typed client for the nutricast HTTP API. Non-2xx responses reject with the
// server's error payload so callers can surface the message and roll back.

import type {
  ApiError,
  CatalogItem,
  MealBody,
  MealResponse,
  PredictionsResponse,
  RecommendationsResponse,
  RequirementsResponse,
} from "./types";

export class RequestFailed extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, payload: ApiError) {
    super(payload.message ?? `request failed with ${status}`);
    this.status = status;
    this.code = payload.error ?? "Unknown";
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const res = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await res.json();
  if (!res.ok) {
    throw new RequestFailed(res.status, body as ApiError);
  }
  return body as T;
}

export function createApi(base = "") {
  return {
    requirements(patientId: string, date: string): Promise<RequirementsResponse> {
      return request(`${base}/api/patients/${patientId}/requirements?date=${date}`);
    },

    predictions(patientId: string, date?: string): Promise<PredictionsResponse> {
      const query = date ? `?date=${date}` : "";
      return request(`${base}/api/patients/${patientId}/predictions${query}`);
    },

    recommendations(
      patientId: string,
      meal: number,
      k: number,
      date: string,
    ): Promise<RecommendationsResponse> {
      return request(
        `${base}/api/patients/${patientId}/recommendations?meal=${meal}&k=${k}&date=${date}`,
      );
    },

    logMeal(patientId: string, body: MealBody): Promise<MealResponse> {
      return request(`${base}/api/patients/${patientId}/meals`, {
        method: "POST",
        body: JSON.stringify(body),
      });
    },

    runPrediction(patientId: string, asOf: string) {
      return request<{ cached: boolean; predictions: unknown }>(
        `${base}/api/patients/${patientId}/predict`,
        { method: "POST", body: JSON.stringify({ as_of: asOf }) },
      );
    },

    searchCatalog(q: string, limit = 20): Promise<{ items: CatalogItem[] }> {
      return request(
        `${base}/api/catalog/search?q=${encodeURIComponent(q)}&limit=${limit}`,
      );
    },
  };
}

export type Api = ReturnType<typeof createApi>;

// Mirrors of the server's JSON shapes. Every number displayed in the UI comes
// from these payloads; the client never recomputes scores or budgets.

export interface RequirementRow {
  nutrient: string;
  unit: string;
  ai: number | null;
  mi: number | null;
  consumed: number;
  remaining_lo: number;
  remaining_hi: number | null;
  mandatory: boolean;
  adjusted: boolean;
}

export interface RequirementsResponse {
  schema_version: number;
  date: string;
  nutrients: RequirementRow[];
  optimized: boolean;
}

export interface PredictionEntry {
  value: number;
  min: number;
  max: number;
  unit: string;
  in_range: boolean;
}

export interface PredictionsPayload {
  as_of: string;
  target_date: string;
  values: Record<string, PredictionEntry>;
}

export interface PredictionsResponse {
  schema_version: number;
  predictions: PredictionsPayload | null;
  as_of?: string;
}

export interface FitRow {
  nutrient: string;
  consumed: number;
  remaining_lo: number;
  remaining_hi: number | null;
  amount: number;
  ok: boolean;
}

export interface RecommendedItem {
  item_id: string;
  name: string;
  similarity: number;
  satisfaction: number;
  serving_size: number;
  fit: FitRow[];
}

export interface RecommendationsResponse {
  schema_version: number;
  meal_index: number;
  items: RecommendedItem[];
}

export interface MealBody {
  date: string;
  meal_index: number;
  item_id?: string;
  grams?: number;
  direct?: Record<string, number>;
  water_liters?: number;
}

export interface MealResponse {
  schema_version: number;
  date: string;
  totals: Record<string, number>;
}

export interface ApiError {
  schema_version: number;
  error: string;
  message: string;
}

export interface CatalogItem {
  item_id: string;
  name: string;
  serving_size: number;
  nutrients: Record<string, number>;
}

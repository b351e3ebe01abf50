// Display formatting only; no business arithmetic belongs here.

export function fmtAmount(value: number, unit: string): string {
  const digits = Math.abs(value) >= 100 ? 0 : Math.abs(value) >= 10 ? 1 : 2;
  return `${value.toFixed(digits)} ${unit.replace("/d", "")}`.trim();
}

export function fmtBound(value: number | null, unit: string): string {
  return value === null ? "—" : fmtAmount(value, unit);
}

export function pct(part: number, whole: number): number {
  if (whole <= 0) return 0;
  return Math.max(0, Math.min(100, (100 * part) / whole));
}

// End-to-end against the real Python API: build a fixture workspace, start
// the server, and drive the same store actions the UI runs. The charted
// consumption day must reproduce the server's cumulative row, and accepting
// a recommendation must leave the bars exactly equal to a fresh GET.

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { createApi } from "../src/api";
import { initialState, logMeal, acceptRecommendation, refresh } from "../src/state";
import type { SessionState } from "../src/state";

const HERE = dirname(fileURLToPath(import.meta.url));
const PORT = 18000 + Math.floor(Math.random() * 10000);
const BASE = `http://127.0.0.1:${PORT}`;
const DATE = "2025-06-01";

let server: ChildProcess | null = null;
let workspace = "";

async function waitForServer(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${BASE}/api/catalog/search?q=&limit=1`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("API server did not come up");
}

beforeAll(async () => {
  workspace = mkdtempSync(join(tmpdir(), "nutricast-ui-"));
  const fixture = spawnSync("python3", [join(HERE, "fixture_workspace.py"), workspace]);
  if (fixture.status !== 0) {
    throw new Error(`fixture build failed: ${fixture.stderr}`);
  }
  server = spawn("python3", ["-m", "nutricast.api", "--workspace", workspace,
                             "--port", String(PORT)],
                 { stdio: ["ignore", "pipe", "pipe"] });
  await waitForServer();
});

afterAll(() => {
  server?.kill();
  if (workspace) rmSync(workspace, { recursive: true, force: true });
});

// One charted day of consumption, logged meal by meal:
// (iron mg, phosphorus mg, potassium mg, sodium mg, protein g, water L)
const MEALS: Array<[Record<string, number>, number]> = [
  [{ iron: 2.31, phosphorus: 187, potassium: 188, sodium: 522, protein: 10.81 }, 0],
  [{ phosphorus: 101, potassium: 150, sodium: 38, protein: 3.28 }, 0.088],
  [{ iron: 2.66, phosphorus: 100, potassium: 215, sodium: 398, protein: 9.51 }, 0],
  [{}, 0.5],
];

describe("daily loop against the live API", () => {
  const api = createApi(BASE);
  let state: SessionState;

  it("logging the charted meals reproduces the server's cumulative row", async () => {
    state = await refresh(api, initialState("p1", DATE));
    let waterBeforeLast = 0;
    for (let meal = 1; meal <= MEALS.length; meal++) {
      const [direct, water] = MEALS[meal - 1];
      const body: Record<string, unknown> = { date: DATE, meal_index: meal };
      if (Object.keys(direct).length) body.direct = direct;
      if (water > 0) body.water_liters = water;
      if (meal === MEALS.length) {
        waterBeforeLast = state.timeline.at(-1)!.totalsAfter.water;
      }
      state = await logMeal(api, state, body as never, `charted meal ${meal}`);
      const totals = state.timeline.at(-1)!.totalsAfter;
      if (meal === 3) {
        expect(totals.sodium).toBeCloseTo(958, 6);
        expect(totals.protein).toBeCloseTo(23.6, 6);
        expect(totals.potassium).toBeCloseTo(553, 6);
      }
      if (meal === MEALS.length) {
        // the water-only meal moves water by exactly 0.5 L and nothing else
        expect(totals.water).toBeCloseTo(waterBeforeLast + 0.5, 6);
        expect(totals.sodium).toBeCloseTo(958, 6);
      }
    }

    // the requirements view mirrors the same cumulative row
    const reqs = await api.requirements("p1", DATE);
    const byName = Object.fromEntries(reqs.nutrients.map((r) => [r.nutrient, r]));
    expect(byName.sodium.consumed).toBeCloseTo(958, 6);
    expect(byName.protein.consumed).toBeCloseTo(23.6, 6);
    expect(byName.potassium.consumed).toBeCloseTo(553, 6);
  });

  it("accepting a recommendation leaves bars equal to a fresh GET", async () => {
    state = await refresh(api, state);
    expect(state.noFeasibleItem).toBe(false);
    expect(state.recommendations.length).toBeGreaterThan(0);
    const pick = state.recommendations[0];

    state = await acceptRecommendation(api, state, pick);
    expect(state.toast).toBeNull();
    expect(state.timeline.at(-1)!.label).toContain(pick.name);

    const fresh = await api.requirements("p1", DATE);
    expect(state.requirements).toEqual(fresh.nutrients);

    // and the accepted serving actually moved the consumed numbers
    const sodiumRow = fresh.nutrients.find((r) => r.nutrient === "sodium")!;
    const sodiumFit = pick.fit.find((r) => r.nutrient === "sodium");
    if (sodiumFit) {
      expect(sodiumRow.consumed).toBeCloseTo(958 + sodiumFit.amount, 6);
    }
  });

  it("every business number on screen is server-sourced", async () => {
    // reload-from-scratch equivalence: a brand new session sees the same state
    const again = await refresh(api, initialState("p1", DATE));
    const fresh = await api.requirements("p1", DATE);
    expect(again.requirements).toEqual(fresh.nutrients);
    expect(again.predictions).toBeNull(); // no cycle was run in this workspace
  });
});

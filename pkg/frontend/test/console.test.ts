/**
 * End-to-end console behaviour against responses recorded from a live
 * service run (a boosted model trained on a simulated cohort). The bar:
 * every number on screen equals the service JSON to 4 decimals, a
 * mobilisation 0 to 4 edit lowers the displayed 6-month probability, and
 * rapid edits settle on the final edit's response.
 */
import { beforeEach, describe, expect, it, vi } from "vitest";
import { ApiClient } from "../src/client.js";
import { initConsole } from "../src/console.js";
import {
  ModelMetadata,
  Prediction,
  Waterfall,
  WhatIfResponse,
} from "../src/contract.js";
import { horizonLabel, prob4, signed4 } from "../src/format.js";
import { FetchStub, jsonResponse, loadFixture } from "./helpers.js";

const BASE = "http://svc";

const metadataFx = ModelMetadata.parse(loadFixture("metadata.json"));
const baselineFx = loadFixture("baseline.json");
const predictFx = Prediction.parse(loadFixture("predict_base.json"));
const explainFx = Waterfall.parse(loadFixture("explain_base.json"));
const whatifFx = WhatIfResponse.parse(loadFixture("whatif_mob4.json"));
const recordFx = loadFixture("record_base.json") as Record<string, number>;

let stub: FetchStub;
let root: HTMLElement;

beforeEach(() => {
  stub = new FetchStub();
  stub.respond(`${BASE}/model/metadata`, () => jsonResponse(loadFixture("metadata.json")));
  stub.respond(`${BASE}/cohort/baseline`, () => jsonResponse(baselineFx));
  stub.respond(`${BASE}/predict`, () => jsonResponse(loadFixture("predict_base.json")));
  stub.respond(`${BASE}/explain`, () => jsonResponse(loadFixture("explain_base.json")));
  stub.respond(`${BASE}/whatif`, () => jsonResponse(loadFixture("whatif_mob4.json")));
  vi.stubGlobal("fetch", stub.fetch);
  document.body.innerHTML = "";
  root = document.createElement("div");
  document.body.appendChild(root);
});

const text = (scope: ParentNode, selector: string): string => {
  const node = scope.querySelector(selector);
  expect(node, selector).not.toBeNull();
  return node!.textContent ?? "";
};

const setUpScoredConsole = async () => {
  const handle = await initConsole(root, new ApiClient(BASE));
  for (const [name, value] of Object.entries(recordFx)) {
    handle.form.set(name, value);
  }
  await handle.score();
  return handle;
};

describe("scored view", () => {
  it("the form round-trips the fixture record into the request", async () => {
    await setUpScoredConsole();
    const call = stub.calls.find((c) => c.url === `${BASE}/predict`);
    expect(call).toBeDefined();
    expect((call!.body as { record: unknown }).record).toEqual(recordFx);
  });

  it("gauges show each horizon's calibrated probability verbatim", async () => {
    await setUpScoredConsole();
    for (const [h, entry] of Object.entries(predictFx.probabilities)) {
      const card = root.querySelector(`[data-gauge="${h}"]`);
      expect(card, `gauge ${h}`).not.toBeNull();
      const shown = text(card!, ".gauge-value");
      expect(shown).toBe(prob4(entry.calibrated));
      expect(Math.abs(Number(shown) - entry.calibrated)).toBeLessThan(5e-5);
      expect(text(card!, ".gauge-label")).toBe(horizonLabel(entry.horizon_days));
      expect(text(card!, ".gauge-detail")).toContain(prob4(entry.uncalibrated));
    }
  });

  it("overlay markers carry the service survival values at each horizon", async () => {
    await setUpScoredConsole();
    for (const [h, entry] of Object.entries(predictFx.probabilities)) {
      const marker = root.querySelector(`[data-horizon-marker="${h}"]`);
      expect(marker, `marker ${h}`).not.toBeNull();
      expect(text(marker!, ".marker-label")).toBe(
        `${horizonLabel(Number(h))}: ${prob4(entry.uncalibrated)}`,
      );
    }
    expect(root.querySelectorAll(".curve")).toHaveLength(2);
  });

  it("waterfall bars carry the service phi values and endpoints", async () => {
    await setUpScoredConsole();
    for (const row of explainFx.rows) {
      expect(text(root, `[data-phi="${row.name}"]`)).toBe(signed4(row.phi));
    }
    expect(text(root, ".wf-base-label")).toBe(
      `base ${signed4(explainFx.base_value)}`,
    );
    expect(text(root, "[data-wf-margin]")).toBe(
      `margin ${signed4(explainFx.margin)}`,
    );
  });

  it("status names the served model version", async () => {
    const handle = await setUpScoredConsole();
    expect(handle.elements.status.textContent).toContain(predictFx.model_version);
  });

  it("service rejections surface as readable status text", async () => {
    const handle = await initConsole(root, new ApiClient(BASE));
    stub.respond(`${BASE}/predict`, () =>
      jsonResponse(
        { detail: [{ field: "mobilisation", error: "value out of range" }] },
        422,
      ),
    );
    await handle.score();
    expect(handle.elements.status.textContent).toContain("value out of range");
  });
});

describe("what-if panel", () => {
  it("mobilisation 0 to 4 lowers the displayed 6-month probability", async () => {
    const handle = await setUpScoredConsole();
    await handle.applyWhatIf("mobilisation", 4);

    const sent = stub.calls.find((c) => c.url === `${BASE}/whatif`);
    expect(sent).toBeDefined();
    expect(sent!.body).toEqual({
      record: recordFx,
      edits: [{ field: "mobilisation", value: 4 }],
    });

    const edited = whatifFx.results[1]!;
    const gauge = handle.elements.whatifGauges.querySelector('[data-gauge="182"]');
    expect(gauge).not.toBeNull();
    const shown = text(gauge!, ".gauge-value");
    expect(shown).toBe(prob4(edited.probabilities["182"]!.calibrated));

    const before = Number(
      text(handle.elements.gauges, '[data-gauge="182"] .gauge-value'),
    );
    expect(Number(shown)).toBeLessThan(before);
    expect(handle.elements.whatifCaption.textContent).toBe("mobilisation → 4");
  });

  it("three rapid edits settle on the final edit's server response", async () => {
    const handle = await setUpScoredConsole();
    stub.holdMatching((url) => url === `${BASE}/whatif`);

    const p1 = handle.applyWhatIf("mobilisation", 1);
    const p2 = handle.applyWhatIf("mobilisation", 2);
    const p3 = handle.applyWhatIf("mobilisation", 4);

    expect(stub.held).toHaveLength(3);
    expect(stub.held[0]!.aborted).toBe(true);
    expect(stub.held[1]!.aborted).toBe(true);
    expect(stub.held[2]!.aborted).toBe(false);
    expect((stub.held[2]!.body as { edits: unknown }).edits).toEqual([
      { field: "mobilisation", value: 4 },
    ]);

    const final = loadFixture("whatif_mob4.json") as {
      results: { probabilities: Record<string, { calibrated: number }> }[];
    };
    final.results[1]!.probabilities["182"]!.calibrated = 0.4242;
    stub.held[2]!.resolve(final);
    await Promise.all([p1, p2, p3]);

    expect(
      text(handle.elements.whatifGauges, '[data-gauge="182"] .gauge-value'),
    ).toBe("0.4242");
    expect(handle.elements.whatifCaption.textContent).toBe("mobilisation → 4");
  });
});

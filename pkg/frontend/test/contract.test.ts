/**
 * The recorded service responses must satisfy the console's contract
 * schemas, and broken payloads must be rejected loudly at the parse
 * boundary rather than leaking NaNs into the views.
 */
import { describe, expect, it } from "vitest";
import {
  BaselineCurve,
  ModelMetadata,
  Prediction,
  Waterfall,
  WhatIfResponse,
} from "../src/contract.js";
import { loadFixture } from "./helpers.js";

describe("recorded fixtures parse", () => {
  it("metadata", () => {
    const metadata = ModelMetadata.parse(loadFixture("metadata.json"));
    expect(metadata.model_family).toBe("GradientBoostedCox");
    expect(metadata.explainable).toBe(true);
    expect(metadata.horizons).toEqual([30, 91, 182, 365]);
    expect(metadata.features.length).toBeGreaterThan(10);
    const mob = metadata.features.find((f) => f.name === "mobilisation");
    expect(mob).toBeDefined();
    expect(mob!.answers.map((a) => a.code)).toContain(4);
  });

  it("baseline", () => {
    const baseline = BaselineCurve.parse(loadFixture("baseline.json"));
    expect(baseline.curve.length).toBeGreaterThan(10);
    for (const point of baseline.curve) {
      expect(point.s).toBeGreaterThanOrEqual(0);
      expect(point.s).toBeLessThanOrEqual(1);
    }
  });

  it("prediction, with one probability entry per metadata horizon", () => {
    const prediction = Prediction.parse(loadFixture("predict_base.json"));
    const metadata = ModelMetadata.parse(loadFixture("metadata.json"));
    expect(Object.keys(prediction.probabilities).sort()).toEqual(
      metadata.horizons.map((h) => String(h)).sort(),
    );
    for (const h of metadata.horizons) {
      expect(prediction.probabilities[String(h)]!.horizon_days).toBe(h);
    }
  });

  it("waterfall", () => {
    const waterfall = Waterfall.parse(loadFixture("explain_base.json"));
    expect(waterfall.rows.length).toBeGreaterThan(0);
    const last = waterfall.rows[waterfall.rows.length - 1]!;
    expect(last.cumulative).toBeCloseTo(waterfall.margin, 6);
  });

  it("what-if response keeps the unedited run first", () => {
    const whatif = WhatIfResponse.parse(loadFixture("whatif_mob4.json"));
    expect(whatif.results[0]!.edited_field).toBeNull();
    expect(whatif.results[1]!.edited_field).toBe("mobilisation");
  });
});

describe("mangled payloads are rejected", () => {
  it("prediction with a missing calibrated value", () => {
    const raw = loadFixture("predict_base.json") as {
      probabilities: Record<string, Record<string, unknown>>;
    };
    delete raw.probabilities["182"]!.calibrated;
    expect(Prediction.safeParse(raw).success).toBe(false);
  });

  it("metadata with a stringly typed answer code", () => {
    const raw = loadFixture("metadata.json") as {
      features: { name: string; answers: { code: unknown }[] }[];
    };
    const coded = raw.features.find((f) => f.answers.length > 0);
    expect(coded).toBeDefined();
    coded!.answers[0]!.code = "2";
    expect(ModelMetadata.safeParse(raw).success).toBe(false);
  });

  it("waterfall with a non-numeric phi", () => {
    const raw = loadFixture("explain_base.json") as {
      rows: { phi: unknown }[];
    };
    raw.rows[0]!.phi = "0.12";
    expect(Waterfall.safeParse(raw).success).toBe(false);
  });
});

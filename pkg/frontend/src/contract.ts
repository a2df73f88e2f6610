/**
 * Service payload contracts.
 *
 * Every byte shown in the console comes straight from these payloads;
 * the schemas reject anything the UI would otherwise silently mangle.
 */
import { z } from "zod";

// ==================== METADATA ====================

export const AnswerOption = z.object({
  text: z.string(),
  code: z.number(),
});

export const FeatureSpec = z.object({
  name: z.string(),
  question: z.string(),
  lo: z.number(),
  hi: z.number(),
  integer_range: z.boolean(),
  answers: z.array(AnswerOption),
});

export const ModelMetadata = z.object({
  model_family: z.string(),
  features: z.array(FeatureSpec),
  horizons: z.array(z.number()),
  metrics: z.record(z.unknown()),
  provenance: z.record(z.unknown()),
  explainable: z.boolean(),
});

// ==================== PREDICTION ====================

export const CurvePoint = z.object({
  t: z.number(),
  s: z.number(),
});

export const HorizonProbability = z.object({
  calibrated: z.number(),
  uncalibrated: z.number(),
  horizon_days: z.number(),
  scaler_n_fit: z.number(),
});

export const Prediction = z.object({
  curve: z.array(CurvePoint),
  probabilities: z.record(HorizonProbability),
  margin: z.number(),
  imputed_fields: z.array(z.string()),
  model_version: z.string(),
});

export const BaselineCurve = z.object({
  curve: z.array(CurvePoint),
});

// ==================== EXPLANATION ====================

export const WaterfallRow = z.object({
  name: z.string(),
  value: z.number().nullable(),
  phi: z.number(),
  cumulative: z.number(),
});

export const Waterfall = z.object({
  base_value: z.number(),
  rows: z.array(WaterfallRow),
  margin: z.number(),
  imputed_fields: z.array(z.string()),
});

// ==================== WHAT-IF ====================

export const WhatIfResult = Prediction.extend({
  edited_field: z.string().nullable(),
});

export const WhatIfResponse = z.object({
  results: z.array(WhatIfResult),
});

export const Health = z.object({
  status: z.string(),
  model_loaded: z.boolean(),
});

export const FieldError = z.object({
  field: z.string(),
  error: z.string(),
});

// ==================== INFERRED TYPES ====================

export type AnswerOption = z.infer<typeof AnswerOption>;
export type FeatureSpec = z.infer<typeof FeatureSpec>;
export type ModelMetadata = z.infer<typeof ModelMetadata>;
export type CurvePoint = z.infer<typeof CurvePoint>;
export type HorizonProbability = z.infer<typeof HorizonProbability>;
export type Prediction = z.infer<typeof Prediction>;
export type BaselineCurve = z.infer<typeof BaselineCurve>;
export type WaterfallRow = z.infer<typeof WaterfallRow>;
export type Waterfall = z.infer<typeof Waterfall>;
export type WhatIfResult = z.infer<typeof WhatIfResult>;
export type WhatIfResponse = z.infer<typeof WhatIfResponse>;
export type Health = z.infer<typeof Health>;

/** A record as the service accepts it: feature name -> numeric code. */
export type RecordMap = Record<string, number>;

export interface WhatIfEdit {
  field: string;
  value: number;
}

/**
 * Thin HTTP client for the prediction service.
 *
 * No retries, no caching: the console is a live view of one service
 * and stale answers are worse than visible errors.
 */
import { z } from "zod";
import {
  BaselineCurve,
  Health,
  ModelMetadata,
  Prediction,
  RecordMap,
  Waterfall,
  WhatIfEdit,
  WhatIfResponse,
} from "./contract.js";

export class ServiceError extends Error {
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, detail: unknown) {
    super(`service returned ${status}: ${JSON.stringify(detail)}`);
    this.status = status;
    this.detail = detail;
  }
}

async function request<T>(
  url: string,
  schema: z.ZodType<T>,
  init?: RequestInit,
): Promise<T> {
  const res = await fetch(url, init);
  const body: unknown = await res.json();
  if (!res.ok) {
    const detail =
      body && typeof body === "object" && "detail" in body
        ? (body as { detail: unknown }).detail
        : body;
    throw new ServiceError(res.status, detail);
  }
  return schema.parse(body);
}

const post = (payload: unknown, signal?: AbortSignal): RequestInit => ({
  method: "POST",
  headers: { "content-type": "application/json" },
  body: JSON.stringify(payload),
  signal,
});

export class ApiClient {
  readonly baseUrl: string;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  health(): Promise<Health> {
    return request(`${this.baseUrl}/health`, Health);
  }

  metadata(): Promise<ModelMetadata> {
    return request(`${this.baseUrl}/model/metadata`, ModelMetadata);
  }

  baseline(): Promise<BaselineCurve> {
    return request(`${this.baseUrl}/cohort/baseline`, BaselineCurve);
  }

  predict(record: RecordMap, signal?: AbortSignal): Promise<Prediction> {
    return request(
      `${this.baseUrl}/predict`,
      Prediction,
      post({ record }, signal),
    );
  }

  explain(
    record: RecordMap,
    topK = 8,
    signal?: AbortSignal,
  ): Promise<Waterfall> {
    return request(
      `${this.baseUrl}/explain`,
      Waterfall,
      post({ record, top_k: topK }, signal),
    );
  }

  whatif(
    record: RecordMap,
    edits: WhatIfEdit[],
    signal?: AbortSignal,
  ): Promise<WhatIfResponse> {
    return request(
      `${this.baseUrl}/whatif`,
      WhatIfResponse,
      post({ record, edits }, signal),
    );
  }
}

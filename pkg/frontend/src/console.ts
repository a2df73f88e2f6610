/**
 * Clinician console: record form, per-horizon gauges, survival overlay,
 * margin waterfall, and a what-if panel for single-field edits.
 *
 * Every number on screen is copied from a service response; the console
 * renders, it never recomputes.
 */
import { ApiClient, ServiceError } from "./client.js";
import {
  CurvePoint,
  ModelMetadata,
  Prediction,
  RecordMap,
} from "./contract.js";
import { buildRecordForm, RecordForm } from "./form.js";
import { renderGauges } from "./gauges.js";
import { renderOverlay } from "./overlay.js";
import { renderWaterfall } from "./waterfall.js";
import { WhatIfQueue } from "./whatif.js";

export interface ConsoleElements {
  status: HTMLElement;
  imputedNote: HTMLElement;
  gauges: HTMLElement;
  overlay: HTMLElement;
  waterfall: HTMLElement;
  scoreButton: HTMLButtonElement;
  whatifField: HTMLSelectElement;
  whatifValue: HTMLInputElement;
  whatifApply: HTMLButtonElement;
  whatifCaption: HTMLElement;
  whatifGauges: HTMLElement;
}

export interface ConsoleHandle {
  metadata: ModelMetadata;
  form: RecordForm;
  elements: ConsoleElements;
  score(): Promise<void>;
  applyWhatIf(field: string, value: number): Promise<void>;
}

const section = (root: HTMLElement, className: string): HTMLElement => {
  const node = document.createElement("section");
  node.className = className;
  root.appendChild(node);
  return node;
};

const describeError = (err: unknown): string => {
  if (err instanceof ServiceError) {
    return typeof err.detail === "string"
      ? err.detail
      : JSON.stringify(err.detail);
  }
  return err instanceof Error ? err.message : String(err);
};

export async function initConsole(
  root: HTMLElement,
  client: ApiClient,
): Promise<ConsoleHandle> {
  const [metadata, baseline] = await Promise.all([
    client.metadata(),
    client.baseline(),
  ]);
  const baselineCurve: CurvePoint[] = baseline.curve;

  root.textContent = "";
  const header = section(root, "console-header");
  const title = document.createElement("h1");
  title.textContent = "Admission risk console";
  header.appendChild(title);
  const status = document.createElement("p");
  status.className = "status";
  status.textContent = `${metadata.model_family} · horizons ${metadata.horizons.join("/")} days`;
  header.appendChild(status);

  const formSection = section(root, "console-form");
  const form = buildRecordForm(metadata.features);
  formSection.appendChild(form.element);
  const scoreButton = document.createElement("button");
  scoreButton.type = "button";
  scoreButton.textContent = "Score resident";
  formSection.appendChild(scoreButton);

  const results = section(root, "console-results");
  const imputedNote = document.createElement("p");
  imputedNote.className = "imputed-note";
  results.appendChild(imputedNote);
  const gauges = document.createElement("div");
  gauges.className = "gauges";
  results.appendChild(gauges);
  const overlay = document.createElement("div");
  overlay.className = "overlay";
  results.appendChild(overlay);
  const waterfall = document.createElement("div");
  waterfall.className = "waterfall-holder";
  results.appendChild(waterfall);

  const whatifSection = section(root, "console-whatif");
  const whatifField = document.createElement("select");
  for (const spec of metadata.features) {
    const opt = document.createElement("option");
    opt.value = spec.name;
    opt.textContent = spec.question;
    whatifField.appendChild(opt);
  }
  whatifSection.appendChild(whatifField);
  const whatifValue = document.createElement("input");
  whatifValue.type = "number";
  whatifSection.appendChild(whatifValue);
  const whatifApply = document.createElement("button");
  whatifApply.type = "button";
  whatifApply.textContent = "Try change";
  whatifSection.appendChild(whatifApply);
  const whatifCaption = document.createElement("p");
  whatifCaption.className = "whatif-caption";
  whatifSection.appendChild(whatifCaption);
  const whatifGauges = document.createElement("div");
  whatifGauges.className = "gauges whatif-gauges";
  whatifSection.appendChild(whatifGauges);

  const queue = new WhatIfQueue(client);
  let scoredRecord: RecordMap | null = null;

  const renderPrediction = (prediction: Prediction): void => {
    renderGauges(gauges, prediction);
    renderOverlay(overlay, baselineCurve, prediction);
    imputedNote.textContent = prediction.imputed_fields.length
      ? `imputed: ${prediction.imputed_fields.join(", ")}`
      : "";
  };

  const score = async (): Promise<void> => {
    const record = form.read();
    try {
      const prediction = await client.predict(record);
      renderPrediction(prediction);
      if (metadata.explainable) {
        renderWaterfall(waterfall, await client.explain(record));
      }
      scoredRecord = record;
      status.textContent = `scored · model ${prediction.model_version}`;
    } catch (err) {
      status.textContent = describeError(err);
    }
  };

  const applyWhatIf = async (field: string, value: number): Promise<void> => {
    const record = scoredRecord ?? form.read();
    try {
      const response = await queue.submit(record, [{ field, value }]);
      if (!response) return;
      const edited = response.results[1];
      if (!edited) return;
      whatifCaption.textContent = `${field} → ${value}`;
      renderGauges(whatifGauges, edited);
    } catch (err) {
      whatifCaption.textContent = describeError(err);
    }
  };

  scoreButton.addEventListener("click", () => void score());
  whatifApply.addEventListener("click", () =>
    void applyWhatIf(whatifField.value, Number(whatifValue.value)),
  );

  return {
    metadata,
    form,
    elements: {
      status,
      imputedNote,
      gauges,
      overlay,
      waterfall,
      scoreButton,
      whatifField,
      whatifValue,
      whatifApply,
      whatifCaption,
      whatifGauges,
    },
    score,
    applyWhatIf,
  };
}

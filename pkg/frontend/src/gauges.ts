/**
 * Per-horizon probability gauges. The headline figure is the calibrated
 * event probability straight from the service; the uncalibrated survival
 * it was derived from is shown underneath for clinicians who want the
 * raw curve value. All digits are the service's, fixed to 4 decimals.
 */
import { Prediction } from "./contract.js";
import { horizonLabel, percentWidth, prob4 } from "./format.js";

export function renderGauges(
  container: HTMLElement,
  prediction: Prediction,
): void {
  container.textContent = "";
  const horizons = Object.keys(prediction.probabilities).sort(
    (a, b) => Number(a) - Number(b),
  );
  for (const h of horizons) {
    const entry = prediction.probabilities[h]!;
    const card = document.createElement("div");
    card.className = "gauge";
    card.dataset.gauge = h;

    const label = document.createElement("div");
    label.className = "gauge-label";
    label.textContent = horizonLabel(entry.horizon_days);
    card.appendChild(label);

    const value = document.createElement("div");
    value.className = "gauge-value";
    value.textContent = prob4(entry.calibrated);
    card.appendChild(value);

    const track = document.createElement("div");
    track.className = "gauge-track";
    const fill = document.createElement("div");
    fill.className = "gauge-fill";
    fill.style.width = percentWidth(entry.calibrated);
    track.appendChild(fill);
    card.appendChild(track);

    const detail = document.createElement("div");
    detail.className = "gauge-detail";
    detail.textContent = `survival ${prob4(entry.uncalibrated)} · calibrated on ${entry.scaler_n_fit}`;
    card.appendChild(detail);

    container.appendChild(card);
  }
}

/**
 * Survival overlay: cohort baseline curve behind the resident's curve,
 * with markers at each calibrated horizon.
 *
 * Marker labels print the service's own survival value for that horizon
 * (`probabilities[h].uncalibrated`); nothing is interpolated locally.
 */
import { CurvePoint, Prediction } from "./contract.js";
import { horizonLabel, prob4 } from "./format.js";

const NS = "http://www.w3.org/2000/svg";
const WIDTH = 640;
const HEIGHT = 280;
const PAD = { left: 46, right: 16, top: 12, bottom: 30 };

const el = <K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] => {
  const node = document.createElementNS(NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
};

const stepPath = (
  curve: CurvePoint[],
  x: (t: number) => number,
  y: (s: number) => number,
): string => {
  let d = `M ${x(0)} ${y(1)}`;
  for (const { t, s } of curve) {
    d += ` H ${x(t)} V ${y(s)}`;
  }
  return d;
};

export function renderOverlay(
  container: HTMLElement,
  baseline: CurvePoint[],
  prediction: Prediction,
): void {
  container.textContent = "";
  const svg = el("svg", {
    viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
    class: "survival-overlay",
    role: "img",
  });

  const tMax = Math.max(
    baseline.length ? baseline[baseline.length - 1]!.t : 0,
    prediction.curve.length
      ? prediction.curve[prediction.curve.length - 1]!.t
      : 0,
    1,
  );
  const x = (t: number): number =>
    PAD.left + (t / tMax) * (WIDTH - PAD.left - PAD.right);
  const y = (s: number): number =>
    PAD.top + (1 - s) * (HEIGHT - PAD.top - PAD.bottom);

  for (const s of [0, 0.25, 0.5, 0.75, 1]) {
    svg.appendChild(
      el("line", {
        x1: String(PAD.left),
        x2: String(WIDTH - PAD.right),
        y1: String(y(s)),
        y2: String(y(s)),
        class: "grid-line",
      }),
    );
    const label = el("text", {
      x: String(PAD.left - 6),
      y: String(y(s) + 4),
      "text-anchor": "end",
      class: "axis-label",
    });
    label.textContent = s.toFixed(2);
    svg.appendChild(label);
  }

  svg.appendChild(
    el("path", {
      d: stepPath(baseline, x, y),
      class: "curve curve-baseline",
      fill: "none",
    }),
  );
  svg.appendChild(
    el("path", {
      d: stepPath(prediction.curve, x, y),
      class: "curve curve-resident",
      fill: "none",
    }),
  );

  const horizons = Object.keys(prediction.probabilities).sort(
    (a, b) => Number(a) - Number(b),
  );
  for (const h of horizons) {
    const entry = prediction.probabilities[h]!;
    const cx = x(entry.horizon_days);
    const cy = y(entry.uncalibrated);
    const marker = el("g", { class: "horizon-marker" });
    marker.setAttribute("data-horizon-marker", h);
    marker.appendChild(
      el("line", {
        x1: String(cx),
        x2: String(cx),
        y1: String(y(0)),
        y2: String(cy),
        class: "marker-drop",
      }),
    );
    marker.appendChild(
      el("circle", { cx: String(cx), cy: String(cy), r: "4", class: "marker-dot" }),
    );
    const text = el("text", {
      x: String(cx),
      y: String(cy - 8),
      "text-anchor": "middle",
      class: "marker-label",
    });
    text.textContent = `${horizonLabel(Number(h))}: ${prob4(entry.uncalibrated)}`;
    marker.appendChild(text);
    const tick = el("text", {
      x: String(cx),
      y: String(HEIGHT - PAD.bottom + 16),
      "text-anchor": "middle",
      class: "axis-label",
    });
    tick.textContent = `${entry.horizon_days}d`;
    marker.appendChild(tick);
    svg.appendChild(marker);
  }

  container.appendChild(svg);
}

/**
 * Margin waterfall: how each answered question moves the resident's
 * log-risk from the cohort base value to the final margin. Bars span the
 * service-reported cumulative positions; labels are the service's phi
 * values, signed and fixed to 4 decimals.
 */
import { Waterfall } from "./contract.js";
import { signed4 } from "./format.js";

const NS = "http://www.w3.org/2000/svg";
const WIDTH = 640;
const ROW_H = 26;
const PAD = { left: 230, right: 70, top: 28, bottom: 24 };

const el = <K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] => {
  const node = document.createElementNS(NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
};

export function renderWaterfall(
  container: HTMLElement,
  waterfall: Waterfall,
): void {
  container.textContent = "";
  const rows = waterfall.rows;
  const height = PAD.top + rows.length * ROW_H + PAD.bottom;
  const svg = el("svg", {
    viewBox: `0 0 ${WIDTH} ${height}`,
    class: "waterfall",
    role: "img",
  });

  const stations = [waterfall.base_value, ...rows.map((r) => r.cumulative)];
  const lo = Math.min(...stations);
  const hi = Math.max(...stations);
  const span = hi - lo || 1;
  const x = (v: number): number =>
    PAD.left + ((v - lo) / span) * (WIDTH - PAD.left - PAD.right);

  const baseX = x(waterfall.base_value);
  svg.appendChild(
    el("line", {
      x1: String(baseX),
      x2: String(baseX),
      y1: String(PAD.top - 18),
      y2: String(height - PAD.bottom + 8),
      class: "wf-base-line",
    }),
  );
  const baseLabel = el("text", {
    x: String(baseX),
    y: String(PAD.top - 22),
    "text-anchor": "middle",
    class: "wf-base-label",
  });
  baseLabel.textContent = `base ${signed4(waterfall.base_value)}`;
  svg.appendChild(baseLabel);

  let prev = waterfall.base_value;
  rows.forEach((row, i) => {
    const yTop = PAD.top + i * ROW_H;
    const group = el("g", { class: "wf-row" });
    group.setAttribute("data-wf-row", row.name);

    const name = el("text", {
      x: String(PAD.left - 8),
      y: String(yTop + ROW_H / 2 + 4),
      "text-anchor": "end",
      class: "wf-name",
    });
    name.textContent =
      row.value === null ? row.name : `${row.name} = ${row.value}`;
    group.appendChild(name);

    const x0 = x(Math.min(prev, row.cumulative));
    const x1 = x(Math.max(prev, row.cumulative));
    group.appendChild(
      el("rect", {
        x: String(x0),
        y: String(yTop + 5),
        width: String(Math.max(x1 - x0, 1)),
        height: String(ROW_H - 10),
        class: row.phi >= 0 ? "wf-bar wf-up" : "wf-bar wf-down",
      }),
    );

    const phi = el("text", {
      x: String(x1 + 6),
      y: String(yTop + ROW_H / 2 + 4),
      class: "wf-phi",
    });
    phi.setAttribute("data-phi", row.name);
    phi.textContent = signed4(row.phi);
    group.appendChild(phi);

    svg.appendChild(group);
    prev = row.cumulative;
  });

  const marginX = x(waterfall.margin);
  const margin = el("text", {
    x: String(marginX),
    y: String(height - PAD.bottom + 20),
    "text-anchor": "middle",
    class: "wf-margin",
  });
  margin.setAttribute("data-wf-margin", "");
  margin.textContent = `margin ${signed4(waterfall.margin)}`;
  svg.appendChild(margin);

  container.appendChild(svg);
}

/**
 * Display formatting.
 *
 * The service already rounds probabilities to 4 decimals; the console
 * re-renders its numbers verbatim and never recomputes them.
 */

export const prob4 = (x: number): string => x.toFixed(4);

export const signed4 = (x: number): string =>
  (x >= 0 ? "+" : "") + x.toFixed(4);

const MONTH_LABELS: Record<number, string> = {
  30: "1 month",
  91: "3 months",
  182: "6 months",
  365: "12 months",
};

export const horizonLabel = (days: number): string =>
  MONTH_LABELS[days] ?? `${days} days`;

export const percentWidth = (p: number): string =>
  `${Math.max(0, Math.min(1, p)) * 100}%`;

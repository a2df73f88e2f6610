export * from "./contract.js";
export { ApiClient, ServiceError } from "./client.js";
export { prob4, signed4, horizonLabel, percentWidth } from "./format.js";
export { buildRecordForm } from "./form.js";
export type { RecordForm } from "./form.js";
export { renderGauges } from "./gauges.js";
export { renderOverlay } from "./overlay.js";
export { renderWaterfall } from "./waterfall.js";
export { WhatIfQueue } from "./whatif.js";
export { initConsole } from "./console.js";
export type { ConsoleHandle, ConsoleElements } from "./console.js";

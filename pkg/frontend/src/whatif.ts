/**
 * Last-write-wins dispatcher for what-if edits.
 *
 * Clinicians poke values faster than the service answers. Every new
 * submission aborts the in-flight request; a response is surfaced only
 * if it belongs to the latest submission, so the console always settles
 * on the most recent edit no matter how replies interleave.
 */
import { ApiClient } from "./client.js";
import { RecordMap, WhatIfEdit, WhatIfResponse } from "./contract.js";

// Not instanceof Error: DOMException's prototype chain differs across runtimes.
const isAbort = (err: unknown): boolean =>
  typeof err === "object" &&
  err !== null &&
  (err as { name?: unknown }).name === "AbortError";

export class WhatIfQueue {
  private controller: AbortController | null = null;
  private ticket = 0;

  constructor(private readonly client: ApiClient) {}

  /** Resolves with the response, or null if a newer edit superseded it. */
  async submit(
    record: RecordMap,
    edits: WhatIfEdit[],
  ): Promise<WhatIfResponse | null> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    const ticket = ++this.ticket;
    try {
      const response = await this.client.whatif(record, edits, controller.signal);
      if (ticket !== this.ticket) return null;
      return response;
    } catch (err) {
      if (isAbort(err)) return null;
      throw err;
    }
  }
}

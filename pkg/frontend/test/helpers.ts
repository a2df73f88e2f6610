/** Shared test plumbing: fixture loading and a controllable fetch stub. */
import { readFileSync } from "node:fs";
import { join } from "node:path";

// cwd is the package root when vitest runs; import.meta.url is not a
// file URL under the jsdom environment.
export const loadFixture = (name: string): unknown =>
  JSON.parse(readFileSync(join(process.cwd(), "test", "fixtures", name), "utf8"));

export interface FakeResponse {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export const jsonResponse = (payload: unknown, status = 200): FakeResponse => ({
  ok: status >= 200 && status < 300,
  status,
  json: async () => payload,
});

const abortError = (): Error =>
  Object.assign(new Error("request aborted"), { name: "AbortError" });

export interface PendingCall {
  url: string;
  body: unknown;
  resolve(payload: unknown, status?: number): void;
  reject(err: unknown): void;
  aborted: boolean;
}

/**
 * A fetch stub with two personalities: routes answered immediately from
 * a table, and routes held open so tests can interleave resolutions.
 * Held calls reject with an AbortError as soon as their signal fires,
 * like real fetch.
 */
export class FetchStub {
  readonly routes = new Map<string, (body: unknown) => FakeResponse>();
  readonly held: PendingCall[] = [];
  private holdMatcher: ((url: string) => boolean) | null = null;
  calls: { url: string; body: unknown }[] = [];

  respond(url: string, handler: (body: unknown) => FakeResponse): void {
    this.routes.set(url, handler);
  }

  holdMatching(matcher: (url: string) => boolean): void {
    this.holdMatcher = matcher;
  }

  fetch = (input: string | URL, init?: RequestInit): Promise<FakeResponse> => {
    const url = String(input);
    const body =
      typeof init?.body === "string" ? JSON.parse(init.body) : undefined;
    this.calls.push({ url, body });

    if (this.holdMatcher?.(url)) {
      return new Promise<FakeResponse>((resolve, reject) => {
        const call: PendingCall = {
          url,
          body,
          resolve: (payload, status = 200) =>
            resolve(jsonResponse(payload, status)),
          reject,
          aborted: false,
        };
        const signal = init?.signal;
        if (signal) {
          const onAbort = (): void => {
            call.aborted = true;
            reject(abortError());
          };
          if (signal.aborted) onAbort();
          else signal.addEventListener("abort", onAbort);
        }
        this.held.push(call);
      });
    }

    const handler = this.routes.get(url);
    if (!handler) {
      return Promise.reject(new Error(`unstubbed url ${url}`));
    }
    if (init?.signal?.aborted) {
      return Promise.reject(abortError());
    }
    return Promise.resolve(handler(body));
  };
}

export const flush = (): Promise<void> =>
  new Promise((resolve) => setTimeout(resolve, 0));

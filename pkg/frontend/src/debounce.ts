/** Trailing debounce plus single-flight request gating. */

export const DEFAULT_DEBOUNCE_MS = 250;

/** Collapses a burst of calls into one, keeping only the newest. */
export class Debouncer {
  private handle: ReturnType<typeof setTimeout> | null = null;

  constructor(readonly delayMs: number = DEFAULT_DEBOUNCE_MS) {}

  get pending(): boolean {
    return this.handle !== null;
  }

  schedule(fn: () => void): void {
    this.cancel();
    this.handle = setTimeout(() => {
      this.handle = null;
      fn();
    }, this.delayMs);
  }

  cancel(): void {
    if (this.handle !== null) {
      clearTimeout(this.handle);
      this.handle = null;
    }
  }
}

/** At most one outstanding request: taking a new signal aborts the last. */
export class LatestRequestGate {
  private controller: AbortController | null = null;

  next(): AbortSignal {
    this.controller?.abort();
    this.controller = new AbortController();
    return this.controller.signal;
  }

  abort(): void {
    this.controller?.abort();
    this.controller = null;
  }
}

/** True for the cancellation errors an aborted fetch surfaces. */
export function isAbort(error: unknown): boolean {
  return error instanceof DOMException && error.name === "AbortError";
}

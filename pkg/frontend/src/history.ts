/** Fixed-capacity strip of past results for side-by-side what-ifs.
 *
 * Entries hold the exact request body and the exact response bytes; the
 * UI keeps no other client-side cache. Restoring an entry hands back a
 * copy of its request so a re-issue cannot be mutated by later edits.
 */

import { TransferRequest } from "./api.js";

export interface HistoryEntry {
  request: TransferRequest;
  png: Uint8Array;
  requestedAt: number;
}

function copyRequest(request: TransferRequest): TransferRequest {
  const copy: TransferRequest = {
    source_id: request.source_id,
    reference_ids: [...request.reference_ids],
    mode: request.mode,
  };
  if (request.alpha !== undefined) copy.alpha = request.alpha;
  if (request.regions !== undefined) copy.regions = [...request.regions];
  return copy;
}

export class HistoryStrip {
  private items: HistoryEntry[] = [];

  constructor(readonly capacity: number = 8) {
    if (!Number.isInteger(capacity) || capacity < 1) {
      throw new Error(`capacity must be a positive integer, got ${capacity}`);
    }
  }

  /** Newest first; oldest entries fall off past the capacity. */
  push(request: TransferRequest, png: Uint8Array, requestedAt: number = Date.now()): HistoryEntry {
    const entry: HistoryEntry = { request: copyRequest(request), png, requestedAt };
    this.items.unshift(entry);
    if (this.items.length > this.capacity) this.items.length = this.capacity;
    return entry;
  }

  entries(): readonly HistoryEntry[] {
    return this.items;
  }

  at(index: number): HistoryEntry {
    const entry = this.items[index];
    if (!entry) throw new Error(`no history entry at ${index}`);
    return entry;
  }

  /** The request to re-issue when the entry is clicked. */
  restoreRequest(index: number): TransferRequest {
    return copyRequest(this.at(index).request);
  }

  clear(): void {
    this.items = [];
  }
}

/** Control-panel state and its mapping onto transfer request bodies.
 *
 * The state -> body mapping is pure so it can be contract-tested against
 * recorded service round trips; the inverse mapping restores controls
 * when a history entry is clicked.
 */

import { REGION_NAMES, RegionName, TransferRequest } from "./api.js";

export interface RegionToggles {
  lip: boolean;
  skin: boolean;
  eye: boolean;
}

export interface ControlState {
  sourceId: string | null;
  referenceId: string | null;
  secondReferenceId: string | null;
  alpha: number;
  regions: RegionToggles;
  remove: boolean;
}

export const ALPHA_STEP = 0.05;

export function initialControls(): ControlState {
  return {
    sourceId: null,
    referenceId: null,
    secondReferenceId: null,
    alpha: 1,
    regions: { lip: false, skin: false, eye: false },
    remove: false,
  };
}

/** Clamp to [0, 1] and snap onto the 0.05 slider grid. */
export function clampAlpha(value: number): number {
  const clamped = Math.min(1, Math.max(0, value));
  return Math.round(clamped / ALPHA_STEP) * ALPHA_STEP;
}

/** Removal works on the source alone; reference controls go inert. */
export function referenceControlsDisabled(state: ControlState): boolean {
  return state.remove;
}

/** Checked regions in the service's canonical order. */
export function checkedRegions(state: ControlState): RegionName[] {
  return REGION_NAMES.filter((name) => state.regions[name]);
}

/** Why the current state cannot be sent, or null when it can. */
export function blockedReason(state: ControlState): string | null {
  if (!state.sourceId) return "pick a source face";
  if (state.remove) return null;
  if (!state.referenceId) return "pick a reference face";
  if (state.secondReferenceId) {
    const hasRegions = checkedRegions(state).length > 0;
    const blends = state.alpha !== 1;
    if (hasRegions && blends) return "with two references choose regions or a blend, not both";
    if (!hasRegions && !blends) return "with two references choose regions or set the slider below 1";
  }
  return null;
}

/** The exact request body for the current controls, or null when blocked. */
export function buildTransferRequest(state: ControlState): TransferRequest | null {
  if (blockedReason(state) !== null) return null;
  if (state.remove) {
    return { source_id: state.sourceId as string, reference_ids: [], mode: "remove" };
  }
  const referenceIds = [state.referenceId as string];
  if (state.secondReferenceId) referenceIds.push(state.secondReferenceId);
  const regions = checkedRegions(state);
  const body: TransferRequest = {
    source_id: state.sourceId as string,
    reference_ids: referenceIds,
    alpha: state.alpha,
    mode: "transfer",
  };
  if (regions.length > 0) body.regions = regions;
  return body;
}

/** Rebuild the controls a request body came from (history restore). */
export function requestToControls(request: TransferRequest): ControlState {
  const state = initialControls();
  state.sourceId = request.source_id;
  if (request.mode === "remove") {
    state.remove = true;
    return state;
  }
  state.referenceId = request.reference_ids[0] ?? null;
  state.secondReferenceId = request.reference_ids[1] ?? null;
  state.alpha = request.alpha ?? 1;
  for (const name of request.regions ?? []) {
    if ((REGION_NAMES as readonly string[]).includes(name)) {
      state.regions[name as RegionName] = true;
    }
  }
  return state;
}

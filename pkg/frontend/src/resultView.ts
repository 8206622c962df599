/** Before/after comparison math for the draggable divider.
 *
 * The divider is a fraction in [0, 1]: the left portion shows the source,
 * the right portion the result. 0 shows the pure source, 1 the pure result.
 */

export function clampDivider(value: number): number {
  if (Number.isNaN(value)) return 0.5;
  return Math.min(1, Math.max(0, value));
}

/** Width of the revealed result layer, as a CSS percentage. */
export function resultClipPercent(divider: number): number {
  return clampDivider(divider) * 100;
}

export function showsPureSource(divider: number): boolean {
  return clampDivider(divider) === 0;
}

export function showsPureResult(divider: number): boolean {
  return clampDivider(divider) === 1;
}

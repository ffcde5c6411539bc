// Blue sequential shading: darker = more frequent.

/** Linear intensity in [0,1]; the row maximum maps to 1. */
export function intensity(count: number, rowMax: number): number {
  if (rowMax <= 0) return 0;
  return Math.min(1, Math.max(0, count / rowMax));
}

/** Light-to-dark blue ramp. */
export function blueShade(t: number): string {
  const from = { r: 222, g: 235, b: 247 };
  const to = { r: 8, g: 48, b: 107 };
  const mix = (a: number, b: number) => Math.round(a + (b - a) * t);
  return `rgb(${mix(from.r, to.r)},${mix(from.g, to.g)},${mix(from.b, to.b)})`;
}

/** Stable per-user hue with per-action lightness shades. */
export function userShade(userIndex: number, actionIndex: number): string {
  const hue = (userIndex * 137.508) % 360; // golden-angle spacing
  const light = 38 + ((actionIndex * 11) % 30);
  return `hsl(${hue.toFixed(1)},70%,${light}%)`;
}

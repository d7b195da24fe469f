// 2D azimuthal projection of the viewpoint hemisphere for the GOV map.
//
// The top view projects to the center; radius grows with the polar angle,
// so the whole hemisphere (plus the small under-horizon margin) fits a
// disc without a 3D renderer. Lossless for z > -1.

export interface MapPoint {
  x: number; // in [-1, 1] before canvas scaling
  y: number;
}

const MAX_POLAR = Math.PI * 0.55; // hemisphere plus the cutoff margin

export function projectDirection(direction: [number, number, number]): MapPoint {
  const [dx, dy, dz] = direction;
  const polar = Math.acos(Math.max(-1, Math.min(1, dz)));
  const azimuth = Math.atan2(dy, dx);
  const radius = polar / MAX_POLAR;
  return { x: radius * Math.cos(azimuth), y: radius * Math.sin(azimuth) };
}

/** Canvas pixel position for a map point. */
export function toCanvas(point: MapPoint, size: number): [number, number] {
  const half = size / 2;
  return [half + point.x * half * 0.92, half - point.y * half * 0.92];
}

/** Blue (0) to orange (1) ramp for combined GOV. */
export function govColor(combined: number): string {
  const t = Math.max(0, Math.min(1, combined));
  const r = Math.round(40 + 215 * t);
  const g = Math.round(70 + 110 * t);
  const b = Math.round(220 - 180 * t);
  return `rgb(${r},${g},${b})`;
}

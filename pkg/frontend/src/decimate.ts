// Client-side level of detail: clouds above the budget are stride-sampled
// for interactivity, with a badge reporting the decimation.

import type { PointCloudData } from "./glb.js";

export const POINT_BUDGET = 200_000;

export interface DecimationInfo {
  total: number;
  shown: number;
  decimated: boolean;
}

export function decimate(
  cloud: PointCloudData,
  budget: number = POINT_BUDGET,
): { cloud: PointCloudData; info: DecimationInfo } {
  if (cloud.count <= budget) {
    return { cloud, info: { total: cloud.count, shown: cloud.count, decimated: false } };
  }
  const stride = Math.ceil(cloud.count / budget);
  const shown = Math.ceil(cloud.count / stride);
  const positions = new Float32Array(shown * 3);
  const colors = new Uint8Array(shown * 3);
  for (let i = 0, j = 0; i < cloud.count; i += stride, j++) {
    positions[j * 3] = cloud.positions[i * 3];
    positions[j * 3 + 1] = cloud.positions[i * 3 + 1];
    positions[j * 3 + 2] = cloud.positions[i * 3 + 2];
    colors[j * 3] = cloud.colors[i * 3];
    colors[j * 3 + 1] = cloud.colors[i * 3 + 1];
    colors[j * 3 + 2] = cloud.colors[i * 3 + 2];
  }
  return {
    cloud: { positions, colors, count: shown, sourceActionId: cloud.sourceActionId },
    info: { total: cloud.count, shown, decimated: true },
  };
}

/** Scatter downsampling: a 7000-config cloud is too much to paint fast. */

export interface ScatterPoint {
  config_id: number;
  fpr: number;
  tpr: number;
}

/** Points not dominated by any other (lower FPR and higher TPR wins). */
export function paretoFrontier(points: ScatterPoint[]): ScatterPoint[] {
  const sorted = [...points].sort(
    (a, b) => a.fpr - b.fpr || b.tpr - a.tpr || a.config_id - b.config_id,
  );
  const frontier: ScatterPoint[] = [];
  let bestTpr = -Infinity;
  for (const p of sorted) {
    if (p.tpr > bestTpr) {
      frontier.push(p);
      bestTpr = p.tpr;
    }
  }
  return frontier;
}

/**
 * Frontier plus an evenly strided sample of the remaining points
 * (deterministic, order-preserving), capped at maxExtra.
 */
export function downsample(points: ScatterPoint[], maxExtra = 500): ScatterPoint[] {
  const frontier = paretoFrontier(points);
  const onFrontier = new Set(frontier.map((p) => p.config_id));
  const rest = points.filter((p) => !onFrontier.has(p.config_id));
  if (rest.length <= maxExtra) {
    return [...frontier, ...rest];
  }
  const stride = rest.length / maxExtra;
  const sampled: ScatterPoint[] = [];
  for (let i = 0; i < maxExtra; i++) {
    sampled.push(rest[Math.floor(i * stride)]);
  }
  return [...frontier, ...sampled];
}

/** Error-vs-iteration line chart as a plain SVG string. */

import type { MetricRecord } from "./api.js";

export interface ChartGeometry {
  width: number;
  height: number;
  pad: number;
}

export const DEFAULT_GEOMETRY: ChartGeometry = { width: 420, height: 180, pad: 28 };

export interface ChartPoint {
  x: number;
  y: number;
  iteration: number;
  eer: number;
}

/** Plot coordinates for the records that have a measured error.
 * x spans iterations 1..T; y spans 0..max(eer) (at least 1 to avoid a
 * divide-by-zero flatline). */
export function chartPoints(
  metrics: MetricRecord[],
  geometry: ChartGeometry = DEFAULT_GEOMETRY,
): ChartPoint[] {
  const measured = metrics.filter((m) => m.eer_percent !== null);
  if (measured.length === 0) return [];
  const { width, height, pad } = geometry;
  const maxIter = Math.max(...metrics.map((m) => m.iteration), 1);
  const maxEer = Math.max(...measured.map((m) => m.eer_percent as number), 1);
  const spanX = Math.max(maxIter - 1, 1);
  return measured.map((m) => ({
    iteration: m.iteration,
    eer: m.eer_percent as number,
    x: pad + ((m.iteration - 1) / spanX) * (width - 2 * pad),
    y: height - pad - ((m.eer_percent as number) / maxEer) * (height - 2 * pad),
  }));
}

export function renderChartSvg(
  metrics: MetricRecord[],
  geometry: ChartGeometry = DEFAULT_GEOMETRY,
): string {
  const { width, height, pad } = geometry;
  const points = chartPoints(metrics, geometry);
  if (points.length === 0) {
    return (
      `<svg class="chart" viewBox="0 0 ${width} ${height}" role="img">` +
      `<text x="${width / 2}" y="${height / 2}" text-anchor="middle" ` +
      `class="chart-empty">no error measurements yet</text></svg>`
    );
  }
  const path = points
    .map((p) => `${p.x.toFixed(1)},${p.y.toFixed(1)}`)
    .join(" ");
  const dots = points
    .map(
      (p) =>
        `<circle cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" r="3">` +
        `<title>iteration ${p.iteration}: ${p.eer.toFixed(2)}%</title></circle>`,
    )
    .join("");
  const axisY = height - pad;
  return (
    `<svg class="chart" viewBox="0 0 ${width} ${height}" role="img" ` +
    `aria-label="error rate by iteration">` +
    `<line x1="${pad}" y1="${axisY}" x2="${width - pad}" y2="${axisY}" class="axis"/>` +
    `<line x1="${pad}" y1="${pad}" x2="${pad}" y2="${axisY}" class="axis"/>` +
    `<polyline points="${path}" fill="none" class="curve"/>` +
    dots +
    `</svg>`
  );
}

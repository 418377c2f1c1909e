import { describe, expect, it } from "vitest";

import { chartPoints, renderChartSvg } from "../src/chart.js";
import { metricOf } from "./helpers.js";

const GEO = { width: 100, height: 60, pad: 10 };

describe("error curve", () => {
  it("spans x over iterations and y over the error range", () => {
    const points = chartPoints(
      [metricOf(1, 50), metricOf(2, 25), metricOf(3, 0)],
      GEO,
    );
    expect(points).toHaveLength(3);
    // iteration 1 at the left edge, 3 at the right edge
    expect(points[0]!.x).toBeCloseTo(10);
    expect(points[2]!.x).toBeCloseTo(90);
    // 50 is the max -> top pad; 0 -> bottom axis
    expect(points[0]!.y).toBeCloseTo(10);
    expect(points[2]!.y).toBeCloseTo(50);
    // 25 sits halfway
    expect(points[1]!.y).toBeCloseTo(30);
  });

  it("skips unmeasured iterations without collapsing the axis", () => {
    const points = chartPoints(
      [metricOf(1, null), metricOf(2, 40), metricOf(3, null), metricOf(4, 20)],
      GEO,
    );
    expect(points.map((p) => p.iteration)).toEqual([2, 4]);
    // x still positioned on the full 1..4 span
    expect(points[1]!.x).toBeCloseTo(90);
  });

  it("renders an svg polyline with one dot per measurement", () => {
    const svg = renderChartSvg([metricOf(1, 50), metricOf(2, 25)], GEO);
    expect(svg).toContain("<polyline");
    expect(svg.match(/<circle/g)).toHaveLength(2);
    expect(svg).toContain("iteration 2: 25.00%");
  });

  it("renders a placeholder when nothing is measured yet", () => {
    const svg = renderChartSvg([metricOf(1, null)], GEO);
    expect(svg).toContain("no error measurements yet");
    expect(svg).not.toContain("<polyline");
  });
});

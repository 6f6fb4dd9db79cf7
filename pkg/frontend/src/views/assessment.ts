/** Assessment view: overlaid before/after radar plus relief bars and cost.
 *
 * Every displayed number is a verbatim service response field; the radar
 * only rescales axes for drawing (each axis normalized by the larger of the
 * two values so the overlay is readable).
 */

import type { Assessment, SystemRisk } from "./../types";

export const RADAR_AXES: (keyof SystemRisk)[] = [
  "concentration",
  "fragility",
  "max_stress",
  "total_defaults",
  "total_loss",
];

export interface RadarSeries {
  label: string;
  values: number[]; // raw response values, axis order above
  scaled: number[]; // 0..1 drawing radii
}

export interface ReliefBar {
  indicator: string;
  percent: number; // verbatim relief field
}

export interface AssessmentViewModel {
  label: string;
  cost: number; // verbatim rescue_cost
  before: RadarSeries;
  after: RadarSeries;
  bars: ReliefBar[];
}

export function assessmentViewModel(assessment: Assessment): AssessmentViewModel {
  const beforeValues = RADAR_AXES.map((axis) => assessment.before[axis]);
  const afterValues = RADAR_AXES.map((axis) => assessment.after[axis]);
  const scale = RADAR_AXES.map((_, i) =>
    Math.max(Math.abs(beforeValues[i]), Math.abs(afterValues[i]), 1e-12),
  );
  return {
    label: assessment.label,
    cost: assessment.rescue_cost,
    before: {
      label: "before",
      values: beforeValues,
      scaled: beforeValues.map((v, i) => v / scale[i]),
    },
    after: {
      label: "after",
      values: afterValues,
      scaled: afterValues.map((v, i) => v / scale[i]),
    },
    bars: Object.entries(assessment.relief).map(([indicator, percent]) => ({
      indicator,
      percent,
    })),
  };
}

/** Polygon points for an SVG radar of the scaled values. */
export function radarPolygon(
  scaled: number[],
  cx: number,
  cy: number,
  radius: number,
): [number, number][] {
  const n = scaled.length;
  return scaled.map((value, i) => {
    const angle = (Math.PI * 2 * i) / n - Math.PI / 2;
    const r = Math.max(0, value) * radius;
    return [cx + r * Math.cos(angle), cy + r * Math.sin(angle)];
  });
}

/** After-radar inside before-radar on every axis whose relief is positive. */
export function axesReduced(model: AssessmentViewModel): boolean[] {
  return RADAR_AXES.map((_, i) => model.after.scaled[i] <= model.before.scaled[i]);
}

export function formatCost(model: AssessmentViewModel): string {
  return model.cost.toString();
}

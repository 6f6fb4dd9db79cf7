/** Detail view: pixel matrix of the normalized risk indicators.
 *
 * Rows are banks, columns indicators; blue-red diverging colors. Brushed
 * banks aggregate on top; clicking a column header sorts by it (click again
 * to flip the direction). All cell values come straight from the service's
 * normalized matrix.
 */

import type { MetricsResponse } from "./../types";
import type { HeatmapSort } from "./../state";

export interface HeatmapRow {
  id: string;
  selected: boolean;
  values: number[];
}

export function rowOrder(
  metrics: MetricsResponse,
  sort: HeatmapSort,
  selection: Set<string>,
): string[] {
  const column = metrics.columns.indexOf(sort.column);
  const value = (row: number) => (column >= 0 ? metrics.normalized[row][column] : 0);
  const indices = metrics.ids.map((_, i) => i);
  indices.sort((a, b) => {
    const selA = selection.has(metrics.ids[a]) ? 0 : 1;
    const selB = selection.has(metrics.ids[b]) ? 0 : 1;
    if (selA !== selB) return selA - selB; // brushed banks on top
    const diff = sort.descending ? value(b) - value(a) : value(a) - value(b);
    if (diff !== 0) return diff;
    return metrics.ids[a] < metrics.ids[b] ? -1 : 1;
  });
  return indices.map((i) => metrics.ids[i]);
}

export function heatmapRows(
  metrics: MetricsResponse,
  sort: HeatmapSort,
  selection: Set<string>,
): HeatmapRow[] {
  const index = new Map(metrics.ids.map((id, i) => [id, i]));
  return rowOrder(metrics, sort, selection).map((id) => {
    const i = index.get(id)!;
    return { id, selected: selection.has(id), values: metrics.normalized[i] };
  });
}

/** Blue (0) to red (1) through white, as hex. */
export function cellColor(value: number): string {
  const t = Math.max(0, Math.min(1, value));
  const mix = (a: number, b: number, f: number) => Math.round(a + (b - a) * f);
  const [r, g, b] =
    t < 0.5
      ? [mix(33, 247, t * 2), mix(102, 247, t * 2), mix(172, 247, t * 2)]
      : [mix(247, 178, (t - 0.5) * 2), mix(247, 24, (t - 0.5) * 2), mix(247, 43, (t - 0.5) * 2)];
  const hex = (v: number) => v.toString(16).padStart(2, "0");
  return `#${hex(r)}${hex(g)}${hex(b)}`;
}

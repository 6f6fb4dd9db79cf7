/** Risk-island map: canvas render model, rectangle brushing, hover flows.
 *
 * Positions, radii and bundled edge polylines come from the layout response
 * untouched; encodings pick which metric column drives color and size.
 */

import type { LayoutResponse, MetricsResponse } from "./../types";
import type { EncodingChoice } from "./../state";

export interface IslandNode {
  id: string;
  x: number;
  y: number;
  radius: number;
  color: number; // normalized 0..1, from the chosen metric column
  island: number;
  selected: boolean;
}

export interface RenderModel {
  nodes: IslandNode[];
  edges: LayoutResponse["edges"];
  labels: { kind: string; x: number; y: number }[];
}

export function renderModel(
  layout: LayoutResponse,
  metrics: MetricsResponse,
  encoding: EncodingChoice,
  selection: Set<string>,
): RenderModel {
  const col = metrics.columns.indexOf(encoding.color);
  const sizeCol = metrics.columns.indexOf(encoding.size);
  const metricIndex = new Map(metrics.ids.map((id, i) => [id, i]));
  const rMin = Math.min(...layout.positions.map((p) => p.r));
  const rMax = Math.max(...layout.positions.map((p) => p.r));
  const nodes = layout.positions.map((p) => {
    const mi = metricIndex.get(p.id);
    const colorValue = mi !== undefined && col >= 0 ? metrics.normalized[mi][col] : 0;
    const sizeValue = mi !== undefined && sizeCol >= 0 ? metrics.normalized[mi][sizeCol] : 0;
    return {
      id: p.id,
      x: p.x,
      y: p.y,
      radius: rMin + sizeValue * (rMax - rMin),
      color: colorValue,
      island: p.island,
      selected: selection.has(p.id),
    };
  });
  const labels = layout.islands.map((island) => {
    const members = island.member_ids
      .map((id) => layout.positions.find((p) => p.id === id))
      .filter((p): p is NonNullable<typeof p> => p !== undefined);
    const cx = members.reduce((acc, p) => acc + p.x, 0) / Math.max(members.length, 1);
    const cy = members.reduce((acc, p) => acc + p.y, 0) / Math.max(members.length, 1);
    return { kind: island.kind, x: cx, y: cy };
  });
  return { nodes, edges: layout.edges, labels };
}

/** Ids of nodes whose centers fall inside the brush rectangle. */
export function brushHits(
  layout: LayoutResponse,
  x0: number,
  y0: number,
  x1: number,
  y1: number,
): string[] {
  const [lo_x, hi_x] = x0 <= x1 ? [x0, x1] : [x1, x0];
  const [lo_y, hi_y] = y0 <= y1 ? [y0, y1] : [y1, y0];
  return layout.positions
    .filter((p) => p.x >= lo_x && p.x <= hi_x && p.y >= lo_y && p.y <= hi_y)
    .map((p) => p.id);
}

/** Bundled polylines incident to a hovered bank (in and out flows). */
export function hoverFlows(
  layout: LayoutResponse,
  bankId: string,
): { inflows: LayoutResponse["edges"]; outflows: LayoutResponse["edges"] } {
  return {
    outflows: layout.edges.filter((e) => e.from === bankId),
    inflows: layout.edges.filter((e) => e.to === bankId),
  };
}

// Pure rendering helpers: server responses in, markup strings out.  The page
// never computes metrics itself; every displayed number is a response field.

import type { PreviewGraph } from "./types.js";

export const RENDER_NODE_CAP = 500;

const PALETTE = [
  "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
  "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
  "#2f4b7c", "#ffa600", "#665191", "#a05195", "#d45087",
];

export function communityColor(communityId: number): string {
  return PALETTE[((communityId % PALETTE.length) + PALETTE.length) % PALETTE.length];
}

function scale(value: number, size: number): number {
  // layouts arrive in [-1, 1]
  return ((value + 1) / 2) * (size - 20) + 10;
}

export interface GraphSvgResult {
  svg: string;
  downsampled: boolean;
}

export function graphSvg(graph: PreviewGraph, size = 320): GraphSvgResult {
  const downsampled = graph.node_count > RENDER_NODE_CAP;
  const visible = downsampled ? RENDER_NODE_CAP : graph.node_count;
  const parts: string[] = [
    `<svg viewBox="0 0 ${size} ${size}" xmlns="http://www.w3.org/2000/svg" role="img">`,
  ];
  for (const [u, v] of graph.edges) {
    if (u >= visible || v >= visible) continue;
    const [ux, uy] = graph.layout[u];
    const [vx, vy] = graph.layout[v];
    parts.push(
      `<line x1="${scale(ux, size).toFixed(1)}" y1="${scale(uy, size).toFixed(1)}" ` +
        `x2="${scale(vx, size).toFixed(1)}" y2="${scale(vy, size).toFixed(1)}" ` +
        `stroke="#9993" stroke-width="1"/>`,
    );
  }
  for (let i = 0; i < visible; i++) {
    const [x, y] = graph.layout[i];
    parts.push(
      `<circle cx="${scale(x, size).toFixed(1)}" cy="${scale(y, size).toFixed(1)}" r="3.2" ` +
        `fill="${communityColor(graph.communities[i])}"/>`,
    );
  }
  parts.push("</svg>");
  return { svg: parts.join(""), downsampled };
}

export function formatMetric(value: number | null | undefined, digits = 3): string {
  if (value === null || value === undefined || Number.isNaN(value)) {
    return "–";
  }
  return value.toFixed(digits);
}

export interface Tile {
  label: string;
  value: string;
}

export function metricTiles(
  preview: { homophily_mean: number | null; avg_degree_mean: number | null },
  familyReport?: Record<string, number | null>,
): Tile[] {
  const tiles: Tile[] = [
    { label: "homophily", value: formatMetric(preview.homophily_mean) },
    { label: "avg degree", value: formatMetric(preview.avg_degree_mean, 2) },
  ];
  if (familyReport) {
    const extra: [string, string][] = [
      ["degree_tail_ratio_99_mean", "tail ratio"],
      ["feature_signal_f1_mean", "feature F1"],
      ["structure_signal_f1_mean", "structure F1"],
      ["structure_consistency_mean", "structure consistency"],
      ["degree_consistency_mean", "degree consistency"],
      ["feature_consistency", "feature consistency"],
    ];
    for (const [key, label] of extra) {
      tiles.push({ label, value: formatMetric(familyReport[key]) });
    }
  }
  return tiles;
}

export function progressPercent(progress: number, total: number): number {
  if (total <= 0) return 0;
  return Math.max(0, Math.min(100, Math.round((progress / total) * 100)));
}

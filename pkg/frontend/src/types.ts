// Payload shapes of the local generation service.

export interface UniverseForm {
  community_count: number;
  edge_propensity_variance: number;
  feature_dim: number;
  center_variance: number;
  cluster_variance: number;
  seed: number;
}

export interface FamilyForm {
  graph_count: number;
  node_range: [number, number];
  community_range: [number, number];
  homophily_range: [number, number];
  degree_range: [number, number];
  degree_separation_range: [number, number];
  power_law_range: [number, number];
}

export interface UniverseSummary {
  community_count: number;
  feature_dim: number;
  propensity: { min: number; mean: number; max: number };
  centroid_distance: { min: number; mean: number; max: number };
}

export interface UniverseResponse {
  universe_id: string;
  summary: UniverseSummary;
}

export interface PreviewGraph {
  graph_index: number;
  node_count: number;
  edge_count: number;
  communities: number[];
  edges: [number, number][];
  layout: [number, number][];
  metrics: {
    homophily: number | null;
    avg_degree: number;
    degree_tail_ratio_99: number | null;
    repair_edge_count: number;
  };
}

export interface PreviewResponse {
  graphs: PreviewGraph[];
  metrics: {
    homophily_mean: number | null;
    avg_degree_mean: number | null;
  };
}

export interface ValidationReportDoc {
  deviation_target: string;
  graphs: Record<string, number | null>[];
  family: Record<string, number | null>;
}

export interface JobStatus {
  job_id: string;
  state: "pending" | "running" | "done" | "failed";
  progress: number;
  total: number;
  error: string | null;
}

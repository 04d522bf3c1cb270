// Client-side mirror of the server's config bounds.  The server remains the
// authority; these checks only catch mistakes before a request is sent.

import type { FamilyForm, UniverseForm } from "./types.js";

export interface FieldError {
  field: string;
  message: string;
}

export function validateUniverseForm(form: UniverseForm): FieldError[] {
  const errors: FieldError[] = [];
  if (!Number.isInteger(form.community_count) || form.community_count < 2) {
    errors.push({ field: "community_count", message: "need at least 2 communities" });
  }
  if (form.edge_propensity_variance < 0 || form.edge_propensity_variance > 1) {
    errors.push({ field: "edge_propensity_variance", message: "must be in [0, 1]" });
  }
  if (!Number.isInteger(form.feature_dim) || form.feature_dim < 1) {
    errors.push({ field: "feature_dim", message: "must be a positive integer" });
  }
  if (form.center_variance <= 0) {
    errors.push({ field: "center_variance", message: "must be > 0" });
  }
  if (form.cluster_variance <= 0) {
    errors.push({ field: "cluster_variance", message: "must be > 0" });
  }
  if (!Number.isInteger(form.seed) || form.seed < 0) {
    errors.push({ field: "seed", message: "must be a non-negative integer" });
  }
  return errors;
}

function checkRange(
  errors: FieldError[],
  field: string,
  range: [number, number],
  opts: { min?: number; max?: number; strictMin?: boolean; integer?: boolean } = {},
): void {
  const [lo, hi] = range;
  if (opts.integer && (!Number.isInteger(lo) || !Number.isInteger(hi))) {
    errors.push({ field, message: "bounds must be integers" });
    return;
  }
  if (lo > hi) {
    errors.push({ field, message: "min exceeds max" });
  }
  if (opts.min !== undefined) {
    if (opts.strictMin ? lo <= opts.min : lo < opts.min) {
      errors.push({ field, message: `min must be ${opts.strictMin ? ">" : ">="} ${opts.min}` });
    }
  }
  if (opts.max !== undefined && hi > opts.max) {
    errors.push({ field, message: `max must be <= ${opts.max}` });
  }
}

export function validateFamilyForm(form: FamilyForm, communityCount: number): FieldError[] {
  const errors: FieldError[] = [];
  if (!Number.isInteger(form.graph_count) || form.graph_count < 1) {
    errors.push({ field: "graph_count", message: "must be a positive integer" });
  }
  checkRange(errors, "node_range", form.node_range, { min: 1, integer: true });
  checkRange(errors, "community_range", form.community_range, { min: 1, integer: true });
  checkRange(errors, "homophily_range", form.homophily_range, { min: 0, max: 1 });
  checkRange(errors, "degree_range", form.degree_range, { min: 0, strictMin: true });
  checkRange(errors, "degree_separation_range", form.degree_separation_range, { min: 0, max: 1 });
  checkRange(errors, "power_law_range", form.power_law_range, { min: 1, strictMin: true });
  if (form.community_range[1] > communityCount) {
    errors.push({
      field: "community_range",
      message: `max exceeds the universe's ${communityCount} communities`,
    });
  }
  if (form.node_range[0] < form.community_range[1]) {
    errors.push({ field: "node_range", message: "min node count below max communities" });
  }
  return errors;
}

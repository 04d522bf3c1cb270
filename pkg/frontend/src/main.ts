// Page wiring: universe designer -> family tuner with live previews -> download.

import { ApiClient, ApiError } from "./api.js";
import { graphSvg, metricTiles, progressPercent } from "./render.js";
import { debounce, LatestWins } from "./scheduling.js";
import type { FamilyForm, UniverseForm } from "./types.js";
import { validateFamilyForm, validateUniverseForm } from "./validation.js";

const api = new ApiClient("");
const previewSequencer = new LatestWins();

let universeId: string | null = null;
let universeCommunityCount = 10;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function numberInput(id: string): number {
  return Number(el<HTMLInputElement>(id).value);
}

function readUniverseForm(): UniverseForm {
  return {
    community_count: numberInput("u-communities"),
    edge_propensity_variance: numberInput("u-propensity-variance"),
    feature_dim: numberInput("u-feature-dim"),
    center_variance: numberInput("u-center-variance"),
    cluster_variance: numberInput("u-cluster-variance"),
    seed: numberInput("u-seed"),
  };
}

function readFamilyForm(): FamilyForm {
  return {
    graph_count: numberInput("f-graph-count"),
    node_range: [numberInput("f-node-min"), numberInput("f-node-max")],
    community_range: [numberInput("f-comm-min"), numberInput("f-comm-max")],
    homophily_range: [numberInput("f-h-min"), numberInput("f-h-max")],
    degree_range: [numberInput("f-d-min"), numberInput("f-d-max")],
    degree_separation_range: [numberInput("f-rho-min"), numberInput("f-rho-max")],
    power_law_range: [numberInput("f-alpha-min"), numberInput("f-alpha-max")],
  };
}

function showErrors(target: HTMLElement, errors: { field: string; message: string }[]): void {
  target.innerHTML = errors
    .map((e) => `<div class="field-error">${e.field}: ${e.message}</div>`)
    .join("");
}

function showBanner(message: string, blocking: boolean): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = message;
  banner.className = message ? (blocking ? "banner error" : "banner warning") : "banner hidden";
}

async function submitUniverse(): Promise<void> {
  const form = readUniverseForm();
  const errors = validateUniverseForm(form);
  showErrors(el("universe-errors"), errors);
  if (errors.length) return;

  try {
    const response = await api.createUniverse(form);
    universeId = response.universe_id;
    universeCommunityCount = response.summary.community_count;
    const s = response.summary;
    el("universe-card").innerHTML = `
      <div class="card-title">universe <code>${response.universe_id}</code></div>
      <div>${s.community_count} communities, ${s.feature_dim}-dim features</div>
      <div>propensity min/mean/max: ${s.propensity.min.toFixed(3)} /
           ${s.propensity.mean.toFixed(3)} / ${s.propensity.max.toFixed(3)}</div>
      <div>centroid distance mean: ${s.centroid_distance.mean.toFixed(3)}</div>`;
    el("tuner-section").classList.remove("hidden");
    schedulePreview();
  } catch (error) {
    if (error instanceof ApiError) {
      showErrors(el("universe-errors"), [{ field: `server (${error.status})`, message: error.detail }]);
    } else {
      throw error;
    }
  }
}

function renderPreview(
  graphs: ReturnType<typeof graphSvg>[],
  notes: string[],
): void {
  const host = el("previews");
  host.innerHTML = graphs
    .map((g, i) => `<figure class="preview">${g.svg}<figcaption>${notes[i]}</figcaption></figure>`)
    .join("");
}

async function refreshPreview(): Promise<void> {
  if (!universeId) return;
  const family = readFamilyForm();
  const errors = validateFamilyForm(family, universeCommunityCount);
  showErrors(el("family-errors"), errors);
  if (errors.length) return;

  showBanner("", false);
  await previewSequencer.run(
    async () => {
      const preview = await api.preview(universeId!, family, 3);
      const report = await api.validateFamily(universeId!, family, Math.min(10, family.graph_count));
      return { preview, report };
    },
    ({ preview, report }) => {
      const rendered = preview.graphs.map((g) => graphSvg(g));
      const notes = preview.graphs.map((g, i) => {
        const down = rendered[i].downsampled ? " (down-sampled render)" : "";
        return `n=${g.node_count}, m=${g.edge_count}, h=${(g.metrics.homophily ?? 0).toFixed(2)}${down}`;
      });
      renderPreview(rendered, notes);
      const tiles = metricTiles(preview.metrics, report.family);
      el("metric-tiles").innerHTML = tiles
        .map((t) => `<div class="tile"><div class="tile-value">${t.value}</div><div class="tile-label">${t.label}</div></div>`)
        .join("");
    },
    (error) => {
      if (error instanceof ApiError && error.status === 422) {
        showBanner(`homophily target unreachable: ${error.detail}`, false);
      } else if (error instanceof ApiError) {
        showBanner(error.detail, true);
      } else {
        showBanner(String(error), true);
      }
    },
  );
}

const schedulePreview = debounce(() => void refreshPreview(), 300);

async function startDownload(): Promise<void> {
  if (!universeId) return;
  const family = readFamilyForm();
  const errors = validateFamilyForm(family, universeCommunityCount);
  showErrors(el("family-errors"), errors);
  if (errors.length) return;

  const { job_id } = await api.startDatasetJob(universeId, family);
  const bar = el<HTMLDivElement>("progress-bar");
  const label = el<HTMLDivElement>("progress-label");
  el("download-area").classList.remove("hidden");

  const poll = async (): Promise<void> => {
    const status = await api.jobStatus(job_id);
    const pct = progressPercent(status.progress, status.total);
    bar.style.width = `${pct}%`;
    label.textContent = `${status.state}: ${status.progress}/${status.total} graphs`;
    if (status.state === "done") {
      const link = el<HTMLAnchorElement>("download-link");
      link.href = api.archiveUrl(job_id);
      link.classList.remove("hidden");
      link.textContent = `download dataset-${job_id}.zip`;
    } else if (status.state === "failed") {
      showBanner(`generation failed: ${status.error ?? "unknown error"}`, true);
    } else {
      setTimeout(() => void poll(), 1000);
    }
  };
  await poll();
}

export function wirePage(): void {
  el("universe-submit").addEventListener("click", () => void submitUniverse());
  for (const input of document.querySelectorAll<HTMLInputElement>("#tuner-section input")) {
    input.addEventListener("input", () => schedulePreview());
  }
  el("download-button").addEventListener("click", () => void startDownload());
}

if (typeof document !== "undefined" && document.getElementById("universe-submit")) {
  wirePage();
}

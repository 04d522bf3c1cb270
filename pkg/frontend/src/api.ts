// Typed client for the generation service.  fetch is injectable for tests.

import type {
  FamilyForm,
  JobStatus,
  PreviewResponse,
  UniverseForm,
  UniverseResponse,
  ValidationReportDoc,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      const detail = await response
        .json()
        .then((doc) => String((doc as { detail?: unknown }).detail ?? response.statusText))
        .catch(() => response.statusText);
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  createUniverse(form: UniverseForm): Promise<UniverseResponse> {
    return this.post("/api/universe", form);
  }

  preview(universeId: string, family: FamilyForm, sampleCount: number): Promise<PreviewResponse> {
    return this.post("/api/preview", {
      universe_id: universeId,
      family,
      sample_count: sampleCount,
    });
  }

  validateFamily(
    universeId: string,
    family: FamilyForm,
    graphCount: number,
  ): Promise<ValidationReportDoc> {
    return this.post("/api/validate", {
      universe_id: universeId,
      family,
      graph_count: graphCount,
    });
  }

  startDatasetJob(universeId: string, family: FamilyForm): Promise<{ job_id: string }> {
    return this.post("/api/dataset", { universe_id: universeId, family });
  }

  async jobStatus(jobId: string): Promise<JobStatus> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/dataset/${jobId}/status`);
    if (!response.ok) {
      throw new ApiError(response.status, response.statusText);
    }
    return (await response.json()) as JobStatus;
  }

  archiveUrl(jobId: string): string {
    return `${this.baseUrl}/api/dataset/${jobId}`;
  }

  async downloadArchive(jobId: string): Promise<ArrayBuffer> {
    const response = await this.fetchImpl(this.archiveUrl(jobId));
    if (!response.ok) {
      throw new ApiError(response.status, response.statusText);
    }
    return response.arrayBuffer();
  }
}

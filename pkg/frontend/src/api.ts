// Thin typed client over the service HTTP API. The fetch function is
// injectable so the test suite (and the ?mock=1 demo mode) can run against
// recorded fixtures without a live service.

import type {
  AblationReport,
  EvalReport,
  JobStatus,
  ModelInfo,
  PredictionReport,
  PredictRequest,
  RocPoint,
} from "./types";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`API error ${status}`);
  }
}

async function parseError(response: Response): Promise<never> {
  let detail: unknown = null;
  try {
    detail = (await response.json()).detail;
  } catch {
    detail = await response.text().catch(() => null);
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(
    private fetchFn: FetchLike = (...args) => fetch(...args),
    private base = "",
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.base + path);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchFn(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.getJson("/api/health");
  }

  predict(body: PredictRequest): Promise<PredictionReport> {
    return this.postJson("/api/predict", body);
  }

  metrics(): Promise<EvalReport> {
    return this.getJson("/api/metrics");
  }

  roc(): Promise<{ classes: Record<string, RocPoint[]> }> {
    return this.getJson("/api/roc");
  }

  ablation(): Promise<AblationReport> {
    return this.getJson("/api/ablation");
  }

  modelInfo(): Promise<ModelInfo> {
    return this.getJson("/api/model");
  }

  startTraining(body: unknown): Promise<{ job_id: string }> {
    return this.postJson("/api/train", body);
  }

  startAblation(body: unknown): Promise<{ job_id: string }> {
    return this.postJson("/api/ablate", body);
  }

  job(id: string): Promise<JobStatus> {
    return this.getJson(`/api/jobs/${id}`);
  }
}

/** Extract the per-field messages of a 422 validation error body. */
export function fieldErrors(error: ApiError): Record<string, string> {
  const out: Record<string, string> = {};
  const detail = error.detail;
  if (typeof detail === "string") {
    out._global = detail;
    return out;
  }
  if (Array.isArray(detail)) {
    for (const item of detail as { loc?: unknown[]; msg?: string }[]) {
      const loc = item.loc ?? [];
      const field = String(loc[loc.length - 1] ?? "_global");
      out[field] = item.msg ?? "invalid value";
    }
  }
  return out;
}

import type { JudgmentPayload, Progress, TaskResponse } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface SubmitResult {
  status: number;
  accepted: boolean;
  error?: string;
}

/** Thin client over the annotation backend's JSON API. */
export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(private readonly baseUrl: string = "", fetchFn?: FetchLike) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  async nextTask(annotatorId: string): Promise<TaskResponse> {
    const url = `${this.baseUrl}/api/task?annotator=${encodeURIComponent(annotatorId)}`;
    const response = await this.fetchFn(url);
    if (!response.ok) {
      throw new Error(`task fetch failed: HTTP ${response.status}`);
    }
    return (await response.json()) as TaskResponse;
  }

  /** Resolves for any HTTP status (callers branch on it); rejects only when
   * the request itself fails, e.g. the server is unreachable. */
  async submitJudgment(payload: JudgmentPayload): Promise<SubmitResult> {
    const response = await this.fetchFn(`${this.baseUrl}/api/judgment`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    let error: string | undefined;
    try {
      const body = (await response.json()) as { accepted?: boolean; error?: string };
      error = body.error;
    } catch {
      error = undefined;
    }
    return { status: response.status, accepted: response.status === 201, error };
  }

  async progress(): Promise<Progress> {
    const response = await this.fetchFn(`${this.baseUrl}/api/progress`);
    if (!response.ok) {
      throw new Error(`progress fetch failed: HTTP ${response.status}`);
    }
    return (await response.json()) as Progress;
  }
}

/** Typed client for the labeling service's HTTP+JSON endpoints. */

export type Label = 1 | -1;

export interface DisplayItem {
  sample_id: number;
  thumbnail_before: string | null;
  thumbnail_after: string | null;
  feature_preview: number[];
}

export interface DisplayView {
  session_id: string;
  iteration: number;
  total_iterations: number;
  items: DisplayItem[];
}

export interface SubmitResult {
  t: number;
  eer_if_available: number | null;
  next_display_ready: boolean;
}

export interface MetricRecord {
  iteration: number;
  sampling_percent: number;
  eer_percent: number | null;
}

export interface CreateSessionRequest {
  dataset_path: string;
  strategy: string;
  K: number;
  T: number;
  seed?: number;
}

/** A non-2xx response, carrying the service's {code, message} body. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Raised when the request never reached the service. */
export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(`service unreachable: ${String(cause)}`);
    this.name = "NetworkError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike = (input, init) =>
      globalThis.fetch(input, init),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(`${this.base}${path}`, {
        method,
        headers: body === undefined ? {} : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new NetworkError(err);
    }
    if (!resp.ok) {
      let code = "unknown";
      let message = `HTTP ${resp.status}`;
      try {
        const payload = (await resp.json()) as {
          code?: string;
          message?: string;
        };
        if (payload.code) code = payload.code;
        if (payload.message) message = payload.message;
      } catch {
        // non-JSON error body; keep the fallbacks
      }
      throw new ApiError(resp.status, code, message);
    }
    return (await resp.json()) as T;
  }

  async health(): Promise<boolean> {
    const out = await this.request<{ status: string }>("GET", "/healthz");
    return out.status === "ok";
  }

  async createSession(req: CreateSessionRequest): Promise<string> {
    const out = await this.request<{ session_id: string }>(
      "POST",
      "/sessions",
      req,
    );
    return out.session_id;
  }

  getDisplay(sessionId: string): Promise<DisplayView> {
    return this.request<DisplayView>(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/display`,
    );
  }

  submitLabels(
    sessionId: string,
    labels: Record<number, Label>,
  ): Promise<SubmitResult> {
    return this.request<SubmitResult>(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/labels`,
      { labels },
    );
  }

  getMetrics(sessionId: string): Promise<MetricRecord[]> {
    return this.request<MetricRecord[]>(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/metrics`,
    );
  }

  /** Absolute URL for a thumbnail path served from the asset root. */
  assetUrl(path: string): string {
    return `${this.base}/assets/${path}`;
  }
}

// Typed client for the guidance service HTTP API. The UI talks to the
// backend through this module only; every response shape here mirrors the
// server's JSON field-for-field.

export interface Citation {
  title: string;
  publisher: string;
  section_path: string[];
  page: number | null;
  node_id: string;
}

export interface SentenceSupport {
  sentence: string;
  best_evidence_id: string;
  support: number; // in [0, 1]
}

export interface ToolTraceEntry {
  tool: string;
  request_id: string;
  status: string;
}

export type Verdict = "grounded" | "flagged" | "rejected";

export interface QueryResponse {
  answer_text: string;
  citations: Citation[];
  verdict: Verdict;
  per_sentence: SentenceSupport[];
  tool_trace: ToolTraceEntry[];
  timing_ms: Record<string, number>;
}

export interface TreeStats {
  levels: number[];
  node_count: number;
  config: Record<string, unknown>;
  corpus_digest: string;
}

export interface ApiError {
  code: string;
  message: string;
}

/** Thrown for any non-2xx response; carries the server's error body. */
export class ServiceError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: ApiError,
  ) {
    super(`${body.code}: ${body.message}`);
  }

  /** True while the knowledge base has not been built yet. */
  get stillBuilding(): boolean {
    return this.status === 503;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return this.unwrap<T>(resp);
  }

  private async unwrap<T>(resp: Response): Promise<T> {
    const payload = await resp.json();
    if (!resp.ok) {
      const err: ApiError =
        payload && typeof payload.code === "string"
          ? payload
          : { code: "unknown", message: `HTTP ${resp.status}` };
      throw new ServiceError(resp.status, err);
    }
    return payload as T;
  }

  async health(): Promise<boolean> {
    try {
      const resp = await this.fetchImpl(this.baseUrl + "/healthz");
      return resp.ok;
    } catch {
      return false;
    }
  }

  query(text: string, sessionId: string): Promise<QueryResponse> {
    return this.post<QueryResponse>("/query", {
      query: text,
      session_id: sessionId,
    });
  }

  async treeStats(): Promise<TreeStats> {
    const resp = await this.fetchImpl(this.baseUrl + "/tree/stats");
    return this.unwrap<TreeStats>(resp);
  }
}

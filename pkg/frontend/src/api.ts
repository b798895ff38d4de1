/**
 * Typed client for the local typing service. Every method is one HTTP
 * call; nothing is cached or recomputed here, so a transcript of the
 * returned payloads is exactly what the service said.
 */

export type Candidate = { surface: string; score: number; source: string };

export type KeyResponse = {
  composing: string;
  preview: string;
  candidates: Candidate[];
};

export type LayoutKey = {
  members: string[];
  representative: string;
  view: number;
  role?: string;
};

export type Layout = {
  language: string;
  keys: LayoutKey[];
  [extra: string]: unknown;
};

export type Health = { status: string; languages: string[] };

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

/** The slice of the client a typing session needs; tests stub this. */
export interface TypingApi {
  createSession(language: string, mode?: string): Promise<string>;
  pressKey(sessionId: string, key: string): Promise<KeyResponse>;
  backspace(sessionId: string): Promise<KeyResponse>;
  commit(sessionId: string, surface: string): Promise<string[]>;
  predict(sessionId: string, k?: number): Promise<Candidate[]>;
}

export class ApiClient implements TypingApi {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(
    method: "GET" | "POST",
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const payload = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      const detail =
        typeof payload === "object" && payload !== null && "error" in payload
          ? String((payload as { error: unknown }).error)
          : resp.statusText;
      throw new ApiError(resp.status, detail);
    }
    return payload as T;
  }

  health(): Promise<Health> {
    return this.request<Health>("GET", "/v1/health");
  }

  layout(language: string): Promise<Layout> {
    return this.request<Layout>("GET", `/v1/layout/${language}`);
  }

  async createSession(language: string, mode?: string): Promise<string> {
    const body: Record<string, string> = { language };
    if (mode) body.mode = mode;
    const out = await this.request<{ sessionId: string }>(
      "POST",
      "/v1/session",
      body,
    );
    return out.sessionId;
  }

  pressKey(sessionId: string, key: string): Promise<KeyResponse> {
    return this.request<KeyResponse>("POST", `/v1/session/${sessionId}/key`, {
      key,
    });
  }

  backspace(sessionId: string): Promise<KeyResponse> {
    return this.request<KeyResponse>(
      "POST",
      `/v1/session/${sessionId}/backspace`,
      {},
    );
  }

  async commit(sessionId: string, surface: string): Promise<string[]> {
    const out = await this.request<{ context: string[] }>(
      "POST",
      `/v1/session/${sessionId}/commit`,
      { surface },
    );
    return out.context;
  }

  async predict(sessionId: string, k = 3): Promise<Candidate[]> {
    const out = await this.request<{ candidates: Candidate[] }>(
      "GET",
      `/v1/session/${sessionId}/predict?k=${k}`,
    );
    return out.candidates;
  }
}

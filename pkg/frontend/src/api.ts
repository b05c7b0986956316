import type { GraphMetaPayload, SessionPayload } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Service rejected the request (4xx/5xx with a JSON {code, message} body). */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Network-level failure; the caller may retry. */
export class ServiceUnreachableError extends Error {
  constructor(cause: unknown) {
    super(`wizard service unreachable: ${String(cause)}`);
    this.name = "ServiceUnreachableError";
  }
}

export class WizardApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, {
        method,
        headers: { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (cause) {
      throw new ServiceUnreachableError(cause);
    }
    const payload = await response.json();
    if (!response.ok) {
      const code = typeof payload?.code === "string" ? payload.code : "unknown_error";
      const message =
        typeof payload?.message === "string" ? payload.message : response.statusText;
      throw new ApiError(response.status, code, message);
    }
    return payload as T;
  }

  createSession(graphVersion?: string): Promise<SessionPayload> {
    return this.request<SessionPayload>("POST", "/sessions", {
      graph_version: graphVersion ?? null,
    });
  }

  getSession(sessionId: string): Promise<SessionPayload> {
    return this.request<SessionPayload>("GET", `/sessions/${sessionId}`);
  }

  submitAnswer(
    sessionId: string,
    questionId: string,
    selected: number[],
  ): Promise<SessionPayload> {
    return this.request<SessionPayload>("POST", `/sessions/${sessionId}/answers`, {
      question_id: questionId,
      selected,
    });
  }

  undo(sessionId: string): Promise<SessionPayload> {
    return this.request<SessionPayload>("POST", `/sessions/${sessionId}/undo`);
  }

  graphMeta(): Promise<GraphMetaPayload> {
    return this.request<GraphMetaPayload>("GET", "/graph/meta");
  }
}

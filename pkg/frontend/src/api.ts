import type { ConfigsPayload, Label, PairList, SessionInfo } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

/** Thin typed client over the tuning-service endpoints. */
export class ApiClient {
  constructor(
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
    private base: string = "",
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, init);
    const body = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      throw new ApiError(resp.status, (body as { error?: string }).error ?? resp.statusText);
    }
    return body as T;
  }

  getSession(): Promise<SessionInfo> {
    return this.request<SessionInfo>("/api/session");
  }

  getPairs(
    filter: "all" | "unlabeled" | "labeled" = "unlabeled",
    offset = 0,
    limit = 50,
    order = "disagreement",
  ): Promise<PairList> {
    const params = new URLSearchParams({
      filter, order, offset: String(offset), limit: String(limit),
    });
    return this.request<PairList>(`/api/pairs?${params}`);
  }

  postLabel(pairId: string, label: Label, annotator: string): Promise<unknown> {
    return this.request(`/api/pairs/${encodeURIComponent(pairId)}/label`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ label, annotator }),
    });
  }

  getConfigs(): Promise<ConfigsPayload> {
    return this.request<ConfigsPayload>("/api/configs");
  }

  selectConfig(configId: number): Promise<unknown> {
    return this.request("/api/configs/select", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ config_id: configId }),
    });
  }
}

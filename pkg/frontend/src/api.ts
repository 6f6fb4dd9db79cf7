/** Typed client for the /v1 scenario API; fetch is injectable for tests. */

import type {
  ApiErrorBody,
  CompareResponse,
  InterventionResponse,
  LayoutResponse,
  MetricsResponse,
  PlanBody,
  ShockResponse,
  Stage,
} from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public detail?: unknown,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    const body = await response.json();
    if (!response.ok) {
      const err = body as ApiErrorBody;
      throw new ApiError(err.error.code, err.error.message, err.error.detail);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  generateNetwork(config: {
    method?: string;
    n: number;
    seed?: number;
  }): Promise<{ network_id: string; summary: unknown }> {
    return this.post("/v1/networks", { generate: config });
  }

  uploadNetwork(document: unknown): Promise<{ network_id: string; summary: unknown }> {
    return this.post("/v1/networks", { upload: document });
  }

  applyShock(networkId: string, spec: Record<string, unknown>): Promise<ShockResponse> {
    return this.post(`/v1/networks/${networkId}/shocks`, spec);
  }

  getMetrics(scenarioId: string, stage: Stage): Promise<MetricsResponse> {
    return this.request(`/v1/scenarios/${scenarioId}/metrics?stage=${stage}`);
  }

  getLayout(scenarioId: string, stage: Stage, seed = 0): Promise<LayoutResponse> {
    return this.request(`/v1/scenarios/${scenarioId}/layout?stage=${stage}&seed=${seed}`);
  }

  postIntervention(scenarioId: string, plan: PlanBody): Promise<InterventionResponse> {
    return this.post(`/v1/scenarios/${scenarioId}/interventions`, plan);
  }

  compare(scenarioId: string, plans: PlanBody[]): Promise<CompareResponse> {
    return this.post(`/v1/scenarios/${scenarioId}/compare`, { plans });
  }

  /** Subscribe to the scenario's progress events; returns a close function. */
  subscribeEvents(
    scenarioId: string,
    onEvent: (kind: string, data: unknown) => void,
  ): () => void {
    const source = new EventSource(`${this.base}/v1/scenarios/${scenarioId}/events`);
    const handler = (event: MessageEvent) => onEvent(event.type, JSON.parse(event.data));
    for (const kind of ["shock", "layout_progress", "layout_done", "intervention", "end"]) {
      source.addEventListener(kind, handler as EventListener);
    }
    source.addEventListener("end", () => source.close());
    return () => source.close();
  }
}

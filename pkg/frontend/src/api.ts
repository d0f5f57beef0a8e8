// Typed client for the review service HTTP API. The console never talks
// to the engine directly; everything goes through these endpoints.

export type Mode = "halving" | "agnostic" | "auction";

export interface ServiceState {
  mode: Mode;
  m: number;
  position: number;
  active_size: number;
  alerts: number;
  inspections: number;
  confirmed: number;
  pending: number;
  paused: boolean;
  pool_exhausted: boolean;
  seq: number;
  // halving/agnostic only
  mistakes?: number;
  theta?: number;
  alpha?: number;
  // auction only
  c?: number;
}

export interface AlertDoc {
  alert_id: number;
  event_id: number | string;
  position: number;
  excerpt: string;
  payload: unknown;
  flaggers: number[];
  winner: number | null;
  winning_bid: number | null;
  enqueued_at: number;
}

export interface JudgementAck extends ServiceState {
  evicted: number[];
}

export interface ReportDoc extends ServiceState {
  inspection_fraction: number;
  precision: number | null;
  recall: number | null;
  survivors: string[];
}

export interface FeedEvent {
  seq: number;
  kind: "alert" | "judgement" | "paused" | "resumed";
  alert_id?: number | null;
  event_id?: number | string;
  suspicious?: boolean;
  evicted?: number[];
}

export interface LiveFrame {
  seq: number;
  event_rate: number;
  active_size: number;
  position: number;
  pending: number;
  events: FeedEvent[];
}

/** The alert was already judged elsewhere (HTTP 409). */
export class ConflictError extends Error {}

/** No such pending alert (HTTP 404). */
export class UnknownAlertError extends Error {}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path);
    if (!res.ok) {
      throw new Error(`GET ${path} failed: ${res.status}`);
    }
    return (await res.json()) as T;
  }

  state(): Promise<ServiceState> {
    return this.get("/state");
  }

  async pendingAlerts(): Promise<AlertDoc[]> {
    const doc = await this.get<{ alerts: AlertDoc[] }>("/alerts?status=pending");
    return doc.alerts;
  }

  report(): Promise<ReportDoc> {
    return this.get("/report");
  }

  async submitJudgement(alertId: number, suspicious: boolean): Promise<JudgementAck> {
    const res = await this.fetchFn(`${this.baseUrl}/alerts/${alertId}/judgement`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ suspicious }),
    });
    if (res.status === 409) {
      throw new ConflictError(`alert ${alertId} already judged`);
    }
    if (res.status === 404) {
      throw new UnknownAlertError(`no pending alert ${alertId}`);
    }
    if (!res.ok) {
      throw new Error(`judgement on alert ${alertId} failed: ${res.status}`);
    }
    return (await res.json()) as JudgementAck;
  }

  async control(action: "pause" | "resume"): Promise<ServiceState> {
    const res = await this.fetchFn(`${this.baseUrl}/control/${action}`, { method: "POST" });
    if (!res.ok) {
      throw new Error(`control ${action} failed: ${res.status}`);
    }
    return (await res.json()) as ServiceState;
  }

  /** ws:// URL for the live feed, derived from the HTTP base. */
  liveUrl(): string {
    return this.baseUrl.replace(/^http/, "ws") + "/live";
  }
}

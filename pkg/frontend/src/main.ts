// Wires the console together: initial fetch, websocket feed, judgement
// round-trips, keyboard triage. UI state is a projection of the server:
// anything the feed hints at is confirmed by re-fetching the GET
// endpoints rather than trusted blindly.

import {
  ApiClient,
  ConflictError,
  type LiveFrame,
  type ServiceState,
} from "./api.js";
import { Dashboard } from "./dashboard.js";
import { bindTriageKeys } from "./keys.js";
import { LedgerBook } from "./ledger.js";
import { LiveFeed, type SocketFactory } from "./live.js";
import { AlertQueue } from "./queue.js";

export interface ConsoleOptions {
  root: HTMLElement;
  api: ApiClient;
  socketFactory?: SocketFactory;
  keyTarget?: EventTarget;
}

export class ReviewConsole {
  readonly queue: AlertQueue;
  readonly dashboard: Dashboard;
  readonly ledgers = new LedgerBook();

  private readonly api: ApiClient;
  private readonly feed: LiveFeed;
  private readonly unbindKeys: () => void;
  private state: ServiceState | null = null;
  private refetching = false;

  constructor(options: ConsoleOptions) {
    this.api = options.api;

    const dashRoot = document.createElement("section");
    dashRoot.className = "dashboard";
    const queueRoot = document.createElement("section");
    queueRoot.className = "queue";
    options.root.append(dashRoot, queueRoot);

    this.dashboard = new Dashboard(dashRoot);
    this.queue = new AlertQueue(queueRoot, (id, suspicious) => {
      void this.submit(id, suspicious);
    });
    this.feed = new LiveFeed(
      this.api.liveUrl(),
      {
        onFrame: (frame) => this.onFrame(frame),
        onStatus: (status) => this.dashboard.setConnection(status),
      },
      options.socketFactory,
    );
    this.unbindKeys = bindTriageKeys(options.keyTarget ?? document, (suspicious) =>
      this.queue.judgeFirst(suspicious),
    );
  }

  async start(): Promise<void> {
    await this.refresh();
    this.feed.start();
  }

  stop(): void {
    this.feed.stop();
    this.unbindKeys();
  }

  /** Full resync against the GET endpoints. */
  async refresh(): Promise<void> {
    const [state, alerts] = await Promise.all([this.api.state(), this.api.pendingAlerts()]);
    this.state = state;
    this.dashboard.renderState(state);
    for (const alert of alerts) {
      this.ledgers.noteAlert(alert);
    }
    this.queue.sync(alerts);
    this.renderLedgers();
  }

  private renderLedgers(): void {
    if (this.state?.mode !== "auction") {
      return;
    }
    const c = this.state.c ?? 0.2;
    this.dashboard.renderLedgers(this.ledgers.rows(c, this.state.m), c, this.state.m);
  }

  private async submit(alertId: number, suspicious: boolean): Promise<void> {
    try {
      const ack = await this.api.submitJudgement(alertId, suspicious);
      this.queue.settle(alertId);
      this.ledgers.noteJudgement({
        seq: ack.seq,
        kind: "judgement",
        alert_id: alertId,
        suspicious,
        evicted: ack.evicted,
      });
      this.state = ack;
      this.dashboard.renderState(ack);
      this.renderLedgers();
    } catch (err) {
      if (err instanceof ConflictError) {
        this.queue.removeWithNotice(alertId, "already judged elsewhere");
      } else {
        console.error("judgement failed", err);
        this.queue.reinstate(alertId);
      }
    }
  }

  private onFrame(frame: LiveFrame): void {
    this.dashboard.renderFrame(frame);
    let queueChanged = false;
    for (const event of frame.events) {
      if (event.kind === "judgement") {
        this.ledgers.noteJudgement(event);
      }
      if (event.kind === "alert" || event.kind === "judgement") {
        queueChanged = true;
      }
    }
    if (queueChanged) {
      void this.refetchAlerts();
      this.renderLedgers();
    }
  }

  private async refetchAlerts(): Promise<void> {
    if (this.refetching) {
      return; // a fetch is already in flight; its result will cover this
    }
    this.refetching = true;
    try {
      const alerts = await this.api.pendingAlerts();
      for (const alert of alerts) {
        this.ledgers.noteAlert(alert);
      }
      this.queue.sync(alerts);
    } catch (err) {
      console.error("alert re-fetch failed", err);
    } finally {
      this.refetching = false;
    }
  }
}

/** Entry point for index.html; `?api=http://host:port` overrides the origin. */
export function bootstrap(root: HTMLElement, baseUrl?: string): ReviewConsole {
  const api = new ApiClient(
    baseUrl ?? new URLSearchParams(location.search).get("api") ?? location.origin,
  );
  const console_ = new ReviewConsole({ root, api });
  void console_.start();
  return console_;
}

// Dashboard panel: live counters from /state and the WS frames, plus
// the reconstructed auction ledger table.

import type { LiveFrame, ServiceState } from "./api.js";
import { solvencyMargin, type ExpertAccount } from "./ledger.js";

function fmtPct(x: number): string {
  return (100 * x).toFixed(2) + "%";
}

export class Dashboard {
  private stats: HTMLElement;
  private status: HTMLElement;
  private ledgerTable: HTMLElement;
  private lastState: ServiceState | null = null;

  constructor(private readonly root: HTMLElement) {
    this.status = document.createElement("div");
    this.status.className = "conn-status";
    this.stats = document.createElement("dl");
    this.stats.className = "stats";
    this.ledgerTable = document.createElement("div");
    this.ledgerTable.className = "ledger-panel";
    root.append(this.status, this.stats, this.ledgerTable);
    this.setConnection("connecting");
  }

  /** Visible connection badge; doubles as the reconnect indicator. */
  setConnection(status: string): void {
    this.status.textContent = `feed: ${status}`;
    this.status.dataset.status = status;
  }

  private stat(name: string, value: string): void {
    const dt = document.createElement("dt");
    dt.textContent = name;
    const dd = document.createElement("dd");
    dd.dataset.stat = name;
    dd.textContent = value;
    this.stats.append(dt, dd);
  }

  renderState(state: ServiceState): void {
    this.lastState = state;
    this.stats.textContent = "";
    this.stat("mode", state.mode + (state.paused ? " (paused)" : ""));
    this.stat("position", String(state.position));
    this.stat("active experts", `${state.active_size} / ${state.m}`);
    this.stat("alerts", String(state.alerts));
    this.stat("pending", String(state.pending));
    this.stat(
      "inspection fraction",
      state.position > 0 ? fmtPct(state.inspections / state.position) : "–",
    );
    if (state.mistakes !== undefined) {
      this.stat("mistakes", String(state.mistakes));
    }
    if (state.pool_exhausted) {
      this.stat("pool", "exhausted");
    }
  }

  /** Fast-path counters pushed over the websocket. */
  renderFrame(frame: LiveFrame): void {
    if (!this.lastState) {
      return;
    }
    this.lastState.active_size = frame.active_size;
    this.lastState.position = frame.position;
    this.lastState.pending = frame.pending;
    this.renderState(this.lastState);
    this.stat("event rate", `${frame.event_rate.toFixed(0)}/s`);
  }

  /** Auction accounts, most at-risk first; hidden outside auction mode. */
  renderLedgers(rows: ExpertAccount[], c: number, m: number): void {
    this.ledgerTable.textContent = "";
    if (rows.length === 0) {
      return;
    }
    const caption = document.createElement("h3");
    caption.textContent = "expert ledgers";
    const table = document.createElement("table");
    table.innerHTML =
      "<thead><tr><th>expert</th><th>n</th><th>V</th><th>P</th><th>margin</th></tr></thead>";
    const body = document.createElement("tbody");
    for (const acct of rows) {
      const margin = solvencyMargin(acct, c, m);
      const tr = document.createElement("tr");
      tr.dataset.expert = String(acct.expert);
      if (acct.evicted || margin < 0) {
        tr.className = "insolvent";
      }
      tr.innerHTML =
        `<td>#${acct.expert}${acct.evicted ? " ✕" : ""}</td>` +
        `<td>${acct.wins}</td><td>${acct.investment.toFixed(3)}</td>` +
        `<td>${acct.profit}</td><td>${margin.toFixed(3)}</td>`;
      body.appendChild(tr);
    }
    table.appendChild(body);
    this.ledgerTable.append(caption, table);
  }
}

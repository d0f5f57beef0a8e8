// The pending-alert queue. Cards live in enqueue order (the order the
// server returns them); judging is optimistic: the card greys out as
// soon as the POST leaves, is deleted on ack, and comes back if the
// request fails for anything other than a conflict.

import type { AlertDoc } from "./api.js";

export type JudgementHandler = (alertId: number, suspicious: boolean) => void;

function describeSource(alert: AlertDoc): string {
  if (alert.winner !== null && alert.winning_bid !== null) {
    return `expert #${alert.winner} bid ${alert.winning_bid.toFixed(3)}`;
  }
  if (alert.flaggers.length > 4) {
    return `${alert.flaggers.length} experts flagged`;
  }
  return `flagged by ${alert.flaggers.map((f) => `#${f}`).join(", ")}`;
}

export class AlertQueue {
  private cards = new Map<number, HTMLElement>();
  private inFlight = new Set<number>();

  constructor(
    private readonly root: HTMLElement,
    private readonly onJudge: JudgementHandler,
  ) {
    this.renderEmptyState();
  }

  private renderEmptyState(): void {
    if (this.cards.size > 0) {
      const empty = this.root.querySelector(".empty-state");
      if (empty) empty.remove();
      return;
    }
    if (!this.root.querySelector(".empty-state")) {
      const div = document.createElement("div");
      div.className = "empty-state";
      div.textContent = "No pending alerts — the stream is clean or all caught up.";
      this.root.appendChild(div);
    }
  }

  private buildCard(alert: AlertDoc): HTMLElement {
    const card = document.createElement("article");
    card.className = "alert-card";
    card.dataset.alertId = String(alert.alert_id);

    const head = document.createElement("header");
    head.textContent = `#${alert.alert_id} · event ${alert.event_id} · ${describeSource(alert)}`;
    const body = document.createElement("p");
    body.className = "excerpt";
    body.textContent = alert.excerpt;

    const actions = document.createElement("div");
    actions.className = "actions";
    const mk = (label: string, suspicious: boolean, cls: string) => {
      const btn = document.createElement("button");
      btn.type = "button";
      btn.className = cls;
      btn.textContent = label;
      btn.onclick = () => this.judge(alert.alert_id, suspicious);
      actions.appendChild(btn);
    };
    mk("suspicious (s)", true, "judge-suspicious");
    mk("normal (n)", false, "judge-normal");

    card.append(head, body, actions);
    return card;
  }

  /** Route a judgement through the in-flight guard; false if ignored. */
  judge(alertId: number, suspicious: boolean): boolean {
    if (this.inFlight.has(alertId) || !this.cards.has(alertId)) {
      return false; // double click, or the card is already gone
    }
    this.inFlight.add(alertId);
    const card = this.cards.get(alertId)!;
    card.classList.add("submitting");
    card.querySelectorAll("button").forEach((b) => (b.disabled = true));
    this.onJudge(alertId, suspicious);
    return true;
  }

  /** Judge the card at the top of the queue (keyboard path). */
  judgeFirst(suspicious: boolean): boolean {
    for (const id of this.ids()) {
      if (!this.inFlight.has(id)) {
        return this.judge(id, suspicious);
      }
    }
    return false;
  }

  /** Reconcile with the server's pending list; keyed by alert id, so a
   * re-fetch after restart cannot duplicate cards. */
  sync(alerts: AlertDoc[]): void {
    const serverIds = new Set(alerts.map((a) => a.alert_id));
    for (const [id, card] of this.cards) {
      if (!serverIds.has(id)) {
        card.remove();
        this.cards.delete(id);
        this.inFlight.delete(id);
      }
    }
    // rebuild in server order, reusing cards we already rendered
    for (const alert of alerts) {
      let card = this.cards.get(alert.alert_id);
      if (!card) {
        card = this.buildCard(alert);
        this.cards.set(alert.alert_id, card);
      }
      this.root.appendChild(card); // appending an existing node moves it
    }
    this.renderEmptyState();
  }

  /** Server acked the judgement: the card is done. */
  settle(alertId: number): void {
    const card = this.cards.get(alertId);
    if (card) {
      card.remove();
      this.cards.delete(alertId);
    }
    this.inFlight.delete(alertId);
    this.renderEmptyState();
  }

  /** Someone else judged it first: drop the card but say why. */
  removeWithNotice(alertId: number, notice: string): void {
    this.settle(alertId);
    const note = document.createElement("div");
    note.className = "queue-notice";
    note.textContent = `alert #${alertId}: ${notice}`;
    this.root.prepend(note);
    setTimeout(() => note.remove(), 4000);
  }

  /** The POST failed; put the card back in play. */
  reinstate(alertId: number): void {
    this.inFlight.delete(alertId);
    const card = this.cards.get(alertId);
    if (card) {
      card.classList.remove("submitting");
      card.querySelectorAll("button").forEach((b) => (b.disabled = false));
    }
  }

  get size(): number {
    return this.cards.size;
  }

  /** Rendered card ids in display order (= server enqueue order). */
  ids(): number[] {
    const nodes = this.root.querySelectorAll<HTMLElement>(".alert-card");
    return [...nodes].map((card) => Number(card.dataset.alertId));
  }
}

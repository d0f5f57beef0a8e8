import { beforeEach, describe, expect, it } from "vitest";

import { Dashboard } from "../src/dashboard.js";
import { LedgerBook, solvencyMargin } from "../src/ledger.js";
import { makeAlert, makeState } from "./helpers.js";

let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = "";
  root = document.createElement("div");
  document.body.appendChild(root);
});

function stat(name: string): string {
  return root.querySelector<HTMLElement>(`[data-stat="${name}"]`)!.textContent!;
}

describe("Dashboard", () => {
  it("renders the state counters", () => {
    const dash = new Dashboard(root);
    dash.renderState(makeState({ active_size: 123, inspections: 50, position: 1000 }));
    expect(stat("active experts")).toBe("123 / 500");
    expect(stat("inspection fraction")).toBe("5.00%");
    expect(stat("mistakes")).toBe("0");
  });

  it("applies websocket frames to the visible counters", () => {
    const dash = new Dashboard(root);
    dash.renderState(makeState({ active_size: 500 }));
    dash.renderFrame({
      seq: 9,
      event_rate: 120.4,
      active_size: 217,
      position: 1400,
      pending: 12,
      events: [],
    });
    expect(stat("active experts")).toBe("217 / 500");
    expect(stat("position")).toBe("1400");
    expect(stat("event rate")).toBe("120/s");
  });

  it("shows the connection status transitions", () => {
    const dash = new Dashboard(root);
    const badge = root.querySelector<HTMLElement>(".conn-status")!;
    expect(badge.dataset.status).toBe("connecting");
    dash.setConnection("open");
    expect(badge.textContent).toBe("feed: open");
    dash.setConnection("reconnecting");
    expect(badge.dataset.status).toBe("reconnecting");
  });
});

describe("solvency margin", () => {
  it("matches the hand computation P + c*sqrt(n*log2(m)) - V", () => {
    const margin = solvencyMargin(
      { expert: 0, wins: 50, investment: 5.0, profit: 5, evicted: false },
      0.2,
      1000,
    );
    // 5 + 0.2*sqrt(50*log2(1000)) - 5
    expect(Math.abs(margin - 4.464478532743122)).toBeLessThan(1e-9);
  });

  it("goes negative exactly when the account is insolvent", () => {
    const broke = { expert: 1, wins: 100, investment: 10.0, profit: 0, evicted: false };
    const fine = { expert: 2, wins: 1, investment: 0.1, profit: 1, evicted: false };
    expect(solvencyMargin(broke, 0.2, 1000)).toBeLessThan(0);
    expect(solvencyMargin(fine, 0.2, 1000)).toBeGreaterThan(0);
  });
});

describe("LedgerBook", () => {
  it("folds alerts and judgements into per-expert accounts", () => {
    const book = new LedgerBook();
    book.noteAlert(makeAlert(1, { winner: 3, winning_bid: 0.1 }));
    book.noteJudgement({ seq: 1, kind: "judgement", alert_id: 1, suspicious: true, evicted: [] });
    book.noteAlert(makeAlert(2, { winner: 3, winning_bid: 0.1 }));
    book.noteJudgement({ seq: 2, kind: "judgement", alert_id: 2, suspicious: false, evicted: [] });
    const rows = book.rows(0.2, 1000);
    expect(rows).toHaveLength(1);
    expect(rows[0]).toMatchObject({ expert: 3, wins: 2, profit: 1, evicted: false });
    expect(rows[0]!.investment).toBeCloseTo(0.2, 12);
  });

  it("ignores duplicate settlements and text-mode alerts", () => {
    const book = new LedgerBook();
    book.noteAlert(makeAlert(1)); // no winner: text mode
    book.noteAlert(makeAlert(2, { winner: 5, winning_bid: 0.05 }));
    const judgement = { seq: 1, kind: "judgement" as const, alert_id: 2, suspicious: true };
    book.noteJudgement(judgement);
    book.noteJudgement(judgement); // ack + feed event for the same alert
    const rows = book.rows(0.2, 1000);
    expect(rows).toHaveLength(1);
    expect(rows[0]!.wins).toBe(1);
  });

  it("marks evicted experts and sorts most at-risk first", () => {
    const book = new LedgerBook();
    book.noteAlert(makeAlert(1, { winner: 1, winning_bid: 0.9 }));
    book.noteJudgement({ seq: 1, kind: "judgement", alert_id: 1, suspicious: false, evicted: [1] });
    book.noteAlert(makeAlert(2, { winner: 2, winning_bid: 0.01 }));
    book.noteJudgement({ seq: 2, kind: "judgement", alert_id: 2, suspicious: true, evicted: [] });
    const rows = book.rows(0.2, 1000);
    expect(rows.map((r) => r.expert)).toEqual([1, 2]);
    expect(rows[0]!.evicted).toBe(true);

    const dash = new Dashboard(root);
    dash.renderLedgers(rows, 0.2, 1000);
    const flagged = root.querySelector<HTMLElement>("tr.insolvent")!;
    expect(flagged.dataset.expert).toBe("1");
  });
});

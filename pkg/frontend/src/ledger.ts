// Client-side reconstruction of the per-expert auction accounts. The
// service API does not expose the ledger directly, so the console folds
// it from what it can observe: each pending alert names the winner and
// its bid, and each judgement settles that bid as fraud or not.

import type { AlertDoc, FeedEvent } from "./api.js";

export interface ExpertAccount {
  expert: number;
  wins: number; // n
  investment: number; // V, total bids spent
  profit: number; // P, confirmed frauds
  evicted: boolean;
}

/** Remaining headroom before eviction: P + c*sqrt(n*log2(m)) - V. */
export function solvencyMargin(acct: ExpertAccount, c: number, m: number): number {
  return acct.profit + c * Math.sqrt(acct.wins * Math.log2(m)) - acct.investment;
}

export class LedgerBook {
  private accounts = new Map<number, ExpertAccount>();
  // alert_id -> unsettled bid, joined against the judgement event later
  private open = new Map<number, { winner: number; bid: number }>();

  private account(expert: number): ExpertAccount {
    let acct = this.accounts.get(expert);
    if (!acct) {
      acct = { expert, wins: 0, investment: 0, profit: 0, evicted: false };
      this.accounts.set(expert, acct);
    }
    return acct;
  }

  /** Remember the winning bid of a pending auction alert. */
  noteAlert(alert: AlertDoc): void {
    if (alert.winner === null || alert.winning_bid === null) {
      return; // text modes have no auction
    }
    this.open.set(alert.alert_id, { winner: alert.winner, bid: alert.winning_bid });
  }

  /** Settle the bid behind a judgement event from the live feed. */
  noteJudgement(event: FeedEvent): void {
    if (event.alert_id === null || event.alert_id === undefined) {
      return;
    }
    const bid = this.open.get(event.alert_id);
    if (!bid) {
      return; // judged before we saw the alert; nothing to book
    }
    this.open.delete(event.alert_id);
    const acct = this.account(bid.winner);
    acct.wins += 1;
    acct.investment += bid.bid;
    if (event.suspicious) {
      acct.profit += 1;
    }
    for (const expert of event.evicted ?? []) {
      this.account(expert).evicted = true;
    }
  }

  /** Accounts with at least one settled win, most at-risk first. */
  rows(c: number, m: number): ExpertAccount[] {
    return [...this.accounts.values()]
      .filter((a) => a.wins > 0)
      .sort((a, b) => solvencyMargin(a, c, m) - solvencyMargin(b, c, m));
  }
}

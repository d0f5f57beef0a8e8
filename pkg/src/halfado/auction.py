"""Sealed-bid risk auction: the highest bidder stakes its bid for the right
to trigger an inspection, earns a unit reward on confirmed fraud, and goes
bankrupt when investment outruns profit plus the solvency allowance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from halfado.core import ActiveSet, ExpertId, PoolExhaustedError

LEDGER_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class AuctionOutcome:
    """Winner of one sealed-bid round; inspection happens only for a
    positive winning bid."""

    winner: Optional[ExpertId]
    winning_bid: float
    inspect: bool

    def __post_init__(self) -> None:
        if not (0.0 <= self.winning_bid <= 1.0):
            raise ValueError(f"winning_bid must be in [0, 1], got {self.winning_bid}")
        if self.inspect != (self.winner is not None and self.winning_bid > 0.0):
            raise ValueError("inspect must equal (winner exists and winning_bid > 0)")


@dataclass(frozen=True)
class SettlementReport:
    expert: ExpertId
    wins: int
    profit: int
    investment: float
    bound: float
    evicted: bool


class AuctionLedger:
    """Per-expert win/profit/investment accounts and the solvency rule.

    An expert stays solvent while V <= P + c * sqrt(n * log2(m)).
    """

    def __init__(self, m: int, c: float = 0.2) -> None:
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        if c <= 0.0:
            raise ValueError(f"c must be positive, got {c}")
        self.m = m
        self.c = c
        self.wins = np.zeros(m, dtype=np.int64)
        self.profit = np.zeros(m, dtype=np.int64)
        self.investment = np.zeros(m, dtype=float)
        self._log2_m = math.log2(m)

    def solvency_bound(self, expert: ExpertId) -> float:
        return float(self.profit[expert]) + self.c * math.sqrt(self.wins[expert] * self._log2_m)

    def solvent(self, expert: ExpertId) -> bool:
        return self.investment[expert] <= self.solvency_bound(expert)

    def insolvent_among(self, ids: np.ndarray) -> np.ndarray:
        bounds = self.profit[ids] + self.c * np.sqrt(self.wins[ids] * self._log2_m)
        return ids[self.investment[ids] > bounds]

    def to_state(self) -> dict:
        return {
            "schema_version": LEDGER_SCHEMA_VERSION,
            "m": self.m,
            "c": self.c,
            "wins": self.wins.tolist(),
            "profit": self.profit.tolist(),
            "investment": self.investment.tolist(),
        }

    @classmethod
    def from_state(cls, state: Mapping) -> "AuctionLedger":
        if state.get("schema_version") != LEDGER_SCHEMA_VERSION:
            raise ValueError(f"unsupported ledger schema: {state.get('schema_version')!r}")
        obj = cls(state["m"], state["c"])
        obj.wins[:] = state["wins"]
        obj.profit[:] = state["profit"]
        obj.investment[:] = state["investment"]
        return obj


def auction_winner(ids: np.ndarray, bids: np.ndarray) -> tuple[ExpertId, float]:
    """Argmax bid with ties to the lowest id; ``ids`` must be ascending."""
    pos = int(np.argmax(bids))
    return int(ids[pos]), float(bids[pos])


def run_auction(active_set: ActiveSet, bids: Mapping[ExpertId, float]) -> AuctionOutcome:
    """One sealed-bid round over exactly the active members."""
    active_set.require_members()
    member_ids = active_set.member_ids()
    if set(bids.keys()) != set(int(i) for i in member_ids):
        raise ValueError("bids must cover exactly the active members")
    values = np.fromiter((bids[int(i)] for i in member_ids), dtype=float, count=len(member_ids))
    if ((values < 0.0) | (values > 1.0)).any():
        raise ValueError("bids must lie in [0, 1]")
    winner, bid = auction_winner(member_ids, values)
    if bid <= 0.0:
        return AuctionOutcome(winner=None, winning_bid=0.0, inspect=False)
    return AuctionOutcome(winner=winner, winning_bid=bid, inspect=True)


def settle(ledger: AuctionLedger, outcome: AuctionOutcome, fraud: bool) -> SettlementReport:
    """Book one inspected transaction to the winner and apply the solvency
    check to it (other accounts are untouched)."""
    if not outcome.inspect:
        raise ValueError("cannot settle an outcome that requested no inspection")
    expert = outcome.winner
    ledger.wins[expert] += 1
    ledger.investment[expert] += outcome.winning_bid
    if fraud:
        ledger.profit[expert] += 1
    bound = ledger.solvency_bound(expert)
    return SettlementReport(
        expert=expert,
        wins=int(ledger.wins[expert]),
        profit=int(ledger.profit[expert]),
        investment=float(ledger.investment[expert]),
        bound=bound,
        evicted=float(ledger.investment[expert]) > bound,
    )


@dataclass(frozen=True)
class InspectionRequest:
    """Deferred settlement: judge the event, then settle the winner."""

    event_id: object
    outcome: AuctionOutcome


def process_transaction(
    active_set: ActiveSet,
    ledger: AuctionLedger,
    pool,
    batch,
) -> tuple[AuctionOutcome, Optional[InspectionRequest]]:
    """Auction a single transaction (a length-1 batch) among the active
    experts; settlement is deferred until a judgement arrives."""
    if len(batch) != 1:
        raise ValueError("process_transaction takes exactly one transaction")
    active_set.require_members()
    member_ids = active_set.member_ids()
    bids = pool.bid_matrix(batch, member_ids)[0]
    winner, bid = auction_winner(member_ids, bids)
    if bid <= 0.0:
        return AuctionOutcome(None, 0.0, False), None
    outcome = AuctionOutcome(winner, bid, True)
    return outcome, InspectionRequest(event_id=int(batch.ids[0]), outcome=outcome)

"""Streaming engines: chunked evaluation of expert pools over an event
stream, with immediate (oracle callback) or deferred (pending review)
judgements, and versioned snapshot/restore.

Chunks are aligned to absolute stream position, so a run restored from a
snapshot consumes the stream through computations of identical shape and
reproduces the uninterrupted run bit for bit. Snapshots are taken between
chunks; ``to_state`` refuses while events sit in the input buffer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional

import numpy as np

from halfado.auction import AuctionLedger, AuctionOutcome, settle
from halfado.core import (
    ActiveSet,
    Event,
    Judgement,
    Verdict,
    VoteConfig,
    apply_judgement,
)
from halfado.datagen import TransactionBatch
from halfado.experts import ProjectionPool, TreePool, bow_matrix

ENGINE_SCHEMA_VERSION = 1
TEXT_CHUNK = 512
TX_CHUNK = 4096


@dataclass
class AlertInfo:
    """One alert as surfaced to the caller. ``payload`` is a passthrough for
    display; the engine never retains it."""

    event_id: object
    position: int
    payload: object = None
    flaggers: tuple[int, ...] = ()
    vote_suspicious: bool = False
    winner: Optional[int] = None
    winning_bid: Optional[float] = None
    judged: bool = False
    judgement_suspicious: Optional[bool] = None
    evicted: tuple[int, ...] = ()


@dataclass(frozen=True)
class JudgementResult:
    event_id: object
    suspicious: bool
    evicted: tuple[int, ...]
    mistake: bool
    active_size: int
    pool_exhausted: bool


class _CountersMixin:
    """Shared bookkeeping: consumption position, alert/judgement tallies,
    truth accounting, eviction positions."""

    def _init_counters(self) -> None:
        self.position = 0
        self.alerts = 0
        self.inspections = 0
        self.confirmed = 0
        self.true_positives = 0
        self.positives = 0
        self.truth_missing = False
        self.pending: dict = {}
        self.evicted_at: dict[int, int] = {}
        self.exhausted_at: Optional[int] = None
        self._active_count = self.active.size

    @property
    def active_size(self) -> int:
        return self._active_count

    def _note_evictions(self, evicted: Iterable[int], position: int) -> None:
        for expert in evicted:
            self.evicted_at[int(expert)] = position
            self._active_count -= 1
        if self._active_count == 0 and self.exhausted_at is None:
            self.exhausted_at = position

    def _counters_state(self) -> dict:
        return {
            "position": self.position,
            "alerts": self.alerts,
            "inspections": self.inspections,
            "confirmed": self.confirmed,
            "true_positives": self.true_positives,
            "positives": self.positives,
            "truth_missing": self.truth_missing,
            "evicted_at": {str(k): v for k, v in self.evicted_at.items()},
            "exhausted_at": self.exhausted_at,
        }

    def _restore_counters(self, state: Mapping) -> None:
        self.position = int(state["position"])
        self.alerts = int(state["alerts"])
        self.inspections = int(state["inspections"])
        self.confirmed = int(state["confirmed"])
        self.true_positives = int(state["true_positives"])
        self.positives = int(state["positives"])
        self.truth_missing = bool(state["truth_missing"])
        self.evicted_at = {int(k): int(v) for k, v in state["evicted_at"].items()}
        self.exhausted_at = state["exhausted_at"]
        self._active_count = self.active.size

    def _require_clean_buffer(self) -> None:
        if self._buffered():
            raise RuntimeError("snapshot requires an empty input buffer; flush() or feed whole chunks")


class TextHalvingEngine(_CountersMixin):
    """Halving (alpha=1) or agnostic (alpha<1) detection over text events
    flagged by a projection pool."""

    def __init__(
        self,
        pool: ProjectionPool,
        config: VoteConfig,
        judge: Optional[Callable[[Event], bool]] = None,
        chunk: int = TEXT_CHUNK,
    ) -> None:
        if chunk < 1:
            raise ValueError("chunk must be >= 1")
        self.pool = pool
        self.judge = judge
        self.chunk = chunk
        self.active = ActiveSet(len(pool), config)
        self._buffer: list[Event] = []
        self._init_counters()

    @property
    def mode(self) -> str:
        return "halving" if self.active.config.alpha >= 1.0 else "agnostic"

    def _buffered(self) -> int:
        return len(self._buffer)

    def feed(self, events: Iterable[Event]) -> list[AlertInfo]:
        out: list[AlertInfo] = []
        for event in events:
            self._buffer.append(event)
            if len(self._buffer) == self.chunk:
                chunk, self._buffer = self._buffer, []
                out.extend(self._process_chunk(chunk))
        return out

    def flush(self) -> list[AlertInfo]:
        """Consume the partial trailing chunk; end-of-stream only."""
        if not self._buffer:
            return []
        chunk, self._buffer = self._buffer, []
        return self._process_chunk(chunk)

    def _process_chunk(self, events: list[Event]) -> list[AlertInfo]:
        cols = self.active.member_ids()
        if len(cols):
            flags = self.pool.flags_matrix(
                bow_matrix([e.payload for e in events], self.pool.vocab), cols
            )
            col_alive = np.ones(len(cols), dtype=bool)
            col_of = {int(c): i for i, c in enumerate(cols)}
            row_any = flags.any(axis=1)
        out: list[AlertInfo] = []
        theta = self.active.config.theta
        for r, event in enumerate(events):
            position = self.position
            self.position += 1
            if event.truth is None:
                self.truth_missing = True
            elif event.truth:
                self.positives += 1
            if not len(cols) or not row_any[r]:
                continue
            flag_row = flags[r] & col_alive
            if not flag_row.any():
                continue  # every flagger of this event was already evicted
            flaggers = tuple(int(c) for c in cols[flag_row])
            vote = len(flaggers) >= theta * self._active_count
            self.alerts += 1
            if event.truth:
                self.true_positives += 1
            info = AlertInfo(
                event_id=event.id,
                position=position,
                payload=event.payload,
                flaggers=flaggers,
                vote_suspicious=bool(vote),
            )
            if self.judge is None:
                self.pending[event.id] = (flaggers, bool(vote))
            else:
                result = self._apply(event.id, flaggers, bool(vote), bool(self.judge(event)), "oracle", position)
                info.judged = True
                info.judgement_suspicious = result.suspicious
                info.evicted = result.evicted
                for expert in result.evicted:
                    col_alive[col_of[expert]] = False
            out.append(info)
        return out

    def _apply(self, event_id, flaggers, vote, suspicious, source, position) -> JudgementResult:
        verdict = Verdict(alert=True, vote_suspicious=vote, flaggers=flaggers)
        report = apply_judgement(self.active, verdict, Judgement(event_id, suspicious, source))
        self.inspections += 1
        if suspicious:
            self.confirmed += 1
        self._note_evictions(report.evicted, position)
        return JudgementResult(
            event_id=event_id,
            suspicious=suspicious,
            evicted=report.evicted,
            mistake=report.mistake,
            active_size=self._active_count,
            pool_exhausted=report.pool_exhausted,
        )

    def submit_judgement(self, event_id, suspicious: bool, source: str = "human") -> JudgementResult:
        """Resolve a pending alert; judgements apply in arrival order."""
        if event_id not in self.pending:
            raise KeyError(f"no pending alert for event {event_id!r}")
        flaggers, vote = self.pending.pop(event_id)
        return self._apply(event_id, flaggers, vote, bool(suspicious), source, self.position)

    # -- serialization ----------------------------------------------------

    def to_state(self) -> dict:
        self._require_clean_buffer()
        return {
            "schema_version": ENGINE_SCHEMA_VERSION,
            "kind": self.mode,
            "chunk": self.chunk,
            "active": self.active.to_state(),
            "counters": self._counters_state(),
            "pending": [
                {"event_id": k, "flaggers": list(v[0]), "vote_suspicious": v[1]}
                for k, v in self.pending.items()
            ],
            "pool": self.pool.to_doc(),
        }

    @classmethod
    def from_state(cls, state: Mapping, judge: Optional[Callable[[Event], bool]] = None) -> "TextHalvingEngine":
        if state.get("schema_version") != ENGINE_SCHEMA_VERSION:
            raise ValueError(f"unsupported engine schema: {state.get('schema_version')!r}")
        if state.get("kind") not in ("halving", "agnostic"):
            raise ValueError(f"not a text engine state: {state.get('kind')!r}")
        pool = ProjectionPool.from_doc(state["pool"])
        engine = cls(pool, VoteConfig(**state["active"]["config"]), judge=judge, chunk=state["chunk"])
        engine.active = ActiveSet.from_state(state["active"])
        engine._restore_counters(state["counters"])
        engine.pending = {
            p["event_id"]: (tuple(p["flaggers"]), p["vote_suspicious"]) for p in state["pending"]
        }
        return engine


class AuctionEngine(_CountersMixin):
    """Risk-factor auction over a tree pool: the highest positive bid buys an
    inspection; settlements evict insolvent experts."""

    def __init__(
        self,
        pool: TreePool,
        c: float = 0.2,
        use_truth: bool = True,
        chunk: int = TX_CHUNK,
        ledger: Optional[AuctionLedger] = None,
    ) -> None:
        if chunk < 1:
            raise ValueError("chunk must be >= 1")
        self.pool = pool
        self.use_truth = use_truth
        self.chunk = chunk
        self.ledger = ledger if ledger is not None else AuctionLedger(len(pool), c=c)
        # membership bookkeeping only; no votes or eviction draws here
        self.active = ActiveSet(len(pool), VoteConfig())
        self._buffer: list[TransactionBatch] = []
        self._buffered_rows = 0
        self._init_counters()

    mode = "auction"

    def _buffered(self) -> int:
        return self._buffered_rows

    def feed(self, batch: TransactionBatch) -> list[AlertInfo]:
        self._buffer.append(batch)
        self._buffered_rows += len(batch)
        out: list[AlertInfo] = []
        while self._buffered_rows >= self.chunk:
            out.extend(self._process_chunk(self._take(self.chunk)))
        return out

    def flush(self) -> list[AlertInfo]:
        if not self._buffered_rows:
            return []
        return self._process_chunk(self._take(self._buffered_rows))

    def _take(self, n: int) -> TransactionBatch:
        pieces, taken = [], 0
        while taken < n:
            batch = self._buffer[0]
            need = n - taken
            if len(batch) <= need:
                pieces.append(batch)
                taken += len(batch)
                self._buffer.pop(0)
            else:
                pieces.append(batch.slice(0, need))
                self._buffer[0] = batch.slice(need, len(batch))
                taken += need
        self._buffered_rows -= n
        if len(pieces) == 1:
            return pieces[0]
        return TransactionBatch(
            np.concatenate([p.ids for p in pieces]),
            {k: np.concatenate([p.columns[k] for p in pieces]) for k in pieces[0].columns},
            np.concatenate([p.fraud for p in pieces]),
        )

    def _process_chunk(self, batch: TransactionBatch) -> list[AlertInfo]:
        out: list[AlertInfo] = []
        fraud_col = batch.fraud
        self.positives += int(fraud_col.sum())
        cols = self.active.member_ids()
        if len(cols):
            bids = self.pool.bid_matrix(batch, cols)
            candidate = bids.argmax(axis=1)  # first max = lowest expert id
            row_max = bids[np.arange(len(batch)), candidate]
            col_alive = np.ones(len(cols), dtype=bool)
            for r in np.flatnonzero(row_max > 0.0):
                ci = int(candidate[r])
                if not col_alive[ci]:
                    # precomputed winner died mid-chunk: rerun this auction
                    masked = np.where(col_alive, bids[r], -1.0)
                    ci = int(masked.argmax())
                    if masked[ci] <= 0.0:
                        continue
                winner = int(cols[ci])
                bid = float(bids[r, ci])
                event_id = int(batch.ids[r])
                position = self.position + int(r)
                self.alerts += 1
                if fraud_col[r]:
                    self.true_positives += 1
                info = AlertInfo(
                    event_id=event_id, position=position, winner=winner, winning_bid=bid
                )
                if self.use_truth:
                    result = self._settle(event_id, winner, bid, bool(fraud_col[r]), "oracle", position)
                    info.judged = True
                    info.judgement_suspicious = result.suspicious
                    info.evicted = result.evicted
                    if result.evicted:
                        col_alive[ci] = False
                else:
                    self.pending[event_id] = (winner, bid)
                    info.payload = batch.record(r)
                out.append(info)
        self.position += len(batch)
        return out

    def _settle(self, event_id, winner, bid, fraud, source, position) -> JudgementResult:
        report = settle(self.ledger, AuctionOutcome(winner, bid, True), fraud)
        self.inspections += 1
        if fraud:
            self.confirmed += 1
        evicted: tuple[int, ...] = ()
        if report.evicted and self.active.alive[winner]:
            self.active.alive[winner] = False
            evicted = (winner,)
            self._note_evictions(evicted, position)
        return JudgementResult(
            event_id=event_id,
            suspicious=fraud,
            evicted=evicted,
            mistake=False,
            active_size=self._active_count,
            pool_exhausted=self._active_count == 0,
        )

    def submit_judgement(self, event_id, suspicious: bool, source: str = "human") -> JudgementResult:
        if event_id not in self.pending:
            raise KeyError(f"no pending alert for event {event_id!r}")
        winner, bid = self.pending.pop(event_id)
        return self._settle(event_id, winner, bid, bool(suspicious), source, self.position)

    # -- serialization ----------------------------------------------------

    def to_state(self) -> dict:
        self._require_clean_buffer()
        return {
            "schema_version": ENGINE_SCHEMA_VERSION,
            "kind": "auction",
            "chunk": self.chunk,
            "use_truth": self.use_truth,
            "active": self.active.to_state(),
            "counters": self._counters_state(),
            "pending": [
                {"event_id": k, "winner": v[0], "winning_bid": v[1]} for k, v in self.pending.items()
            ],
            "pool": self.pool.to_doc(),
            "ledger": self.ledger.to_state(),
        }

    @classmethod
    def from_state(cls, state: Mapping) -> "AuctionEngine":
        if state.get("schema_version") != ENGINE_SCHEMA_VERSION:
            raise ValueError(f"unsupported engine schema: {state.get('schema_version')!r}")
        if state.get("kind") != "auction":
            raise ValueError(f"not an auction engine state: {state.get('kind')!r}")
        engine = cls(
            TreePool.from_doc(state["pool"]),
            use_truth=state["use_truth"],
            chunk=state["chunk"],
            ledger=AuctionLedger.from_state(state["ledger"]),
        )
        engine.active = ActiveSet.from_state(state["active"])
        engine._restore_counters(state["counters"])
        engine.pending = {p["event_id"]: (p["winner"], p["winning_bid"]) for p in state["pending"]}
        return engine


def engine_from_state(state: Mapping, judge: Optional[Callable[[Event], bool]] = None):
    """Rebuild whichever engine the state document describes."""
    kind = state.get("kind")
    if kind in ("halving", "agnostic"):
        return TextHalvingEngine.from_state(state, judge=judge)
    if kind == "auction":
        return AuctionEngine.from_state(state)
    raise ValueError(f"unknown engine kind {kind!r}")

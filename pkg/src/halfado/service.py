"""Operational wrapper: review queue, persistence, and the HTTP/WS API.

One :class:`ReviewService` owns one engine. Every mutation (ingest,
judgement, pause, resume) funnels through a single lock, so observable
transitions form one total order regardless of how many API handlers or
producer threads are talking to it. Alerts wait in a bounded queue; a
full queue pushes back on the producer instead of dropping, since a
dropped alert would silently break the recall guarantee.
"""

from __future__ import annotations

import asyncio
import threading
import time
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Optional, Union

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import BaseModel

from .core import Event
from .datagen import TransactionBatch
from .engine import AuctionEngine, TextHalvingEngine, engine_from_state

SERVICE_SCHEMA_VERSION = 1
DEFAULT_QUEUE_CAPACITY = 10_000
EXCERPT_CHARS = 140


class QueueFullError(RuntimeError):
    """Backpressure: the review queue is at capacity."""


class ServicePausedError(RuntimeError):
    pass


class UnknownAlertError(KeyError):
    pass


class DuplicateJudgementError(RuntimeError):
    pass


def _excerpt(payload) -> str:
    if isinstance(payload, str):
        return payload[:EXCERPT_CHARS]
    if isinstance(payload, Mapping):
        s = payload.get("sender", {}).get("country", "?")
        r = payload.get("receiver", {}).get("country", "?")
        return f"{s}->{r} amount={payload.get('amount', '?')}"
    return repr(payload)[:EXCERPT_CHARS]


@dataclass
class PendingAlert:
    """A case awaiting human judgement; dropped from memory once judged."""

    alert_id: int
    event_id: Union[int, str]
    position: int
    payload: Union[str, dict]
    flaggers: tuple
    winner: Optional[int]
    winning_bid: Optional[float]
    enqueued_at: float

    def to_doc(self) -> dict:
        return {
            "alert_id": self.alert_id,
            "event_id": self.event_id,
            "position": self.position,
            "excerpt": _excerpt(self.payload),
            "payload": self.payload,
            "flaggers": list(self.flaggers),
            "winner": self.winner,
            "winning_bid": self.winning_bid,
            "enqueued_at": self.enqueued_at,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "PendingAlert":
        return cls(
            alert_id=int(doc["alert_id"]),
            event_id=doc["event_id"],
            position=int(doc["position"]),
            payload=doc["payload"],
            flaggers=tuple(doc["flaggers"]),
            winner=doc["winner"],
            winning_bid=doc["winning_bid"],
            enqueued_at=float(doc["enqueued_at"]),
        )


class ReviewService:
    """Single-owner front end over one engine.

    The engine must run with chunk=1 so each ingested event is evaluated
    before ingest returns; that is what makes "alert or not" part of the
    call's contract rather than something that surfaces chunks later.
    """

    def __init__(self, engine, capacity: int = DEFAULT_QUEUE_CAPACITY) -> None:
        if engine.chunk != 1:
            raise ValueError("review service needs a chunk=1 engine")
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.engine = engine
        self.capacity = capacity
        self._lock = threading.Lock()
        self._paused = False
        self._pending: dict[int, PendingAlert] = {}  # insertion = enqueue order
        self._by_event: dict = {}  # event_id -> alert_id
        self._judged: set[int] = set()
        self._next_alert_id = 1
        self._seq = 0
        self._feed: deque = deque(maxlen=4096)  # recent transitions for /live

    # -- internals ---------------------------------------------------

    def _emit(self, kind: str, **payload) -> None:
        self._seq += 1
        self._feed.append({"seq": self._seq, "kind": kind, **payload})

    def _summary_locked(self) -> dict:
        eng = self.engine
        out = {
            "mode": eng.mode,
            "m": len(eng.pool),
            "position": eng.position,
            "active_size": eng.active_size,
            "alerts": eng.alerts,
            "inspections": eng.inspections,
            "confirmed": eng.confirmed,
            "pending": len(self._pending),
            "paused": self._paused,
            "pool_exhausted": eng.exhausted_at is not None,
            "seq": self._seq,
        }
        if isinstance(eng, TextHalvingEngine):
            out["mistakes"] = eng.active.mistakes
            out["theta"] = eng.active.config.theta
            out["alpha"] = eng.active.config.alpha
        else:
            out["c"] = eng.ledger.c
        return out

    # -- commands ----------------------------------------------------

    def ingest(self, event) -> Optional[PendingAlert]:
        """Feed one event. Returns the enqueued alert, if one was raised.

        Raises QueueFullError before touching the engine when the queue
        is at capacity, and ServicePausedError while paused.
        """
        with self._lock:
            if self._paused:
                raise ServicePausedError("service is paused")
            if len(self._pending) >= self.capacity:
                raise QueueFullError(f"review queue at capacity {self.capacity}")
            if isinstance(self.engine, AuctionEngine) and not isinstance(event, TransactionBatch):
                event = TransactionBatch.from_records([event])
            if isinstance(event, TransactionBatch) and len(event) != 1:
                raise ValueError("ingest takes one transaction at a time")
            alerts = self.engine.feed([event] if isinstance(event, Event) else event)
            if not alerts:
                return None
            info = alerts[0]
            if info.judged:  # oracle already settled it: bypass the queue
                self._emit("alert", alert_id=None, event_id=info.event_id)
                self._emit("judgement", event_id=info.event_id,
                           suspicious=info.judgement_suspicious, evicted=list(info.evicted))
                return None
            alert = PendingAlert(
                alert_id=self._next_alert_id,
                event_id=info.event_id,
                position=int(info.position),
                payload=info.payload,
                flaggers=info.flaggers,
                winner=info.winner,
                winning_bid=info.winning_bid,
                enqueued_at=time.time(),
            )
            self._next_alert_id += 1
            self._pending[alert.alert_id] = alert
            self._by_event[alert.event_id] = alert.alert_id
            self._emit("alert", alert_id=alert.alert_id, event_id=alert.event_id)
            return alert

    def submit_judgement(self, alert_id: int, suspicious: bool, source: str = "human") -> dict:
        """Apply one human judgement; returns the refreshed summary."""
        with self._lock:
            alert = self._pending.get(alert_id)
            if alert is None:
                if alert_id in self._judged:
                    raise DuplicateJudgementError(f"alert {alert_id} already judged")
                raise UnknownAlertError(f"no pending alert {alert_id}")
            result = self.engine.submit_judgement(alert.event_id, suspicious, source=source)
            del self._pending[alert_id]
            del self._by_event[alert.event_id]
            self._judged.add(alert_id)
            self._emit("judgement", alert_id=alert_id, event_id=alert.event_id,
                       suspicious=bool(suspicious), evicted=list(result.evicted))
            summary = self._summary_locked()
            summary["evicted"] = list(result.evicted)
            return summary

    def pause(self) -> dict:
        with self._lock:
            self._paused = True
            self._emit("paused")
            return self._summary_locked()

    def resume(self) -> dict:
        with self._lock:
            self._paused = False
            self._emit("resumed")
            return self._summary_locked()

    # -- reads -------------------------------------------------------

    def state(self) -> dict:
        with self._lock:
            return self._summary_locked()

    def pending_alerts(self) -> list[dict]:
        with self._lock:
            return [a.to_doc() for a in self._pending.values()]

    def feed_since(self, seq: int) -> tuple[int, list[dict]]:
        with self._lock:
            return self._seq, [e for e in self._feed if e["seq"] > seq]

    def report(self) -> dict:
        """Live run summary shaped like the offline report."""
        with self._lock:
            eng = self.engine
            n = eng.position
            doc = self._summary_locked()
            doc["inspection_fraction"] = eng.inspections / n if n else 0.0
            doc["precision"] = eng.true_positives / eng.alerts if eng.alerts else None
            recall_known = not eng.truth_missing and eng.positives > 0
            doc["recall"] = eng.true_positives / eng.positives if recall_known else None
            doc["survivors"] = [eng.pool.describe(int(i)) for i in eng.active.member_ids()]
            return doc

    # -- persistence -------------------------------------------------

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "schema": SERVICE_SCHEMA_VERSION,
                "engine": self.engine.to_state(),
                "alerts": [a.to_doc() for a in self._pending.values()],
                "judged": sorted(self._judged),
                "next_alert_id": self._next_alert_id,
                "seq": self._seq,
                "paused": self._paused,
                "capacity": self.capacity,
            }

    @classmethod
    def restore(cls, doc: dict, judge=None) -> "ReviewService":
        if not doc:
            raise ValueError("empty state document")
        if doc.get("schema") != SERVICE_SCHEMA_VERSION:
            raise ValueError(f"unsupported service schema {doc.get('schema')!r}")
        service = cls(engine_from_state(doc["engine"], judge=judge), capacity=int(doc["capacity"]))
        for alert_doc in doc["alerts"]:
            alert = PendingAlert.from_doc(alert_doc)
            service._pending[alert.alert_id] = alert
            service._by_event[alert.event_id] = alert.alert_id
        service._judged = set(doc["judged"])
        service._next_alert_id = int(doc["next_alert_id"])
        service._seq = int(doc["seq"])
        service._paused = bool(doc["paused"])
        return service


class JudgementBody(BaseModel):
    suspicious: bool
    source: str = "human"


def build_app(service: ReviewService, poll_seconds: float = 0.2) -> FastAPI:
    """The HTTP/WS facade the review console talks to."""
    app = FastAPI(title="halfado review service")
    app.state.service = service

    @app.get("/state")
    def get_state():
        return service.state()

    @app.get("/alerts")
    def get_alerts(status: str = "pending"):
        if status != "pending":
            raise HTTPException(status_code=400, detail="only status=pending exists")
        return {"alerts": service.pending_alerts()}

    @app.post("/alerts/{alert_id}/judgement")
    def post_judgement(alert_id: int, body: JudgementBody):
        try:
            return service.submit_judgement(alert_id, body.suspicious, source=body.source)
        except DuplicateJudgementError as err:
            raise HTTPException(status_code=409, detail=str(err))
        except UnknownAlertError as err:
            raise HTTPException(status_code=404, detail=str(err.args[0]))

    @app.post("/control/{action}")
    def post_control(action: str):
        if action == "pause":
            return service.pause()
        if action == "resume":
            return service.resume()
        raise HTTPException(status_code=404, detail=f"unknown control {action!r}")

    @app.get("/report")
    def get_report():
        return service.report()

    @app.websocket("/live")
    async def live(ws: WebSocket):
        await ws.accept()
        last_seq = 0
        last_pos = service.state()["position"]
        last_time = time.monotonic()
        try:
            while True:
                seq, events = service.feed_since(last_seq)
                state = service.state()
                now = time.monotonic()
                rate = (state["position"] - last_pos) / max(now - last_time, 1e-9)
                await ws.send_json({
                    "seq": seq,
                    "event_rate": rate,
                    "active_size": state["active_size"],
                    "position": state["position"],
                    "pending": state["pending"],
                    "events": events,
                })
                last_seq, last_pos, last_time = seq, state["position"], now
                await asyncio.sleep(poll_seconds)
        except WebSocketDisconnect:
            pass

    return app


def serve(service: ReviewService, host: str = "127.0.0.1", port: int = 8080) -> None:
    """Block on uvicorn until interrupted."""
    import uvicorn

    uvicorn.run(build_app(service), host=host, port=port, log_level="warning")

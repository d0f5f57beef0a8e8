"""Oracles, single-word baselines, and the experiment runner.

`run_experiment` wires a stream, an expert pool, and an oracle into one
engine pass and distills the counters into a :class:`RunReport`.  Reports
separate comparable content from wall-clock timing so that two runs of the
same configuration can be checked for bit-exact agreement.
"""

from __future__ import annotations

import csv
import json
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import Event, Judgement, VoteConfig, mistake_bound
from .datagen import COUNTRIES, PlantedRule, TransactionBatch
from .engine import AlertInfo, AuctionEngine, TextHalvingEngine
from .experts import ProjectionPool, TreePool, tokenize

TEXT_MODES = ("halving", "agnostic")
MODES = TEXT_MODES + ("auction",)


@dataclass(frozen=True)
class KeywordOracle:
    """Flags a message iff any keyword occurs as a whole token."""

    keywords: frozenset = frozenset({"hate", "kill"})

    def __call__(self, event: Event) -> bool:
        if not isinstance(event.payload, str):
            raise TypeError(f"keyword oracle needs text payloads, got {type(event.payload).__name__}")
        return bool(self.keywords & set(tokenize(event.payload)))


@dataclass(frozen=True)
class TruthOracle:
    """Replays the ground-truth label carried by the event itself."""

    def __call__(self, event: Event) -> bool:
        if event.truth is None:
            raise ValueError(f"event {event.id!r} carries no ground truth")
        return bool(event.truth)


def judge(oracle: Callable[[Event], bool], event: Event) -> Judgement:
    """One autonomous judgement, tagged with its source."""
    return Judgement(event_id=event.id, suspicious=bool(oracle(event)), source="oracle")


@dataclass(frozen=True)
class WordScore:
    word: str
    alerts: int
    hits: int  # alerts that were true positives
    precision: float  # 0.0 when the word never fires
    recall: float


def score_single_word_baselines(
    corpus: Sequence[str],
    oracle: Callable[[Event], bool],
    candidate_words: Sequence[str],
) -> list[WordScore]:
    """Precision/recall of each detector "message contains <word>"."""
    if not corpus:
        raise ValueError("corpus is empty")
    token_sets = [set(tokenize(msg)) for msg in corpus]
    labels = [oracle(Event(i, msg)) for i, msg in enumerate(corpus)]
    positives = sum(labels)
    scores = []
    for word in candidate_words:
        fires = [word in toks for toks in token_sets]
        alerts = sum(fires)
        hits = sum(1 for f, y in zip(fires, labels) if f and y)
        scores.append(
            WordScore(
                word=word,
                alerts=alerts,
                hits=hits,
                precision=hits / alerts if alerts else 0.0,
                recall=hits / positives if positives else 0.0,
            )
        )
    return scores


@dataclass
class ExperimentConfig:
    """Everything one run needs: stream, experts, oracle, knobs."""

    mode: str
    stream: Sequence[Event] | TransactionBatch
    pool: ProjectionPool | TreePool
    oracle: Callable[[Event], bool] | None = None
    theta: float = 0.5
    alpha: float = 1.0
    c: float = 0.2
    seed: int = 0
    chunk: int | None = None
    rules: Sequence[PlantedRule] | None = None  # enables the matched-fraction comparator
    alert_log: list | None = None  # filled with AlertInfo when provided

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "halving" and self.alpha != 1.0:
            raise ValueError("halving mode means alpha=1; use agnostic for alpha<1")
        if self.mode == "agnostic" and not (0.0 < self.alpha < 1.0):
            raise ValueError("agnostic mode needs 0 < alpha < 1")
        if self.mode in TEXT_MODES and self.oracle is None:
            raise ValueError(f"{self.mode} mode needs an oracle")


@dataclass(frozen=True)
class RunReport:
    mode: str
    m: int
    theta: float | None
    alpha: float | None
    c: float | None
    seed: int
    events_processed: int
    alerts: int
    inspections: int
    inspection_fraction: float
    confirmed: int
    mistakes: int | None  # vote-based modes only
    mistake_bound: int | None  # alpha=1 only
    final_active_size: int
    pool_exhausted: bool
    precision: float | None  # None when nothing was alerted
    recall: float | None  # None when the stream has no positives
    optimal_inspection_fraction: float | None  # auction runs with known rules
    survivors: tuple[str, ...]
    timing: dict = field(compare=False)

    def comparable(self) -> dict:
        """Everything that must be bit-identical across reruns."""
        doc = self.to_doc()
        doc.pop("timing")
        return doc

    def to_doc(self) -> dict:
        return {
            "mode": self.mode,
            "m": self.m,
            "theta": self.theta,
            "alpha": self.alpha,
            "c": self.c,
            "seed": self.seed,
            "events_processed": self.events_processed,
            "alerts": self.alerts,
            "inspections": self.inspections,
            "inspection_fraction": self.inspection_fraction,
            "confirmed": self.confirmed,
            "mistakes": self.mistakes,
            "mistake_bound": self.mistake_bound,
            "final_active_size": self.final_active_size,
            "pool_exhausted": self.pool_exhausted,
            "precision": self.precision,
            "recall": self.recall,
            "optimal_inspection_fraction": self.optimal_inspection_fraction,
            "survivors": list(self.survivors),
            "timing": self.timing,
        }


def label_events(stream: Sequence[Event], oracle: Callable[[Event], bool]) -> list[Event]:
    """Attach oracle labels as ground truth where events carry none."""
    return [
        e if e.truth is not None else Event(e.id, e.payload, truth=bool(oracle(e)))
        for e in stream
    ]


def matched_fraction(batch: TransactionBatch, rules: Sequence[PlantedRule]) -> float:
    """Share of transactions on any rule's country pair: the inspection
    fraction an operator who already knew the rules would need."""
    if not len(batch):
        return 0.0
    s = batch.column("sender.country")
    r = batch.column("receiver.country")
    hit = np.zeros(len(batch), dtype=bool)
    for rule in rules:
        hit |= (s == COUNTRIES.index(rule.sender_country)) & (r == COUNTRIES.index(rule.receiver_country))
    return float(hit.mean())


def summarize_engine(
    engine,
    *,
    mode: str,
    seed: int,
    theta: float | None = None,
    alpha: float | None = None,
    c: float | None = None,
    mistake_limit: int | None = None,
    optimal: float | None = None,
    elapsed: float = 0.0,
) -> RunReport:
    """Condense a finished engine's counters into a report."""
    n = engine.position
    mistakes = engine.active.mistakes if isinstance(engine, TextHalvingEngine) else None
    return RunReport(
        mode=mode,
        m=len(engine.pool),
        theta=theta,
        alpha=alpha,
        c=c,
        seed=seed,
        events_processed=n,
        alerts=engine.alerts,
        inspections=engine.inspections,
        inspection_fraction=engine.inspections / n if n else 0.0,
        confirmed=engine.confirmed,
        mistakes=mistakes,
        mistake_bound=mistake_limit,
        final_active_size=engine.active_size,
        pool_exhausted=engine.exhausted_at is not None,
        precision=engine.true_positives / engine.alerts if engine.alerts else None,
        recall=engine.true_positives / engine.positives if engine.positives else None,
        optimal_inspection_fraction=optimal,
        survivors=tuple(engine.pool.describe(int(i)) for i in engine.active.member_ids()),
        timing={
            "seconds": elapsed,
            "throughput_events_per_second": n / elapsed if elapsed > 0 else 0.0,
        },
    )


def run_experiment(config: ExperimentConfig) -> RunReport:
    """Stream everything through one engine and summarize.

    Pool exhaustion mid-run is reported via ``pool_exhausted``, never
    raised. Timing covers the engine pass only, not data preparation.
    """
    if config.mode in TEXT_MODES:
        stream = label_events(config.stream, config.oracle)
        engine = TextHalvingEngine(
            config.pool,
            VoteConfig(theta=config.theta, alpha=config.alpha, seed=config.seed),
            judge=config.oracle,
            **({"chunk": config.chunk} if config.chunk else {}),
        )
        bound = mistake_bound(len(config.pool), config.theta) if config.alpha == 1.0 else None
        reported = dict(theta=config.theta, alpha=config.alpha, c=None, optimal=None)
    else:
        stream = config.stream
        engine = AuctionEngine(
            config.pool,
            c=config.c,
            **({"chunk": config.chunk} if config.chunk else {}),
        )
        bound = None
        optimal = matched_fraction(stream, config.rules) if config.rules is not None else None
        reported = dict(theta=None, alpha=None, c=config.c, optimal=optimal)

    started = time.perf_counter()
    alerts = engine.feed(stream)
    alerts += engine.flush()
    elapsed = time.perf_counter() - started
    if config.alert_log is not None:
        config.alert_log.extend(alerts)

    return summarize_engine(
        engine,
        mode=config.mode,
        seed=config.seed,
        theta=reported["theta"],
        alpha=reported["alpha"],
        c=reported["c"],
        mistake_limit=bound,
        optimal=reported["optimal"],
        elapsed=elapsed,
    )


def report_ranges(reports: Sequence[RunReport], fields: Sequence[str]) -> dict:
    """min/median/max per field across a seed sweep."""
    if not reports:
        raise ValueError("no reports")
    out = {}
    for name in fields:
        values = [getattr(r, name) for r in reports]
        out[name] = {
            "min": min(values),
            "median": statistics.median(values),
            "max": max(values),
        }
    return out


def write_report(report: RunReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_doc(), fh, indent=2)
        fh.write("\n")


def write_alerts_csv(alerts: Sequence[AlertInfo], path) -> None:
    """Per-event decision audit trail."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["event_id", "position", "flaggers", "vote_suspicious", "winner",
             "winning_bid", "judged", "judgement_suspicious", "evicted"]
        )
        for a in alerts:
            writer.writerow(
                [a.event_id, a.position, " ".join(map(str, a.flaggers)),
                 a.vote_suspicious, "" if a.winner is None else a.winner,
                 a.winning_bid, a.judged, a.judgement_suspicious,
                 " ".join(map(str, a.evicted))]
            )


def write_word_scores_csv(scores: Sequence[WordScore], path) -> None:
    """Plot-ready precision/recall table for the baseline scatter."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["word", "alerts", "hits", "precision", "recall"])
        for s in scores:
            writer.writerow([s.word, s.alerts, s.hits, s.precision, s.recall])


def load_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)

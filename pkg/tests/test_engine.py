"""Engine streaming: chunk equivalence, snapshots, deferred judgements."""

import json

import numpy as np
import pytest

from halfado.core import Event, VoteConfig
from halfado.datagen import (
    COUNTRIES,
    DEFAULT_RULES,
    PopulationConfig,
    generate_message_corpus,
    generate_population,
    generate_stream,
)
from halfado.engine import (
    AlertInfo,
    AuctionEngine,
    TextHalvingEngine,
    engine_from_state,
)
from halfado.experts import (
    build_vocabulary,
    sample_projection_experts,
    sample_tree_experts,
    tokenize,
)

KEYWORDS = {"hate", "kill"}


def keyword_judge(event):
    return bool(KEYWORDS & set(tokenize(event.payload)))


def text_events(n, seed=0):
    msgs = generate_message_corpus(n, seed=seed)
    return [Event(i, m, truth=keyword_judge(Event(i, m))) for i, m in enumerate(msgs)]


def text_engine(events, m=300, alpha=0.1, seed=0, judge=keyword_judge, chunk=512):
    vocab = build_vocabulary(generate_message_corpus(2000, seed=99), size=200)
    pool = sample_projection_experts(m, vocab, seed=seed)
    return TextHalvingEngine(pool, VoteConfig(theta=0.5, alpha=alpha, seed=seed), judge=judge, chunk=chunk)


def busy_fintech(tx_count, seed=0):
    """Stream with boosted rule-pair frequency so auctions have action."""
    weights = {c: 0.6 / 16 for c in COUNTRIES}
    for c in ("LV", "DE", "BE", "IT"):
        weights[c] = 0.1
    pop = generate_population(2000, seed=seed, config=PopulationConfig(country_weights=weights))
    return generate_stream(tx_count, pop, DEFAULT_RULES, seed=seed)


class TestTextEngine:
    def test_alert_content_matches_pool_flags(self):
        events = text_events(40)
        engine = text_engine(events, m=20, alpha=1.0, chunk=1)
        alerts = engine.feed(events[:1]) + engine.flush()
        pool, vocab = engine.pool, engine.pool.vocab
        expected = tuple(j for j in range(20) if pool[j].flags(events[0].payload, vocab))
        if expected:
            assert alerts[0].flaggers == expected
        else:
            assert alerts == []

    def test_feed_granularity_is_irrelevant(self):
        events = text_events(1500)
        a = text_engine(events)
        b = text_engine(events)
        for e in events:
            a.feed([e])
        a.flush()
        b.feed(events)
        b.flush()
        assert a.to_state() == b.to_state()

    def test_counters_consistent(self):
        events = text_events(1200)
        engine = text_engine(events)
        alerts = engine.feed(events) + engine.flush()
        assert engine.position == 1200
        assert engine.alerts == len(alerts) == engine.inspections
        assert engine.active_size == engine.active.size
        assert engine.positives == sum(e.truth for e in events)
        judged_suspicious = sum(1 for a in alerts if a.judgement_suspicious)
        assert engine.confirmed == judged_suspicious

    def test_halving_exhausts_without_perfect_expert(self):
        # alpha=1 with random experts: every judgement halves until empty
        events = text_events(600)
        engine = text_engine(events, m=16, alpha=1.0)
        engine.feed(events)
        engine.flush()
        assert engine.active_size == 0
        assert engine.exhausted_at is not None
        assert engine.position == 600

    def test_pending_mode_and_submission(self):
        events = text_events(600)
        engine = text_engine(events, judge=None, chunk=1)
        alerts = engine.feed(events[:50])
        assert alerts and all(not a.judged for a in alerts)
        assert set(engine.pending) == {a.event_id for a in alerts}
        first = alerts[0]
        result = engine.submit_judgement(first.event_id, True, source="human")
        assert result.event_id == first.event_id
        assert first.event_id not in engine.pending
        with pytest.raises(KeyError):
            engine.submit_judgement(first.event_id, True)
        with pytest.raises(KeyError):
            engine.submit_judgement("nonsense", False)

    def test_late_judgement_after_evictions(self):
        events = text_events(400)
        engine = text_engine(events, judge=None, chunk=1)
        alerts = engine.feed(events[:80])
        assert len(alerts) >= 2
        # judge everything except the first alert, then come back to it
        for alert in alerts[1:]:
            engine.submit_judgement(alert.event_id, False)
        result = engine.submit_judgement(alerts[0].event_id, False)
        assert set(result.evicted) <= set(alerts[0].flaggers)

    def test_snapshot_requires_empty_buffer(self):
        events = text_events(40)
        engine = text_engine(events, chunk=512)
        engine.feed(events)  # 40 < 512: still buffered
        with pytest.raises(RuntimeError, match="buffer"):
            engine.to_state()
        engine.flush()
        engine.to_state()

    def test_snapshot_restore_is_bit_identical(self):
        events = text_events(2048, seed=3)
        uninterrupted = text_engine(events, alpha=0.05, seed=3)
        uninterrupted.feed(events)
        uninterrupted.flush()

        first = text_engine(events, alpha=0.05, seed=3)
        first.feed(events[:1024])
        doc = json.loads(json.dumps(first.to_state()))
        resumed = engine_from_state(doc, judge=keyword_judge)
        assert resumed.position == 1024
        resumed.feed(events[1024:])
        resumed.flush()
        assert resumed.to_state() == uninterrupted.to_state()

    def test_mode_names(self):
        events = text_events(10)
        assert text_engine(events, alpha=1.0).mode == "halving"
        assert text_engine(events, alpha=0.2).mode == "agnostic"


class TestAuctionEngine:
    def test_feed_granularity_is_irrelevant(self):
        batch = busy_fintech(9000)
        a = AuctionEngine(sample_tree_experts(100, DEFAULT_RULES, seed=1))
        b = AuctionEngine(sample_tree_experts(100, DEFAULT_RULES, seed=1))
        a.feed(batch)
        a.flush()
        for start in range(0, 9000, 700):
            b.feed(batch.slice(start, min(start + 700, 9000)))
        b.flush()
        assert a.to_state() == b.to_state()

    def test_chunk_size_is_irrelevant(self):
        # bids are exact table lookups, so chunking cannot shift outcomes
        batch = busy_fintech(5000)
        outcomes = []
        for chunk in (1, 64, 4096):
            eng = AuctionEngine(sample_tree_experts(80, DEFAULT_RULES, seed=2), chunk=chunk)
            eng.feed(batch)
            eng.flush()
            state = eng.to_state()
            state.pop("chunk")
            outcomes.append(state)
        assert outcomes[0] == outcomes[1] == outcomes[2]

    def test_lowest_id_wins_ties(self):
        # both planted rules bid on their own pairs; no random experts
        batch = busy_fintech(3000)
        eng = AuctionEngine(sample_tree_experts(2, DEFAULT_RULES, seed=0))
        alerts = eng.feed(batch) + eng.flush()
        assert alerts
        s = batch.column("sender.country")
        lv = COUNTRIES.index("LV")
        for alert in alerts:
            row = int(np.flatnonzero(batch.ids == alert.event_id)[0])
            assert alert.winner == (0 if s[row] == lv else 1)

    def test_inspection_only_for_positive_bids(self):
        batch = busy_fintech(2000)
        eng = AuctionEngine(sample_tree_experts(2, DEFAULT_RULES, seed=0))
        alerts = eng.feed(batch) + eng.flush()
        s, r = batch.column("sender.country"), batch.column("receiver.country")
        lv, de = COUNTRIES.index("LV"), COUNTRIES.index("DE")
        be, it = COUNTRIES.index("BE"), COUNTRIES.index("IT")
        match_rows = ((s == lv) & (r == de)) | ((s == be) & (r == it))
        # every alert sits on a rule pair; misses only come from evictions
        assert alerts and len(alerts) == eng.inspections <= int(match_rows.sum())
        for alert in alerts:
            row = int(np.flatnonzero(batch.ids == alert.event_id)[0])
            assert match_rows[row]
            assert alert.winning_bid > 0.0

    def test_insolvent_winner_evicted_and_bids_stop(self):
        # one expert bids 0.1 on everything with zero fraud: dies after
        # ceil((0.2*sqrt(log2(m)) / 0.1)^2) = 40 wins at m=1000
        pool = sample_tree_experts(1000, [], seed=3, leaf_weights={0.1: 1.0})
        pop = generate_population(100, seed=0)
        batch = generate_stream(60_000, pop, [], seed=0)
        eng = AuctionEngine(pool)
        eng.feed(batch)
        eng.flush()
        assert eng.active_size == 0
        assert eng.exhausted_at is not None
        assert np.all(eng.ledger.wins[eng.ledger.wins > 0] == 40)
        assert eng.position == 60_000

    def test_truth_accounting(self):
        batch = busy_fintech(9000)
        eng = AuctionEngine(sample_tree_experts(50, DEFAULT_RULES, seed=1))
        alerts = eng.feed(batch) + eng.flush()
        assert eng.positives == int(batch.fraud.sum())
        confirmed = sum(1 for a in alerts if a.judgement_suspicious)
        assert eng.confirmed == confirmed == eng.true_positives

    def test_pending_mode(self):
        batch = busy_fintech(400)
        eng = AuctionEngine(sample_tree_experts(20, DEFAULT_RULES, seed=0), use_truth=False, chunk=1)
        alerts = eng.feed(batch) + eng.flush()
        assert alerts and all(not a.judged for a in alerts)
        assert alerts[0].payload["sender"]["country"] in COUNTRIES
        res = eng.submit_judgement(alerts[0].event_id, True)
        assert res.suspicious and eng.ledger.profit[alerts[0].winner] == 1
        with pytest.raises(KeyError):
            eng.submit_judgement(alerts[0].event_id, True)

    def test_snapshot_restore_is_bit_identical(self):
        batch = busy_fintech(12288, seed=5)
        uninterrupted = AuctionEngine(sample_tree_experts(100, DEFAULT_RULES, seed=5))
        uninterrupted.feed(batch)
        uninterrupted.flush()

        first = AuctionEngine(sample_tree_experts(100, DEFAULT_RULES, seed=5))
        first.feed(batch.slice(0, 8192))
        doc = json.loads(json.dumps(first.to_state()))
        resumed = engine_from_state(doc)
        resumed.feed(batch.slice(8192, 12288))
        resumed.flush()
        assert resumed.to_state() == uninterrupted.to_state()


def test_engine_from_state_rejects_unknown_kind():
    with pytest.raises(ValueError, match="unknown engine kind"):
        engine_from_state({"kind": "bogus"})

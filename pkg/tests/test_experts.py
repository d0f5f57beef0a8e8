"""Vocabulary, projection experts, word detectors, and tree risk factors."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halfado.datagen import (
    DEFAULT_RULES,
    RULE_BE_IT,
    RULE_LV_DE,
    TransactionBatch,
    generate_population,
    generate_stream,
)
from halfado.experts import (
    LEAF_RISK_VALUES,
    AttributePredicate,
    ProjectionPool,
    TreeExpert,
    TreePool,
    Vocabulary,
    WordDetector,
    bow,
    bow_matrix,
    build_vocabulary,
    default_leaf_weights,
    rule_expert,
    sample_projection_experts,
    sample_tree_experts,
    tokenize,
)


def tx_record(tx_id=0, amount=100.0, fraud=False, **attrs):
    base = {"country": "FR", "pep": False, "legal": True, "age_group": "26-35", "children": False, "employed": True}
    sender = {**base, **{k[len("sender_"):]: v for k, v in attrs.items() if k.startswith("sender_")}}
    receiver = {**base, **{k[len("receiver_"):]: v for k, v in attrs.items() if k.startswith("receiver_")}}
    return {"id": tx_id, "amount": amount, "fraud": fraud, "sender": sender, "receiver": receiver}


class TestTokenize:
    def test_lowercase_and_split(self):
        assert tokenize("I hate Mondays!") == ["i", "hate", "mondays"]
        assert tokenize("a-b_c 7x") == ["a", "b", "c", "7x"]
        assert tokenize("") == []

    def test_killer_is_not_kill(self):
        assert "kill" not in tokenize("KILLER deal")


class TestVocabulary:
    def test_frequency_order(self):
        vocab = build_vocabulary(["a a b", "a a a b b c"], size=2)
        assert vocab.tokens == ("a", "b")

    def test_ties_broken_lexically(self):
        vocab = build_vocabulary(["zz aa zz aa", "mm"], size=3)
        assert vocab.tokens == ("aa", "zz", "mm")

    def test_too_few_tokens(self):
        with pytest.raises(ValueError, match="distinct"):
            build_vocabulary(["a b"], size=3)
        with pytest.raises(ValueError, match="empty"):
            build_vocabulary([], size=1)

    def test_duplicate_tokens_rejected(self):
        with pytest.raises(ValueError):
            Vocabulary(["a", "a"])


class TestBow:
    def test_counts(self):
        vocab = Vocabulary(["hate", "you", "day"])
        assert bow("hate hate you", vocab).tolist() == [2, 1, 0]

    def test_empty_and_oov(self):
        vocab = Vocabulary(["hate", "you"])
        assert bow("", vocab).tolist() == [0, 0]
        assert bow("lovely weather", vocab).tolist() == [0, 0]

    def test_matrix_matches_rows(self):
        vocab = Vocabulary(["a", "b", "c"])
        msgs = ["a b", "c c c", ""]
        mat = bow_matrix(msgs, vocab)
        for i, m in enumerate(msgs):
            assert np.array_equal(mat[i], bow(m, vocab).astype(float))


class TestProjectionExperts:
    def test_flag_is_sign_of_projection(self):
        vocab = Vocabulary(["hate", "you"])
        pool = ProjectionPool(vocab, np.array([[1.0, -1.0]]), np.array([-0.5]))
        assert pool[0].flags("hate hate you", vocab)  # 2 - 1 - 0.5 > 0
        assert not pool[0].flags("you you", vocab)

    def test_reproducible_per_seed(self):
        vocab = Vocabulary([f"w{i}" for i in range(20)])
        a = sample_projection_experts(50, vocab, seed=7)
        b = sample_projection_experts(50, vocab, seed=7)
        assert np.array_equal(a.weights, b.weights) and np.array_equal(a.bias, b.bias)
        c = sample_projection_experts(50, vocab, seed=8)
        assert not np.array_equal(a.weights, c.weights)

    def test_single_expert(self):
        vocab = Vocabulary(["x"])
        pool = sample_projection_experts(1, vocab, seed=0)
        assert len(pool) == 1 and pool[0].id == 0

    def test_count_validated(self):
        with pytest.raises(ValueError):
            sample_projection_experts(0, Vocabulary(["x"]), seed=0)

    def test_flags_matrix_matches_scalar_path(self):
        vocab = Vocabulary([f"w{i}" for i in range(10)])
        pool = sample_projection_experts(30, vocab, seed=1)
        msgs = ["w1 w2 w3", "w9 w9", "w0", ""]
        mat = pool.flags_matrix(bow_matrix(msgs, vocab), np.arange(30))
        for i, msg in enumerate(msgs):
            for j in range(30):
                assert mat[i, j] == pool[j].flags(msg, vocab)

    def test_recipe_doc_round_trip(self):
        vocab = Vocabulary([f"w{i}" for i in range(8)])
        pool = sample_projection_experts(12, vocab, seed=3)
        doc = pool.to_doc()
        assert doc["recipe"]["seed"] == 3 and "weights" not in doc
        clone = ProjectionPool.from_doc(doc)
        assert np.array_equal(clone.weights, pool.weights)

    def test_embedded_doc_round_trip(self):
        vocab = Vocabulary(["a", "b"])
        pool = ProjectionPool(vocab, np.array([[0.25, -2.0]]), np.array([0.75]))
        clone = ProjectionPool.from_doc(pool.to_doc(embed_weights=True))
        assert np.array_equal(clone.weights, pool.weights)
        assert np.array_equal(clone.bias, pool.bias)


class TestWordDetector:
    def test_token_presence(self):
        det = WordDetector("kill")
        assert det.flags("they will KILL it")
        assert not det.flags("KILLER deal")
        assert not det.flags("")


class TestPredicates:
    def test_categorical_and_amount(self):
        batch = TransactionBatch.from_records(
            [tx_record(amount=50, sender_country="DZ"), tx_record(amount=500)]
        )
        assert AttributePredicate("sender.country", "DZ").holds(batch).tolist() == [True, False]
        assert AttributePredicate("amount", 100.0).holds(batch).tolist() == [False, True]
        assert AttributePredicate("sender.employed", True).holds(batch).tolist() == [True, True]

    def test_validation(self):
        with pytest.raises(ValueError):
            AttributePredicate("sender.country", "XX")
        with pytest.raises(ValueError):
            AttributePredicate("amount", -5)
        with pytest.raises(ValueError):
            AttributePredicate("colour", "red")


class TestTreeExperts:
    def make_example_tree(self):
        # root: sender from DZ? no -> unemployed at 1%; yes -> non-legal at 3%
        return TreeExpert(
            id=0,
            root=AttributePredicate("sender.country", "DZ"),
            left=AttributePredicate("sender.employed", False),
            right=AttributePredicate("sender.legal", False),
            leaf_risk=(0.0, 0.01, 0.0, 0.03),
        )

    def test_routing_all_four_leaves(self):
        tree = self.make_example_tree()
        batch = TransactionBatch.from_records(
            [
                tx_record(sender_country="FR", sender_employed=True),
                tx_record(sender_country="FR", sender_employed=False),
                tx_record(sender_country="DZ", sender_legal=True),
                tx_record(sender_country="DZ", sender_legal=False),
            ]
        )
        assert tree.bid(batch).tolist() == [0.0, 0.01, 0.0, 0.03]

    def test_leaf_risk_validated(self):
        with pytest.raises(ValueError):
            TreeExpert(
                id=0,
                root=AttributePredicate("sender.pep", True),
                left=AttributePredicate("sender.pep", True),
                right=AttributePredicate("sender.pep", True),
                leaf_risk=(0.0, 0.5, 1.5, 0.0),
            )

    def test_rule_expert_bids_rate_on_match_only(self):
        expert = rule_expert(0, RULE_LV_DE)
        batch = TransactionBatch.from_records(
            [
                tx_record(sender_country="LV", receiver_country="DE"),
                tx_record(sender_country="LV", receiver_country="FR"),
                tx_record(sender_country="BE", receiver_country="DE"),
                tx_record(sender_country="DE", receiver_country="LV"),
            ]
        )
        assert expert.bid(batch).tolist() == [0.10, 0.0, 0.0, 0.0]

    def test_describe_mentions_rule(self):
        pool = TreePool([rule_expert(0, RULE_LV_DE)])
        assert "sender.country=LV" in pool.describe(0)


class TestTreeSampling:
    def test_planted_first_then_fill(self):
        pool = sample_tree_experts(1000, DEFAULT_RULES, seed=0)
        assert len(pool) == 1000
        batch = TransactionBatch.from_records(
            [tx_record(sender_country="LV", receiver_country="DE"),
             tx_record(sender_country="BE", receiver_country="IT")]
        )
        assert pool[0].bid(batch).tolist() == [0.10, 0.0]
        assert pool[1].bid(batch).tolist() == [0.0, 0.05]

    def test_exact_fit(self):
        pool = sample_tree_experts(2, DEFAULT_RULES, seed=0)
        assert len(pool) == 2

    def test_overfull_planted_rejected(self):
        with pytest.raises(ValueError):
            sample_tree_experts(1, DEFAULT_RULES, seed=0)

    def test_deterministic(self):
        a = sample_tree_experts(50, DEFAULT_RULES, seed=3)
        b = sample_tree_experts(50, DEFAULT_RULES, seed=3)
        assert all(x.to_doc() == y.to_doc() for x, y in zip(a, b))

    def test_random_leaf_risks_from_value_set(self):
        pool = sample_tree_experts(200, [], seed=1)
        risks = {r for e in pool for r in e.leaf_risk}
        assert risks <= set(LEAF_RISK_VALUES)

    def test_default_weights_favor_zero(self):
        weights = default_leaf_weights()
        assert weights[0.0] == 0.5
        pool = sample_tree_experts(500, [], seed=2)
        zero_share = np.mean([r == 0.0 for e in pool for r in e.leaf_risk])
        assert 0.42 <= zero_share <= 0.58

    def test_custom_weights(self):
        pool = sample_tree_experts(300, [], seed=2, leaf_weights={0.1: 1.0})
        assert all(r == 0.1 for e in pool for r in e.leaf_risk)
        with pytest.raises(ValueError):
            sample_tree_experts(10, [], seed=0, leaf_weights={0.7: 1.0})

    def test_bid_matrix_matches_scalar_path(self):
        pop = generate_population(200, seed=0)
        batch = generate_stream(100, pop, DEFAULT_RULES, seed=0)
        pool = sample_tree_experts(40, DEFAULT_RULES, seed=5)
        ids = np.arange(40)
        mat = pool.bid_matrix(batch, ids)
        for j in range(40):
            assert np.array_equal(mat[:, j], pool[j].bid(batch)), j

    def test_doc_round_trip(self):
        pool = sample_tree_experts(30, DEFAULT_RULES, seed=4)
        clone = TreePool.from_doc(pool.to_doc())
        pop = generate_population(100, seed=0)
        batch = generate_stream(50, pop, DEFAULT_RULES, seed=1)
        assert np.array_equal(clone.bid_matrix(batch, np.arange(30)), pool.bid_matrix(batch, np.arange(30)))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), m=st.integers(1, 60))
def test_tree_bids_always_probabilities(seed, m):
    pool = sample_tree_experts(m, [], seed=seed)
    pop = generate_population(50, seed=0)
    batch = generate_stream(40, pop, [], seed=seed)
    mat = pool.bid_matrix(batch, np.arange(m))
    assert ((mat >= 0.0) & (mat <= 1.0)).all()

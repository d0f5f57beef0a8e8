"""Expert constructions: random-projection text experts over a bag-of-words
vocabulary, single-word detectors, and random depth-2 decision-tree risk
factors over transaction attributes."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from halfado.datagen import (
    CATEGORICAL_DOMAINS,
    TRANSACTION_ATTRIBUTES,
    PlantedRule,
    TransactionBatch,
)

_TOKEN_RE = re.compile(r"[a-z0-9]+")

POOL_SCHEMA_VERSION = 1


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumeric runs."""
    return _TOKEN_RE.findall(text.lower())


class Vocabulary:
    """Fixed ordered token list with an index for counting."""

    def __init__(self, tokens: Sequence[str]) -> None:
        if len(set(tokens)) != len(tokens):
            raise ValueError("vocabulary tokens must be distinct")
        self.tokens = tuple(tokens)
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.tokens == other.tokens


def build_vocabulary(corpus_sample: Sequence[str], size: int = 500, seed: int = 0) -> Vocabulary:
    """The ``size`` most frequent tokens, frequency ties broken lexically.

    Ranking is fully deterministic; ``seed`` is accepted for interface
    stability but never consulted.
    """
    if not corpus_sample:
        raise ValueError("corpus sample is empty")
    counts: Counter[str] = Counter()
    for message in corpus_sample:
        counts.update(tokenize(message))
    if len(counts) < size:
        raise ValueError(f"corpus has {len(counts)} distinct tokens, need {size}")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary([t for t, _ in ranked[:size]])


def bow(message: str, vocab: Vocabulary) -> np.ndarray:
    """Token count vector over the vocabulary; out-of-vocabulary tokens ignored."""
    vec = np.zeros(len(vocab), dtype=np.int64)
    for token in tokenize(message):
        idx = vocab.index.get(token)
        if idx is not None:
            vec[idx] += 1
    return vec


def bow_matrix(messages: Sequence[str], vocab: Vocabulary) -> np.ndarray:
    """Stacked count vectors as float64, for batched projections."""
    mat = np.zeros((len(messages), len(vocab)), dtype=np.float64)
    index = vocab.index
    for row, message in enumerate(messages):
        for token in _TOKEN_RE.findall(message.lower()):
            idx = index.get(token)
            if idx is not None:
                mat[row, idx] += 1.0
    return mat


@dataclass(frozen=True)
class ProjectionExpert:
    """Flags a message iff its projected bag-of-words score is positive."""

    id: int
    weights: np.ndarray
    bias: float

    def flags(self, message: str, vocab: Vocabulary) -> bool:
        return bool(self.weights @ bow(message, vocab) + self.bias > 0.0)


class ProjectionPool(Sequence[ProjectionExpert]):
    """m random projections over a shared vocabulary, stored as matrices."""

    kind = "projection"

    def __init__(self, vocab: Vocabulary, weights: np.ndarray, bias: np.ndarray, seed: int | None = None) -> None:
        if weights.shape != (len(bias), len(vocab)):
            raise ValueError("weights must be (m, |vocab|) with one bias per expert")
        self.vocab = vocab
        self.weights = weights
        self.bias = bias
        self.seed = seed

    def __len__(self) -> int:
        return len(self.bias)

    def __getitem__(self, i: int) -> ProjectionExpert:
        if not 0 <= i < len(self):
            raise IndexError(i)
        return ProjectionExpert(i, self.weights[i], float(self.bias[i]))

    def flags_matrix(self, bows: np.ndarray, ids: np.ndarray) -> np.ndarray:
        """(events x experts) boolean flags for the given expert ids."""
        return bows @ self.weights[ids].T + self.bias[ids] > 0.0

    def describe(self, i: int) -> str:
        top = np.argsort(self.weights[i])[-3:][::-1]
        return f"projection#{i}(+{','.join(self.vocab.tokens[j] for j in top)})"

    def to_doc(self, embed_weights: bool = False) -> dict:
        """Versioned JSON form. Pools sampled from a seed serialize as their
        generation recipe by default; ``embed_weights`` stores coefficients
        explicitly (large for big pools)."""
        doc = {
            "schema_version": POOL_SCHEMA_VERSION,
            "kind": self.kind,
            "m": len(self),
            "vocabulary": list(self.vocab.tokens),
        }
        if not embed_weights and self.seed is not None:
            doc["recipe"] = {"distribution": "standard_normal", "seed": self.seed}
        else:
            doc["weights"] = self.weights.tolist()
            doc["bias"] = self.bias.tolist()
        return doc

    @classmethod
    def from_doc(cls, doc: Mapping) -> "ProjectionPool":
        if doc.get("schema_version") != POOL_SCHEMA_VERSION or doc.get("kind") != cls.kind:
            raise ValueError("not a projection pool document")
        vocab = Vocabulary(doc["vocabulary"])
        if "recipe" in doc:
            return sample_projection_experts(doc["m"], vocab, doc["recipe"]["seed"])
        return cls(vocab, np.asarray(doc["weights"], dtype=float), np.asarray(doc["bias"], dtype=float))


def sample_projection_experts(count: int, vocab: Vocabulary, seed: int) -> ProjectionPool:
    """i.i.d. standard normal weights and bias, reproducible per seed."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    weights = rng.standard_normal((count, len(vocab)))
    bias = rng.standard_normal(count)
    return ProjectionPool(vocab, weights, bias, seed=seed)


@dataclass(frozen=True)
class WordDetector:
    """Baseline: flag any message containing one fixed token."""

    word: str

    def flags(self, message: str) -> bool:
        return self.word in tokenize(message)


# -- decision-tree risk factors -------------------------------------------

_ATTR_CODES = {name: i for i, name in enumerate(TRANSACTION_ATTRIBUTES)}
_OP_EQ, _OP_GE = 0, 1


@dataclass(frozen=True)
class AttributePredicate:
    """Total test over one transaction attribute: categorical equality or an
    amount threshold."""

    attribute: str
    value: object

    def __post_init__(self) -> None:
        if self.attribute in CATEGORICAL_DOMAINS:
            if self.value not in CATEGORICAL_DOMAINS[self.attribute]:
                raise ValueError(f"{self.value!r} not in domain of {self.attribute}")
        elif self.attribute == "amount":
            if not isinstance(self.value, (int, float)) or self.value <= 0:
                raise ValueError("amount threshold must be positive")
        else:
            raise ValueError(f"unknown attribute {self.attribute!r}")

    @property
    def op(self) -> int:
        return _OP_GE if self.attribute == "amount" else _OP_EQ

    def encoded_value(self) -> float:
        if self.attribute == "amount":
            return float(self.value)
        return float(CATEGORICAL_DOMAINS[self.attribute].index(self.value))

    def holds(self, batch: TransactionBatch) -> np.ndarray:
        col = batch.column(self.attribute)
        if self.attribute == "amount":
            return col >= self.value
        return col == CATEGORICAL_DOMAINS[self.attribute].index(self.value)

    def describe(self) -> str:
        if self.attribute == "amount":
            return f"amount>={self.value:g}"
        return f"{self.attribute}={self.value}"

    def to_doc(self) -> dict:
        return {"attribute": self.attribute, "value": self.value}

    @classmethod
    def from_doc(cls, doc: Mapping) -> "AttributePredicate":
        return cls(doc["attribute"], doc["value"])


@dataclass(frozen=True)
class TreeExpert:
    """Depth-2 risk factor: root predicate, one child predicate per branch,
    and a fraud-probability bid per leaf.

    Leaf index is 2*root_outcome + child_outcome, outcomes as 0/1.
    """

    id: int
    root: AttributePredicate
    left: AttributePredicate
    right: AttributePredicate
    leaf_risk: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if len(self.leaf_risk) != 4 or not all(0.0 <= r <= 1.0 for r in self.leaf_risk):
            raise ValueError("leaf_risk must be 4 probabilities in [0, 1]")

    def bid(self, batch: TransactionBatch) -> np.ndarray:
        root = self.root.holds(batch)
        child = np.where(root, self.right.holds(batch), self.left.holds(batch))
        return np.asarray(self.leaf_risk, dtype=float)[2 * root.astype(np.int8) + child]

    def describe(self) -> str:
        parts = [f"{self.root.describe()}?"]
        for branch, pred, base in (("n", self.left, 0), ("y", self.right, 2)):
            risks = f"{self.leaf_risk[base]:g}/{self.leaf_risk[base + 1]:g}"
            parts.append(f"{branch}:{pred.describe()}->{risks}")
        return f"tree#{self.id}({' '.join(parts)})"

    def to_doc(self) -> dict:
        return {
            "root": self.root.to_doc(),
            "left": self.left.to_doc(),
            "right": self.right.to_doc(),
            "leaf_risk": list(self.leaf_risk),
        }


class TreePool(Sequence[TreeExpert]):
    """m tree experts with batched bid evaluation."""

    kind = "tree"

    def __init__(self, experts: Sequence[TreeExpert]) -> None:
        if [e.id for e in experts] != list(range(len(experts))):
            raise ValueError("expert ids must be 0..m-1 in order")
        self.experts = tuple(experts)
        self._leaf_risk = np.array([e.leaf_risk for e in experts], dtype=float)
        self._attrs = np.empty((len(experts), 3), dtype=np.int8)
        self._values = np.empty((len(experts), 3), dtype=float)
        for i, e in enumerate(experts):
            for j, pred in enumerate((e.root, e.left, e.right)):
                self._attrs[i, j] = _ATTR_CODES[pred.attribute]
                self._values[i, j] = pred.encoded_value()

    def __len__(self) -> int:
        return len(self.experts)

    def __getitem__(self, i: int) -> TreeExpert:
        return self.experts[i]

    def describe(self, i: int) -> str:
        return self.experts[i].describe()

    def bid_matrix(self, batch: TransactionBatch, ids: np.ndarray) -> np.ndarray:
        """(transactions x experts) bids for the given expert ids."""
        n = len(batch)
        cols = {name: batch.column(name) for name in TRANSACTION_ATTRIBUTES}
        out = np.empty((n, len(ids)), dtype=float)
        for j, expert_id in enumerate(ids):
            attrs = self._attrs[expert_id]
            values = self._values[expert_id]
            tests = []
            for k in range(3):
                col = cols[TRANSACTION_ATTRIBUTES[attrs[k]]]
                if TRANSACTION_ATTRIBUTES[attrs[k]] == "amount":
                    tests.append(col >= values[k])
                else:
                    tests.append(col == values[k])
            root, left, right = tests
            leaf = 2 * root.astype(np.int8) + np.where(root, right, left)
            out[:, j] = self._leaf_risk[expert_id][leaf]
        return out

    def to_doc(self, embed_weights: bool = True) -> dict:
        return {
            "schema_version": POOL_SCHEMA_VERSION,
            "kind": self.kind,
            "m": len(self),
            "experts": [e.to_doc() for e in self.experts],
        }

    @classmethod
    def from_doc(cls, doc: Mapping) -> "TreePool":
        if doc.get("schema_version") != POOL_SCHEMA_VERSION or doc.get("kind") != cls.kind:
            raise ValueError("not a tree pool document")
        experts = [
            TreeExpert(
                id=i,
                root=AttributePredicate.from_doc(e["root"]),
                left=AttributePredicate.from_doc(e["left"]),
                right=AttributePredicate.from_doc(e["right"]),
                leaf_risk=tuple(e["leaf_risk"]),
            )
            for i, e in enumerate(doc["experts"])
        ]
        return cls(experts)


LEAF_RISK_VALUES = (0.0, 0.01, 0.02, 0.03, 0.05, 0.1)

def default_leaf_weights() -> dict[float, float]:
    """Zero weighted heavily, the rest sharing the remainder evenly."""
    rest = 0.5 / (len(LEAF_RISK_VALUES) - 1)
    weights = {v: rest for v in LEAF_RISK_VALUES}
    weights[0.0] = 0.5
    return weights


def rule_expert(expert_id: int, rule: PlantedRule) -> TreeExpert:
    """Encode a planted fraud rule: bid the rule's rate on matching country
    pairs, zero elsewhere."""
    receiver = AttributePredicate("receiver.country", rule.receiver_country)
    return TreeExpert(
        id=expert_id,
        root=AttributePredicate("sender.country", rule.sender_country),
        left=receiver,
        right=receiver,
        leaf_risk=(0.0, 0.0, 0.0, rule.fraud_rate),
    )


def _random_predicate(rng: np.random.Generator) -> AttributePredicate:
    attribute = TRANSACTION_ATTRIBUTES[rng.integers(len(TRANSACTION_ATTRIBUTES))]
    if attribute == "amount":
        # log-uniform over the bulk of the amount distribution
        return AttributePredicate("amount", float(np.round(10 ** rng.uniform(1.0, 3.0), 2)))
    domain = CATEGORICAL_DOMAINS[attribute]
    return AttributePredicate(attribute, domain[rng.integers(len(domain))])


def sample_tree_experts(
    count: int,
    planted: Sequence[PlantedRule],
    seed: int,
    leaf_weights: Mapping[float, float] | None = None,
) -> TreePool:
    """Planted rules first (ids 0..), then random trees: predicates uniform
    over attributes and values, leaf risks drawn from ``LEAF_RISK_VALUES``
    with the given weights."""
    if len(planted) > count:
        raise ValueError(f"{len(planted)} planted rules exceed pool size {count}")
    weights = dict(leaf_weights) if leaf_weights is not None else default_leaf_weights()
    if set(weights) - set(LEAF_RISK_VALUES):
        raise ValueError("leaf weights must be over LEAF_RISK_VALUES")
    values = np.array(sorted(weights), dtype=float)
    probs = np.array([weights[v] for v in sorted(weights)], dtype=float)
    probs = probs / probs.sum()

    rng = np.random.default_rng(seed)
    experts = [rule_expert(i, rule) for i, rule in enumerate(planted)]
    for i in range(len(planted), count):
        root, left, right = (_random_predicate(rng) for _ in range(3))
        risks = tuple(float(v) for v in rng.choice(values, size=4, p=probs))
        experts.append(TreeExpert(id=i, root=root, left=left, right=right, leaf_risk=risks))
    return TreePool(experts)

"""Synthetic data: a seeded customer population and transaction stream with
planted fraud rules, a text-stream replay reader, and a synthetic short-message
corpus for the text case study."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

COUNTRIES = (
    "DE", "GB", "FR", "IT", "ES", "NL", "BE", "SE", "PL", "AT",
    "DK", "NO", "FI", "PT", "GR", "IE", "LV", "EE", "LT", "DZ",
)
AGE_GROUPS = ("18-25", "26-35", "36-50", "51-65", "65+")

# pinned marginals for the four rule countries; the LV*DE and BE*IT products
# set the expected rule-match counts (~52 and ~480 per 10^6 transactions)
_PINNED_COUNTRY_WEIGHTS = {"LV": 0.005, "DE": 0.0104, "BE": 0.02, "IT": 0.024}

# categorical attribute domains, shared with the decision-tree experts
CATEGORICAL_DOMAINS: dict[str, tuple] = {}
for _side in ("sender", "receiver"):
    CATEGORICAL_DOMAINS[f"{_side}.country"] = COUNTRIES
    CATEGORICAL_DOMAINS[f"{_side}.pep"] = (False, True)
    CATEGORICAL_DOMAINS[f"{_side}.legal"] = (False, True)
    CATEGORICAL_DOMAINS[f"{_side}.age_group"] = AGE_GROUPS
    CATEGORICAL_DOMAINS[f"{_side}.children"] = (False, True)
    CATEGORICAL_DOMAINS[f"{_side}.employed"] = (False, True)
NUMERIC_ATTRIBUTES = ("amount",)
TRANSACTION_ATTRIBUTES = tuple(CATEGORICAL_DOMAINS) + NUMERIC_ATTRIBUTES

AMOUNT_MEDIAN = 100.0
AMOUNT_SIGMA = 0.6

_CUSTOMER_FIELDS = ("country", "pep", "legal", "age_group", "children", "employed")


def default_country_weights() -> dict[str, float]:
    """Pinned weights for the rule countries, the rest uniform."""
    rest = 1.0 - sum(_PINNED_COUNTRY_WEIGHTS.values())
    others = [c for c in COUNTRIES if c not in _PINNED_COUNTRY_WEIGHTS]
    weights = {c: rest / len(others) for c in others}
    weights.update(_PINNED_COUNTRY_WEIGHTS)
    return {c: weights[c] for c in COUNTRIES}


@dataclass(frozen=True)
class PopulationConfig:
    """Marginal distributions for customer attributes; recorded in manifests."""

    country_weights: Mapping[str, float] = field(default_factory=default_country_weights)
    pep_rate: float = 0.02
    legal_rate: float = 0.95
    age_weights: tuple[float, ...] = (0.2, 0.2, 0.2, 0.2, 0.2)
    children_rate: float = 0.4
    employed_rate: float = 0.7

    def __post_init__(self) -> None:
        if set(self.country_weights) != set(COUNTRIES):
            raise ValueError("country_weights must cover exactly the 20 country codes")
        if not math.isclose(sum(self.country_weights.values()), 1.0, rel_tol=1e-9):
            raise ValueError("country weights must sum to 1")
        if len(self.age_weights) != len(AGE_GROUPS):
            raise ValueError(f"need {len(AGE_GROUPS)} age weights")

    def to_doc(self) -> dict:
        return {
            "country_weights": dict(self.country_weights),
            "pep_rate": self.pep_rate,
            "legal_rate": self.legal_rate,
            "age_weights": list(self.age_weights),
            "children_rate": self.children_rate,
            "employed_rate": self.employed_rate,
        }


@dataclass(frozen=True)
class Population:
    """Customers as parallel columns; categorical fields are code indices."""

    country: np.ndarray
    pep: np.ndarray
    legal: np.ndarray
    age_group: np.ndarray
    children: np.ndarray
    employed: np.ndarray
    config: PopulationConfig

    def __len__(self) -> int:
        return len(self.country)

    def customer(self, i: int) -> dict:
        return {
            "country": COUNTRIES[self.country[i]],
            "pep": bool(self.pep[i]),
            "legal": bool(self.legal[i]),
            "age_group": AGE_GROUPS[self.age_group[i]],
            "children": bool(self.children[i]),
            "employed": bool(self.employed[i]),
        }


def _quota_counts(weights: Sequence[float], total: int) -> np.ndarray:
    """Largest-remainder apportionment: exact proportions up to rounding."""
    raw = np.asarray(weights, dtype=float) * total
    counts = np.floor(raw).astype(int)
    remainder = total - counts.sum()
    if remainder:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:remainder]] += 1
    return counts


def generate_population(count: int, seed: int, config: PopulationConfig | None = None) -> Population:
    """Draw ``count`` customers. Country counts are quota-assigned so pair
    frequencies match the configured weights exactly; other attributes are
    independent draws."""
    if count < 2:
        raise ValueError(f"population needs at least 2 customers, got {count}")
    config = config or PopulationConfig()
    rng = np.random.default_rng(seed)
    counts = _quota_counts([config.country_weights[c] for c in COUNTRIES], count)
    country = rng.permutation(np.repeat(np.arange(len(COUNTRIES), dtype=np.int8), counts))
    return Population(
        country=country,
        pep=rng.random(count) < config.pep_rate,
        legal=rng.random(count) < config.legal_rate,
        age_group=rng.choice(len(AGE_GROUPS), size=count, p=np.asarray(config.age_weights)).astype(np.int8),
        children=rng.random(count) < config.children_rate,
        employed=rng.random(count) < config.employed_rate,
        config=config,
    )


@dataclass(frozen=True)
class PlantedRule:
    """Fraud source: transactions on one country pair are fraudulent at a rate."""

    sender_country: str
    receiver_country: str
    fraud_rate: float

    def __post_init__(self) -> None:
        for code in (self.sender_country, self.receiver_country):
            if code not in COUNTRIES:
                raise ValueError(f"unknown country code {code!r}")
        if not (0.0 < self.fraud_rate <= 1.0):
            raise ValueError(f"fraud_rate must be in (0, 1], got {self.fraud_rate}")

    def to_doc(self) -> dict:
        return {
            "sender_country": self.sender_country,
            "receiver_country": self.receiver_country,
            "fraud_rate": self.fraud_rate,
        }


RULE_LV_DE = PlantedRule("LV", "DE", 0.10)
RULE_BE_IT = PlantedRule("BE", "IT", 0.05)
DEFAULT_RULES = (RULE_LV_DE, RULE_BE_IT)


class TransactionBatch:
    """A stream slice as parallel columns keyed by attribute path."""

    def __init__(self, ids: np.ndarray, columns: dict[str, np.ndarray], fraud: np.ndarray) -> None:
        self.ids = ids
        self.columns = columns
        self.fraud = fraud

    def __len__(self) -> int:
        return len(self.ids)

    def column(self, attribute: str) -> np.ndarray:
        return self.columns[attribute]

    def slice(self, start: int, stop: int) -> "TransactionBatch":
        return TransactionBatch(
            self.ids[start:stop],
            {k: v[start:stop] for k, v in self.columns.items()},
            self.fraud[start:stop],
        )

    def record(self, i: int) -> dict:
        """One transaction as a nested dict (NDJSON row shape)."""
        rec: dict = {"id": int(self.ids[i]), "amount": float(self.columns["amount"][i]), "fraud": bool(self.fraud[i])}
        for side in ("sender", "receiver"):
            rec[side] = {
                "country": COUNTRIES[self.columns[f"{side}.country"][i]],
                "pep": bool(self.columns[f"{side}.pep"][i]),
                "legal": bool(self.columns[f"{side}.legal"][i]),
                "age_group": AGE_GROUPS[self.columns[f"{side}.age_group"][i]],
                "children": bool(self.columns[f"{side}.children"][i]),
                "employed": bool(self.columns[f"{side}.employed"][i]),
            }
        return rec

    def records(self) -> Iterator[dict]:
        return (self.record(i) for i in range(len(self)))

    @classmethod
    def from_records(cls, records: Iterable[Mapping]) -> "TransactionBatch":
        rows = list(records)
        ids = np.array([r["id"] for r in rows], dtype=np.int64)
        fraud = np.array([bool(r.get("fraud", False)) for r in rows], dtype=bool)
        columns: dict[str, np.ndarray] = {"amount": np.array([r["amount"] for r in rows], dtype=float)}
        country_idx = {c: i for i, c in enumerate(COUNTRIES)}
        age_idx = {a: i for i, a in enumerate(AGE_GROUPS)}
        for side in ("sender", "receiver"):
            columns[f"{side}.country"] = np.array([country_idx[r[side]["country"]] for r in rows], dtype=np.int8)
            columns[f"{side}.age_group"] = np.array([age_idx[r[side]["age_group"]] for r in rows], dtype=np.int8)
            for attr in ("pep", "legal", "children", "employed"):
                columns[f"{side}.{attr}"] = np.array([bool(r[side][attr]) for r in rows], dtype=bool)
        return cls(ids, columns, fraud)


def generate_stream(
    tx_count: int,
    population: Population,
    rules: Sequence[PlantedRule],
    seed: int,
    id_offset: int = 0,
) -> TransactionBatch:
    """Sample a transaction stream from the population.

    Sender and receiver are independent uniform customer draws; amounts are
    log-normal with median ``AMOUNT_MEDIAN``. Fraud is assigned only on
    rule-matching country pairs, each rule from its own child RNG stream so
    that dropping a rule leaves everything else bit-identical.
    """
    streams = np.random.SeedSequence(seed).spawn(1 + len(rules))
    rng = np.random.default_rng(streams[0])
    sender = rng.integers(0, len(population), size=tx_count)
    receiver = rng.integers(0, len(population), size=tx_count)
    amount = rng.lognormal(mean=math.log(AMOUNT_MEDIAN), sigma=AMOUNT_SIGMA, size=tx_count)

    columns: dict[str, np.ndarray] = {"amount": amount}
    for side, idx in (("sender", sender), ("receiver", receiver)):
        for attr in _CUSTOMER_FIELDS:
            columns[f"{side}.{attr}"] = getattr(population, attr)[idx]

    fraud = np.zeros(tx_count, dtype=bool)
    country_idx = {c: i for i, c in enumerate(COUNTRIES)}
    for rule, stream in zip(rules, streams[1:]):
        match = (columns["sender.country"] == country_idx[rule.sender_country]) & (
            columns["receiver.country"] == country_idx[rule.receiver_country]
        )
        n = int(match.sum())
        if n:
            fraud[match] = np.random.default_rng(stream).random(n) < rule.fraud_rate

    ids = np.arange(id_offset, id_offset + tx_count, dtype=np.int64)
    return TransactionBatch(ids, columns, fraud)


def stream_manifest(tx_count: int, population: Population, rules: Sequence[PlantedRule], seed: int) -> dict:
    return {
        "kind": "fintech-stream",
        "version": 1,
        "seed": seed,
        "tx_count": tx_count,
        "population_size": len(population),
        "population": population.config.to_doc(),
        "amount": {"law": "lognormal", "median": AMOUNT_MEDIAN, "sigma": AMOUNT_SIGMA},
        "rules": [r.to_doc() for r in rules],
    }


def write_transactions(path: str | Path, batch: TransactionBatch, manifest: dict | None = None) -> None:
    """NDJSON stream file, with the run manifest alongside as ``<path>.manifest.json``."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in batch.records():
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
    if manifest is not None:
        path.with_name(path.name + ".manifest.json").write_text(
            json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
        )


def read_transactions(path: str | Path, limit: int | None = None) -> TransactionBatch:
    rows = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if limit is not None and len(rows) >= limit:
                break
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return TransactionBatch.from_records(rows)


MESSAGE_MAX_CHARS = 140


class TextReplay:
    """Replay a one-message-per-line UTF-8 file in order.

    Payloads are truncated to ``MESSAGE_MAX_CHARS``; undecodable lines are
    skipped and counted in ``skipped``.
    """

    def __init__(self, path: str | Path, limit: int | None = None) -> None:
        self.path = Path(path)
        if not self.path.exists():
            raise FileNotFoundError(self.path)
        self.limit = limit
        self.skipped = 0

    def __iter__(self) -> Iterator:
        from halfado.core import Event

        emitted = 0
        with self.path.open("rb") as fh:
            for lineno, raw in enumerate(fh):
                if self.limit is not None and emitted >= self.limit:
                    break
                try:
                    text = raw.decode("utf-8").rstrip("\n").rstrip("\r")
                except UnicodeDecodeError:
                    self.skipped += 1
                    continue
                yield Event(id=lineno, payload=text[:MESSAGE_MAX_CHARS])
                emitted += 1


def replay_text_stream(path: str | Path, limit: int | None = None) -> TextReplay:
    return TextReplay(path, limit)


# -- synthetic short-message corpus ---------------------------------------
#
# Messages are drawn from topic word pools. One hostile topic carries the
# {hate, kill} keywords (upweighted) plus correlated vocabulary; the other
# topics are benign. Shared function words appear everywhere, so single-word
# baselines on them have near-base-rate precision.

_FUNCTION_WORDS = (
    "i you we they he she it the a an my your our their this that these those "
    "is are was were be been am do does did will would can could should must "
    "and or but not no yes so very really just too also still again never always "
    "now today tomorrow tonight yesterday here there when where what who how why "
    "all some any more most much many few both each every other same new old "
    "good bad big small long short high low first last next then than about "
    "for with from into over under after before between out up down off on in "
    "at by to of as if because while though get got make made go went come came "
    "see saw look feel felt think thought know knew want need like time day week "
    "month year hour minute people friend family home house thing way life world"
).split()

_TOPIC_WORDS = {
    "hostile": (
        "hate hate hate kill kill kill die war fight stupid ugly idiot destroy rage angry furious "
        "scum trash liar enemy attack burn revenge threat ruin curse violent cruel brutal vicious "
        "despise loathe smash wreck hostile bitter toxic vile rotten savage"
    ).split(),
    "weather": (
        "rain sun cloud storm wind snow cold warm forecast umbrella sky temperature sunny freezing "
        "heat fog thunder drizzle season climate chilly breeze frost hail humid mild damp icy "
        "overcast sunshine shower downpour degrees melting puddle sleet"
    ).split(),
    "food": (
        "pizza coffee lunch dinner breakfast hungry recipe delicious restaurant cook taste kitchen "
        "bread cheese salad soup dessert snack juice pasta chocolate burger sauce grill bake oven "
        "spicy sweet salty fresh menu chef waiter plate fork knife spoon"
    ).split(),
    "work": (
        "meeting deadline boss office project email report schedule salary colleague promotion "
        "workload client invoice shift overtime manager task budget hire contract presentation "
        "agenda printer desk commute payroll briefing quarterly review intern resign training "
        "spreadsheet conference workshop memo stapler"
    ).split(),
    "sports": (
        "game team score win lose match player coach league goal race stadium champion referee "
        "tournament defense record fans penalty halftime striker keeper captain transfer derby "
        "kickoff trophy medal sprint marathon relay gym workout jersey whistle offside"
    ).split(),
    "romance": (
        "love heart miss beautiful smile date kiss sweet darling forever together wedding romance "
        "flowers valentine crush hug promise soulmate adore gorgeous honey dear cuddle charming "
        "lovely butterflies anniversary engaged proposal candle dinner-date serenade devotion"
    ).split(),
    "travel": (
        "trip flight hotel beach vacation passport luggage airport ticket tour island mountain "
        "journey explore destination booking train museum souvenir adventure cruise hostel visa "
        "backpack itinerary landmark ferry harbor customs layover resort sightseeing postcard "
        "currency roadtrip"
    ).split(),
    "tech": (
        "phone laptop update app battery screen internet wifi password download software camera "
        "keyboard charger website upload server glitch device stream browser router cable pixel "
        "bluetooth headset firmware reboot backup cloud antivirus malware login logout notification "
        "touchscreen processor"
    ).split(),
}

_CHATTER_WORDS = (
    "music song movie book story photo picture party weekend morning evening afternoon "
    "street city town village road bridge river lake forest garden park shop market money "
    "price ticket-line queue bus car bike walk run sleep dream wake shower clothes shoes "
    "jacket hat bag keys wallet glasses watch chair table window door wall floor roof "
    "light lamp candlelight mirror clock phone-case letter card gift box paper pen pencil "
    "school teacher student lesson exam homework class library doctor nurse hospital "
    "medicine dentist haircut barber laundry dishes vacuum broom neighbor landlord rent "
    "bill receipt bank queue-ticket noise silence laugh cry shout whisper dance sing draw "
    "paint build fix clean wash drive ride jump swim climb read write listen speak wait "
    "hurry relax rest visit invite meet call text answer ask reply joke secret surprise plan"
).split()

KEYWORD_TOPIC = "hostile"
DEFAULT_KEYWORDS = frozenset({"hate", "kill"})


@dataclass(frozen=True)
class CorpusConfig:
    """Mixture knobs for the synthetic message corpus."""

    hostile_share: float = 0.10
    topic_token_rate: float = 0.55
    filler_token_rate: float = 0.10
    min_tokens: int = 6
    max_tokens: int = 14

    def to_doc(self) -> dict:
        return {
            "hostile_share": self.hostile_share,
            "topic_token_rate": self.topic_token_rate,
            "filler_token_rate": self.filler_token_rate,
            "min_tokens": self.min_tokens,
            "max_tokens": self.max_tokens,
        }


def _filler_pool() -> list[str]:
    pool = list(_CHATTER_WORDS)
    for topic, words in _TOPIC_WORDS.items():
        if topic != KEYWORD_TOPIC:
            pool.extend(dict.fromkeys(words))
    return pool


def generate_message_corpus(count: int, seed: int, config: CorpusConfig | None = None) -> list[str]:
    """Generate ``count`` short messages from the topic mixture."""
    config = config or CorpusConfig()
    rng = np.random.default_rng(seed)
    topics = list(_TOPIC_WORDS)
    benign = [t for t in topics if t != KEYWORD_TOPIC]
    topic_share = np.full(len(topics), (1.0 - config.hostile_share) / len(benign))
    topic_share[topics.index(KEYWORD_TOPIC)] = config.hostile_share

    filler = _filler_pool()
    lengths = rng.integers(config.min_tokens, config.max_tokens + 1, size=count)
    topic_draws = rng.choice(len(topics), size=count, p=topic_share)
    messages = []
    for n, t in zip(lengths, topic_draws):
        words = _TOPIC_WORDS[topics[t]]
        kinds = rng.random(n)
        tokens = []
        for k in kinds:
            if k < config.topic_token_rate:
                tokens.append(words[rng.integers(len(words))])
            elif k < config.topic_token_rate + config.filler_token_rate:
                tokens.append(filler[rng.integers(len(filler))])
            else:
                tokens.append(_FUNCTION_WORDS[rng.integers(len(_FUNCTION_WORDS))])
        messages.append(" ".join(tokens))
    return messages


def write_messages(path: str | Path, messages: Sequence[str], manifest: dict | None = None) -> None:
    path = Path(path)
    path.write_text("\n".join(messages) + "\n", encoding="utf-8")
    if manifest is not None:
        path.with_name(path.name + ".manifest.json").write_text(
            json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
        )


def corpus_manifest(count: int, seed: int, config: CorpusConfig | None = None) -> dict:
    return {
        "kind": "message-corpus",
        "version": 1,
        "seed": seed,
        "count": count,
        "config": (config or CorpusConfig()).to_doc(),
    }

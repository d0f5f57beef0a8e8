"""Active-set state machine: any-flagger alerts, fractional voting, and
judgement-driven eviction (deterministic or probabilistic)."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Literal, Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)

# Expert identifiers are plain integers in [0, m).
ExpertId = int

STATE_SCHEMA_VERSION = 1


class PoolExhaustedError(RuntimeError):
    """Raised when an operation needs a non-empty active set and none remains."""


@dataclass(frozen=True)
class Event:
    """One stream item. ``truth`` is only present in oracle/replay mode."""

    id: Any
    payload: Any
    truth: bool | None = None


@dataclass(frozen=True)
class VoteConfig:
    """Vote fraction, per-implication eviction probability, and RNG seed.

    ``alpha == 1`` is the deterministic regime: one implication evicts.
    """

    theta: float = 0.5
    alpha: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.theta <= 0.5):
            raise ValueError(f"theta must be in (0, 0.5], got {self.theta}")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")


@dataclass(frozen=True)
class Verdict:
    """Outcome of evaluating one event against the membership at that time."""

    alert: bool
    vote_suspicious: bool
    flaggers: tuple[ExpertId, ...]

    def __post_init__(self) -> None:
        if self.alert != bool(self.flaggers):
            raise ValueError("alert must hold exactly when at least one expert flags")
        if self.vote_suspicious and not self.alert:
            raise ValueError("a suspicious vote requires at least one flagger")


@dataclass(frozen=True)
class Judgement:
    """Human or oracle verdict on an alerted event; the only label signal."""

    event_id: Any
    suspicious: bool
    source: Literal["human", "oracle"] = "oracle"


@dataclass(frozen=True)
class EvictionReport:
    evicted: tuple[ExpertId, ...]
    mistake: bool
    mistakes_total: int
    pool_exhausted: bool = False
    noop: bool = False


class ActiveSet:
    """Surviving experts plus mistake bookkeeping.

    Membership only shrinks. All mutation goes through ``apply_judgement``;
    ``evaluate`` is pure. A single seeded generator drives eviction draws so
    runs replay bit-exactly.
    """

    def __init__(self, expert_count: int, config: VoteConfig) -> None:
        if expert_count < 1:
            raise ValueError(f"expert_count must be >= 1, got {expert_count}")
        self.initial_size = expert_count
        self.config = config
        self.alive = np.ones(expert_count, dtype=bool)
        self.mistakes = 0
        self.rng = np.random.default_rng(config.seed)

    @property
    def size(self) -> int:
        return int(self.alive.sum())

    def member_ids(self) -> np.ndarray:
        """Sorted ids of the currently active experts."""
        return np.flatnonzero(self.alive)

    def members(self) -> frozenset[ExpertId]:
        return frozenset(int(i) for i in self.member_ids())

    def require_members(self) -> None:
        if not self.alive.any():
            raise PoolExhaustedError("active set is empty")

    # -- serialization ----------------------------------------------------

    def to_state(self) -> dict:
        return {
            "schema_version": STATE_SCHEMA_VERSION,
            "config": {
                "theta": self.config.theta,
                "alpha": self.config.alpha,
                "seed": self.config.seed,
            },
            "initial_size": self.initial_size,
            "members": [int(i) for i in self.member_ids()],
            "mistakes": self.mistakes,
            "rng_state": self.rng.bit_generator.state,
        }

    @classmethod
    def from_state(cls, state: Mapping) -> "ActiveSet":
        if state.get("schema_version") != STATE_SCHEMA_VERSION:
            raise ValueError(f"unsupported state schema: {state.get('schema_version')!r}")
        cfg = VoteConfig(**state["config"])
        obj = cls(state["initial_size"], cfg)
        obj.alive[:] = False
        if state["members"]:
            obj.alive[np.asarray(state["members"], dtype=int)] = True
        obj.mistakes = int(state["mistakes"])
        obj.rng.bit_generator.state = state["rng_state"]
        return obj


def init(expert_count: int, config: VoteConfig) -> ActiveSet:
    """Start a run with all ``expert_count`` experts active."""
    return ActiveSet(expert_count, config)


def evaluate(active_set: ActiveSet, flags: Mapping[ExpertId, bool] | Sequence[bool] | np.ndarray) -> Verdict:
    """Evaluate one event: alert if any active expert flags, vote at theta.

    ``flags`` covers exactly the current members, either as a mapping keyed
    by expert id or as booleans aligned with ``member_ids()`` order. The
    vote threshold is inclusive: count >= theta * |members| is suspicious.
    """
    active_set.require_members()
    member_ids = active_set.member_ids()
    if isinstance(flags, Mapping):
        if set(flags.keys()) != set(int(i) for i in member_ids):
            raise ValueError("flags must cover exactly the active members")
        flag_vec = np.fromiter((flags[int(i)] for i in member_ids), dtype=bool, count=len(member_ids))
    else:
        flag_vec = np.asarray(flags, dtype=bool)
        if flag_vec.shape != member_ids.shape:
            raise ValueError(
                f"expected {len(member_ids)} flags for the active members, got {flag_vec.shape}"
            )
    count = int(flag_vec.sum())
    return Verdict(
        alert=count > 0,
        vote_suspicious=count >= active_set.config.theta * len(member_ids),
        flaggers=tuple(int(i) for i in member_ids[flag_vec]),
    )


def apply_judgement(active_set: ActiveSet, verdict: Verdict, judgement: Judgement) -> EvictionReport:
    """Consume a judgement: evict implicated experts, count vote mistakes.

    An expert is implicated when its individual flag disagrees with the
    judgement: the flaggers when the event is judged normal, everyone else
    when it is judged suspicious. Each implicated expert is evicted
    independently with probability alpha. Judgements may arrive after later
    events already shrank the membership; experts evicted in the meantime
    simply drop out of the implicated set.
    """
    if not verdict.alert and not judgement.suspicious:
        log.warning("judgement on non-alerted event %r carries no information", judgement.event_id)
        return EvictionReport((), mistake=False, mistakes_total=active_set.mistakes, noop=True)

    flag_mask = np.zeros(active_set.initial_size, dtype=bool)
    if verdict.flaggers:
        flag_mask[np.asarray(verdict.flaggers, dtype=int)] = True
    if judgement.suspicious:
        implicated = np.flatnonzero(active_set.alive & ~flag_mask)
    else:
        implicated = np.flatnonzero(active_set.alive & flag_mask)

    alpha = active_set.config.alpha
    if alpha >= 1.0:
        evicted = implicated
    else:
        # one draw per implicated expert, in ascending id order, so that
        # sequential and batched processing consume the stream identically
        draws = active_set.rng.random(len(implicated))
        evicted = implicated[draws < alpha]

    if len(evicted):
        active_set.alive[evicted] = False
    mistake = verdict.vote_suspicious != judgement.suspicious
    if mistake:
        active_set.mistakes += 1
    return EvictionReport(
        evicted=tuple(int(i) for i in evicted),
        mistake=mistake,
        mistakes_total=active_set.mistakes,
        pool_exhausted=not active_set.alive.any(),
    )


def mistake_bound(m: int, theta: float) -> int:
    """Worst-case vote mistakes when a perfect expert exists and alpha=1:
    floor(log(m) / log(1/(1-theta)))."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not (0.0 < theta <= 0.5):
        raise ValueError(f"theta must be in (0, 0.5], got {theta}")
    ratio = math.log(m) / math.log(1.0 / (1.0 - theta))
    # snap values that are integral up to float error (e.g. m a power of two
    # at theta=0.5) before flooring
    nearest = round(ratio)
    if abs(ratio - nearest) < 1e-9:
        return int(nearest)
    return int(math.floor(ratio))


def expected_tolerated_mistakes(alpha: float) -> float:
    """Mean implications an expert survives before eviction: 1/alpha."""
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    return 1.0 / alpha

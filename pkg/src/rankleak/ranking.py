"""Ranking functions, tie policies and the axiom certification harness.

Attacks never see scores; they consume ranked answers only. Any callable
object with a ``score_one(values, predicates)`` method can be plugged into
the engine and certified against the monotonicity/additivity axioms here.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .model import INSERTED, Query, Schema


class TiePolicy(enum.Enum):
    BY_ID = "by_id"
    INSERTED_FIRST = "inserted_first"
    INSERTED_LAST = "inserted_last"

    def key(self, provenance: str) -> int:
        if self is TiePolicy.BY_ID:
            return 0
        if self is TiePolicy.INSERTED_FIRST:
            return 0 if provenance == INSERTED else 1
        return 1 if provenance == INSERTED else 0


@dataclass(frozen=True)
class RankingWeights:
    """Strictly positive per-attribute weights, publics then privates."""

    public_weights: tuple
    private_weights: tuple

    def __post_init__(self):
        if not all(w > 0 for w in self.public_weights + self.private_weights):
            raise ValueError("ranking weights must be strictly positive")

    @property
    def by_index(self) -> tuple:
        return self.public_weights + self.private_weights

    @classmethod
    def unit(cls, schema: Schema) -> "RankingWeights":
        return cls((1.0,) * schema.m, (1.0,) * schema.mprime)

    @classmethod
    def random(cls, schema: Schema, rng: random.Random,
               low: float = 0.1, high: float = 1.0) -> "RankingWeights":
        draw = lambda n: tuple(rng.uniform(low, high) for _ in range(n))
        return cls(draw(schema.m), draw(schema.mprime))


def discrete_distance(predicate, value) -> int:
    """0 iff the value is in the predicate set; Null matches nothing."""
    if value is None:
        return 1
    return 0 if value in predicate else 1


class LinearRanking:
    """Weighted sum of per-attribute discrete distances.

    Terms are accumulated in ascending attribute order so that equal sums are
    bitwise identical; tie detection depends on this.
    """

    def __init__(self, schema: Schema, weights: Optional[RankingWeights] = None):
        self.schema = schema
        self.weights = weights or RankingWeights.unit(schema)
        self.weight_vector = tuple(float(w) for w in self.weights.by_index)

    def score_one(self, values: Sequence, predicates: Sequence) -> float:
        s = 0.0
        for w, v, p in zip(self.weight_vector, values, predicates):
            if v is None or v not in p:
                s += w
        return s


def linear_score(values: Sequence, query: Query, ranking: LinearRanking) -> float:
    return ranking.score_one(values, query.predicates)


def total_order(db, query: Query, ranking, tie_policy: TiePolicy = TiePolicy.BY_ID):
    """All tuple ids sorted by (score asc, tie policy, id asc)."""
    keyed = [
        (ranking.score_one(row.values, query.predicates),
         tie_policy.key(row.provenance), row.id)
        for row in db
    ]
    keyed.sort()
    return [rid for _, _, rid in keyed]


@dataclass
class CertReport:
    trials: int
    tested: int
    violations: list = field(default_factory=list)
    note: str = ""

    @property
    def ok(self) -> bool:
        return not self.violations


def _random_predicates(schema: Schema, rng: random.Random):
    preds = []
    for a in schema.attributes:
        size = rng.randint(1, a.size)
        preds.append(frozenset(rng.sample(range(a.size), size)))
    return tuple(preds)


def _random_values(schema: Schema, rng: random.Random):
    return tuple(rng.randrange(a.size) for a in schema.attributes)


def certify_monotonicity(ranking, schema: Schema, trials: int,
                         seed: int) -> CertReport:
    """Sample (q, t, t') differing on one attribute, t matching q there.

    Any sample where the matching tuple does not score strictly lower is a
    violation and is reported with its witness.
    """
    if schema.arity < 2:
        return CertReport(trials, 0, note="no testable triple")
    rng = random.Random(seed)
    report = CertReport(trials, 0)
    for _ in range(trials):
        preds = list(_random_predicates(schema, rng))
        i = rng.randrange(schema.arity)
        size = schema.attributes[i].size
        in_size = rng.randint(1, size - 1)
        inside = frozenset(rng.sample(range(size), in_size))
        preds[i] = inside
        t = list(_random_values(schema, rng))
        t[i] = rng.choice(sorted(inside))
        t2 = list(t)
        t2[i] = rng.choice(sorted(set(range(size)) - inside))
        s_in = ranking.score_one(tuple(t), tuple(preds))
        s_out = ranking.score_one(tuple(t2), tuple(preds))
        report.tested += 1
        if not s_in < s_out:
            report.violations.append({
                "attribute": i,
                "predicates": [sorted(p) for p in preds],
                "t": tuple(t), "t_prime": tuple(t2),
                "score_t": s_in, "score_t_prime": s_out,
            })
    return report


def certify_additivity(ranking, schema: Schema, trials: int,
                       seed: int) -> CertReport:
    """Check that pinning one attribute of q to the better tuple's value
    preserves the strict order of a sampled pair."""
    if schema.arity < 2:
        return CertReport(trials, 0, note="no testable triple")
    rng = random.Random(seed)
    report = CertReport(trials, 0)
    for _ in range(trials):
        preds = _random_predicates(schema, rng)
        t = _random_values(schema, rng)
        t2 = _random_values(schema, rng)
        if t == t2:
            continue
        s1, s2 = ranking.score_one(t, preds), ranking.score_one(t2, preds)
        if s1 == s2:
            continue
        if s1 > s2:
            t, t2, s1, s2 = t2, t, s2, s1
        i = rng.randrange(schema.arity)
        pinned = list(preds)
        pinned[i] = frozenset((t[i],))
        report.tested += 1
        s1p = ranking.score_one(t, tuple(pinned))
        s2p = ranking.score_one(t2, tuple(pinned))
        if not s1p < s2p:
            report.violations.append({
                "attribute": i,
                "predicates": [sorted(p) for p in preds],
                "t": t, "t_prime": t2,
                "before": (s1, s2), "after": (s1p, s2p),
            })
    return report


class RandomScoreRanking:
    """Deterministic pseudo-random score; the canonical axiom violator."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def score_one(self, values, predicates) -> float:
        key = f"{self.seed}|{tuple(values)}|{tuple(sorted(map(sorted, predicates)))}"
        return random.Random(key).random()


class InteractionRanking:
    """Linear score plus a pairwise product term on two attributes.

    Monotone for coupling >= 0, but the interaction breaks additivity.
    """

    def __init__(self, schema: Schema, weights: RankingWeights,
                 pair: tuple[int, int] = (0, 1), coupling: float = 0.5):
        self.linear = LinearRanking(schema, weights)
        self.pair = pair
        self.coupling = coupling

    def score_one(self, values, predicates) -> float:
        s = self.linear.score_one(values, predicates)
        i, j = self.pair
        di = discrete_distance(predicates[i], values[i])
        dj = discrete_distance(predicates[j], values[j])
        return s + self.coupling * di * dj

"""Closed-form query-cost estimators and hard-instance constructors.

The estimators evaluate the displayed formulas verbatim (they are normal
approximations; see the trend tests for where they are quantitatively
trustworthy). The error function is hand-rolled so the estimators stay
dependency-free.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .model import Database, Schema
from .ranking import RankingWeights

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


def erf(x: float) -> float:
    """Error function via its Maclaurin series, saturated for |x| >= 4.

    Absolute error is well under 1e-7 everywhere: the truncated series is
    good to ~1e-10 on |x| < 4 and |1 - erf(4)| ~ 1.5e-8.
    """
    ax = abs(x)
    if ax >= 4.0:
        return 1.0 if x > 0 else -1.0
    s = x
    t = x
    k = 0
    while True:
        k += 1
        t *= -(x * x) / k
        delta = t / (2 * k + 1)
        s += delta
        if abs(delta) <= 1e-17 * abs(s):
            break
    return _TWO_OVER_SQRT_PI * s


def _erf_limit(num: float, den: float) -> float:
    """erf(num/den) extended to den == 0 by sign limits."""
    if den == 0.0:
        return 1.0 if num > 0 else (-1.0 if num < 0 else 0.0)
    return erf(num / den)


@dataclass(frozen=True)
class InstanceStats:
    """Everything the estimators need about one (db, victim, weights) triple."""

    public_weights: tuple
    private_weights: tuple
    private_domain_sizes: tuple
    public_mismatches: tuple  # per tuple != victim: 0/1 mismatch per public attr

    @classmethod
    def from_db(cls, db: Database, victim_id: int,
                weights: Optional[RankingWeights] = None) -> "InstanceStats":
        schema = db.schema
        weights = weights or RankingWeights.unit(schema)
        victim = db.rows[victim_id]
        mismatches = []
        for row in db:
            if row.id == victim_id:
                continue
            mismatches.append(tuple(
                0 if (row.values[i] is not None and
                      row.values[i] == victim.values[i]) else 1
                for i in schema.public_indices))
        return cls(tuple(weights.public_weights),
                   tuple(weights.private_weights),
                   tuple(schema.attributes[j].size
                         for j in schema.private_indices),
                   tuple(mismatches))

    def public_distance(self, mismatch_row, subset=None) -> float:
        idx = range(len(self.public_weights)) if subset is None else subset
        d = 0.0
        for i in idx:
            d += self.public_weights[i] * mismatch_row[i]
        return d

    @property
    def public_distances(self) -> tuple:
        return tuple(self.public_distance(row) for row in self.public_mismatches)


def _private_variance(weights, sizes) -> float:
    return sum(2.0 * w * w * (s - 1) / (s * s) for w, s in zip(weights, sizes))


def findq_success_prob(stats: InstanceStats) -> float:
    """Probability that one random private-combination draw returns the
    victim (product of per-tuple erf terms)."""
    if not stats.private_weights:
        raise ValueError("need at least one private attribute")
    den = math.sqrt(_private_variance(stats.private_weights,
                                      stats.private_domain_sizes))
    p = 1.0
    for d in stats.public_distances:
        p *= 0.5 + 0.5 * _erf_limit(d, den)
    return p


def qi_point_expected_cost(stats: InstanceStats) -> float:
    """Upper bound on expected Q&I-Point queries: 1/p plus one exclusion
    round per non-victim domain value."""
    walk = sum(s - 1 for s in stats.private_domain_sizes)
    return 1.0 / findq_success_prob(stats) + walk


def q_point_quick_finish_prob(stats: InstanceStats) -> float:
    """Lower bound on the probability that Q-Point finishes right after the
    seed's sibling pass."""
    w1 = stats.private_weights[0]
    size1 = stats.private_domain_sizes[0]
    den = math.sqrt(2.0 * sum(
        w * w * (s - 1) / (s * s)
        for w, s in zip(stats.private_weights[1:],
                        stats.private_domain_sizes[1:])))
    prod = 1.0
    for d in stats.public_distances:
        prod *= (1.0 + _erf_limit(d - w1, den)) / (1.0 + _erf_limit(d, den))
    return (1.0 - prod) ** (size1 - 1)


def qi_in_expected_cost(stats: InstanceStats, literal_index: bool = False) -> float:
    """Expected FIND-Q cost over an IN interface.

    1 when the victim's public projection is unique; otherwise the staged
    point-fixing sum. ``literal_index`` switches the inner domain product to
    the (almost certainly mistyped) constant-factor reading for comparison.
    """
    dists = stats.public_distances
    if not dists or min(dists) > 0:
        return 1.0
    sizes = stats.private_domain_sizes
    mprime = len(sizes)

    def c(h: int) -> float:
        total = 0.0
        for i in range(1, h + 1):
            prod = 1.0
            for j in range(1, i + 1):
                prod *= sizes[i - 1] if literal_index else sizes[j - 1]
            total += prod
        return total

    def p(h: int) -> float:
        den = math.sqrt(2.0 * sum(
            w * w * (s - 1) / (s * s)
            for w, s in zip(stats.private_weights[:h], sizes[:h])))
        out = 1.0
        for d in dists:
            out *= 0.5 + 0.5 * _erf_limit(d, den)
        return out

    return sum(c(h + 1) * (1.0 - (1.0 - p(h)) ** c(h))
               for h in range(1, mprime))


def q_in_quick_finish_prob(stats: InstanceStats, public_subset: Sequence[int],
                           private_subset: Sequence[int]) -> float:
    """Corollary bound for Q-IN quick finishes, with the public distance
    restricted to ``public_subset`` and the noise to ``private_subset``
    (positions among the private attributes; must not contain 0)."""
    if 0 in private_subset:
        raise ValueError("the target attribute cannot be in the noise subset")
    w1 = stats.private_weights[0]
    size1 = stats.private_domain_sizes[0]
    den = math.sqrt(2.0 * sum(
        stats.private_weights[i] ** 2 *
        (stats.private_domain_sizes[i] - 1) / stats.private_domain_sizes[i] ** 2
        for i in private_subset))
    prod = 1.0
    for row in stats.public_mismatches:
        d = stats.public_distance(row, public_subset)
        prod *= (1.0 + _erf_limit(d - w1, den)) / (1.0 + _erf_limit(d, den))
    return (1.0 - prod) ** (size1 - 1)


def build_theorem1_db(schema: Schema, victim_values: Sequence[int]) -> Database:
    """Victim plus, per private attribute and per non-victim value, one
    decoy equal to the victim except there. Victim gets id 0; any query not
    matching the victim's private values exactly loses to a decoy."""
    db = Database(schema)
    db.insert(victim_values)
    for j in schema.private_indices:
        for x in range(schema.attributes[j].size):
            if x == victim_values[j]:
                continue
            decoy = list(victim_values)
            decoy[j] = x
            db.insert(decoy)
    return db


def build_theorem3_db(schema: Schema, n: int, seed: int = 0):
    """Database with pairwise-distinct public projections plus weights whose
    subset-sum gaps all exceed the target attribute's weight.

    Weights are scaled powers of three: any two distinct subsets of the
    non-target weights differ by at least 3x the target weight, so flipping
    the victim's target value can never reorder any pair of tuples.
    """
    capacity = 1
    for i in schema.public_indices:
        capacity *= schema.attributes[i].size
    if n > capacity:
        raise ValueError(f"need {n} distinct public projections, "
                         f"only {capacity} available")
    rest = schema.m + schema.mprime - 1
    scale = 3.0 ** -rest
    powers = [3.0 ** r * scale for r in range(rest, 0, -1)]
    public_w = tuple(powers[:schema.m])
    private_w = (scale,) + tuple(powers[schema.m:])
    weights = RankingWeights(public_w, private_w)

    rng = random.Random(seed)
    db = Database(schema)
    count = 0
    for combo in _lex_combos(schema):
        if count >= n:
            break
        values: list = [None] * schema.arity
        for pos, i in enumerate(schema.public_indices):
            values[i] = combo[pos]
        for j in schema.private_indices:
            values[j] = rng.randrange(schema.attributes[j].size)
        db.insert(values)
        count += 1
    return db, weights


def _lex_combos(schema: Schema):
    import itertools
    return itertools.product(*(range(schema.attributes[i].size)
                               for i in schema.public_indices))

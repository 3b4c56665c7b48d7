"""Exhaustive ground-truth comparators for small instances.

Everything here is pure Python and deliberately shares no code with the
query engine's scoring kernels, so it can serve as an independent oracle in
differential tests. Feasibility is decided with full knowledge of the
ranking function: a candidate private value survives iff substituting it
for the victim's value reproduces every expressible query's answer.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .model import Database, Query, RankedAnswer, RankleakError, Row, project_public
from .ranking import LinearRanking, TiePolicy


class SpaceTooLarge(RankleakError):
    pass


def _score(ranking, values, predicates) -> float:
    # Independent re-derivation for the linear case; custom rankings are
    # their own definition and are called directly.
    if isinstance(ranking, LinearRanking):
        s = 0.0
        for w, v, p in zip(ranking.weight_vector, values, predicates):
            if v is None:
                s += w
            elif v not in p:
                s += w
        return s
    return ranking.score_one(values, predicates)


def exhaustive_topk(db: Database, query: Query, ranking,
                    tie_policy: TiePolicy = TiePolicy.BY_ID,
                    k: int = 1) -> RankedAnswer:
    """Answer by full scoring and a plain sort; the engine comparator."""
    keyed = sorted(
        (_score(ranking, row.values, query.predicates),
         tie_policy.key(row.provenance), row.id)
        for row in db
    )
    entries = tuple(project_public(db.rows[rid], db.schema)
                    for _, _, rid in keyed[:k])
    return RankedAnswer(entries, k)


def query_space(schema, query_kind: str):
    """Per-attribute predicate choices for the given interface kind."""
    choices = []
    for attr in schema.attributes:
        if query_kind == "point_only":
            choices.append([frozenset((v,)) for v in range(attr.size)])
        else:
            subsets = []
            for r in range(1, attr.size + 1):
                subsets.extend(frozenset(c)
                               for c in itertools.combinations(range(attr.size), r))
            choices.append(subsets)
    return choices


def query_space_size(schema, query_kind: str) -> int:
    total = 1
    for attr in schema.attributes:
        total *= attr.size if query_kind == "point_only" else 2 ** attr.size - 1
    return total


@dataclass
class FeasibleSet:
    """Per private attribute, the values consistent with all query answers."""

    values: dict  # attribute index -> frozenset of value indices

    def is_singleton(self, attr: int) -> bool:
        return len(self.values[attr]) == 1

    def singleton(self, attr: int):
        (v,) = self.values[attr]
        return v

    def to_json(self, schema):
        return {
            schema.attributes[j].name: sorted(vals)
            for j, vals in self.values.items()
        }


def feasible_values(db: Database, victim_id: int, cfg, ranking=None,
                    tie_policy: TiePolicy = TiePolicy.BY_ID,
                    bound: int = 10 ** 6) -> FeasibleSet:
    """Which private values of the victim are indistinguishable through the
    interface (Q-only semantics, no insertions).

    For each candidate value of each private attribute, simulates the
    database with the victim's value replaced and keeps the candidate iff
    every expressible query answers identically to the true database. A
    candidate whose substitution would collide with an existing tuple is
    infeasible outright (no legal world realizes it).
    """
    schema = db.schema
    ranking = ranking or LinearRanking(schema)
    size = query_space_size(schema, cfg.query_kind)
    if size > bound:
        raise SpaceTooLarge(f"{size} expressible queries exceed bound {bound}")
    victim = db.rows[victim_id]
    queries = [Query(schema, preds)
               for preds in itertools.product(*query_space(schema, cfg.query_kind))]
    truth = [exhaustive_topk(db, q, ranking, tie_policy, cfg.k).ids
             for q in queries]

    combos = {row.values for row in db}
    feasible = {}
    for j in schema.private_indices:
        keep = set()
        for x in range(schema.attributes[j].size):
            if x == victim.values[j]:
                keep.add(x)
                continue
            alt_values = list(victim.values)
            alt_values[j] = x
            if tuple(alt_values) in combos:
                continue
            alt_db = db.copy()
            alt_db.rows[victim_id] = Row(victim_id, tuple(alt_values),
                                         victim.provenance)
            if all(exhaustive_topk(alt_db, q, ranking, tie_policy, cfg.k).ids == t
                   for q, t in zip(queries, truth)):
                keep.add(x)
        feasible[j] = frozenset(keep)
    return FeasibleSet(feasible)

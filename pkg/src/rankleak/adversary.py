"""The four rank-based inference attacks and their FIND-Q subroutine.

All attacks are black-box: they see ranked answers only, never scores, and
rely solely on the monotonicity/additivity axioms. Every claimed inference
is backed either by a complete set of differential-query exclusions or by
the probe-equals-victim identity proof, so attacks can fail but never lie.

For k > 1, "returns the victim" means the victim appears in the top-k, and
a differential pair requires the victim's rank to strictly worsen (absent
counts as rank infinity).
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Optional

from .engine import QueryEngine, RateLimitExceeded, returns_victim
from .model import DuplicateTuple, Query, Schema, star_predicate

INFERRED = "inferred"
INFERRED_ALL = "inferred_all"
UNDETERMINED = "undetermined"
BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class VictimKnowledge:
    """Adversary prior: the victim's id and all its public values."""

    victim_id: int
    public_values: tuple

    @classmethod
    def from_db(cls, db, victim_id: int) -> "VictimKnowledge":
        row = db.rows[victim_id]
        return cls(victim_id, tuple(row.values[i] for i in db.schema.public_indices))


class QueryHistory:
    """Private-value combinations already drawn by FIND-Q for one victim.

    Persists across FIND-Q invocations within one attack; a member is never
    re-issued (inserts only make answers worse for the victim, so a failed
    combination stays failed).
    """

    def __init__(self):
        self.combos: set[tuple] = set()

    def __contains__(self, combo):
        return combo in self.combos

    def add(self, combo):
        self.combos.add(combo)

    def __len__(self):
        return len(self.combos)


@dataclass(frozen=True)
class Witness:
    """A differential query pair proving one exclusion, replayable."""

    attribute: int
    excluded_value: int
    query_good: Query
    query_bad: Query
    rank_good: Optional[int]
    rank_bad: Optional[int]

    def to_json(self):
        return {
            "attribute": self.attribute,
            "excluded_value": self.excluded_value,
            "query_good": [sorted(p) for p in self.query_good.predicates],
            "query_bad": [sorted(p) for p in self.query_bad.predicates],
            "rank_good": self.rank_good,
            "rank_bad": self.rank_bad,
        }


class ExclusionLedger:
    """Per private attribute: values proven unequal to the victim's, with
    the witnessing differential pair for each."""

    def __init__(self, schema: Schema):
        self.schema = schema
        self.excluded: dict[int, dict[int, Witness]] = {
            j: {} for j in schema.private_indices
        }

    def record(self, witness: Witness):
        self.excluded[witness.attribute].setdefault(witness.excluded_value, witness)

    def excluded_values(self, attr: int) -> set:
        return set(self.excluded[attr])

    def remaining(self, attr: int) -> list:
        size = self.schema.attributes[attr].size
        return [x for x in range(size) if x not in self.excluded[attr]]

    def witnesses(self):
        for per_attr in self.excluded.values():
            yield from per_attr.values()

    def to_json(self):
        return {
            self.schema.attributes[j].name: {
                str(x): w.to_json() for x, w in per.items()
            }
            for j, per in self.excluded.items()
        }


@dataclass
class AttackOutcome:
    status: str
    target: int
    inferred: dict = field(default_factory=dict)  # attr index -> value
    ledger: Optional[ExclusionLedger] = None
    queries_used: int = 0
    inserts_used: int = 0
    trace: list = field(default_factory=list)
    reason: Optional[str] = None
    meta: dict = field(default_factory=dict)

    @property
    def inferred_value(self):
        return self.inferred.get(self.target)

    def to_json(self, schema: Schema):
        return {
            "status": self.status,
            "target": schema.attributes[self.target].name,
            "inferred": {schema.attributes[j].name: v
                         for j, v in self.inferred.items()},
            "ledger": self.ledger.to_json() if self.ledger else {},
            "queries_used": self.queries_used,
            "inserts_used": self.inserts_used,
            "reason": self.reason,
            "meta": self.meta,
            "trace": self.trace,
        }


class _Budget(Exception):
    pass


class _Session:
    """Adversary-side view of one engine actor: caching, trace, counters.

    Cached answers cost nothing (the engine is deterministic and only the
    adversary mutates the database); the cache epoch advances on every
    successful insert.
    """

    def __init__(self, engine: QueryEngine, victim_id: int, actor: str = "attacker"):
        self.engine = engine
        self.victim_id = victim_id
        self.actor = actor
        self.schema = engine.db.schema
        self.k = engine.cfg.k
        self.epoch = 0
        self.cache: dict = {}
        self.trace: list = []
        self.queries = 0
        self.inserts = 0

    def ask(self, query: Query) -> Optional[int]:
        key = (self.epoch, query.key)
        if key in self.cache:
            return self.cache[key]
        try:
            answer = self.engine.answer(query, actor=self.actor)
        except RateLimitExceeded:
            raise _Budget()
        self.queries += 1
        _, rank = returns_victim(answer, self.victim_id)
        self.cache[key] = rank
        self.trace.append({"op": "query",
                           "predicates": [sorted(p) for p in query.predicates],
                           "victim_rank": rank})
        return rank

    def insert(self, values) -> bool:
        try:
            self.engine.insert(values, actor=self.actor)
        except RateLimitExceeded:
            raise _Budget()
        except DuplicateTuple:
            self.inserts += 1
            self.trace.append({"op": "insert", "values": list(values),
                               "accepted": False})
            return False
        self.inserts += 1
        self.epoch += 1
        self.trace.append({"op": "insert", "values": list(values),
                           "accepted": True})
        return True


def _strictly_worse(base_rank: Optional[int], new_rank: Optional[int]) -> bool:
    if base_rank is None:
        return False
    return new_rank is None or new_rank > base_rank


def verify_differential_pair(engine: QueryEngine, q_good: Query, q_bad: Query,
                             victim_id: int, actor: str = "verifier") -> bool:
    """Replay a candidate differential pair; issues exactly two queries."""
    diffs = [i for i, (a, b) in enumerate(zip(q_good.predicates, q_bad.predicates))
             if a != b]
    priv = set(engine.db.schema.private_indices)
    if len(diffs) != 1 or diffs[0] not in priv:
        raise ValueError("queries must differ on exactly one private attribute")
    _, rank_good = returns_victim(engine.answer(q_good, actor=actor), victim_id)
    _, rank_bad = returns_victim(engine.answer(q_bad, actor=actor), victim_id)
    return _strictly_worse(rank_good, rank_bad)


def _point_query_for(schema: Schema, vk: VictimKnowledge, combo) -> Query:
    preds: list = [None] * schema.arity
    for pos, i in enumerate(schema.public_indices):
        preds[i] = (vk.public_values[pos],)
    for pos, j in enumerate(schema.private_indices):
        preds[j] = (combo[pos],)
    return Query(schema, preds)


def _draw_without_replacement(history: QueryHistory, sizes, rng: random.Random):
    total = math.prod(sizes)
    if len(history) >= total:
        return None
    if 2 * len(history) < total:
        while True:
            combo = tuple(rng.randrange(s) for s in sizes)
            if combo not in history:
                return combo
    remaining = [c for c in itertools.product(*(range(s) for s in sizes))
                 if c not in history]
    return remaining[rng.randrange(len(remaining))]


def find_q(session_or_engine, vk: VictimKnowledge, history: QueryHistory,
           rng: random.Random, actor: str = "attacker") -> Optional[Query]:
    """Draw point queries (publics pinned to the victim's) uniformly at
    random, without replacement and with memory, until one returns the
    victim in the top-k. None once the candidate space is exhausted."""
    session = (session_or_engine if isinstance(session_or_engine, _Session)
               else _Session(session_or_engine, vk.victim_id, actor))
    schema = session.schema
    sizes = [schema.attributes[j].size for j in schema.private_indices]
    while True:
        combo = _draw_without_replacement(history, sizes, rng)
        if combo is None:
            return None
        history.add(combo)
        q = _point_query_for(schema, vk, combo)
        if session.ask(q) is not None:
            return q


def _finish(session: _Session, outcome: AttackOutcome) -> AttackOutcome:
    outcome.queries_used = session.queries
    outcome.inserts_used = session.inserts
    outcome.trace = session.trace
    return outcome


# ---------------------------------------------------------------------------
# Q&I attacks: probe insertion + bridge walk
# ---------------------------------------------------------------------------

class _QIState:
    def __init__(self, session: _Session, vk: VictimKnowledge, target: int,
                 infer_all: bool):
        self.session = session
        self.vk = vk
        self.target = target
        self.infer_all = infer_all
        schema = session.schema
        self.schema = schema
        self.ledger = ExclusionLedger(schema)
        self.inferred: dict[int, int] = {}
        self.null_suspect: set[int] = set()
        # probe private values; domain values explored in ascending order
        self.t_priv = {j: 0 for j in schema.private_indices}
        self.explored = {j: {0} for j in schema.private_indices}

    def probe_values(self):
        values: list = [None] * self.schema.arity
        for pos, i in enumerate(self.schema.public_indices):
            values[i] = self.vk.public_values[pos]
        for j, v in self.t_priv.items():
            values[j] = v
        return values

    def attr_done(self, j: int) -> bool:
        return j in self.inferred or j in self.null_suspect

    def goal_reached(self) -> bool:
        if self.infer_all:
            return all(self.attr_done(j) for j in self.schema.private_indices)
        return self.attr_done(self.target)

    def note_exclusion(self, witness: Witness):
        self.ledger.record(witness)
        j = witness.attribute
        remaining = self.ledger.remaining(j)
        if len(remaining) == 1:
            self.inferred[j] = remaining[0]
            # pin the probe to the known value so later walks cannot drop here
            self.t_priv[j] = remaining[0]
            self.explored[j].add(remaining[0])
        elif not remaining:
            # every domain value excluded: victim holds Null there (or the
            # interface lied); mirror the NULL failure mode
            self.null_suspect.add(j)

    def advance(self, j: int) -> bool:
        """Move the probe's value on attribute j to the next unexplored,
        not-yet-excluded domain value (ascending)."""
        if j in self.inferred:
            return False
        banned = self.explored[j] | self.ledger.excluded_values(j)
        for x in range(self.schema.attributes[j].size):
            if x not in banned:
                self.t_priv[j] = x
                self.explored[j].add(x)
                return True
        return False

    def advance_any(self) -> bool:
        for j in self.schema.private_indices:
            if not self.attr_done(j) and self.advance(j):
                return True
        # fall back to attributes that are done but still have room; keeps
        # the probe moving so duplicate inserts cannot wedge the loop
        for j in self.schema.private_indices:
            if j not in self.inferred and self.advance(j):
                return True
        return False


def _qi_outcome(state: _QIState) -> AttackOutcome:
    session = state.session
    if state.infer_all:
        all_done = all(j in state.inferred for j in state.schema.private_indices)
        status = INFERRED_ALL if all_done else UNDETERMINED
    else:
        status = INFERRED if state.target in state.inferred else UNDETERMINED
    reason = None
    if status == UNDETERMINED:
        reason = ("possible-null" if state.target in state.null_suspect
                  else "exhausted")
    return _finish(session, AttackOutcome(
        status=status, target=state.target, inferred=dict(state.inferred),
        ledger=state.ledger, reason=reason))


def _qi_attack(engine: QueryEngine, vk: VictimKnowledge, target: int,
               rng: random.Random, find_fn, bprime_fn, infer_all: bool,
               actor: str, meta: dict) -> AttackOutcome:
    session = _Session(engine, vk.victim_id, actor)
    state = _QIState(session, vk, target, infer_all)
    schema = state.schema
    q: Optional[Query] = None
    try:
        while not state.goal_reached():
            if not session.insert(state.probe_values()):
                # a bona fide tuple (possibly the victim) sits exactly there
                if not state.advance_any():
                    break
                continue
            q_rank = session.ask(q) if q is not None else None
            if q_rank is None:
                q = find_fn(session)
                if q is None:
                    # no query returns the victim: only possible if the
                    # probe coincides with it
                    for j in schema.private_indices:
                        state.inferred[j] = state.t_priv[j]
                    break
                q_rank = session.ask(q)
            bprime = bprime_fn(q, state)
            if not bprime:
                if q_rank == 1:
                    # the probe's exact-match query ranks the victim first:
                    # impossible unless victim == probe
                    for j in schema.private_indices:
                        state.inferred[j] = state.t_priv[j]
                    break
                if not state.advance_any():
                    break
                continue
            # bridge walk: flip the differing attributes to the probe's
            # values one at a time, last differing attribute first
            h = len(bprime)
            cur, cur_rank = q, q_rank
            dropped = False
            for i in range(1, h + 1):
                attr = bprime[h - i]
                nxt = cur.replace(schema, attr, (state.t_priv[attr],))
                nxt_rank = session.ask(nxt)
                if _strictly_worse(cur_rank, nxt_rank):
                    witness = Witness(attr, state.t_priv[attr], cur, nxt,
                                      cur_rank, nxt_rank)
                    q = cur  # cur still returns the victim
                    state.note_exclusion(witness)
                    if attr not in state.inferred:
                        state.advance(attr)
                    dropped = True
                    break
                cur, cur_rank = nxt, nxt_rank
            if not dropped:
                if cur_rank == 1:
                    # walk ended at the probe's exact match with the victim
                    # on top: identity proof (see module docstring re: k>1)
                    for j in schema.private_indices:
                        state.inferred[j] = state.t_priv[j]
                    break
                if not state.advance_any():
                    break
    except _Budget:
        out = _qi_outcome(state)
        out.status = BUDGET_EXHAUSTED
        out.reason = "rate limit"
        out.meta.update(meta)
        return out
    out = _qi_outcome(state)
    out.meta.update(meta)
    return out


def qi_point(engine: QueryEngine, vk: VictimKnowledge, target: Optional[int] = None,
             rng: Optional[random.Random] = None, infer_all: bool = False,
             actor: str = "attacker") -> AttackOutcome:
    """Query-and-insert attack over a point-query interface."""
    rng = rng or random.Random(0)
    schema = engine.db.schema
    target = schema.private_indices[0] if target is None else target
    history = QueryHistory()
    meta = {"algorithm": "qi-point", "find_queries": 0}

    def find_fn(session):
        before = session.queries
        q = find_q(session, vk, history, rng)
        meta["find_queries"] += session.queries - before
        return q

    def bprime_fn(q: Query, state: _QIState):
        return [j for j in schema.private_indices
                if q.point_value(j) != state.t_priv[j]]

    return _qi_attack(engine, vk, target, rng, find_fn, bprime_fn,
                      infer_all, actor, meta)


def qi_in(engine: QueryEngine, vk: VictimKnowledge, target: Optional[int] = None,
          rng: Optional[random.Random] = None, infer_all: bool = False,
          actor: str = "attacker") -> AttackOutcome:
    """Query-and-insert attack over an IN-query interface.

    The find phase starts from the all-star private query and progressively
    fixes private attributes B_1, {B_1,B_2}, ... to point values until some
    query returns the victim; the walk then treats as differing every
    attribute whose probe value is not the sole element of the predicate.
    """
    rng = rng or random.Random(0)
    schema = engine.db.schema
    target = schema.private_indices[0] if target is None else target
    failed: set = set()
    meta = {"algorithm": "qi-in", "find_queries": 0}

    def base_query() -> Query:
        preds: list = [None] * schema.arity
        for pos, i in enumerate(schema.public_indices):
            preds[i] = (vk.public_values[pos],)
        for j in schema.private_indices:
            preds[j] = star_predicate(schema, j)
        return Query(schema, preds)

    def find_fn(session):
        before = session.queries
        result = None
        base = base_query()
        candidates = itertools.chain(
            [()],
            (combo for h in range(1, schema.mprime + 1)
             for combo in itertools.product(
                 *(range(schema.attributes[j].size)
                   for j in schema.private_indices[:h]))),
        )
        for combo in candidates:
            q = base
            for pos, val in enumerate(combo):
                q = q.replace(schema, schema.private_indices[pos], (val,))
            if q.key in failed:
                continue
            if session.ask(q) is not None:
                result = q
                break
            failed.add(q.key)
        meta["find_queries"] += session.queries - before
        return result

    def bprime_fn(q: Query, state: _QIState):
        return [j for j in schema.private_indices
                if q.predicates[j] != frozenset((state.t_priv[j],))]

    return _qi_attack(engine, vk, target, rng, find_fn, bprime_fn,
                      infer_all, actor, meta)


# ---------------------------------------------------------------------------
# Q-only attacks: sibling exclusion over query revisions
# ---------------------------------------------------------------------------

def _sibling_pass(session: _Session, schema: Schema, base: Query, target: int,
                  ledger: ExclusionLedger):
    """Issue the not-yet-excluded target-value siblings of a query pattern
    and exclude every value whose rank is strictly worse than the best.

    Returns (decided_value | None, any_sibling_returned_victim,
    full_family_observed).
    """
    size = schema.attributes[target].size
    excluded = ledger.excluded_values(target)
    ranks = {}
    for x in range(size):
        if x in excluded:
            continue
        ranks[x] = session.ask(base.replace(schema, target, (x,)))
    present = {x: r for x, r in ranks.items() if r is not None}
    if present:
        best_x = min(present, key=lambda x: (present[x], x))
        best_rank = present[best_x]
        q_best = base.replace(schema, target, (best_x,))
        for x, r in ranks.items():
            if x != best_x and _strictly_worse(best_rank, r):
                ledger.record(Witness(target, x, q_best,
                                      base.replace(schema, target, (x,)),
                                      best_rank, r))
    remaining = ledger.remaining(target)
    decided = remaining[0] if len(remaining) == 1 else None
    return decided, bool(present), not excluded


def _q_only_outcome(session, target, ledger, decided, reason=None):
    if decided is not None:
        return _finish(session, AttackOutcome(
            status=INFERRED, target=target, inferred={target: decided},
            ledger=ledger))
    if not ledger.remaining(target):
        reason = "possible-null"
    return _finish(session, AttackOutcome(
        status=UNDETERMINED, target=target, ledger=ledger,
        reason=reason or "exhausted"))


def q_point(engine: QueryEngine, vk: VictimKnowledge, target: Optional[int] = None,
            rng: Optional[random.Random] = None, actor: str = "attacker",
            history: Optional[QueryHistory] = None,
            ledger: Optional[ExclusionLedger] = None) -> AttackOutcome:
    """Query-only attack over a point interface: FIND-Q seeds, then a
    breadth-first search over the query revision tree with sibling
    exclusion and subtree pruning."""
    rng = rng or random.Random(0)
    schema = engine.db.schema
    target = schema.private_indices[0] if target is None else target
    session = _Session(engine, vk.victim_id, actor)
    history = history or QueryHistory()
    ledger = ledger or ExclusionLedger(schema)
    meta = {"algorithm": "q-point", "find_queries": 0}
    rev_attrs = [i for i in range(schema.arity) if i != target]
    public = set(schema.public_indices)

    try:
        while True:
            before = session.queries
            q = find_q(session, vk, history, rng)
            meta["find_queries"] += session.queries - before
            if q is None:
                out = _q_only_outcome(session, target, ledger, None)
                out.meta.update(meta)
                return out
            pruned: list[dict] = []

            def is_pruned(node: dict) -> bool:
                for dead in pruned:
                    if all(node.get(a) == v for a, v in dead.items()) and \
                            all(a in public for a in node if a not in dead):
                        return True
                return False

            for level in range(len(rev_attrs) + 1):
                for attrs in itertools.combinations(rev_attrs, level):
                    alt_values = [
                        [x for x in range(schema.attributes[a].size)
                         if x != q.point_value(a)]
                        for a in attrs
                    ]
                    for vals in itertools.product(*alt_values):
                        node = dict(zip(attrs, vals))
                        if is_pruned(node):
                            continue
                        qnode = q
                        for a, v in node.items():
                            qnode = qnode.replace(schema, a, (v,))
                        decided, any_hit, full = _sibling_pass(
                            session, schema, qnode, target, ledger)
                        if decided is not None:
                            out = _q_only_outcome(session, target, ledger, decided)
                            out.meta.update(meta)
                            return out
                        if not ledger.remaining(target):
                            out = _q_only_outcome(session, target, ledger, None)
                            out.meta.update(meta)
                            return out
                        if not any_hit and full:
                            pruned.append(node)
    except _Budget:
        out = _q_only_outcome(session, target, ledger, None)
        out.status = BUDGET_EXHAUSTED
        out.reason = "rate limit"
        out.meta.update(meta)
        return out


def q_in(engine: QueryEngine, vk: VictimKnowledge, target: Optional[int] = None,
         rng: Optional[random.Random] = None, actor: str = "attacker",
         history: Optional[QueryHistory] = None,
         ledger: Optional[ExclusionLedger] = None) -> AttackOutcome:
    """Query-only attack over an IN interface: FIND-Q seeds, then sibling
    exclusion while widening public predicates to full domains over subsets
    of increasing cardinality."""
    rng = rng or random.Random(0)
    schema = engine.db.schema
    target = schema.private_indices[0] if target is None else target
    session = _Session(engine, vk.victim_id, actor)
    history = history or QueryHistory()
    ledger = ledger or ExclusionLedger(schema)
    meta = {"algorithm": "q-in", "find_queries": 0}

    try:
        while True:
            before = session.queries
            q = find_q(session, vk, history, rng)
            meta["find_queries"] += session.queries - before
            if q is None:
                out = _q_only_outcome(session, target, ledger, None)
                out.meta.update(meta)
                return out
            for level in range(schema.m + 1):
                for subset in itertools.combinations(schema.public_indices, level):
                    wide = q
                    for a in subset:
                        wide = wide.replace(schema, a, star_predicate(schema, a))
                    decided, _, _ = _sibling_pass(session, schema, wide,
                                                  target, ledger)
                    if decided is not None:
                        out = _q_only_outcome(session, target, ledger, decided)
                        out.meta.update(meta)
                        return out
                    if not ledger.remaining(target):
                        out = _q_only_outcome(session, target, ledger, None)
                        out.meta.update(meta)
                        return out
    except _Budget:
        out = _q_only_outcome(session, target, ledger, None)
        out.status = BUDGET_EXHAUSTED
        out.reason = "rate limit"
        out.meta.update(meta)
        return out


ALGORITHMS = {
    "qi-point": qi_point,
    "q-point": q_point,
    "qi-in": qi_in,
    "q-in": q_in,
}


def infer_all(engine: QueryEngine, vk: VictimKnowledge,
              rng: Optional[random.Random] = None, algorithm: str = "qi-point",
              actor: str = "attacker") -> AttackOutcome:
    """Drive the selected attack until every private attribute is either
    inferred or undetermined."""
    rng = rng or random.Random(0)
    schema = engine.db.schema
    if algorithm in ("qi-point", "qi-in"):
        out = ALGORITHMS[algorithm](engine, vk, rng=rng, infer_all=True,
                                    actor=actor)
    else:
        attack = ALGORITHMS[algorithm]
        history = QueryHistory()
        inferred: dict[int, int] = {}
        ledger = None
        queries = inserts = 0
        trace: list = []
        statuses = {}
        reason = None
        for j in schema.private_indices:
            sub = attack(engine, vk, target=j, rng=rng, actor=actor,
                         history=history)
            statuses[j] = sub.status
            inferred.update(sub.inferred)
            queries += sub.queries_used
            inserts += sub.inserts_used
            trace.extend(sub.trace)
            ledger = sub.ledger if ledger is None else _merge_ledgers(
                ledger, sub.ledger)
            if sub.status == BUDGET_EXHAUSTED:
                reason = sub.reason
                break
        all_done = all(statuses.get(j) == INFERRED
                       for j in schema.private_indices)
        status = (BUDGET_EXHAUSTED if reason else
                  (INFERRED_ALL if all_done else UNDETERMINED))
        out = AttackOutcome(status=status, target=schema.private_indices[0],
                            inferred=inferred, ledger=ledger,
                            queries_used=queries, inserts_used=inserts,
                            trace=trace, reason=reason,
                            meta={"algorithm": algorithm,
                                  "per_attribute_status": {
                                      schema.attributes[j].name: s
                                      for j, s in statuses.items()}})
    total = out.queries_used + out.inserts_used
    out.meta["amortized_cost_per_attribute"] = total / schema.mprime
    return out


def _merge_ledgers(a: ExclusionLedger, b: ExclusionLedger) -> ExclusionLedger:
    for w in b.witnesses():
        a.record(w)
    return a

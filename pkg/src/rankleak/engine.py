"""Top-k query engine: capability flags, budget metering, ranked answers.

The engine answers queries as the k-prefix of the full tuple ordering under
the configured ranking and tie policy. Requests that reach the database
layer (search queries and insert attempts, including duplicate-rejected
ones) are counted against the issuing actor's budget; requests refused at
the interface (rate limit, capability gates) are not.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .model import (
    Database,
    DuplicateTuple,
    INSERTED,
    Query,
    RankedAnswer,
    RankleakError,
    project_public,
)
from .ranking import LinearRanking, TiePolicy

POINT_ONLY = "point_only"
IN_ALLOWED = "in_allowed"


class RateLimitExceeded(RankleakError):
    pass


class UnsupportedPredicate(RankleakError):
    pass


class InsertionForbidden(RankleakError):
    pass


@dataclass(frozen=True)
class InterfaceConfig:
    k: int = 1
    query_kind: str = POINT_ONLY
    insertion_allowed: bool = False
    rate_limit: Optional[int] = None
    insertion_delay: Optional[int] = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.query_kind not in (POINT_ONLY, IN_ALLOWED):
            raise ValueError(f"bad query_kind {self.query_kind!r}")
        if self.rate_limit is not None and self.rate_limit < 1:
            raise ValueError("rate_limit must be >= 1 when present")


@dataclass
class BudgetLedger:
    queries_issued: int = 0
    tuples_inserted: int = 0
    inserts_rejected: int = 0

    @property
    def requests(self) -> int:
        return self.queries_issued + self.tuples_inserted + self.inserts_rejected


class QueryEngine:
    """Serves top-k answers over one database snapshot.

    Thread-safe: requests serialize through one lock (single writer, and the
    read path is cheap enough that shared locking is simplest).
    """

    def __init__(self, db: Database, ranking=None,
                 tie_policy: TiePolicy = TiePolicy.BY_ID,
                 cfg: InterfaceConfig = InterfaceConfig()):
        self.db = db
        self.ranking = ranking or LinearRanking(db.schema)
        self.tie_policy = tie_policy
        self.cfg = cfg
        self._lock = threading.RLock()
        self._ledgers: dict[str, BudgetLedger] = {}
        self.total_requests = 0
        self._linear = isinstance(self.ranking, LinearRanking)
        self._null_code = max(db.schema.domain_sizes)
        self._rebuild_arrays()

    def _rebuild_arrays(self):
        schema = self.db.schema
        rows = list(self.db)
        if not hasattr(self, "_visibility"):
            self._visibility: dict[int, int] = {}
        vals = np.empty((len(rows), schema.arity), dtype=np.int32)
        for i, row in enumerate(rows):
            vals[i] = [self._null_code if v is None else v for v in row.values]
        self._vals = vals
        self._ids = np.array([r.id for r in rows], dtype=np.int64)
        self._pol = np.array([self.tie_policy.key(r.provenance) for r in rows],
                             dtype=np.int8)
        self._visible_at = np.array([self._visibility.get(r.id, 0) for r in rows],
                                    dtype=np.int64)
        self._member = np.zeros((schema.arity, self._null_code + 1), dtype=np.uint8)
        self._weights = (np.array(self.ranking.weight_vector, dtype=np.float64)
                         if self._linear else None)

    def ledger(self, actor: str = "default") -> BudgetLedger:
        return self._ledgers.setdefault(actor, BudgetLedger())

    def _check_rate(self, actor: str):
        if self.cfg.rate_limit is not None:
            if self.ledger(actor).requests >= self.cfg.rate_limit:
                raise RateLimitExceeded(f"rate limit {self.cfg.rate_limit} reached")

    def answer(self, query: Query, actor: str = "default") -> RankedAnswer:
        with self._lock:
            self._check_rate(actor)
            if self.cfg.query_kind == POINT_ONLY and not query.all_point:
                raise UnsupportedPredicate("interface supports point queries only")
            self.ledger(actor).queries_issued += 1
            self.total_requests += 1
            order = self._order_ids(query)
            entries = []
            for rid in order[:self.cfg.k]:
                entries.append(project_public(self.db.rows[rid], self.db.schema))
            return RankedAnswer(tuple(entries), self.cfg.k)

    def _order_ids(self, query: Query):
        vals, ids, pol = self._vals, self._ids, self._pol
        if self._visibility:
            visible = self._visible_at < self.total_requests
            if not visible.all():
                vals, ids, pol = vals[visible], ids[visible], pol[visible]
        if self._linear:
            member = self._member
            member[:] = 0
            for j, pred in enumerate(query.predicates):
                member[j, list(pred)] = 1
            scores = _kernels.score_block(vals, member, self._weights)
        else:
            rows = [self.db.rows[int(rid)] for rid in ids]
            scores = np.array(
                [self.ranking.score_one(r.values, query.predicates) for r in rows],
                dtype=np.float64)
        order = np.lexsort((ids, pol, scores))
        return [int(ids[i]) for i in order]

    def insert(self, values: Sequence, actor: str = "default") -> int:
        with self._lock:
            self._check_rate(actor)
            if not self.cfg.insertion_allowed:
                raise InsertionForbidden("interface enforces the insertion constraint")
            led = self.ledger(actor)
            try:
                row = self.db.insert(values, provenance=INSERTED)
            except DuplicateTuple:
                led.inserts_rejected += 1
                self.total_requests += 1
                raise
            led.tuples_inserted += 1
            self.total_requests += 1
            if self.cfg.insertion_delay:
                self._visibility[row.id] = self.total_requests + self.cfg.insertion_delay
            self._append_row(row)
            return row.id

    def _append_row(self, row):
        code = [self._null_code if v is None else v for v in row.values]
        self._vals = np.vstack([self._vals, np.array([code], dtype=np.int32)])
        self._ids = np.append(self._ids, np.int64(row.id))
        self._pol = np.append(self._pol, np.int8(self.tie_policy.key(row.provenance)))
        self._visible_at = np.append(
            self._visible_at, np.int64(self._visibility.get(row.id, 0)))

    def snapshot(self) -> "QueryEngine":
        """Independent engine over a copy of the database, fresh ledgers."""
        with self._lock:
            return QueryEngine(self.db.copy(), self.ranking, self.tie_policy, self.cfg)


def returns_victim(answer: RankedAnswer, victim_id: int):
    """(present, 1-based rank) of the victim in a ranked answer."""
    rank = answer.rank_of(victim_id)
    return (rank is not None), rank


def answer_payload(answer: RankedAnswer) -> bytes:
    """Canonical wire serialization of a ranked answer."""
    return json.dumps(
        {"ok": True,
         "entries": [{"id": tid, "public": list(pub)} for tid, pub in answer.entries]},
        separators=(",", ":"), sort_keys=True).encode() + b"\n"

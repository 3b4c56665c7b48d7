"""Schemas, tuples, databases, queries and ranked answers.

Attribute values are stored as integer indices into the attribute's domain
label list; labels only appear at the CSV/CLI boundary. Null is represented
as ``None`` and never belongs to a query predicate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

PUBLIC = "public"
PRIVATE = "private"
BONA_FIDE = "bona_fide"
INSERTED = "inserted"


class RankleakError(Exception):
    pass


class SchemaError(RankleakError):
    pass


class EmptyDomain(SchemaError):
    pass


class NoPrivateAttribute(SchemaError):
    pass


class DuplicateAttributeName(SchemaError):
    pass


class SchemaMismatch(RankleakError):
    pass


class DuplicateTuple(RankleakError):
    pass


@dataclass(frozen=True)
class AttributeDescriptor:
    name: str
    visibility: str
    domain: tuple[str, ...]
    allows_null: bool = False

    def __post_init__(self):
        if self.visibility not in (PUBLIC, PRIVATE):
            raise SchemaError(f"bad visibility {self.visibility!r} for {self.name}")
        if len(self.domain) < 2:
            raise EmptyDomain(f"attribute {self.name} needs a domain of size >= 2")
        if len(set(self.domain)) != len(self.domain):
            raise SchemaError(f"attribute {self.name} has duplicate domain values")

    @property
    def size(self) -> int:
        return len(self.domain)


class Schema:
    """Ordered attribute list; public attributes come before private ones.

    The positional index within the schema is the attribute's identity.
    """

    def __init__(self, attributes: Sequence[AttributeDescriptor]):
        self.attributes = tuple(attributes)
        self.public_indices = tuple(
            i for i, a in enumerate(self.attributes) if a.visibility == PUBLIC
        )
        self.private_indices = tuple(
            i for i, a in enumerate(self.attributes) if a.visibility == PRIVATE
        )

    @property
    def arity(self) -> int:
        return len(self.attributes)

    @property
    def m(self) -> int:
        return len(self.public_indices)

    @property
    def mprime(self) -> int:
        return len(self.private_indices)

    @property
    def domain_sizes(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.attributes)

    def index_of(self, name: str) -> int:
        for i, a in enumerate(self.attributes):
            if a.name == name:
                return i
        raise SchemaError(f"no attribute named {name!r}")

    def validate_values(self, values: Sequence[Optional[int]]) -> tuple:
        if len(values) != self.arity:
            raise SchemaMismatch(
                f"expected {self.arity} values, got {len(values)}"
            )
        out = []
        for i, v in enumerate(values):
            attr = self.attributes[i]
            if v is None:
                if not attr.allows_null:
                    raise SchemaMismatch(f"attribute {attr.name} does not allow Null")
            elif not (isinstance(v, int) and 0 <= v < attr.size):
                raise SchemaMismatch(
                    f"value {v!r} out of domain for attribute {attr.name}"
                )
            out.append(v)
        return tuple(out)


def build_schema(descriptors: Iterable[AttributeDescriptor]) -> Schema:
    """Validate descriptors and build a schema with publics ordered first."""
    descs = list(descriptors)
    names = [d.name for d in descs]
    if len(set(names)) != len(names):
        raise DuplicateAttributeName(f"duplicate attribute names in {names}")
    publics = [d for d in descs if d.visibility == PUBLIC]
    privates = [d for d in descs if d.visibility == PRIVATE]
    if not publics:
        raise SchemaError("schema needs at least one public attribute")
    if not privates:
        raise NoPrivateAttribute("schema needs at least one private attribute")
    return Schema(publics + privates)


@dataclass(frozen=True)
class Row:
    """One database tuple: opaque id, one value index per attribute."""

    id: int
    values: tuple
    provenance: str = BONA_FIDE


class Database:
    """Duplicate-free tuple collection over a fixed schema.

    Mutating operations require exclusive access; use :meth:`copy` to get an
    independent snapshot for concurrent readers/attacks.
    """

    def __init__(self, schema: Schema):
        self.schema = schema
        self.rows: dict[int, Row] = {}
        self._combos: set[tuple] = set()
        self._next_id = 0

    @property
    def n(self) -> int:
        return len(self.rows)

    def new_id(self) -> int:
        return self._next_id

    def insert(self, values: Sequence[Optional[int]], provenance: str = BONA_FIDE,
               id: Optional[int] = None) -> Row:
        vals = self.schema.validate_values(values)
        if vals in self._combos:
            raise DuplicateTuple(f"value combination {vals} already present")
        rid = self._next_id if id is None else id
        if rid in self.rows:
            raise DuplicateTuple(f"id {rid} already present")
        row = Row(rid, vals, provenance)
        self.rows[rid] = row
        self._combos.add(vals)
        self._next_id = max(self._next_id, rid + 1)
        return row

    def copy(self) -> "Database":
        db = Database(self.schema)
        db.rows = dict(self.rows)
        db._combos = set(self._combos)
        db._next_id = self._next_id
        return db

    def __iter__(self):
        return iter(self.rows.values())


def insert_tuple(db: Database, values: Sequence[Optional[int]],
                 provenance: str = BONA_FIDE) -> Row:
    return db.insert(values, provenance)


def project_public(row: Row, schema: Schema) -> tuple[int, tuple]:
    """Public-attribute projection of a tuple, alongside its id."""
    return row.id, tuple(row.values[i] for i in schema.public_indices)


class Query:
    """One non-empty value-index set per schema attribute.

    A point predicate is a singleton set, a star predicate is the full
    domain; anything in between is an IN predicate. Exactly one of the three
    classifications applies per attribute (domains have size >= 2).
    """

    __slots__ = ("predicates", "_key")

    def __init__(self, schema: Schema, predicates: Sequence[Iterable[int]]):
        if len(predicates) != schema.arity:
            raise SchemaMismatch(
                f"expected {schema.arity} predicates, got {len(predicates)}"
            )
        preds = []
        for i, p in enumerate(predicates):
            s = frozenset(p)
            if not s:
                raise SchemaMismatch(f"empty predicate for attribute index {i}")
            if not all(isinstance(v, int) and 0 <= v < schema.attributes[i].size
                       for v in s):
                raise SchemaMismatch(
                    f"predicate {sorted(s)} out of domain for attribute index {i}"
                )
            preds.append(s)
        self.predicates = tuple(preds)
        self._key = tuple(tuple(sorted(p)) for p in self.predicates)

    def is_point(self, i: int) -> bool:
        return len(self.predicates[i]) == 1

    def is_star(self, i: int, schema: Schema) -> bool:
        return len(self.predicates[i]) == schema.attributes[i].size

    def classify(self, i: int, schema: Schema) -> str:
        if self.is_point(i):
            return "point"
        if self.is_star(i, schema):
            return "star"
        return "in"

    @property
    def all_point(self) -> bool:
        return all(len(p) == 1 for p in self.predicates)

    def point_value(self, i: int) -> int:
        (v,) = self.predicates[i]
        return v

    def replace(self, schema: Schema, i: int, predicate: Iterable[int]) -> "Query":
        preds = list(self.predicates)
        preds[i] = predicate
        return Query(schema, preds)

    @property
    def key(self) -> tuple:
        return self._key

    def __eq__(self, other):
        return isinstance(other, Query) and self.predicates == other.predicates

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"Query({[sorted(p) for p in self.predicates]})"


def point_query(schema: Schema, values: Sequence[int]) -> Query:
    return Query(schema, [(v,) for v in values])


def star_predicate(schema: Schema, i: int) -> frozenset:
    return frozenset(range(schema.attributes[i].size))


@dataclass(frozen=True)
class RankedAnswer:
    """Top-k answer: ordered (tuple id, public projection) pairs, no scores."""

    entries: tuple
    k: int

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(e[0] for e in self.entries)

    def rank_of(self, tuple_id: int) -> Optional[int]:
        for pos, (tid, _) in enumerate(self.entries, start=1):
            if tid == tuple_id:
                return pos
        return None

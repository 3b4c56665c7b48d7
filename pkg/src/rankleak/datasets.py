"""Synthetic dataset generators and CSV/schema-JSON ingestion.

The CSV format: header row of attribute names, cells are domain labels,
empty cell means Null. A sidecar JSON file declares visibility, domain and
allows_null per attribute.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .model import (
    AttributeDescriptor,
    Database,
    PRIVATE,
    PUBLIC,
    RankleakError,
    Schema,
    build_schema,
)


class ImpossibleCardinality(RankleakError):
    pass


class UnknownValue(RankleakError):
    pass


class NullNotAllowed(RankleakError):
    pass


class RaggedRow(RankleakError):
    pass


def _bool_descriptor(name: str, visibility: str) -> AttributeDescriptor:
    return AttributeDescriptor(name, visibility, ("0", "1"))


def bool_schema(m: int, mprime: int) -> Schema:
    return build_schema(
        [_bool_descriptor(f"A{i + 1}", PUBLIC) for i in range(m)]
        + [_bool_descriptor(f"B{j + 1}", PRIVATE) for j in range(mprime)]
    )


def _fill_distinct(db: Database, n: int, draw_row) -> Database:
    """Insert n distinct rows, rejection-sampling duplicates."""
    seen = set()
    while db.n < n:
        row = draw_row()
        if row in seen:
            continue
        seen.add(row)
        db.insert(list(row))
    return db


def gen_uniform_bool(n: int, m: int, mprime: int, seed: int) -> Database:
    """n distinct i.i.d.-uniform boolean tuples, deterministic per seed."""
    if n > 2 ** (m + mprime):
        raise ImpossibleCardinality(
            f"cannot fit {n} distinct tuples in a {m + mprime}-bit cube")
    rng = np.random.default_rng(seed)
    db = Database(bool_schema(m, mprime))
    arity = m + mprime
    return _fill_distinct(db, n, lambda: tuple(
        int(v) for v in rng.integers(0, 2, size=arity)))


def gen_categorical(n: int, m: int, mprime: int, seed: int,
                    target_domain: int = 2) -> Database:
    """Uniform boolean database except the first private attribute, whose
    domain size is ``target_domain`` (for domain-size sweeps)."""
    capacity = 2 ** (m + mprime - 1) * target_domain
    if n > capacity:
        raise ImpossibleCardinality(f"cannot fit {n} distinct tuples")
    descs = [_bool_descriptor(f"A{i + 1}", PUBLIC) for i in range(m)]
    descs.append(AttributeDescriptor(
        "B1", PRIVATE, tuple(str(v) for v in range(target_domain))))
    descs += [_bool_descriptor(f"B{j + 2}", PRIVATE) for j in range(mprime - 1)]
    schema = build_schema(descs)
    rng = np.random.default_rng(seed)
    sizes = schema.domain_sizes
    db = Database(schema)
    return _fill_distinct(db, n, lambda: tuple(
        int(rng.integers(0, s)) for s in sizes))


def gen_zipf(n: int, m: int, mprime: int, avg_domain: int, z: float,
             seed: int) -> Database:
    """Categorical database with Zipf(z)-distributed values.

    Domain sizes are drawn uniformly from [2, 2*avg_domain - 2] so they
    average ``avg_domain``; within each attribute, value index r is drawn
    with probability proportional to (r+1)^-z.
    """
    if z <= 0:
        raise ValueError("z must be positive")
    rng = np.random.default_rng(seed)
    descs = []
    for idx in range(m + mprime):
        lo, hi = 2, max(2, 2 * avg_domain - 2)
        size = int(rng.integers(lo, hi + 1))
        name = f"A{idx + 1}" if idx < m else f"B{idx - m + 1}"
        vis = PUBLIC if idx < m else PRIVATE
        descs.append(AttributeDescriptor(
            name, vis, tuple(str(v) for v in range(size))))
    schema = build_schema(descs)
    capacity = 1
    for s in schema.domain_sizes:
        capacity *= s
    if n > capacity:
        raise ImpossibleCardinality(f"cannot fit {n} distinct tuples")
    pmfs = []
    for s in schema.domain_sizes:
        w = np.arange(1, s + 1, dtype=np.float64) ** -z
        pmfs.append(w / w.sum())
    sizes = schema.domain_sizes
    db = Database(schema)
    return _fill_distinct(db, n, lambda: tuple(
        int(rng.choice(sizes[i], p=pmfs[i])) for i in range(len(sizes))))


GENERATORS = {
    "uniform-bool": gen_uniform_bool,
    "zipf": gen_zipf,
}


def schema_to_json(schema: Schema) -> dict:
    return {"attributes": [
        {"name": a.name, "visibility": a.visibility,
         "domain": list(a.domain), "allows_null": a.allows_null}
        for a in schema.attributes
    ]}


def schema_from_json(obj: dict) -> Schema:
    return build_schema([
        AttributeDescriptor(a["name"], a["visibility"], tuple(a["domain"]),
                            a.get("allows_null", False))
        for a in obj["attributes"]
    ])


def save_schema(schema: Schema, path) -> None:
    Path(path).write_text(json.dumps(schema_to_json(schema), indent=2) + "\n")


def load_schema(path) -> Schema:
    return schema_from_json(json.loads(Path(path).read_text()))


def load_csv(data_path, schema_path) -> Database:
    """Build a database from a CSV file and its schema sidecar.

    Tuple ids are 0-based data-row numbers; values are mapped to domain
    indices; an empty cell becomes Null where allowed.
    """
    schema = load_schema(schema_path)
    lookup = [{label: i for i, label in enumerate(a.domain)}
              for a in schema.attributes]
    db = Database(schema)
    with open(data_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != [a.name for a in schema.attributes]:
            raise RankleakError(
                f"CSV header {header} does not match schema attribute order")
        for rownum, cells in enumerate(reader):
            if len(cells) != schema.arity:
                raise RaggedRow(f"row {rownum} has {len(cells)} cells, "
                                f"expected {schema.arity}")
            values = []
            for col, cell in enumerate(cells):
                attr = schema.attributes[col]
                if cell == "":
                    if not attr.allows_null:
                        raise NullNotAllowed(
                            f"row {rownum}, column {attr.name}: empty cell")
                    values.append(None)
                elif cell in lookup[col]:
                    values.append(lookup[col][cell])
                else:
                    raise UnknownValue(
                        f"row {rownum}, column {attr.name}: {cell!r} not in domain")
            db.insert(values, id=rownum)
    return db


def save_csv(db: Database, path) -> None:
    schema = db.schema
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([a.name for a in schema.attributes])
        for row in db:
            writer.writerow([
                "" if v is None else schema.attributes[i].domain[v]
                for i, v in enumerate(row.values)
            ])

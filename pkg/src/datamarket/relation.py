"""Relational instances, catalogs, joins and dirt injection."""
from __future__ import annotations

import configparser
import csv
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ArgumentError, IngestionError, SchemaError

Value = str | int | float | None
Key = tuple

NUMERIC = "numeric"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Relation:
    """A named schema plus an immutable row store.

    Row ids are the 0-based positions in ``rows``.  ``None`` is NULL.
    """

    name: str
    schema: tuple[str, ...]
    rows: tuple[tuple[Value, ...], ...]
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        if len(set(self.schema)) != len(self.schema):
            dup = [a for a, c in Counter(self.schema).items() if c > 1]
            raise SchemaError(f"{self.name}: duplicate attributes {dup}")
        m = len(self.schema)
        for i, r in enumerate(self.rows):
            if len(r) != m:
                raise SchemaError(f"{self.name}: row {i} has {len(r)} cells, schema has {m}")

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def m(self) -> int:
        return len(self.schema)

    @property
    def attrs(self) -> frozenset[str]:
        return frozenset(self.schema)

    def index(self, attr: str) -> int:
        try:
            return self._positions()[attr]
        except KeyError:
            raise ArgumentError(f"{self.name}: unknown attribute {attr!r}") from None

    def _positions(self) -> dict[str, int]:
        pos = self._cache.get("pos")
        if pos is None:
            pos = {a: i for i, a in enumerate(self.schema)}
            self._cache["pos"] = pos
        return pos

    def ordered(self, attrs: Iterable[str]) -> tuple[str, ...]:
        """``attrs`` in schema order; raises on unknown names."""
        attrs = set(attrs)
        for a in attrs:
            self.index(a)
        return tuple(a for a in self.schema if a in attrs)

    def column(self, attr: str) -> tuple[Value, ...]:
        key = ("col", attr)
        col = self._cache.get(key)
        if col is None:
            j = self.index(attr)
            col = tuple(r[j] for r in self.rows)
            self._cache[key] = col
        return col

    def codes(self, attr: str) -> np.ndarray:
        """Dense integer codes of a column numbered by first occurrence; NULL gets its own code."""
        key = ("codes", attr)
        c = self._cache.get(key)
        if c is None:
            seen: dict = {}
            c = np.fromiter(
                (seen.setdefault(v, len(seen)) for v in self.column(attr)),
                dtype=np.int64,
                count=self.n,
            )
            self._cache[key] = c
        return c

    def kind(self, attr: str) -> str:
        """``numeric`` when every non-NULL cell is a finite number, else ``categorical``."""
        key = ("kind", attr)
        k = self._cache.get(key)
        if k is None:
            k = NUMERIC if all(_is_finite_number(v) for v in self.column(attr) if v is not None) else CATEGORICAL
            self._cache[key] = k
        return k

    def keys(self, attrs: Sequence[str]) -> list[Key]:
        idx = [self.index(a) for a in attrs]
        return [tuple(r[j] for j in idx) for r in self.rows]

    def project(self, attrs: Iterable[str], name: str | None = None) -> Relation:
        """Bag projection keeping schema order."""
        cols = self.ordered(attrs)
        idx = [self.index(a) for a in cols]
        return Relation(name or self.name, cols, tuple(tuple(r[j] for j in idx) for r in self.rows))

    def take(self, row_ids: Iterable[int], name: str | None = None) -> Relation:
        return Relation(name or self.name, self.schema, tuple(self.rows[i] for i in row_ids))

    def replace_rows(self, rows: Iterable[Sequence[Value]]) -> Relation:
        return Relation(self.name, self.schema, tuple(tuple(r) for r in rows))


def _is_finite_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _parse_column(cells: list[str]) -> list[Value]:
    present = [c for c in cells if c != ""]
    ints = True
    for c in present:
        try:
            int(c)
        except ValueError:
            ints = False
            break
    if ints:
        return [int(c) if c != "" else None for c in cells]
    try:
        floats = [float(c) for c in present]
    except ValueError:
        floats = None
    if floats is not None and all(math.isfinite(x) for x in floats):
        return [float(c) if c != "" else None for c in cells]
    return [c if c != "" else None for c in cells]


def load_csv(path: str | os.PathLike, name: str | None = None) -> Relation:
    """Read a headered CSV file.  Empty fields are NULL; fully numeric columns become numbers."""
    name = name or os.path.splitext(os.path.basename(os.fspath(path)))[0]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: missing header line") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise SchemaError(f"{path}: duplicate header names")
        raw: list[list[str]] = []
        for rec in reader:
            if not rec:
                continue
            if len(rec) != len(header):
                raise IngestionError(
                    f"{path}: line {reader.line_num} has {len(rec)} fields, expected {len(header)}"
                )
            raw.append(rec)
    cols = [_parse_column([r[j] for r in raw]) for j in range(len(header))]
    rows = tuple(zip(*cols)) if cols else tuple(() for _ in raw)
    return Relation(name, tuple(header), rows)


def _format(v: Value) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(rel: Relation, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(rel.schema)
        for r in rel.rows:
            w.writerow([_format(v) for v in r])


@dataclass(frozen=True)
class Catalog:
    """A set of uniquely named relations with an attribute -> relation-names index."""

    relations: Mapping[str, Relation]
    index: Mapping[str, frozenset[str]]

    @classmethod
    def of(cls, relations: Iterable[Relation]) -> Catalog:
        rels: dict[str, Relation] = {}
        for r in relations:
            if r.name in rels:
                raise SchemaError(f"duplicate relation name {r.name!r}")
            rels[r.name] = r
        idx: dict[str, set[str]] = {}
        for r in rels.values():
            for a in r.schema:
                idx.setdefault(a, set()).add(r.name)
        return cls(rels, {a: frozenset(s) for a, s in sorted(idx.items())})

    def __len__(self) -> int:
        return len(self.relations)

    def __getitem__(self, name: str) -> Relation:
        return self.relations[name]

    def names(self) -> list[str]:
        return list(self.relations)


def load_manifest(path: str | os.PathLike) -> tuple[Catalog, dict[str, dict[str, str]]]:
    """Read an INI manifest.

    ``[relations]`` maps relation name to CSV path (relative paths resolve
    against the manifest's directory).  All other sections are returned as
    plain string dictionaries for the caller to interpret.
    """
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep attribute and relation names case-sensitive
    if not cp.read(path, encoding="utf-8"):
        raise IngestionError(f"cannot read manifest {path}")
    base = os.path.dirname(os.path.abspath(path))
    rels = []
    if cp.has_section("relations"):
        for name, p in cp.items("relations"):
            full = p if os.path.isabs(p) else os.path.join(base, p)
            if not os.path.exists(full):
                raise IngestionError(f"manifest {path}: relation {name!r} file not found: {full}")
            rels.append(load_csv(full, name))
    extra = {s: dict(cp.items(s)) for s in cp.sections() if s != "relations"}
    return Catalog.of(rels), extra


def _check_on(left: Relation, right: Relation, on: Iterable[str]) -> tuple[str, ...]:
    on = frozenset(on)
    if not on:
        raise ArgumentError("join attribute set is empty")
    missing = on - (left.attrs & right.attrs)
    if missing:
        raise ArgumentError(f"join attributes {sorted(missing)} not shared by {left.name} and {right.name}")
    return left.ordered(on)


def equi_join(left: Relation, right: Relation, on: Iterable[str], name: str | None = None) -> Relation:
    """Inner equi-join on ``on``; NULL never matches.

    Join attributes appear once.  Other attributes present on both sides are
    kept from the left and the right copy is renamed ``<right>.<attr>``.
    """
    on = _check_on(left, right, on)
    on_set = set(on)
    rest = [a for a in right.schema if a not in on_set]
    rest_idx = [right.index(a) for a in rest]
    out_schema = list(left.schema)
    left_attrs = left.attrs
    for a in rest:
        out_schema.append(f"{right.name}.{a}" if a in left_attrs else a)
    table: dict[Key, list[int]] = {}
    for i, k in enumerate(right.keys(on)):
        if None not in k:
            table.setdefault(k, []).append(i)
    out = []
    for lrow, k in zip(left.rows, left.keys(on)):
        hits = table.get(k)
        if hits is None:
            continue
        for i in hits:
            rrow = right.rows[i]
            out.append(lrow + tuple(rrow[j] for j in rest_idx))
    return Relation(name or f"{left.name}*{right.name}", tuple(out_schema), tuple(out))


def natural_join(left: Relation, right: Relation, name: str | None = None) -> Relation:
    """Equi-join on every shared attribute."""
    return equi_join(left, right, left.attrs & right.attrs, name)


def full_outer_join_pairs(left: Relation, right: Relation, on: Iterable[str]) -> dict[tuple, int]:
    """Frequencies of (left key, right key) pairs in the full outer join.

    Keys are value tuples in the left schema order of ``on``; ``None`` stands
    for the missing side.  A matched value v contributes f_L(v)*f_R(v) pairs
    (v, v); unmatched values contribute (v, None) or (None, v) with their own
    frequency.  Keys containing NULL never match.
    """
    on = _check_on(left, right, on)
    fl = Counter(left.keys(on))
    fr = Counter(right.keys(on))
    out: dict[tuple, int] = {}
    for v, c in fl.items():
        if None not in v and v in fr:
            out[(v, v)] = c * fr[v]
        else:
            out[(v, None)] = c
    for v, c in fr.items():
        if None in v or v not in fl:
            out[(None, v)] = c
    return out


@dataclass(frozen=True)
class FD:
    """X -> Y with a single right-hand attribute."""

    lhs: frozenset[str]
    rhs: str

    def __post_init__(self):
        object.__setattr__(self, "lhs", frozenset(self.lhs))
        if self.rhs in self.lhs:
            raise ArgumentError(f"rhs {self.rhs!r} appears in lhs")

    @property
    def attrs(self) -> frozenset[str]:
        return self.lhs | {self.rhs}

    def __str__(self) -> str:
        return ",".join(sorted(self.lhs)) + "->" + self.rhs

    @classmethod
    def parse(cls, text: str) -> FD:
        left, sep, right = text.partition("->")
        if not sep or not right.strip():
            raise ArgumentError(f"cannot parse FD {text!r}")
        lhs = frozenset(a.strip() for a in left.split(",") if a.strip())
        return cls(lhs, right.strip())


@dataclass(frozen=True)
class DirtSpec:
    fraction: float
    targets: frozenset[str] = frozenset()
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ArgumentError(f"fraction {self.fraction} outside [0, 1]")
        object.__setattr__(self, "targets", frozenset(self.targets))


def inject_inconsistency(rel: Relation, spec: DirtSpec, fds: Sequence[FD]) -> Relation:
    """Overwrite one FD right-hand cell in exactly ceil(fraction * n) rows.

    Relations outside ``spec.targets`` (when it is nonempty) pass through
    unchanged.  The replacement is drawn uniformly from the column's other
    non-NULL values.
    """
    if spec.targets and rel.name not in spec.targets:
        return rel
    k = math.ceil(spec.fraction * rel.n - 1e-12)
    if k > rel.n:
        raise ArgumentError(f"cannot dirty {k} of {rel.n} rows")
    if k == 0:
        return rel
    if not fds:
        raise ArgumentError("no FDs to corrupt")
    domains = {}
    for fd in fds:
        if fd.rhs not in domains:
            dom = list(dict.fromkeys(v for v in rel.column(fd.rhs) if v is not None))
            if len(dom) < 2:
                raise ArgumentError(f"column {fd.rhs!r} has fewer than two values; cannot corrupt")
            domains[fd.rhs] = dom
    rng = np.random.default_rng(spec.seed)
    chosen = sorted(rng.choice(rel.n, size=k, replace=False).tolist())
    rows = [list(r) for r in rel.rows]
    for i in chosen:
        fd = fds[int(rng.integers(len(fds)))]
        j = rel.index(fd.rhs)
        others = [v for v in domains[fd.rhs] if v != rows[i][j]]
        rows[i][j] = others[int(rng.integers(len(others)))]
    return rel.replace_rows(rows)

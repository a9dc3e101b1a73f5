"""Tabular ingestion, sensitive / non-sensitive split and canonical serialization."""

from __future__ import annotations

import configparser
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fieldmath import P, SCALE_BITS, FieldElement, FixedPoint, RangeOverflow, encode

SENSITIVE = "sensitive"
NON_SENSITIVE = "non_sensitive"
CATEGORICAL = "categorical"
CONTINUOUS = "continuous"

MISSING_MARKERS = ("", "?")

ADULT_SENSITIVE = ("age", "marital-status", "relationship", "race")
ADULT_CATEGORICAL = (
    "workclass",
    "education",
    "marital-status",
    "occupation",
    "relationship",
    "race",
    "sex",
    "native-country",
    "income",
)


class ParseError(ValueError):
    pass


class SchemaError(ValueError):
    pass


class EmptyDataset(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    role: str


@dataclass(frozen=True)
class Schema:
    columns: tuple
    category_maps: dict = field(default_factory=dict)

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names")
        for c in self.columns:
            if c.role not in (SENSITIVE, NON_SENSITIVE):
                raise SchemaError(f"column {c.name}: unknown role {c.role!r}")
            if c.kind not in (CATEGORICAL, CONTINUOUS):
                raise SchemaError(f"column {c.name}: unknown kind {c.kind!r}")
        if not any(c.role == SENSITIVE for c in self.columns):
            raise SchemaError("at least one sensitive column is required")
        if not any(c.role == NON_SENSITIVE for c in self.columns):
            raise SchemaError("at least one non-sensitive column is required")

    @property
    def sensitive_idx(self):
        return [i for i, c in enumerate(self.columns) if c.role == SENSITIVE]

    @property
    def non_sensitive_idx(self):
        return [i for i, c in enumerate(self.columns) if c.role == NON_SENSITIVE]

    @property
    def n(self) -> int:
        return len(self.sensitive_idx)

    @property
    def m(self) -> int:
        return len(self.non_sensitive_idx)

    @property
    def sensitive_names(self):
        return [self.columns[i].name for i in self.sensitive_idx]


class Dataset:
    """Immutable table of fixed-point values (held as signed raw integers)."""

    def __init__(self, schema: Schema, raw, dropped_rows: int = 0):
        raw = np.array(raw, dtype=np.int64)
        if raw.ndim != 2 or raw.shape[1] != len(schema.columns):
            raise ShapeMismatch("row width does not match the schema")
        if raw.shape[0] == 0:
            raise EmptyDataset("dataset has no rows")
        if raw.shape[0] < 2:
            raise EmptyDataset("at least two rows are required")
        raw.setflags(write=False)
        self.schema = schema
        self.raw = raw
        self.dropped_rows = dropped_rows

    @property
    def N(self) -> int:
        return self.raw.shape[0]

    @property
    def n(self) -> int:
        return self.schema.n

    @property
    def m(self) -> int:
        return self.schema.m

    @property
    def rows(self):
        return [[FixedPoint.from_signed_raw(int(v)) for v in r] for r in self.raw]

    def sensitive_raw(self) -> np.ndarray:
        return self.raw[:, self.schema.sensitive_idx]

    def non_sensitive_raw(self) -> np.ndarray:
        return self.raw[:, self.schema.non_sensitive_idx]

    def with_raw(self, raw) -> "Dataset":
        return Dataset(self.schema, raw)

    def __eq__(self, other):
        return isinstance(other, Dataset) and self.schema == other.schema and np.array_equal(self.raw, other.raw)

    def __repr__(self):
        return f"Dataset(N={self.N}, n={self.n}, m={self.m})"


def _load_role_config(role_config):
    if isinstance(role_config, dict):
        items = role_config.items()
    else:
        text = Path(role_config).read_text()
        cp = configparser.ConfigParser(delimiters=("=", ":"), interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string("[roles]\n" + text)
        except configparser.Error as e:
            raise ParseError(f"bad role config: {e}") from e
        items = cp["roles"].items()
    out = {}
    for name, spec in items:
        if isinstance(spec, str):
            parts = [p.strip() for p in spec.split(",")]
        else:
            parts = list(spec)
        if len(parts) != 2:
            raise SchemaError(f"column {name}: expected 'role,kind'")
        role, kind = parts
        if role not in (SENSITIVE, NON_SENSITIVE) and kind in (SENSITIVE, NON_SENSITIVE):
            role, kind = kind, role
        out[name.strip()] = (role, kind)
    return out


def adult_role_config(header) -> dict:
    """Role map for the census income table: four sensitive attributes, the rest non-sensitive."""
    cfg = {}
    for name in header:
        role = SENSITIVE if name in ADULT_SENSITIVE else NON_SENSITIVE
        kind = CATEGORICAL if name in ADULT_CATEGORICAL else CONTINUOUS
        cfg[name] = (role, kind)
    return cfg


def ingest_csv(path, role_config) -> Dataset:
    roles = _load_role_config(role_config)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            records = list(csv.reader(fh, strict=True))
    except (csv.Error, UnicodeDecodeError) as e:
        raise ParseError(f"{path}: {e}") from e
    if not records:
        raise ParseError(f"{path}: missing header row")
    header = [h.strip() for h in records[0]]
    unknown = set(roles) - set(header)
    if unknown:
        raise SchemaError(f"role config names unknown columns: {sorted(unknown)}")
    missing = [h for h in header if h not in roles]
    if missing:
        raise SchemaError(f"columns without a role: {missing}")
    columns = tuple(Column(h, roles[h][1], roles[h][0]) for h in header)
    Schema(columns)  # role checks before any row is parsed
    cat_maps = {c.name: {} for c in columns if c.kind == CATEGORICAL}
    out = []
    dropped = 0
    for lineno, rec in enumerate(records[1:], start=2):
        if not rec:
            continue
        if len(rec) != len(header):
            raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
        cells = [c.strip() for c in rec]
        if any(c in MISSING_MARKERS for c in cells):
            dropped += 1
            continue
        row = []
        for col, cell in zip(columns, cells):
            if col.kind == CATEGORICAL:
                idx = cat_maps[col.name].setdefault(cell, len(cat_maps[col.name]))
                row.append(idx << SCALE_BITS)
            else:
                try:
                    row.append(encode(float(cell)).signed)
                except ValueError as e:
                    if isinstance(e, RangeOverflow):
                        raise
                    raise ParseError(f"{path}:{lineno}: column {col.name}: not a number: {cell!r}") from e
        out.append(row)
    if not out:
        raise EmptyDataset(f"{path}: no complete rows")
    schema = Schema(columns, {k: tuple(v) for k, v in cat_maps.items()})
    return Dataset(schema, out, dropped_rows=dropped)


def from_arrays(X_s, X_ns, names_s=None, names_ns=None) -> Dataset:
    """Build a dataset from real-valued matrices (continuous columns)."""
    X_s = np.atleast_2d(np.asarray(X_s, dtype=float))
    X_ns = np.atleast_2d(np.asarray(X_ns, dtype=float))
    if X_s.shape[0] != X_ns.shape[0]:
        raise ShapeMismatch("row counts differ")
    names_s = names_s or [f"s{i}" for i in range(X_s.shape[1])]
    names_ns = names_ns or [f"x{i}" for i in range(X_ns.shape[1])]
    cols = tuple(Column(n, CONTINUOUS, SENSITIVE) for n in names_s) + tuple(
        Column(n, CONTINUOUS, NON_SENSITIVE) for n in names_ns
    )
    both = np.hstack([X_s, X_ns])
    if np.abs(both).max(initial=0) * (1 << SCALE_BITS) >= 2**62:
        raise RangeOverflow("values exceed the fixed-point range")
    raw = np.floor(both * (1 << SCALE_BITS) + 0.5).astype(np.int64)
    return Dataset(Schema(cols), raw)


def split(d: Dataset):
    """(X_s, X_ns) as lists of FixedPoint rows, each part in schema column order."""
    to_fp = lambda a: [[FixedPoint.from_signed_raw(int(v)) for v in r] for r in a]
    return to_fp(d.sensitive_raw()), to_fp(d.non_sensitive_raw())


def concat(d: Dataset, X_s_raw, X_ns_raw) -> np.ndarray:
    """Inverse of split on raw values: reassemble rows in schema order."""
    out = np.empty((len(X_s_raw), len(d.schema.columns)), dtype=np.int64)
    out[:, d.schema.sensitive_idx] = X_s_raw
    out[:, d.schema.non_sensitive_idx] = X_ns_raw
    return out


def serialize_raw(N: int, n: int, m: int, xs_raw, xns_raw) -> list:
    vals = [N, n, m]
    vals += [int(v) for v in np.asarray(xs_raw, dtype=np.int64).ravel()]
    vals += [int(v) for v in np.asarray(xns_raw, dtype=np.int64).ravel()]
    return [v % P for v in vals]


def canonical_serialize(d: Dataset):
    return [FieldElement(v) for v in serialize_raw(d.N, d.n, d.m, d.sensitive_raw(), d.non_sensitive_raw())]


def commitment(d: Dataset) -> int:
    from .crypto.poseidon import poseidon_hash

    return poseidon_hash(serialize_raw(d.N, d.n, d.m, d.sensitive_raw(), d.non_sensitive_raw()))

"""Schemas, feature identities, cross-feature enumeration, and CSV ingestion.

A feature's identity is a plain string, "<fieldIndex>_<value>", so the same
raw value in different fields never collides. Numerical values are truncated
toward zero to a fixed number of decimal places before being rendered, which
buckets nearby readings onto one identity. A cross feature's identity joins
the two member identities with '|', lower field index first, so (i, j) and
(j, i) share one identity.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from decimal import ROUND_DOWN, Decimal
from typing import Sequence

import numpy as np

from .errors import DataError

CATEGORICAL = "categorical"
NUMERICAL = "numerical"
OOV_INDEX = 0

# '%' first so escaping is reversible.
_ESCAPES = (("%", "%25"), ("_", "%5F"), ("|", "%7C"))


def escape_value(raw: str) -> str:
    """Percent-escape the delimiter characters so IDs stay parseable."""
    for ch, code in _ESCAPES:
        raw = raw.replace(ch, code)
    return raw


def truncate_fixed(value: float, places: int) -> str:
    """Render a float truncated toward zero to exactly `places` decimals.

    Truncation acts on the exact binary value of the double, so 0.29 renders
    as "0.28999" (the double nearest 0.29 is just below it). A truncated zero
    is always rendered without a sign.
    """
    if places < 0:
        raise DataError(f"decimal places must be >= 0; got {places}")
    if not math.isfinite(value):
        raise DataError(f"numerical value is not finite: {value!r}")
    quantum = Decimal(1).scaleb(-places)
    d = Decimal(value).quantize(quantum, rounding=ROUND_DOWN)
    if d == 0:
        d = abs(d)
    return f"{d:f}"


@dataclass(frozen=True)
class FieldSpec:
    """One input field: a stable index, a display name, and a kind."""

    name: str
    index: int
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in (CATEGORICAL, NUMERICAL):
            raise DataError(f"field {self.name!r}: unknown kind {self.kind!r}")
        if self.index < 0:
            raise DataError(f"field {self.name!r}: negative index {self.index}")
        if not self.name:
            raise DataError("field name must be non-empty")


class Schema:
    """An ordered set of fields plus the label column and decimal precision.

    Field indices must be unique and contiguous from 0; declaration order is
    free and never affects feature identities or model layout.
    """

    def __init__(
        self,
        fields: Sequence[FieldSpec],
        label_column: str,
        decimal_places: int = 5,
    ) -> None:
        fields = tuple(fields)
        if len(fields) < 2:
            raise DataError(f"need at least 2 fields; got {len(fields)}")
        names = [f.name for f in fields]
        if len(set(names)) != len(names):
            raise DataError(f"duplicate field names in schema: {names}")
        indices = sorted(f.index for f in fields)
        if indices != list(range(len(fields))):
            raise DataError(f"field indices must be 0..{len(fields) - 1}; got {indices}")
        if not label_column:
            raise DataError("label column name must be non-empty")
        if label_column in names:
            raise DataError(f"label column {label_column!r} collides with a field")
        if decimal_places < 0:
            raise DataError(f"decimal places must be >= 0; got {decimal_places}")
        self.fields = fields
        self.by_index = tuple(sorted(fields, key=lambda f: f.index))
        self.label_column = label_column
        self.decimal_places = decimal_places

    @property
    def n_fields(self) -> int:
        return len(self.fields)

    @classmethod
    def parse(cls, text: str) -> "Schema":
        """Parse the line-oriented schema format (see `to_text`)."""
        fields: list[FieldSpec] = []
        label = None
        places = 5
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("label="):
                label = line[len("label="):].strip()
            elif line.startswith("k="):
                try:
                    places = int(line[len("k="):].strip())
                except ValueError:
                    raise DataError(f"schema line {lineno}: bad decimal count {line!r}")
            else:
                parts = [p.strip() for p in line.split(",")]
                if len(parts) != 2:
                    raise DataError(f"schema line {lineno}: expected 'name,kind': {raw!r}")
                fields.append(FieldSpec(parts[0], len(fields), parts[1]))
        if label is None:
            raise DataError("schema has no label= line")
        return cls(fields, label, places)

    @classmethod
    def load(cls, path) -> "Schema":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.parse(fh.read())

    def to_text(self) -> str:
        lines = [f"{f.name},{f.kind}" for f in self.by_index]
        lines.append(f"label={self.label_column}")
        lines.append(f"k={self.decimal_places}")
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_text())


def feature_id(field: FieldSpec, raw_value, decimal_places: int = 5) -> str:
    """Identity string for one field value."""
    if field.kind == CATEGORICAL:
        return f"{field.index}_{escape_value(str(raw_value))}"
    return f"{field.index}_{truncate_fixed(float(raw_value), decimal_places)}"


def cross_id(id_a: str, index_a: int, id_b: str, index_b: int) -> str:
    """Shared identity of the unordered cross of two features."""
    if index_a == index_b:
        raise DataError(f"cannot cross field {index_a} with itself")
    if index_a < index_b:
        return f"{id_a}|{id_b}"
    return f"{id_b}|{id_a}"


def field_pairs(
    n_fields: int, kif: frozenset[int] | None = None
) -> tuple[tuple[int, int], ...]:
    """All unordered field pairs (i < j), optionally restricted to pairs that
    touch at least one key-interaction field."""
    if n_fields < 2:
        raise DataError(f"need at least 2 fields to cross; got {n_fields}")
    if kif is not None:
        if not kif:
            raise DataError("key-interaction field set must be non-empty")
        bad = [k for k in kif if not 0 <= k < n_fields]
        if bad:
            raise DataError(f"key-interaction fields out of range: {sorted(bad)}")
    pairs = []
    for i in range(n_fields):
        for j in range(i + 1, n_fields):
            if kif is None or i in kif or j in kif:
                pairs.append((i, j))
    return tuple(pairs)


@dataclass(frozen=True)
class Instance:
    """One labelled example with resolved feature identities and vocab rows."""

    label: int
    feature_ids: tuple[str, ...]
    vocab_indices: tuple[int, ...]


def enumerate_crosses(
    instance: Instance, kif: frozenset[int] | None = None
) -> list[tuple[int, int, str]]:
    """Cross identities of one instance over every generated field pair."""
    ids = instance.feature_ids
    out = []
    for i, j in field_pairs(len(ids), kif):
        out.append((i, j, cross_id(ids[i], i, ids[j], j)))
    return out


class Vocabulary:
    """Feature identity -> embedding row, with row 0 reserved for unseen IDs."""

    def __init__(self) -> None:
        self._index: dict[str, int] = {}

    def add(self, fid: str) -> int:
        """Index of fid, assigning the next free row on first sight."""
        idx = self._index.get(fid)
        if idx is None:
            idx = len(self._index) + 1
            self._index[fid] = idx
        return idx

    def lookup(self, fid: str) -> int:
        """Index of fid, or the reserved out-of-vocabulary row 0."""
        return self._index.get(fid, OOV_INDEX)

    def __contains__(self, fid: str) -> bool:
        return fid in self._index

    def __len__(self) -> int:
        return len(self._index)

    @property
    def size(self) -> int:
        """Number of embedding rows, including the reserved row 0."""
        return len(self._index) + 1

    def ids_in_index_order(self) -> list[str]:
        return sorted(self._index, key=self._index.__getitem__)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self._index == other._index


class Dataset:
    """Ingested instances plus cached dense views used by training."""

    def __init__(self, schema: Schema, vocab: Vocabulary, instances: list[Instance]):
        self.schema = schema
        self.vocab = vocab
        self.instances = instances
        self._labels: np.ndarray | None = None
        self._indices: np.ndarray | None = None
        self._address_cache: dict = {}

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def labels(self) -> np.ndarray:
        if self._labels is None:
            self._labels = np.array([ins.label for ins in self.instances], dtype=np.float64)
        return self._labels

    @property
    def index_matrix(self) -> np.ndarray:
        if self._indices is None:
            self._indices = np.array(
                [ins.vocab_indices for ins in self.instances], dtype=np.int64
            )
        return self._indices

    def cross_addresses(self, pairs: Sequence[tuple[int, int]], codebook) -> np.ndarray:
        """Codeword addresses for every (instance, pair, hash function).

        Addresses depend only on identities and the codebook's (n, m, seed),
        so they are computed once per configuration and memoized per distinct
        cross identity.
        """
        key = (codebook.codeword_count, codebook.hash_count, codebook.seed, tuple(pairs))
        cached = self._address_cache.get(key)
        if cached is not None:
            return cached
        memo: dict[str, tuple[int, ...]] = {}
        out = np.empty((len(self.instances), len(pairs), codebook.hash_count), dtype=np.int64)
        for row, ins in enumerate(self.instances):
            ids = ins.feature_ids
            for col, (i, j) in enumerate(pairs):
                cid = cross_id(ids[i], i, ids[j], j)
                addr = memo.get(cid)
                if addr is None:
                    addr = codebook.address_set(cid)
                    memo[cid] = addr
                out[row, col, :] = addr
        self._address_cache[key] = out
        return out


def ingest(
    path, schema: Schema, vocab: Vocabulary | None = None
) -> tuple[Dataset, Vocabulary]:
    """Read a labelled CSV into a Dataset.

    With no vocabulary given, one is built in first-seen order (rows in file
    order, fields in index order). With a frozen vocabulary, unseen identities
    map to the reserved row 0. Extra CSV columns are ignored; a missing field
    or label column, an unparsable numeric, or a label outside {0, 1} is a
    hard error naming the offender.
    """
    building = vocab is None
    vocab = Vocabulary() if vocab is None else vocab
    instances: list[Instance] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a CSV header")
        col_of = {name: pos for pos, name in enumerate(header)}
        missing = [f.name for f in schema.by_index if f.name not in col_of]
        if schema.label_column not in col_of:
            missing.append(schema.label_column)
        if missing:
            raise DataError(f"{path}: missing columns {missing}; header is {header}")
        field_cols = [col_of[f.name] for f in schema.by_index]
        label_col = col_of[schema.label_column]
        width = max(field_cols + [label_col]) + 1
        for row in reader:
            line = reader.line_num
            if len(row) < width:
                raise DataError(f"{path} line {line}: expected {width} columns, got {len(row)}")
            raw_label = row[label_col].strip()
            if raw_label not in ("0", "1"):
                raise DataError(f"{path} line {line}: label must be 0 or 1, got {raw_label!r}")
            fids = []
            for field, col in zip(schema.by_index, field_cols):
                raw = row[col]
                if field.kind == NUMERICAL:
                    try:
                        value = float(raw)
                    except ValueError:
                        raise DataError(
                            f"{path} line {line}: field {field.name!r} is not numeric: {raw!r}"
                        )
                    try:
                        fids.append(feature_id(field, value, schema.decimal_places))
                    except DataError as exc:
                        raise DataError(f"{path} line {line}: {exc}")
                else:
                    fids.append(feature_id(field, raw, schema.decimal_places))
            rows = tuple(vocab.add(fid) if building else vocab.lookup(fid) for fid in fids)
            instances.append(Instance(int(raw_label), tuple(fids), rows))
    return Dataset(schema, vocab, instances), vocab

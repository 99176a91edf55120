"""Synthetic click data whose only signal lives in chosen field pairs.

Field values are drawn uniformly and independently, so no single field
carries information on its own beyond what its pair tables induce. Each
informative pair owns a table of click probabilities, one per value
combination; an instance's click probability is the mean of its informative
cells (or the base rate when no pair is informative), and the label is a
Bernoulli draw from it. Because the exact per-instance probability is known,
the generator also writes it out for the test split, giving every experiment
a computable performance ceiling.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import CATEGORICAL, FieldSpec, Schema
from .errors import ConfigError, DataError
from .metrics import auc

LABEL_COLUMN = "label"
ORACLE_COLUMN = "bayes_p"

DEFAULT_P_LOW = 0.05
DEFAULT_P_HIGH = 0.95


@dataclass(frozen=True, eq=False)
class PairTable:
    """Click-probability table of one informative unordered field pair."""

    first: int
    second: int
    probs: np.ndarray  # card(first) x card(second), entries in (0, 1)


@dataclass(frozen=True, eq=False)
class GeneratorSpec:
    """A full description of one synthetic task."""

    cardinalities: tuple[int, ...]
    informative: tuple[PairTable, ...] = ()
    base_rate: float = 0.5
    n_train: int = 1000
    n_valid: int = 200
    n_test: int = 200
    seed: int = 0
    decimal_places: int = 5

    def __post_init__(self) -> None:
        if len(self.cardinalities) < 2:
            raise ConfigError(f"need at least 2 fields; got {len(self.cardinalities)}")
        if any(c < 1 for c in self.cardinalities):
            raise ConfigError(f"cardinalities must be >= 1; got {self.cardinalities}")
        seen = set()
        for table in self.informative:
            i, j = table.first, table.second
            if not (0 <= i < j < len(self.cardinalities)):
                raise ConfigError(f"informative pair ({i}, {j}) is not canonical or in range")
            if (i, j) in seen:
                raise ConfigError(f"informative pair ({i}, {j}) listed twice")
            seen.add((i, j))
            expected = (self.cardinalities[i], self.cardinalities[j])
            if table.probs.shape != expected:
                raise ConfigError(
                    f"pair ({i}, {j}) table is {table.probs.shape}; expected {expected}"
                )
            if np.any(table.probs <= 0.0) or np.any(table.probs >= 1.0):
                raise ConfigError(f"pair ({i}, {j}) probabilities must lie in (0, 1)")
        if not 0.0 < self.base_rate < 1.0:
            raise ConfigError(f"base rate must lie in (0, 1); got {self.base_rate}")
        for name in ("n_train", "n_valid", "n_test"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1; got {getattr(self, name)}")

    @property
    def n_fields(self) -> int:
        return len(self.cardinalities)

    def schema(self) -> Schema:
        fields = [
            FieldSpec(f"f{i}", i, CATEGORICAL) for i in range(self.n_fields)
        ]
        return Schema(fields, LABEL_COLUMN, self.decimal_places)


def random_tables(
    cardinalities,
    pairs,
    rng: np.random.Generator,
    p_low: float = DEFAULT_P_LOW,
    p_high: float = DEFAULT_P_HIGH,
) -> tuple[PairTable, ...]:
    """Independent uniform probability tables for the given canonical pairs."""
    if not 0.0 < p_low < p_high < 1.0:
        raise ConfigError(f"need 0 < p_low < p_high < 1; got [{p_low}, {p_high}]")
    tables = []
    for i, j in pairs:
        shape = (cardinalities[i], cardinalities[j])
        tables.append(PairTable(i, j, rng.uniform(p_low, p_high, size=shape)))
    return tuple(tables)


def parse_generator_spec(path, seed_override: int | None = None) -> GeneratorSpec:
    """Read a key=value spec file; informative tables are drawn from the seed.

    Keys: cardinalities (comma list, required), informative (semicolon list of
    i:j pairs), p_low, p_high, base_rate, n_train, n_valid, n_test, seed,
    decimal_places. Unknown keys and malformed lines are hard errors naming
    the line. A seed override replaces the file's seed before the tables are
    drawn, so it changes the whole task, not just the sampling.
    """
    raw: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise ConfigError(f"{path} line {lineno}: expected key=value, got {line!r}")
            key, _, value = text.partition("=")
            key = key.strip()
            if key in raw:
                raise ConfigError(f"{path} line {lineno}: duplicate key {key!r}")
            raw[key] = value.strip()
    known = {
        "cardinalities", "informative", "p_low", "p_high", "base_rate",
        "n_train", "n_valid", "n_test", "seed", "decimal_places",
    }
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")
    if "cardinalities" not in raw:
        raise ConfigError(f"{path}: missing required key 'cardinalities'")
    try:
        cards = tuple(int(c) for c in raw["cardinalities"].split(","))
    except ValueError:
        raise ConfigError(f"{path}: bad cardinalities {raw['cardinalities']!r}")
    pairs: list[tuple[int, int]] = []
    if raw.get("informative"):
        for chunk in raw["informative"].split(";"):
            bits = chunk.split(":")
            try:
                i, j = int(bits[0]), int(bits[1])
            except (ValueError, IndexError):
                raise ConfigError(f"{path}: bad informative pair {chunk!r}")
            pairs.append((i, j))

    def _float(key: str, default: float) -> float:
        try:
            return float(raw.get(key, default))
        except ValueError:
            raise ConfigError(f"{path}: bad value for {key}: {raw[key]!r}")

    def _int(key: str, default: int) -> int:
        try:
            return int(raw.get(key, default))
        except ValueError:
            raise ConfigError(f"{path}: bad value for {key}: {raw[key]!r}")

    seed = _int("seed", 0) if seed_override is None else seed_override
    table_rng = np.random.default_rng([seed, 0])
    tables = random_tables(
        cards, pairs, table_rng, _float("p_low", DEFAULT_P_LOW), _float("p_high", DEFAULT_P_HIGH)
    )
    return GeneratorSpec(
        cardinalities=cards,
        informative=tables,
        base_rate=_float("base_rate", 0.5),
        n_train=_int("n_train", 1000),
        n_valid=_int("n_valid", 200),
        n_test=_int("n_test", 200),
        seed=seed,
        decimal_places=_int("decimal_places", 5),
    )


def sample_split(
    spec: GeneratorSpec, count: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw (values, bayes probabilities, labels) for `count` instances.

    values is count x f of per-field value indices; the Bayes probability is
    the mean informative-cell probability (base rate if none are informative).
    """
    values = np.empty((count, spec.n_fields), dtype=np.int64)
    for i, card in enumerate(spec.cardinalities):
        values[:, i] = rng.integers(0, card, size=count)
    if spec.informative:
        stacked = [t.probs[values[:, t.first], values[:, t.second]] for t in spec.informative]
        bayes = np.mean(stacked, axis=0)
    else:
        bayes = np.full(count, spec.base_rate)
    labels = (rng.random(count) < bayes).astype(np.int64)
    return values, bayes, labels


@dataclass(frozen=True)
class GeneratedData:
    """Paths of one generated task."""

    schema: Path
    train: Path
    valid: Path
    test: Path
    oracle: Path


def generate(spec: GeneratorSpec, out_dir) -> GeneratedData:
    """Write schema, three splits, and the test-split probability oracle.

    Fully deterministic: the same spec (including seed) regenerates every
    file byte for byte. Splits are drawn in train, valid, test order from one
    stream, so sizes of earlier splits change later ones.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = GeneratedData(
        schema=out / "schema.txt",
        train=out / "train.csv",
        valid=out / "valid.csv",
        test=out / "test.csv",
        oracle=out / "oracle.csv",
    )
    spec.schema().save(paths.schema)
    rng = np.random.default_rng([spec.seed, 1])
    header = [f"f{i}" for i in range(spec.n_fields)] + [LABEL_COLUMN]
    for split_path, count in (
        (paths.train, spec.n_train),
        (paths.valid, spec.n_valid),
        (paths.test, spec.n_test),
    ):
        values, bayes, labels = sample_split(spec, count, rng)
        with open(split_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in range(count):
                writer.writerow(
                    [f"v{values[row, i]}" for i in range(spec.n_fields)] + [str(labels[row])]
                )
        if split_path == paths.test:
            with open(paths.oracle, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow([ORACLE_COLUMN])
                for p in bayes:
                    writer.writerow([repr(float(p))])
    return paths


def read_oracle(path) -> np.ndarray:
    """Read the per-instance probability column written next to a test split."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != [ORACLE_COLUMN]:
            raise DataError(f"{path}: expected header [{ORACLE_COLUMN!r}]; got {header}")
        return np.array([float(row[0]) for row in reader], dtype=np.float64)


def bayes_auc(oracle_path, test_path, schema: Schema) -> float:
    """Ranking ceiling: AUC of the exact probabilities against the labels."""
    bayes = read_oracle(oracle_path)
    labels = []
    with open(test_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or schema.label_column not in header:
            raise DataError(f"{test_path}: no {schema.label_column!r} column")
        col = header.index(schema.label_column)
        for row in reader:
            labels.append(float(row[col]))
    if len(labels) != bayes.size:
        raise DataError(
            f"oracle has {bayes.size} rows but {test_path} has {len(labels)} instances"
        )
    return auc(np.array(labels), bayes)

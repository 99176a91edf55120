"""Field-importance rankings for choosing key interaction fields.

Two rankings are offered: feature number (how many distinct identities a
field produced, straight from the vocabulary) and attention accumulation (the
signed sum of a trained model's cross-pair attention scores over a held-out
dataset). The top fields of either ranking can then restrict cross-feature
generation to pairs touching at least one chosen field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, Schema, Vocabulary
from .errors import ConfigError
from .hcnet import gas_position
from .model import ModelParams


@dataclass(frozen=True)
class FieldScore:
    """One field's score in a ranking (rank 1 is the highest score)."""

    index: int
    name: str
    score: float
    rank: int


@dataclass(frozen=True)
class FieldScoreReport:
    """A full ranking; entries sorted by rank."""

    method: str
    scores: tuple[FieldScore, ...]

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "scores": [
                {"field": s.index, "name": s.name, "score": s.score, "rank": s.rank}
                for s in self.scores
            ],
        }

    def to_table(self) -> str:
        rows = [("rank", "field", "name", "score")]
        rows += [(str(s.rank), str(s.index), s.name, f"{s.score:.6g}") for s in self.scores]
        widths = [max(len(r[c]) for r in rows) for c in range(4)]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)) for row in rows]
        return "\n".join(lines)


def _build_report(method: str, schema: Schema, raw_scores) -> FieldScoreReport:
    # Descending score; ties broken by ascending field index.
    order = sorted(range(schema.n_fields), key=lambda i: (-raw_scores[i], i))
    by_index = {f.index: f for f in schema.fields}
    scores = tuple(
        FieldScore(index=i, name=by_index[i].name, score=float(raw_scores[i]), rank=rank)
        for rank, i in enumerate(order, start=1)
    )
    return FieldScoreReport(method=method, scores=scores)


def fnr_scores(vocab: Vocabulary, schema: Schema) -> FieldScoreReport:
    """Rank fields by how many distinct identities each produced.

    The reserved out-of-vocabulary row belongs to no field and never counts.
    """
    counts = [0] * schema.n_fields
    for fid in vocab.ids_in_index_order():
        index = int(fid.split("_", 1)[0])
        if not 0 <= index < schema.n_fields:
            raise ConfigError(
                f"vocabulary identity {fid!r} names field {index}, "
                f"but the schema has {schema.n_fields} fields"
            )
        counts[index] += 1
    return _build_report("fnr", schema, counts)


def far_scores(
    params: ModelParams, dataset: Dataset, batch_size: int = 4096
) -> FieldScoreReport:
    """Rank fields by signed attention accumulated over a dataset.

    The attention head reads only the 1-order embeddings, so this runs just
    the embedding lookup and the attention projections against frozen
    parameters. Scores are additive over dataset shards. Signs are kept: a
    field whose pairs attract negative attention scores low.
    """
    if params.hcnet is None:
        raise ConfigError("attention ranking needs a model with the cross-feature layer")
    if dataset.schema.n_fields != params.n_fields:
        raise ConfigError(
            f"dataset has {dataset.schema.n_fields} fields; model expects {params.n_fields}"
        )
    f, d = params.n_fields, params.embedding_dim
    emb = params.embedding.data
    w_hidden = params.hcnet.attn_hidden.data
    w_out = params.hcnet.attn_out.data
    totals = np.zeros(f * (f - 1), dtype=np.float64)
    idx = dataset.index_matrix
    for lo in range(0, idx.shape[0], batch_size):
        rows = idx[lo : lo + batch_size]
        order1 = emb[rows.ravel()].reshape(rows.shape[0], f * d)
        scores = np.maximum(order1 @ w_hidden, 0.0) @ w_out
        totals += scores.sum(axis=0)
    per_field = [
        sum(totals[gas_position(f, i, j)] for j in range(f) if j != i) for i in range(f)
    ]
    return _build_report("far", dataset.schema, per_field)


def select_kif(report: FieldScoreReport, top_k: int) -> frozenset[int]:
    """The top_k ranked field indices, as a key-interaction field set."""
    if not 1 <= top_k <= len(report.scores):
        raise ConfigError(
            f"top_k must be in [1, {len(report.scores)}]; got {top_k}"
        )
    return frozenset(s.index for s in report.scores if s.rank <= top_k)

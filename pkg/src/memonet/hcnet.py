"""The multi-hash codebook network: restore, weight, and shrink cross features.

For every generated field pair, the codeword chunks addressed by the pair's
cross identity are restored into one d-wide vector, either linearly (LMR: the
flattened chunks under a single projection) or attentively (AMR: a mask
computed from the two member embeddings gates each chunk element first).
A global attention head (GAS) scores every ordered pair from the 1-order
embeddings, and each field's restored neighbours are combined under those
scores into a fixed-width layer output, so downstream width never depends on
how many pairs were generated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .codebook import Codebook
from .data import Instance, enumerate_crosses
from .errors import ConfigError, ShapeError
from .tensor import (
    GradTape,
    Tensor,
    add,
    concat_cols,
    elementwise_mul,
    flatten,
    matmul,
    relu,
    scale_rows,
    slice_cols,
)

LMR = "lmr"
AMR = "amr"
RESTORE_MODES = (LMR, AMR)


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> Tensor:
    """Weight matrix drawn uniformly with the usual fan-balanced limit."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=(fan_in, fan_out)))


@dataclass
class HcnetParams:
    """All learnable tensors of the cross-feature layer. No bias anywhere.

    restore_proj : (m*l, d)     flattened chunks -> restored vector
    mask_hidden  : (2d, s)      pair embeddings -> mask hidden (attentive mode)
    mask_out     : (s, m*l)     mask hidden -> elementwise chunk gate
    attn_hidden  : (f*d, s)     1-order embeddings -> attention hidden
    attn_out     : (s, f*(f-1)) attention hidden -> ordered-pair scores
    """

    restore_proj: Tensor
    mask_hidden: Tensor
    mask_out: Tensor
    attn_hidden: Tensor
    attn_out: Tensor
    restore_mode: str

    def __post_init__(self) -> None:
        if self.restore_mode not in RESTORE_MODES:
            raise ConfigError(f"restore mode must be one of {RESTORE_MODES}; got {self.restore_mode!r}")

    @classmethod
    def initialize(
        cls,
        n_fields: int,
        embedding_dim: int,
        codeword_dim: int,
        hash_count: int,
        hidden: int,
        restore_mode: str,
        rng: np.random.Generator,
    ) -> "HcnetParams":
        chunk_width = hash_count * codeword_dim
        pair_slots = n_fields * (n_fields - 1)
        return cls(
            restore_proj=xavier_uniform(rng, chunk_width, embedding_dim),
            mask_hidden=xavier_uniform(rng, 2 * embedding_dim, hidden),
            mask_out=xavier_uniform(rng, hidden, chunk_width),
            attn_hidden=xavier_uniform(rng, n_fields * embedding_dim, hidden),
            attn_out=xavier_uniform(rng, hidden, pair_slots),
            restore_mode=restore_mode,
        )

    def tensors(self) -> list[tuple[str, Tensor]]:
        return [
            ("hcnet.restore_proj", self.restore_proj),
            ("hcnet.mask_hidden", self.mask_hidden),
            ("hcnet.mask_out", self.mask_out),
            ("hcnet.attn_hidden", self.attn_hidden),
            ("hcnet.attn_out", self.attn_out),
        ]


def gas_position(n_fields: int, i: int, j: int) -> int:
    """Column of the ordered pair (i, j) in the attention score layout.

    Scores are grouped by first field: group i holds (i, j) for all j != i in
    ascending j.
    """
    if i == j or not (0 <= i < n_fields and 0 <= j < n_fields):
        raise ConfigError(f"bad ordered pair ({i}, {j}) for {n_fields} fields")
    return i * (n_fields - 1) + (j if j < i else j - 1)


def lmr_restore(tape: GradTape | None, chunks: Tensor, params: HcnetParams) -> Tensor:
    """Linear restore: project the flattened chunk rows, no nonlinearity."""
    return matmul(tape, flatten(tape, chunks), params.restore_proj)


def amr_restore(
    tape: GradTape | None,
    chunks: Tensor,
    v_lo: Tensor,
    v_hi: Tensor,
    params: HcnetParams,
) -> Tensor:
    """Attentive restore: gate each chunk element before the projection.

    v_lo and v_hi are the pair members' 1-order embeddings in canonical field
    order (lower field index first); the gate has no terminal nonlinearity.
    """
    m_times_l = chunks.shape[0] * chunks.shape[1]
    if params.mask_out.shape[1] != m_times_l:
        raise ShapeError(
            f"mask output width {params.mask_out.shape[1]} does not fit chunks {chunks.shape}"
        )
    pair_vec = concat_cols(tape, [v_lo, v_hi])
    gate = matmul(tape, relu(tape, matmul(tape, pair_vec, params.mask_hidden)), params.mask_out)
    gated = elementwise_mul(tape, gate, flatten(tape, chunks))
    return matmul(tape, gated, params.restore_proj)


def gas_weights(tape: GradTape | None, order1: Tensor, params: HcnetParams) -> Tensor:
    """Ordered-pair attention scores from the concatenated 1-order embeddings.

    Unbounded sign: no softmax and no terminal nonlinearity.
    """
    hidden = relu(tape, matmul(tape, order1, params.attn_hidden))
    return matmul(tape, hidden, params.attn_out)


def shrink(
    tape: GradTape | None,
    restored: Mapping[tuple[int, int], Tensor],
    weights: Tensor,
    n_fields: int,
    embedding_dim: int,
) -> Tensor:
    """Combine each field's restored neighbours under its attention scores.

    Output column block i is sum over j != i of weights[(i, j)] times the
    restored vector of the unordered pair {i, j}. Every unordered pair must be
    present in `restored`.
    """
    expected = n_fields * (n_fields - 1)
    if weights.shape[1] != expected:
        raise ShapeError(f"expected {expected} attention scores; got {weights.shape}")
    parts = []
    for i in range(n_fields):
        acc = None
        for j in range(n_fields):
            if j == i:
                continue
            key = (min(i, j), max(i, j))
            vec = restored.get(key)
            if vec is None:
                raise ShapeError(f"no restored vector for field pair {key}")
            pos = gas_position(n_fields, i, j)
            term = scale_rows(tape, slice_cols(tape, weights, pos, pos + 1), vec)
            acc = term if acc is None else add(tape, acc, term)
        parts.append(acc)
    return concat_cols(tape, parts)


def hcnet_layer(
    tape: GradTape | None,
    codebook: Codebook,
    params: HcnetParams,
    field_vecs: Sequence[Tensor],
    order1: Tensor,
    addresses: np.ndarray,
    pairs: Sequence[tuple[int, int]],
) -> tuple[Tensor, Tensor]:
    """Batched cross-feature layer over precomputed addresses.

    field_vecs[i] is the B x d embedding of field i, order1 their B x (f d)
    concatenation, and addresses has shape (B, len(pairs), hash_count) aligned
    with `pairs` (each pair canonical, i < j). Pairs absent from `pairs` (a
    key-interaction restriction) contribute zero to every field block and
    their attention scores are ignored. Returns the B x (f d) layer output and
    the raw B x f(f-1) attention scores.
    """
    n_fields = len(field_vecs)
    d = field_vecs[0].shape[1] if field_vecs else 0
    batch = order1.shape[0]
    if addresses.shape != (batch, len(pairs), codebook.hash_count):
        raise ShapeError(
            f"addresses shape {addresses.shape} does not match "
            f"(batch {batch}, pairs {len(pairs)}, hashes {codebook.hash_count})"
        )

    restored: dict[tuple[int, int], Tensor] = {}
    for col, (i, j) in enumerate(pairs):
        chunk_cols = [
            codebook.gather(tape, addresses[:, col, t]) for t in range(codebook.hash_count)
        ]
        flat_chunks = concat_cols(tape, chunk_cols)
        if params.restore_mode == LMR:
            restored[(i, j)] = matmul(tape, flat_chunks, params.restore_proj)
        else:
            pair_vec = concat_cols(tape, [field_vecs[i], field_vecs[j]])
            gate = matmul(
                tape, relu(tape, matmul(tape, pair_vec, params.mask_hidden)), params.mask_out
            )
            gated = elementwise_mul(tape, gate, flat_chunks)
            restored[(i, j)] = matmul(tape, gated, params.restore_proj)

    scores = gas_weights(tape, order1, params)

    parts = []
    for i in range(n_fields):
        acc = None
        for j in range(n_fields):
            if j == i:
                continue
            key = (min(i, j), max(i, j))
            vec = restored.get(key)
            if vec is None:
                continue
            pos = gas_position(n_fields, i, j)
            term = scale_rows(tape, slice_cols(tape, scores, pos, pos + 1), vec)
            acc = term if acc is None else add(tape, acc, term)
        parts.append(acc if acc is not None else Tensor.zeros(batch, d))
    return concat_cols(tape, parts), scores


def hcnet_forward(
    tape: GradTape | None,
    instance: Instance,
    field_vecs: Sequence[Tensor],
    codebook: Codebook,
    params: HcnetParams,
    kif: frozenset[int] | None = None,
) -> Tensor:
    """Cross-feature layer output for one instance (1 x f*d).

    field_vecs are the instance's f 1-order embeddings, one 1 x d row each.
    """
    n_fields = len(instance.feature_ids)
    if len(field_vecs) != n_fields:
        raise ShapeError(
            f"instance has {n_fields} fields but {len(field_vecs)} embeddings were given"
        )
    crosses = enumerate_crosses(instance, kif)
    pairs = [(i, j) for i, j, _ in crosses]
    addresses = np.array(
        [[codebook.address_set(cid) for _, _, cid in crosses]], dtype=np.int64
    )
    order1 = concat_cols(tape, list(field_vecs))
    out, _ = hcnet_layer(tape, codebook, params, field_vecs, order1, addresses, pairs)
    return out

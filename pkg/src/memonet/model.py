"""Model assembly, manual training loop, and self-describing checkpoints.

The plain DNN feeds the concatenated 1-order embeddings through a ReLU MLP
into a sigmoid click probability. The memorizing variant widens the MLP input
with the cross-feature layer's output, leaving everything else identical, so
the two models differ only by that additive pathway.

Gradients come from replaying the tape backward (no autodiff framework), and
the optimizer is bias-corrected Adam applied row-sparsely: rows whose gradient
is entirely zero, such as codebook rows no instance in the batch addressed,
keep their values and moments bit-exactly.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .codebook import Codebook, CODEWORD_INIT_STD
from .data import Dataset, Instance, Schema, Vocabulary, field_pairs
from .errors import CheckpointError, ConfigError, NonFiniteError, ShapeError
from .hcnet import LMR, RESTORE_MODES, HcnetParams, hcnet_layer, xavier_uniform
from .metrics import evaluate
from .tensor import (
    GradTape,
    Tensor,
    add_bias,
    bce_mean,
    clamp,
    concat_cols,
    gather_rows,
    matmul,
    relu,
    reshape,
    sigmoid,
    slice_cols,
)

MODE_DNN = "dnn"
MODE_MEMONET = "memonet"
MODES = (MODE_DNN, MODE_MEMONET)

PRED_CLAMP = 1e-7
EMBEDDING_INIT_STD = CODEWORD_INIT_STD


@dataclass(frozen=True)
class TrainConfig:
    """Every knob of a training run; defaults follow the reference setup."""

    mode: str = MODE_MEMONET
    restore_mode: str = LMR
    embedding_dim: int = 10
    codeword_dim: int | None = None  # None: same as embedding_dim
    codeword_count: int = 1_000_000
    hash_count: int = 2
    attn_hidden: int = 64
    decimal_places: int = 5
    mlp_layers: tuple[int, ...] = (400, 400, 400)
    kif_fields: frozenset[int] | None = None
    learning_rate: float = 1e-3
    batch_size: int = 1024
    epochs: int = 1
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}; got {self.mode!r}")
        if self.restore_mode not in RESTORE_MODES:
            raise ConfigError(
                f"restore mode must be one of {RESTORE_MODES}; got {self.restore_mode!r}"
            )
        for name in ("embedding_dim", "codeword_count", "attn_hidden", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1; got {getattr(self, name)}")
        if self.codeword_dim is not None and self.codeword_dim < 1:
            raise ConfigError(f"codeword_dim must be >= 1; got {self.codeword_dim}")
        if not 1 <= self.hash_count <= 16:
            raise ConfigError(f"hash_count must be in [1, 16]; got {self.hash_count}")
        if self.decimal_places < 0:
            raise ConfigError(f"decimal_places must be >= 0; got {self.decimal_places}")
        if any(w < 1 for w in self.mlp_layers):
            raise ConfigError(f"mlp layer widths must be >= 1; got {self.mlp_layers}")
        if self.kif_fields is not None and not self.kif_fields:
            raise ConfigError("kif_fields must be None or non-empty")
        if self.learning_rate < 0:
            raise ConfigError(f"learning_rate must be >= 0; got {self.learning_rate}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0; got {self.epochs}")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must be in [0, 1); got {getattr(self, name)}")
        if self.adam_eps <= 0:
            raise ConfigError(f"adam_eps must be > 0; got {self.adam_eps}")

    @property
    def resolved_codeword_dim(self) -> int:
        return self.embedding_dim if self.codeword_dim is None else self.codeword_dim

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "restore_mode": self.restore_mode,
            "embedding_dim": self.embedding_dim,
            "codeword_dim": self.codeword_dim,
            "codeword_count": self.codeword_count,
            "hash_count": self.hash_count,
            "attn_hidden": self.attn_hidden,
            "decimal_places": self.decimal_places,
            "mlp_layers": list(self.mlp_layers),
            "kif_fields": None if self.kif_fields is None else sorted(self.kif_fields),
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "adam_beta1": self.adam_beta1,
            "adam_beta2": self.adam_beta2,
            "adam_eps": self.adam_eps,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, raw: dict) -> "TrainConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        kw = dict(raw)
        if "mlp_layers" in kw:
            kw["mlp_layers"] = tuple(kw["mlp_layers"])
        if kw.get("kif_fields") is not None:
            kw["kif_fields"] = frozenset(int(k) for k in kw["kif_fields"])
        return cls(**kw)


class ModelParams:
    """All learnable tensors of one model, with shape validation up front."""

    def __init__(
        self,
        n_fields: int,
        embedding_dim: int,
        embedding: Tensor,
        mlp: Sequence[tuple[Tensor, Tensor]],
        pred_w: Tensor,
        pred_b: Tensor,
        hcnet: HcnetParams | None = None,
        codebook: Codebook | None = None,
        kif_fields: frozenset[int] | None = None,
    ) -> None:
        if n_fields < 2:
            raise ConfigError(f"need at least 2 fields; got {n_fields}")
        if (hcnet is None) != (codebook is None):
            raise ConfigError("cross-feature params and codebook must be given together")
        d = embedding_dim
        if embedding.shape[1] != d:
            raise ShapeError(
                f"embedding table is {embedding.shape}; expected {d} columns"
            )
        width = n_fields * d * (2 if hcnet is not None else 1)
        for layer, (w, b) in enumerate(mlp):
            if w.shape[0] != width:
                raise ShapeError(
                    f"mlp layer {layer}: weight is {w.shape}; expected {width} input rows"
                )
            if b.shape != (1, w.shape[1]):
                raise ShapeError(
                    f"mlp layer {layer}: bias is {b.shape}; expected (1, {w.shape[1]})"
                )
            width = w.shape[1]
        if pred_w.shape != (width, 1):
            raise ShapeError(f"prediction weights are {pred_w.shape}; expected ({width}, 1)")
        if pred_b.shape != (1, 1):
            raise ShapeError(f"prediction bias is {pred_b.shape}; expected (1, 1)")
        if hcnet is not None:
            assert codebook is not None
            chunk_width = codebook.hash_count * codebook.codeword_dim
            expectations = [
                ("hcnet.restore_proj", hcnet.restore_proj.shape, (chunk_width, d)),
                (
                    "hcnet.mask_hidden",
                    hcnet.mask_hidden.shape,
                    (2 * d, hcnet.mask_hidden.shape[1]),
                ),
                (
                    "hcnet.mask_out",
                    hcnet.mask_out.shape,
                    (hcnet.mask_hidden.shape[1], chunk_width),
                ),
                (
                    "hcnet.attn_hidden",
                    hcnet.attn_hidden.shape,
                    (n_fields * d, hcnet.attn_hidden.shape[1]),
                ),
                (
                    "hcnet.attn_out",
                    hcnet.attn_out.shape,
                    (hcnet.attn_hidden.shape[1], n_fields * (n_fields - 1)),
                ),
            ]
            for name, actual, expected in expectations:
                if actual != expected:
                    raise ShapeError(f"{name} is {actual}; expected {expected}")
        self.n_fields = n_fields
        self.embedding_dim = d
        self.embedding = embedding
        self.mlp = list(mlp)
        self.pred_w = pred_w
        self.pred_b = pred_b
        self.hcnet = hcnet
        self.codebook = codebook
        self.kif_fields = kif_fields
        self.pairs = field_pairs(n_fields, kif_fields) if hcnet is not None else ()

    @property
    def mode(self) -> str:
        return MODE_DNN if self.hcnet is None else MODE_MEMONET

    @classmethod
    def build(
        cls, config: TrainConfig, n_fields: int, vocab_size: int, rng: np.random.Generator
    ) -> "ModelParams":
        """Initialize a fresh model; the draw order below is part of the
        determinism contract (embedding, codebook, cross layer, MLP, head)."""
        d = config.embedding_dim
        embedding = Tensor(rng.normal(0.0, EMBEDDING_INIT_STD, size=(vocab_size, d)))
        codebook = None
        hc = None
        if config.mode == MODE_MEMONET:
            codebook = Codebook.initialize(
                config.codeword_count,
                config.resolved_codeword_dim,
                config.hash_count,
                config.seed,
                rng,
            )
            hc = HcnetParams.initialize(
                n_fields,
                d,
                config.resolved_codeword_dim,
                config.hash_count,
                config.attn_hidden,
                config.restore_mode,
                rng,
            )
        width = n_fields * d * (2 if config.mode == MODE_MEMONET else 1)
        mlp = []
        for out_width in config.mlp_layers:
            mlp.append((xavier_uniform(rng, width, out_width), Tensor.zeros(1, out_width)))
            width = out_width
        pred_w = xavier_uniform(rng, width, 1)
        pred_b = Tensor.zeros(1, 1)
        return cls(
            n_fields,
            d,
            embedding,
            mlp,
            pred_w,
            pred_b,
            hcnet=hc,
            codebook=codebook,
            kif_fields=config.kif_fields,
        )

    def named_tensors(self) -> list[tuple[str, Tensor]]:
        out = [("embedding", self.embedding)]
        if self.codebook is not None:
            out.append(("codebook", self.codebook.matrix))
        if self.hcnet is not None:
            out.extend(self.hcnet.tensors())
        for layer, (w, b) in enumerate(self.mlp):
            out.append((f"mlp{layer}.w", w))
            out.append((f"mlp{layer}.b", b))
        out.append(("pred.w", self.pred_w))
        out.append(("pred.b", self.pred_b))
        return out

    def copy(self) -> "ModelParams":
        hc = None
        cb = None
        if self.hcnet is not None:
            hc = HcnetParams(
                self.hcnet.restore_proj.copy(),
                self.hcnet.mask_hidden.copy(),
                self.hcnet.mask_out.copy(),
                self.hcnet.attn_hidden.copy(),
                self.hcnet.attn_out.copy(),
                self.hcnet.restore_mode,
            )
            cb = Codebook(self.codebook.matrix.copy(), self.codebook.hash_count, self.codebook.seed)
        return ModelParams(
            self.n_fields,
            self.embedding_dim,
            self.embedding.copy(),
            [(w.copy(), b.copy()) for w, b in self.mlp],
            self.pred_w.copy(),
            self.pred_b.copy(),
            hcnet=hc,
            codebook=cb,
            kif_fields=self.kif_fields,
        )

    def zero_grads(self) -> None:
        for _, t in self.named_tensors():
            t.zero_grad()


def embed_instance(
    tape: GradTape | None, instance: Instance, table: Tensor, embedding_dim: int
) -> tuple[list[Tensor], Tensor]:
    """One instance's per-field embedding rows and their 1 x (f d) concat."""
    idx = np.asarray(instance.vocab_indices, dtype=np.int64)
    rows = gather_rows(tape, table, idx)
    order1 = reshape(tape, rows, 1, idx.size * embedding_dim)
    field_vecs = [
        slice_cols(tape, order1, i * embedding_dim, (i + 1) * embedding_dim)
        for i in range(idx.size)
    ]
    return field_vecs, order1


def forward_batch(
    tape: GradTape | None,
    params: ModelParams,
    indices: np.ndarray,
    addresses: np.ndarray | None,
) -> tuple[Tensor, Tensor | None]:
    """Click probabilities (clamped into the open unit interval) for a batch.

    indices is B x f vocabulary rows; addresses is the aligned
    B x len(pairs) x hash_count codeword address block (memorizing mode only).
    Also returns the raw attention scores when the cross layer ran.
    """
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 2 or idx.shape[1] != params.n_fields:
        raise ShapeError(f"indices are {idx.shape}; expected (batch, {params.n_fields})")
    batch, f = idx.shape
    d = params.embedding_dim
    emb_rows = gather_rows(tape, params.embedding, idx.ravel())
    order1 = reshape(tape, emb_rows, batch, f * d)
    scores = None
    if params.hcnet is not None:
        if addresses is None:
            raise ConfigError("memorizing mode needs precomputed codeword addresses")
        field_vecs = [slice_cols(tape, order1, i * d, (i + 1) * d) for i in range(f)]
        cross, scores = hcnet_layer(
            tape, params.codebook, params.hcnet, field_vecs, order1, addresses, params.pairs
        )
        h = concat_cols(tape, [order1, cross])
    else:
        h = order1
    for w, b in params.mlp:
        h = relu(tape, add_bias(tape, matmul(tape, h, w), b))
    z = add_bias(tape, matmul(tape, h, params.pred_w), params.pred_b)
    probs = clamp(tape, sigmoid(tape, z), PRED_CLAMP, 1.0 - PRED_CLAMP)
    return probs, scores


def forward(params: ModelParams, instance: Instance) -> float:
    """Click probability of a single instance."""
    idx = np.asarray([instance.vocab_indices], dtype=np.int64)
    addresses = None
    if params.hcnet is not None:
        from .data import cross_id

        ids = instance.feature_ids
        addresses = np.array(
            [[params.codebook.address_set(cross_id(ids[i], i, ids[j], j)) for i, j in params.pairs]],
            dtype=np.int64,
        )
    probs, _ = forward_batch(None, params, idx, addresses)
    return float(probs.data[0, 0])


def predict(params: ModelParams, dataset: Dataset, batch_size: int = 4096) -> np.ndarray:
    """Scores for every instance, batched; order matches the dataset."""
    if dataset.schema.n_fields != params.n_fields:
        raise ConfigError(
            f"dataset has {dataset.schema.n_fields} fields; model expects {params.n_fields}"
        )
    idx = dataset.index_matrix
    n = idx.shape[0]
    addr = None
    if params.hcnet is not None:
        addr = dataset.cross_addresses(params.pairs, params.codebook)
    out = np.empty(n, dtype=np.float64)
    for lo in range(0, n, batch_size):
        hi = min(lo + batch_size, n)
        probs, _ = forward_batch(
            None, params, idx[lo:hi], None if addr is None else addr[lo:hi]
        )
        out[lo:hi] = probs.data[:, 0]
    return out


class AdamState:
    """Bias-corrected Adam moments, updated row-sparsely.

    A row whose gradient is entirely zero is skipped outright: neither its
    value nor its moments move, so table rows untouched by a batch stay
    bit-identical. Rows with any nonzero gradient get the standard update on
    every element; the step counter is global.
    """

    def __init__(self, params: ModelParams) -> None:
        self.m = {name: np.zeros_like(t.data) for name, t in params.named_tensors()}
        self.v = {name: np.zeros_like(t.data) for name, t in params.named_tensors()}
        self.t = 0

    def step(self, params: ModelParams, config: TrainConfig) -> None:
        self.t += 1
        b1, b2 = config.adam_beta1, config.adam_beta2
        lr, eps = config.learning_rate, config.adam_eps
        correct1 = 1.0 - b1 ** self.t
        correct2 = 1.0 - b2 ** self.t
        for name, tensor in params.named_tensors():
            g = tensor.grad
            if g is None:
                continue
            m, v = self.m[name], self.v[name]
            touched = np.flatnonzero(np.any(g != 0.0, axis=1))
            if touched.size == 0:
                continue
            if touched.size == g.shape[0]:
                m *= b1
                m += (1.0 - b1) * g
                v *= b2
                v += (1.0 - b2) * (g * g)
                tensor.data -= lr * (m / correct1) / (np.sqrt(v / correct2) + eps)
            else:
                gs = g[touched]
                m[touched] = b1 * m[touched] + (1.0 - b1) * gs
                v[touched] = b2 * v[touched] + (1.0 - b2) * (gs * gs)
                tensor.data[touched] -= (
                    lr * (m[touched] / correct1) / (np.sqrt(v[touched] / correct2) + eps)
                )


@dataclass(frozen=True)
class Batch:
    """One training batch: vocab rows, labels, and codeword addresses."""

    indices: np.ndarray
    labels: np.ndarray
    addresses: np.ndarray | None


def train_step(
    batch: Batch, params: ModelParams, adam: AdamState, config: TrainConfig
) -> float:
    """One forward/backward/update pass; returns the batch's mean logloss.

    Parameters and moments update in place. A non-finite loss or gradient
    aborts before any parameter moves.
    """
    params.zero_grads()
    tape = GradTape()
    probs, _ = forward_batch(tape, params, batch.indices, batch.addresses)
    loss = bce_mean(tape, probs, batch.labels)
    value = float(loss.data[0, 0])
    if not np.isfinite(value):
        raise NonFiniteError(f"batch loss is not finite: {value}")
    tape.backward(loss)
    for name, tensor in params.named_tensors():
        g = tensor.grad
        if g is not None and not np.all(np.isfinite(g)):
            raise NonFiniteError(f"gradient of {name} is not finite")
    adam.step(params, config)
    return value


@dataclass(frozen=True)
class EpochStats:
    """Metrics of one training epoch."""

    epoch: int
    train_logloss: float
    valid_logloss: float
    valid_auc: float
    seconds: float

    def to_json_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_logloss": self.train_logloss,
            "valid_logloss": self.valid_logloss,
            "valid_auc": self.valid_auc,
            "seconds": self.seconds,
        }


@dataclass
class FitResult:
    """Best-validation parameters plus the full epoch history."""

    params: ModelParams
    history: list[EpochStats]
    best_epoch: int
    best_valid_auc: float | None


def fit(train: Dataset, valid: Dataset, config: TrainConfig) -> FitResult:
    """Train from scratch and return the best-validation-AUC snapshot.

    Both datasets must share one schema and one vocabulary. Identical inputs
    and config produce an identical history and identical parameters, to the
    last bit; the epoch wall-clock seconds are the only nondeterministic part.
    """
    if train.schema.to_text() != valid.schema.to_text():
        raise ConfigError("train and valid datasets use different schemas")
    if train.vocab != valid.vocab:
        raise ConfigError("train and valid datasets use different vocabularies")
    if len(train) == 0:
        raise ConfigError("training dataset is empty")
    n_fields = train.schema.n_fields
    if config.kif_fields is not None:
        field_pairs(n_fields, config.kif_fields)  # validates the field range
    rng = np.random.default_rng(config.seed)
    params = ModelParams.build(config, n_fields, train.vocab.size, rng)
    adam = AdamState(params)
    train_addr = None
    if params.hcnet is not None:
        train_addr = train.cross_addresses(params.pairs, params.codebook)
    idx = train.index_matrix
    labels = train.labels
    n = len(train)
    best_params = params.copy()
    best_auc: float | None = None
    best_epoch = 0
    history: list[EpochStats] = []
    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        order = rng.permutation(n)
        loss_sum = 0.0
        for lo in range(0, n, config.batch_size):
            rows = order[lo : lo + config.batch_size]
            batch = Batch(
                indices=idx[rows],
                labels=labels[rows],
                addresses=None if train_addr is None else train_addr[rows],
            )
            loss_sum += train_step(batch, params, adam, config) * rows.size
        valid_result = evaluate(params, valid)
        history.append(
            EpochStats(
                epoch=epoch,
                train_logloss=loss_sum / n,
                valid_logloss=valid_result.logloss,
                valid_auc=valid_result.auc,
                seconds=time.perf_counter() - started,
            )
        )
        if best_auc is None or valid_result.auc > best_auc:
            best_auc = valid_result.auc
            best_epoch = epoch
            best_params = params.copy()
    return FitResult(best_params, history, best_epoch, best_auc)


# ---------------------------------------------------------------------------
# Checkpoint format: everything needed to evaluate later, in one binary file.
#   magic, format version,
#   schema text, vocabulary identities (row order), config + metadata JSON,
#   named tensors as shape-prefixed little-endian float64 blocks.
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = b"MHCBNET1"
CHECKPOINT_VERSION = 1


@dataclass
class Checkpoint:
    params: ModelParams
    config: TrainConfig
    schema: Schema
    vocab: Vocabulary
    meta: dict


def _pack_blob(out: bytearray, blob: bytes) -> None:
    out += struct.pack("<I", len(blob))
    out += blob


def save_checkpoint(
    path,
    params: ModelParams,
    config: TrainConfig,
    schema: Schema,
    vocab: Vocabulary,
    meta: dict | None = None,
) -> None:
    """Serialize a model so a later process can reload and evaluate it exactly."""
    out = bytearray()
    out += CHECKPOINT_MAGIC
    out += struct.pack("<I", CHECKPOINT_VERSION)
    _pack_blob(out, schema.to_text().encode("utf-8"))
    ids = vocab.ids_in_index_order()
    out += struct.pack("<I", len(ids))
    for fid in ids:
        _pack_blob(out, fid.encode("utf-8"))
    payload = {
        "config": config.to_json_dict(),
        "n_fields": params.n_fields,
        "meta": meta or {},
    }
    _pack_blob(out, json.dumps(payload, sort_keys=True).encode("utf-8"))
    tensors = params.named_tensors()
    out += struct.pack("<I", len(tensors))
    for name, tensor in tensors:
        _pack_blob(out, name.encode("utf-8"))
        out += struct.pack("<I", 2)
        out += struct.pack("<QQ", *tensor.shape)
        out += np.ascontiguousarray(tensor.data, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(out))


class _Reader:
    def __init__(self, buf: bytes) -> None:
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CheckpointError("checkpoint file is truncated")
        chunk = self.buf[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def blob(self) -> bytes:
        return self.take(self.u32())


def load_checkpoint(path) -> Checkpoint:
    """Reload a checkpoint; tensor shapes are re-validated against the config."""
    with open(path, "rb") as fh:
        reader = _Reader(fh.read())
    if reader.take(8) != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    version = reader.u32()
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    schema = Schema.parse(reader.blob().decode("utf-8"))
    vocab = Vocabulary()
    for _ in range(reader.u32()):
        vocab.add(reader.blob().decode("utf-8"))
    payload = json.loads(reader.blob().decode("utf-8"))
    config = TrainConfig.from_json_dict(payload["config"])
    n_fields = int(payload["n_fields"])
    meta = payload.get("meta", {})
    tensors: dict[str, Tensor] = {}
    for _ in range(reader.u32()):
        name = reader.blob().decode("utf-8")
        ndim = reader.u32()
        if ndim != 2:
            raise CheckpointError(f"{path}: tensor {name!r} has {ndim} dims; expected 2")
        rows, cols = reader.u64(), reader.u64()
        raw = reader.take(rows * cols * 8)
        tensors[name] = Tensor(np.frombuffer(raw, dtype="<f8").reshape(rows, cols).copy())

    def need(name: str) -> Tensor:
        if name not in tensors:
            raise CheckpointError(f"{path}: tensor {name!r} missing from checkpoint")
        return tensors[name]

    embedding = need("embedding")
    expected_rows = vocab.size
    if embedding.shape[0] != expected_rows:
        raise CheckpointError(
            f"{path}: embedding has {embedding.shape[0]} rows; vocabulary implies {expected_rows}"
        )
    hc = None
    cb = None
    if config.mode == MODE_MEMONET:
        cb = Codebook(need("codebook"), config.hash_count, config.seed)
        if cb.codeword_count != config.codeword_count:
            raise CheckpointError(
                f"{path}: codebook has {cb.codeword_count} rows; config says {config.codeword_count}"
            )
        hc = HcnetParams(
            need("hcnet.restore_proj"),
            need("hcnet.mask_hidden"),
            need("hcnet.mask_out"),
            need("hcnet.attn_hidden"),
            need("hcnet.attn_out"),
            config.restore_mode,
        )
    mlp = []
    for layer in range(len(config.mlp_layers)):
        mlp.append((need(f"mlp{layer}.w"), need(f"mlp{layer}.b")))
    try:
        params = ModelParams(
            n_fields,
            config.embedding_dim,
            embedding,
            mlp,
            need("pred.w"),
            need("pred.b"),
            hcnet=hc,
            codebook=cb,
            kif_fields=config.kif_fields,
        )
    except ShapeError as exc:
        raise CheckpointError(f"{path}: checkpoint does not match its config: {exc}")
    return Checkpoint(params, config, schema, vocab, meta)

"""Shared helpers for the test suite.

The finite-difference machinery here is the independent gradient oracle used
throughout: every analytic gradient in the package is checked against central
differences on 64-bit floats. The FNV-1a reference below is a deliberately
separate implementation (a fold over bytes) used to freeze hash test vectors.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

from memonet.data import Dataset, Instance, Schema, Vocabulary
from memonet.hcnet import LMR
from memonet.model import TrainConfig
from memonet.tensor import Tensor


def central_difference(loss_fn, tensor: Tensor, step: float = 1e-5) -> np.ndarray:
    """Numeric gradient of a scalar-valued callable w.r.t. one tensor.

    loss_fn takes no arguments and must re-run the full forward pass; the
    tensor's data is perturbed in place one entry at a time.
    """
    flat = tensor.data.ravel()
    grad = np.zeros_like(flat)
    for k in range(flat.size):
        saved = flat[k]
        flat[k] = saved + step
        hi = loss_fn()
        flat[k] = saved - step
        lo = loss_fn()
        flat[k] = saved
        grad[k] = (hi - lo) / (2.0 * step)
    return grad.reshape(tensor.data.shape)


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Worst-case elementwise relative error with a small absolute floor."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)
    return float(np.max(np.abs(analytic - numeric) / denom))


def reference_fnv1a(data: bytes) -> int:
    """Independent FNV-1a 64-bit digest written as a fold, for cross-checks."""
    return reduce(
        lambda h, b: ((h ^ b) * 0x100000001B3) % 2**64,
        data,
        0xCBF29CE484222325,
    )


def reference_address(identity: str, t: int, n: int, seed: int) -> int:
    """Independent bucket address built on the reference digest."""
    return reference_fnv1a(f"{seed}#{t}#{identity}".encode()) % n


def toy_schema(n_fields: int) -> Schema:
    lines = [f"f{i},categorical" for i in range(n_fields)]
    lines.append("label=label")
    lines.append("k=5")
    return Schema.parse("\n".join(lines) + "\n")


def toy_dataset(n_fields: int, n_rows: int, seed: int, vocab: Vocabulary | None = None,
                values_per_field: int = 3) -> Dataset:
    """Random categorical rows; labels depend on the first field's value."""
    rng = np.random.default_rng(seed)
    schema = toy_schema(n_fields)
    vocab = vocab if vocab is not None else Vocabulary()
    instances = []
    for _ in range(n_rows):
        values = rng.integers(0, values_per_field, size=n_fields)
        ids = tuple(f"{i}_v{values[i]}" for i in range(n_fields))
        idxs = tuple(vocab.add(fid) for fid in ids)
        label = int(rng.random() < (0.2 + 0.6 * (values[0] == 0)))
        instances.append(Instance(label, ids, idxs))
    return Dataset(schema, vocab, instances)


def small_config(**kw) -> TrainConfig:
    """A deliberately tiny memorizing-model config for fast tests."""
    base = dict(
        mode="memonet",
        restore_mode=LMR,
        embedding_dim=2,
        codeword_dim=2,
        codeword_count=7,
        hash_count=2,
        attn_hidden=3,
        mlp_layers=(5,),
        batch_size=4,
        seed=9,
    )
    base.update(kw)
    return TrainConfig(**base)

"""Click-through models that memorize cross features in a hashed codebook.

The package trains two model families over labelled CSV data: a plain
embedding + MLP classifier, and a memorizing variant that looks every field
pair up in a multi-hash codeword table, restores the pair's representation,
and feeds an attention-weighted summary alongside the 1-order embeddings.
Training uses a hand-written reverse-mode tape over float64 numpy matrices;
everything is deterministic given a seed.
"""

from .codebook import Codebook, fnv1a_64, hash_address
from .data import (
    Dataset,
    FieldSpec,
    Instance,
    Schema,
    Vocabulary,
    cross_id,
    enumerate_crosses,
    feature_id,
    field_pairs,
    ingest,
)
from .errors import (
    CheckpointError,
    ConfigError,
    DataError,
    MemoNetError,
    MetricError,
    NonFiniteError,
    ShapeError,
)
from .hcnet import HcnetParams, amr_restore, gas_weights, hcnet_forward, lmr_restore, shrink
from .kif import FieldScoreReport, far_scores, fnr_scores, select_kif
from .metrics import EvalResult, auc, evaluate, logloss
from .model import (
    AdamState,
    Batch,
    Checkpoint,
    EpochStats,
    FitResult,
    ModelParams,
    TrainConfig,
    fit,
    forward,
    load_checkpoint,
    predict,
    save_checkpoint,
    train_step,
)
from .synthetic import GeneratorSpec, PairTable, bayes_auc, generate, random_tables
from .tensor import GradTape, Tensor

__all__ = [
    "AdamState",
    "Batch",
    "Checkpoint",
    "CheckpointError",
    "Codebook",
    "ConfigError",
    "DataError",
    "Dataset",
    "EpochStats",
    "EvalResult",
    "FieldScoreReport",
    "FieldSpec",
    "FitResult",
    "GeneratorSpec",
    "GradTape",
    "HcnetParams",
    "Instance",
    "MemoNetError",
    "MetricError",
    "ModelParams",
    "NonFiniteError",
    "PairTable",
    "Schema",
    "ShapeError",
    "Tensor",
    "TrainConfig",
    "Vocabulary",
    "amr_restore",
    "auc",
    "bayes_auc",
    "cross_id",
    "enumerate_crosses",
    "evaluate",
    "far_scores",
    "feature_id",
    "field_pairs",
    "fit",
    "fnr_scores",
    "fnv1a_64",
    "forward",
    "gas_weights",
    "generate",
    "hash_address",
    "hcnet_forward",
    "ingest",
    "lmr_restore",
    "load_checkpoint",
    "logloss",
    "predict",
    "random_tables",
    "save_checkpoint",
    "select_kif",
    "shrink",
    "train_step",
]

"""A learnable codeword table addressed by hashing feature identities.

Each cross feature owns `hash_count` codeword rows, found by hashing
"<seed>#<t>#<identity>" with FNV-1a (64-bit) and reducing modulo the table
size, for t = 1..hash_count. Addressing is a pure function of the identity
and the (n, m, seed) triple, so any two implementations agree byte for byte.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .tensor import GradTape, Tensor, gather_rows

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

MAX_HASH_COUNT = 16
CODEWORD_INIT_STD = 0.01


def fnv1a_64(data: bytes) -> int:
    """FNV-1a, 64-bit: xor each byte into the state, then multiply."""
    h = FNV64_OFFSET
    for b in data:
        h = ((h ^ b) * FNV64_PRIME) & _MASK64
    return h


def hash_address(feature_id: str, t: int, n: int, seed: int) -> int:
    """Address of hash function t (1-based) for one identity in a table of n."""
    if t < 1:
        raise ConfigError(f"hash function index is 1-based; got {t}")
    if n < 1:
        raise ConfigError(f"codeword count must be >= 1; got {n}")
    payload = f"{seed}#{t}#{feature_id}".encode("utf-8")
    return fnv1a_64(payload) % n


class Codebook:
    """The codeword matrix plus the addressing parameters that describe it."""

    def __init__(self, matrix: Tensor, hash_count: int, seed: int) -> None:
        if not 1 <= hash_count <= MAX_HASH_COUNT:
            raise ConfigError(f"hash count must be in [1, {MAX_HASH_COUNT}]; got {hash_count}")
        if matrix.shape[0] < 1 or matrix.shape[1] < 1:
            raise ConfigError(f"codebook matrix must be non-empty; got {matrix.shape}")
        self.matrix = matrix
        self.hash_count = hash_count
        self.seed = seed

    @classmethod
    def initialize(
        cls,
        codeword_count: int,
        codeword_dim: int,
        hash_count: int,
        seed: int,
        rng: np.random.Generator,
    ) -> "Codebook":
        if codeword_count < 1:
            raise ConfigError(f"codeword count must be >= 1; got {codeword_count}")
        if codeword_dim < 1:
            raise ConfigError(f"codeword dim must be >= 1; got {codeword_dim}")
        matrix = Tensor(rng.normal(0.0, CODEWORD_INIT_STD, size=(codeword_count, codeword_dim)))
        return cls(matrix, hash_count, seed)

    @property
    def codeword_count(self) -> int:
        return self.matrix.shape[0]

    @property
    def codeword_dim(self) -> int:
        return self.matrix.shape[1]

    def address_set(self, feature_id: str) -> tuple[int, ...]:
        """Addresses of all hash functions, in hash-function order."""
        return tuple(
            hash_address(feature_id, t, self.codeword_count, self.seed)
            for t in range(1, self.hash_count + 1)
        )

    def gather(self, tape: GradTape | None, addresses) -> Tensor:
        """Codeword rows at the given addresses (duplicates allowed)."""
        return gather_rows(tape, self.matrix, addresses)

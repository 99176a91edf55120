"""Unit tests for hashing and the codeword matrix.

The digest vectors below were produced by the independent fold-based
reference in conftest and frozen; the first three match the widely published
FNV-1a 64-bit values for the same inputs. Bucket uniformity is checked with a
chi-square test at significance 0.001.
"""

import numpy as np
import pytest
from scipy import stats

from conftest import reference_address, reference_fnv1a

from memonet.codebook import (
    CODEWORD_INIT_STD,
    FNV64_OFFSET,
    FNV64_PRIME,
    Codebook,
    fnv1a_64,
    hash_address,
)
from memonet.errors import ConfigError
from memonet.tensor import GradTape, Tensor

# Frozen digests: input bytes -> FNV-1a 64-bit value.
FROZEN_DIGESTS = {
    b"": 0xCBF29CE484222325,
    b"a": 0xAF63DC4C8601EC8C,
    b"foobar": 0x85944171F73967E8,
    b"hello world": 0x779A65E7023CD2E7,
}

# Frozen addresses: (identity, hash index t, table size n, seed) -> address.
FROZEN_ADDRESSES = {
    ("0_x|1_y", 1, 1024, 42): 340,
    ("0_x|1_y", 2, 1024, 42): 193,
    ("0_x|1_y", 1, 1024, 43): 735,
    ("0_a|3_b", 1, 8192, 0): 6796,
    ("0_a|3_b", 2, 8192, 0): 5481,
    ("2_0.28999|5_c", 1, 64, 7): 0,
    ("2_0.28999|5_c", 2, 64, 7): 41,
    ("1_%7Cpipe|4_z", 3, 4096, 21): 2509,
    ("0_x|1_y", 1, 1, 42): 0,
}


class TestDigest:
    def test_offset_and_prime_are_the_standard_constants(self):
        assert FNV64_OFFSET == 0xCBF29CE484222325
        assert FNV64_PRIME == 0x100000001B3

    def test_frozen_vectors(self):
        for data, want in FROZEN_DIGESTS.items():
            assert fnv1a_64(data) == want

    def test_matches_the_independent_reference_on_random_bytes(self):
        rng = np.random.default_rng(77)
        for _ in range(50):
            data = bytes(rng.integers(0, 256, size=int(rng.integers(0, 40))))
            assert fnv1a_64(data) == reference_fnv1a(data)


class TestHashAddress:
    def test_frozen_vectors(self):
        for (identity, t, n, seed), want in FROZEN_ADDRESSES.items():
            assert hash_address(identity, t, n, seed) == want
            assert reference_address(identity, t, n, seed) == want

    def test_single_bucket_always_addresses_zero(self):
        for identity in ["0_x|1_y", "3_a|4_b", ""]:
            assert hash_address(identity, 1, 1, 9) == 0

    def test_repeated_calls_are_identical(self):
        first = hash_address("0_x|1_y", 1, 1024, 42)
        second = hash_address("0_x|1_y", 1, 1024, 42)
        assert first == second == 340

    def test_hash_index_is_one_based(self):
        with pytest.raises(ConfigError):
            hash_address("0_x|1_y", 0, 1024, 42)

    def test_table_must_be_non_empty(self):
        with pytest.raises(ConfigError):
            hash_address("0_x|1_y", 1, 0, 42)

    def test_buckets_are_uniform_by_chi_square(self):
        buckets = 1024
        counts = np.zeros(buckets, dtype=np.int64)
        rng = np.random.default_rng(2024)
        n_ids = 20_000
        lo = rng.integers(0, 10**9, size=n_ids)
        hi = rng.integers(0, 10**9, size=n_ids)
        for a, b in zip(lo, hi):
            identity = f"0_{a}|1_{b}"
            for t in (1, 2):
                counts[hash_address(identity, t, buckets, 42)] += 1
        expected = counts.sum() / buckets
        statistic = float(((counts - expected) ** 2 / expected).sum())
        critical = float(stats.chi2.ppf(1 - 0.001, buckets - 1))
        assert statistic < critical


class TestCodebook:
    def test_address_set_enumerates_hash_functions_in_order(self):
        book = Codebook(Tensor.zeros(1024, 4), hash_count=2, seed=42)
        assert book.address_set("0_x|1_y") == (340, 193)

    def test_single_hash_reduces_to_one_address(self):
        book = Codebook(Tensor.zeros(1024, 4), hash_count=1, seed=42)
        assert book.address_set("0_x|1_y") == (340,)

    def test_address_sets_are_deterministic(self):
        book = Codebook(Tensor.zeros(8192, 4), hash_count=4, seed=0)
        assert book.address_set("0_a|3_b") == book.address_set("0_a|3_b")

    def test_initialization_scale(self):
        rng = np.random.default_rng(5)
        book = Codebook.initialize(4096, 8, 2, 0, rng)
        sample = book.matrix.data
        assert abs(sample.mean()) < 0.001
        assert abs(sample.std() - CODEWORD_INIT_STD) < 0.001

    def test_hash_count_bounds(self):
        with pytest.raises(ConfigError):
            Codebook(Tensor.zeros(4, 2), hash_count=0, seed=0)
        with pytest.raises(ConfigError):
            Codebook(Tensor.zeros(4, 2), hash_count=17, seed=0)

    def test_gather_of_duplicate_addresses_accumulates_gradients(self):
        book = Codebook(Tensor(np.arange(12.0).reshape(6, 2)), hash_count=2, seed=0)
        tape = GradTape()
        chunks = book.gather(tape, [5, 5])
        np.testing.assert_array_equal(chunks.data, [[10.0, 11.0], [10.0, 11.0]])
        from memonet.tensor import matmul

        loss = matmul(
            tape, matmul(tape, Tensor([[1.0, 1.0]]), chunks), Tensor([[1.0], [1.0]])
        )
        tape.backward(loss)
        grad = book.matrix.grad
        np.testing.assert_array_equal(grad[5], [2.0, 2.0])
        assert not grad[:5].any()

    def test_zero_codebook_gathers_zero_chunks(self):
        book = Codebook(Tensor.zeros(16, 3), hash_count=2, seed=1)
        chunks = book.gather(None, book.address_set("0_p|1_q"))
        np.testing.assert_array_equal(chunks.data, np.zeros((2, 3)))

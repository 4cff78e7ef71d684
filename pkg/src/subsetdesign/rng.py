"""Counter-based seeding helpers for reproducible, order-insensitive randomness.

Every random draw in the library comes from a numpy Philox generator whose
128-bit key is derived from a master seed plus an integer derivation path
(stream id, level, register, ...).  Streams with distinct paths are
independent, so circuits and Monte Carlo shards can be generated in any
order, or in parallel, without changing results.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

MASK64 = (1 << 64) - 1

# Stream ids. Keep stable: they are part of the reproducibility contract.
STREAM_RMCC = 0
STREAM_COIN = 1
STREAM_FINAL_COIN = 2
STREAM_EXACT_PERM = 3
STREAM_EXPERIMENT = 4
STREAM_SHARD = 5
STREAM_ORACLE = 6


def derive_key(master_seed: int, *path: int) -> int:
    """Derive a 128-bit Philox key from a master seed and a derivation path."""
    words = (master_seed & MASK64,) + tuple(p & MASK64 for p in path)
    data = struct.pack(f"<{len(words)}Q", *words)
    return int.from_bytes(hashlib.blake2b(data, digest_size=16).digest(), "little")


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Independent generator for a fixed derivation path."""
    return np.random.Generator(np.random.Philox(key=derive_key(master_seed, *path)))


def shard_seeds(master_seed: int, n_shards: int) -> list[int]:
    """Per-shard sub-seeds; fixed shard boundaries keep results independent of
    the worker count used to process them."""
    return [derive_key(master_seed, STREAM_SHARD, i) & MASK64 for i in range(n_shards)]

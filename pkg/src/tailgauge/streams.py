"""Deterministic counter-based random streams.

Draws are organized in fixed-size blocks. Block ``j`` of a run with seed
``s`` comes from a Philox counter-based generator keyed by ``(s, j)``, so a
block's content depends only on the seed and the block index -- never on
which worker produced it or how many workers there are. Samplers that
assemble blocks in index order are therefore bit-reproducible for a fixed
seed regardless of shard count.

Independent sub-experiments (e.g. Monte Carlo replications) derive their
seeds through :func:`derive_seed`, which mixes ``(seed, index)`` through a
``numpy.random.SeedSequence`` so that nearby user seeds do not produce
overlapping streams.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError

# Draws per block. Small enough that short runs still split across workers,
# large enough that per-block overhead is negligible at 1e7+ draws.
BLOCK_SIZE = 1 << 20

_MAX_SEED = 2**64 - 1


def check_seed(seed: int) -> int:
    """Validate a user-supplied seed (must fit in an unsigned 64-bit word)."""
    if not isinstance(seed, (int, np.integer)):
        raise ConfigurationError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= int(seed) <= _MAX_SEED:
        raise ConfigurationError(f"seed must be in [0, 2**64), got {seed}")
    return int(seed)


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Generator for one block, keyed by (seed, block index)."""
    key = np.array([check_seed(seed), block], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def block_spans(n: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int, int]]:
    """Partition ``n`` draws into blocks: a list of (block index, start, length)."""
    if n < 0:
        raise ConfigurationError(f"draw count must be non-negative, got {n}")
    spans = []
    start = 0
    block = 0
    while start < n:
        m = min(block_size, n - start)
        spans.append((block, start, m))
        start += m
        block += 1
    return spans


def derive_seed(seed: int, index: int) -> int:
    """Well-mixed 64-bit seed for sub-experiment ``index`` of a seeded run."""
    ss = np.random.SeedSequence([check_seed(seed), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])

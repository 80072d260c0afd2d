"""Counter-based random streams for reproducible parallel Monte Carlo.

Streams are Philox generators keyed by (master_seed, stream_index), so the
stream assigned to a path block depends only on the pair and never on
scheduling or worker count.  Batch reductions are done in block order.
"""

from __future__ import annotations

import os

import numpy as np

BLOCK_SIZE = 8192  # paths per stream block; fixed so results are worker-count independent


def seed_stream(master_seed: int, stream_index: int) -> np.random.Generator:
    """Independent, reproducible generator for (master_seed, stream_index)."""
    key = np.array([np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF), np.uint64(stream_index)])
    return np.random.Generator(np.random.Philox(key=key))


def stream_state(gen: np.random.Generator) -> dict:
    """Serializable state of a stream; restore with restore_stream."""
    return gen.bit_generator.state


def restore_stream(state: dict) -> np.random.Generator:
    bg = np.random.Philox()
    bg.state = state
    return np.random.Generator(bg)


def path_blocks(n_paths: int, block_size: int = BLOCK_SIZE):
    """Fixed partition of path indices into (block_index, start, stop) tuples."""
    blocks = []
    start = 0
    index = 0
    while start < n_paths:
        stop = min(start + block_size, n_paths)
        blocks.append((index, start, stop))
        start = stop
        index += 1
    return blocks


def worker_count() -> int:
    """Worker count from the environment; affects scheduling only."""
    raw = os.environ.get("KPZLAB_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)

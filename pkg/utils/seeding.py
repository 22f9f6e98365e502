"""
Deterministic random streams.

Child streams are derived from (master_seed, *key) through numpy's SeedSequence
hashing, so a stream depends only on its key and never on the order in which
workers ask for it.
"""

from typing import Tuple

import numpy as np


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """
    Build the generator for one unit of work.

    Args:
        master_seed: Seed of the whole run
        *key: Integers identifying the unit (channel, block, sample, ...)

    Returns:
        Independent PCG64 generator
    """
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


def block_ranges(n_items: int, block: int) -> Tuple[Tuple[int, int, int], ...]:
    """Split range(n_items) into (block_index, start, stop) triples of fixed size."""
    out = []
    for b, start in enumerate(range(0, n_items, block)):
        out.append((b, start, min(start + block, n_items)))
    return tuple(out)


def child_seed(master_seed: int, *key: int) -> int:
    """Integer seed for a sub-run, derived the same way as stream()."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1, dtype=np.uint32)[0])

"""Counter-based random streams for reproducible parallel simulation.

Each work package gets its own Philox substream keyed by (seed, item index),
so draw i of item j is a pure function of (seed, j, i). Workers can pick up
any item, or any chunk of one item's iterations, and produce bit-identical
output regardless of scheduling.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox

__all__ = ["item_uniforms"]

# Philox-4x64 emits counter blocks of four 64-bit words and
# BitGenerator.advance moves in whole blocks; Generator.random consumes one
# word per double.
_WORDS_PER_BLOCK = 4


def item_uniforms(seed: int, item_index: int, start: int, count: int) -> np.ndarray:
    """Uniform [0, 1) draws ``start .. start+count`` of one item's substream."""
    key = np.array([seed, item_index], dtype=np.uint64)
    bg = Philox(key=key)
    blocks, rem = divmod(start, _WORDS_PER_BLOCK)
    if blocks:
        bg.advance(blocks)
    out = Generator(bg).random(rem + count)
    return out[rem:] if rem else out

"""Counter-addressed randomness for backward-window sampling.

The perfect sampler examines windows of past time [-B_k, -B_{k-1}) and must
hand the step at absolute time t the same draws every time that step is
revisited, no matter which window or replay touches it.  Philox makes this
cheap: it is counter-based, so jumping to an offset costs nothing.

Layout: the step at absolute time t < 0 owns the 8-word block with index
block = -t - 1 (block 0 is the step ending at time 0).  Each Philox counter
increment yields 4 of the generator's 64-bit words and Generator.random()
consumes exactly one word per double, so positioning at a block is
advance(2 * block) and the block's doubles are then read in order.  Word 0
drives the coordinate-pair choice, word 1 the shared or driver fraction,
word 2 the thinning coin; the remaining five words are reserved.

A second keyed stream supplies the one remainder uniform a failed coupling
attempt may need at a given block.  It is derived from the block index, not
drawn inline, so consuming it (or not) never shifts any other draw.
"""

from __future__ import annotations

import numpy as np

WORDS_PER_STEP = 8
_ADVANCE_PER_BLOCK = WORDS_PER_STEP // 4  # Philox yields 4 words per counter tick

# fixed stream tags keep the main and auxiliary keys disjoint
MAIN_TAG = 101
AUX_TAG = 202


def _keyed_philox(seeds: list[int]) -> np.random.Generator:
    key = np.random.SeedSequence(seeds).generate_state(2, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def generator_at_block(master: int, replica: int, block: int) -> np.random.Generator:
    """Main-stream generator positioned at the start of a block."""
    if block < 0:
        raise ValueError("block must be nonnegative")
    g = _keyed_philox([master, replica, MAIN_TAG])
    g.bit_generator.advance(_ADVANCE_PER_BLOCK * block)
    return g


def read_blocks(master: int, replica: int, lo: int, hi: int) -> np.ndarray:
    """Doubles for blocks lo..hi-1 as an array of shape (hi - lo, 8).

    Row r holds block lo + r.  Callers stepping forward in time iterate the
    rows in reverse, since later blocks sit deeper in the past.
    """
    if not 0 <= lo <= hi:
        raise ValueError("need 0 <= lo <= hi")
    if hi == lo:
        return np.empty((0, WORDS_PER_STEP))
    g = generator_at_block(master, replica, lo)
    return g.random((hi - lo) * WORDS_PER_STEP).reshape(hi - lo, WORDS_PER_STEP)


def iter_blocks_backward(
    master: int, replica: int, lo: int, hi: int, chunk: int = 1 << 16
):
    """Yield (block, row) pairs for blocks hi-1 down to lo, reading in chunks.

    This is time order for a window covering blocks [lo, hi): the chunking
    keeps memory bounded for very deep windows.
    """
    top = hi
    while top > lo:
        bottom = max(lo, top - chunk)
        rows = read_blocks(master, replica, bottom, top)
        for b in range(top - 1, bottom - 1, -1):
            yield b, rows[b - bottom]
        top = bottom


def aux_uniform(master: int, replica: int, block: int) -> float:
    """The remainder uniform owned by one block, derived on demand."""
    return float(_keyed_philox([master, replica, AUX_TAG, block]).random())


def pair_from_word(u: float, table) -> tuple[int, int]:
    """Map one uniform double to a 1-based coordinate pair via a pair table."""
    ii, jj = table
    c = len(ii)
    idx = min(c - 1, int(u * c))
    return int(ii[idx]) + 1, int(jj[idx]) + 1

"""
BellNoise - Random Streams
Counter-based substreams derived from a master seed, one per fixed block of patients
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, NamedTuple, TypeVar

import numpy as np

import config
from errors import DomainError

logger = logging.getLogger(__name__)

T = TypeVar('T')


class Block(NamedTuple):
    index: int
    start: int
    stop: int

    @property
    def size(self) -> int:
        return self.stop - self.start


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise DomainError(f"seed must be an integer, got {seed!r}")
    if not 0 <= seed < 2 ** 64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return int(seed)


class StreamFactory:
    """
    Patient i always lives in block i // block_size, and each block draws from
    its own Philox stream keyed by (seed, block index). Results therefore do
    not depend on how many workers process the blocks.
    """

    def __init__(self, seed: int, block_size: int = config.STREAM_BLOCK_SIZE):
        if block_size < 1:
            raise DomainError(f"block size must be positive, got {block_size}")
        self.seed = check_seed(seed)
        self.block_size = int(block_size)

    def generator(self, block_index: int) -> np.random.Generator:
        """Generator for one block of patients"""
        seq = np.random.SeedSequence(self.seed, spawn_key=(block_index,))
        return np.random.Generator(np.random.Philox(seq))

    def blocks(self, n: int) -> List[Block]:
        return [
            Block(i, start, min(start + self.block_size, n))
            for i, start in enumerate(range(0, n, self.block_size))
        ]

    def map_blocks(self, n: int, fn: Callable[[Block, np.random.Generator], T],
                   workers: int = config.DEFAULT_WORKERS) -> List[T]:
        """Apply fn to every block of n patients; output is in block order"""
        blocks = self.blocks(n)

        def run_block(block: Block) -> T:
            return fn(block, self.generator(block.index))

        if workers <= 1 or len(blocks) <= 1:
            return [run_block(block) for block in blocks]

        logger.debug("fanning %d blocks out to %d workers", len(blocks), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_block, blocks))

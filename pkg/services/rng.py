"""
Random Streams

Named, splittable generators so that every consumer (oracle k, block q,
adversary chunk, ...) draws from its own stream. Replays and parallel
replicas therefore agree regardless of call order across consumers.
"""

from typing import Dict, Any

import numpy as np

# Purpose codes are part of the reproducibility contract: never renumber.
PURPOSES: Dict[str, int] = {
    "oracle": 1,
    "block": 2,
    "rounding": 3,
    "adversary": 4,
    "noise": 5,
    "benchmark": 6,
    "test": 7,
    "diagnostics": 8,
}

BIT_GENERATOR = "Philox"


class RngStreams:
    """
    Factory of counter-based generators keyed by (purpose, *keys).

    The same (root_seed, purpose, keys) always yields the same stream.
    """

    def __init__(self, root_seed: int):
        if root_seed < 0:
            raise ValueError("root_seed must be non-negative")
        self.root_seed = int(root_seed)

    def generator(self, purpose: str, *keys: int) -> np.random.Generator:
        try:
            code = PURPOSES[purpose]
        except KeyError:
            raise KeyError(f"Unknown rng purpose '{purpose}'") from None

        seq = np.random.SeedSequence(
            entropy=self.root_seed,
            spawn_key=(code, *(int(k) for k in keys)),
        )
        return np.random.Generator(np.random.Philox(seq))

    def describe(self) -> Dict[str, Any]:
        return {
            "bit_generator": BIT_GENERATOR,
            "numpy": np.__version__,
            "root_seed": self.root_seed,
        }

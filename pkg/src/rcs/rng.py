"""Named derivation of random streams from one master seed.

Every stochastic step asks for a generator keyed by a path such as
``("fold", 3, "gmm", 2)``; the same path always yields the same stream, so a
single class or fold can be reproduced in isolation and parallel execution
matches serial execution.
"""
from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    return zlib.crc32(str(part).encode("utf-8"))


def derive(seed: int, *path) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *map(_key, path)]))


def derive_seed(seed: int, *path) -> int:
    """Integer seed for APIs that want one (e.g. network init)."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *map(_key, path)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])

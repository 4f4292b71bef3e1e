"""Named random streams derived from a single integer seed."""

import zlib

import numpy as np


def _key(name) -> int:
    if isinstance(name, int):
        return name
    return zlib.crc32(str(name).encode())


def derive_seed(seed: int, *names) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key(n) for n in names))


def stream(seed: int, *names) -> np.random.Generator:
    """Independent generator for ``(seed, *names)``; same inputs, same stream."""
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *names)))

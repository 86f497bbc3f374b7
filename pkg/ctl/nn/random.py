"""Named, keyed random streams derived from one run seed."""
import zlib

import numpy as np

_SEED_MASK = (1 << 64) - 1


def stream_key(name: str) -> int:
    """Stable integer key of a stream name."""
    return zlib.crc32(name.encode("utf-8"))


def derive_stream(seed: int, name: str, *keys: int) -> np.random.Generator:
    """Independent PCG64 generator for (seed, name, keys).

    Streams depend only on their arguments, never on call order or worker identity,
    so data-parallel preparation stays reproducible.
    """
    entropy = [int(seed) & _SEED_MASK, stream_key(name)]
    entropy.extend(int(key) for key in keys)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

"""Counter-style random streams: (master seed, key...) -> independent generator."""

from __future__ import annotations

import zlib
from typing import Union

import numpy as np

Key = Union[int, str]


def _key_to_int(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise ValueError(f"stream keys must be non-negative, got {key}")
    return int(key)


def make_stream(master_seed: int, *keys: Key) -> np.random.Generator:
    """Return the generator addressed by ``(master_seed, *keys)``.

    The same address always yields the same stream and distinct addresses
    yield statistically independent streams (via :class:`numpy.random.SeedSequence`),
    so work can be split across threads without changing results.
    """
    if master_seed < 0:
        raise ValueError(f"master seed must be non-negative, got {master_seed}")
    entropy = [int(master_seed)] + [_key_to_int(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

"""Deterministic random streams keyed by (seed, session, stream name)."""

import zlib

import numpy as np


def stream_rng(seed: int, session: int, stream: str, *extra: int) -> np.random.Generator:
    """Independent generator per sensor stream, so toggling one never perturbs another."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, int(session), zlib.crc32(stream.encode())]
    entropy.extend(int(v) & 0xFFFFFFFF for v in extra)
    return np.random.default_rng(entropy)
